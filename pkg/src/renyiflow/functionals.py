"""Integral functionals of radial densities and their scale-invariant ratios.

All quantities are discretized on the same finite-volume grid the solver
uses: cell averages for volume integrals, face-centered differences for
gradient integrals. The moment/entropy/information ratio q_ratio is computed
by a discretization that mirrors the continuum Cauchy-Schwarz argument
term-for-term over a single set of face weights, so q_ratio >= 1 holds for
every nonnegative state by construction (up to round-off), not just in the
continuum limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._pow import pow_fn
from .barenblatt import BarenblattReference
from .grid import DensityState, sphere_area
from .params import ModelParams

# Cells below this fraction of max(u) are excluded from second-derivative
# stencils; their v = p/(p-1) u**(p-1) values are dominated by floor noise.
# Deepening the cut below 1e-12 does not change the integral (the tail
# integrand decays faster than the level), while 1e-6 clips a few percent.
REMAINDER_MASK_REL = 1e-12
# Faces where either cell sits below this fraction of max(u) are excluded
# from gradient quadratures unless their log-slope is neighbor-consistent
# (see _live_faces). The advancing tail front leaves per-step transport
# noise many decades below the smooth profile (the smooth/rough transition
# sits near 1e-20 of max); fractional powers of u amplify those steps into
# O(1) slopes of u**(p-1/2) while the true integrand there is below
# working precision.
DUST_REL = 1e-15
# A face counts as smooth when its log-slope differs from a neighboring
# face's by at most this fraction; genuine profiles vary by O(dr/r) per
# face (a few percent here) while front noise alternates flat/cliff.
SMOOTH_SLOPE_REL = 0.25
# Fraction of the fallback Fisher sum allowed to come from floored cells
# before the value is flagged as unreliable.
FISHER_FLOOR_SHARE = 0.01
# Share of the remainder quadrature near the support edge (p > 1) that
# triggers the boundary-accuracy flag.
REMAINDER_BOUNDARY_SHARE = 0.10


@dataclass(frozen=True)
class FunctionalRecord:
    """One diagnostic snapshot along a trajectory.

    Invariants (exact by construction, so they recompose to ~1e-12):
    h_renyi = theta**(-eta/2) * entropy and j_scale = entropy**(sigma-1) * fisher.
    """

    t: float
    dt: float
    mass: float
    theta: float
    entropy: float
    fisher: float
    f_power: float
    g_power: float
    h_renyi: float
    j_scale: float
    q_ratio: float
    s_match: float
    tau: float
    rel_entropy: float
    remainder: float
    tail_frac: float
    flags: tuple[str, ...] = ()


def second_moment(state: DensityState) -> float:
    """(1/d) * integral of |x|^2 u, using cell-center radii."""
    g = state.grid
    return float(np.dot(g.centers * g.centers * state.u, g.volumes)) / g.d


def generalized_entropy(state: DensityState, p: float) -> float:
    """Integral of u**p."""
    return state.grid.integrate(pow_fn(p)(state.u))


def _face_geometry(grid):
    drc = np.diff(grid.centers)
    mid = 0.5 * (grid.centers[:-1] + grid.centers[1:])
    # face quadrature weight: surface area at the gap midpoint times gap width
    w = sphere_area(grid.d) * mid ** (grid.d - 1) * drc
    return drc, mid, w


def fisher_information(state: DensityState, params: ModelParams) -> float:
    value, _ = fisher_information_flagged(state, params)
    return value


def _live_faces(u: np.ndarray, drc: np.ndarray) -> np.ndarray:
    """Faces admitted to gradient quadratures.

    A face is live when both cells sit above DUST_REL * max(u), or below
    that level but with a log-slope within SMOOTH_SLOPE_REL of a
    neighboring face's. The level cut alone would also discard the genuine
    power-law tail of fast-diffusion states, whose gradient integrals
    converge slowly in radius; those faces are smooth while front noise
    alternates between flat and cliff faces, so neighbor consistency
    separates signal from noise independently of level.
    """
    dust = DUST_REL * float(u.max()) if u.size else 0.0
    level = (u[:-1] >= dust) & (u[1:] >= dust)
    if u.size < 3:
        return level
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = np.diff(np.log(u)) / drc
    jump = np.abs(np.diff(slopes))
    dev = np.empty_like(slopes)
    dev[0] = jump[0]
    dev[-1] = jump[-1]
    dev[1:-1] = np.minimum(jump[:-1], jump[1:])
    with np.errstate(invalid="ignore"):
        smooth = np.isfinite(slopes) & (dev <= SMOOTH_SLOPE_REL * np.abs(slopes))
    return level | smooth


def fisher_information_flagged(state: DensityState, params: ModelParams) -> tuple[float, tuple[str, ...]]:
    """integral u |grad v|^2, v = p/(p-1) u**(p-1).

    For p > 1/2 this is written as (2p/(2p-1))^2 integral |grad u**(p-1/2)|^2,
    which stays finite cell-by-cell even where u underflows to zero. For
    p <= 1/2 that substitution is unavailable and the integrand u**(2p-3)
    |grad u|^2 needs a floor on u; the result is flagged when floored cells
    carry more than 1% of the sum.
    """
    p = params.p
    g = state.grid
    u = state.u
    drc, _, w_face = _face_geometry(g)
    live = _live_faces(u, drc)
    if p > 0.5:
        wt = pow_fn(p - 0.5)(u)
        slope = np.where(live, (wt[1:] - wt[:-1]) / drc, 0.0)
        coef = (2.0 * p / (2.0 * p - 1.0)) ** 2
        return coef * float(np.dot(slope * slope, w_face)), ()
    floor = 1e-10 * float(u.max()) if u.size else 0.0
    uf = 0.5 * (u[:-1] + u[1:])
    floored = live & (uf < floor)
    uf_safe = np.maximum(uf, floor)
    slope = np.where(live, (u[1:] - u[:-1]) / drc, 0.0)
    contrib = (p * p) * uf_safe ** (2.0 * p - 3.0) * slope * slope * w_face
    total = float(contrib.sum())
    flags: tuple[str, ...] = ()
    if total > 0.0 and float(contrib[floored].sum()) > FISHER_FLOOR_SHARE * total:
        flags = ("fisher_floor",)
    return total, flags


def cauchy_schwarz_ratio(state: DensityState, params: ModelParams) -> tuple[float, tuple[str, ...]]:
    """q = Theta * I / (d * E^2) discretized so that q >= 1 is exact.

    Over interior faces with positive density on both sides, using the
    mean-value face density u_f = (u_+^p - u_-^p) / (v_+ - v_-) (the exact
    chain-rule factor turning grad v into grad u**p) and the face slope
    g_f = (v_+ - v_-)/dr, the three sums

        A = sum W u_f r_f^2,  B = sum W u_f g_f^2,  S = sum W u_f r_f g_f

    are the quadratures of d*Theta, I, and integral(u x.grad v) = -d*E with a
    common positive weight, so S^2 <= A B is the Cauchy-Schwarz inequality of
    finite sums and q = A B / S^2 >= 1 identically.
    """
    p = params.p
    g = state.grid
    u = state.u
    drc, mid, w_face = _face_geometry(g)
    w = pow_fn(p)(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (p / (p - 1.0)) * pow_fn(p - 1.0)(u)
        dv = v[1:] - v[:-1]  # nan on pairs of vacuum cells, masked below
    dw = w[1:] - w[:-1]
    pos = _live_faces(u, drc)
    sloped = pos & np.isfinite(dv) & (dv != 0.0)
    flat = pos & ~sloped

    uf = np.zeros_like(dv)
    uf[sloped] = dw[sloped] / dv[sloped]
    uf[flat] = u[:-1][flat]
    gf = np.zeros_like(dv)
    gf[sloped] = dv[sloped] / drc[sloped]

    wu = w_face * uf
    a = float(np.dot(wu, mid * mid))
    b = float(np.dot(wu, gf * gf))
    s = float(np.dot(wu, mid * gf))
    if s == 0.0:
        return math.inf, ("q_degenerate",)
    return a * b / (s * s), ()


def entropy_remainder(state: DensityState, params: ModelParams) -> float:
    value, _ = entropy_remainder_flagged(state, params)
    return value


def entropy_remainder_flagged(state: DensityState, params: ModelParams) -> tuple[float, tuple[str, ...]]:
    """E * [(sigma-1) int u^p (lap v - m)^2 + 2/(1-p) int u^p |D^2v - (lap v/d) Id|^2].

    v = p/(p-1) u**(p-1); m is the u^p-weighted mean of lap v over the
    stencil mask, which makes the first term a true variance (it vanishes
    identically on the self-similar profile, whose v is quadratic in r).
    Radial form of the traceless Hessian norm: (1 - 1/d)(v'' - v'/r)^2; the
    anisotropy term is identically zero for d = 1.

    Nonnegative in the fast-diffusion range (sigma >= 1), nonpositive for
    p > 1. Cells below REMAINDER_MASK_REL * max(u) are excluded; for p > 1
    the result is flagged when stencils within three cells of the support
    edge carry more than 10% of the quadrature.
    """
    p = params.p
    d = params.d
    g = state.grid
    u = state.u
    n = u.size
    if n < 3:
        raise ValueError("remainder needs at least 3 cells")
    sigma = 2.0 / (d * (1.0 - p)) - 1.0

    mask = u >= REMAINDER_MASK_REL * float(u.max())
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (p / (p - 1.0)) * pow_fn(p - 1.0)(u)

    c = g.centers
    drc = np.diff(c)
    h_m = np.empty(n)
    h_m[1:] = drc
    h_m[0] = 2.0 * c[0]  # reflected ghost cell across r = 0
    h_p = np.empty(n)
    h_p[:-1] = drc
    h_p[-1] = np.nan
    v_m = np.empty(n)
    v_m[1:] = v[:-1]
    v_m[0] = v[0]  # even reflection: v(-r) = v(r)
    v_p = np.empty(n)
    v_p[:-1] = v[1:]
    v_p[-1] = np.nan

    valid = np.zeros(n, dtype=bool)
    valid[1:-1] = mask[:-2] & mask[1:-1] & mask[2:]
    valid[0] = mask[0] & mask[1]

    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        slope_m = (v - v_m) / h_m
        slope_p = (v_p - v) / h_p
        v1 = (h_m * slope_p + h_p * slope_m) / (h_m + h_p)
        v2 = 2.0 * (slope_p - slope_m) / (h_m + h_p)
        lap = v2 + (d - 1) * v1 / c

    wgt = np.where(valid, pow_fn(p)(u) * g.volumes, 0.0)
    lap_v = np.where(valid, lap, 0.0)
    e_total = generalized_entropy(state, p)
    e_masked = float(wgt.sum())
    if e_masked <= 0.0:
        return 0.0, ("remainder_empty",)
    m_hat = float(np.dot(wgt, lap_v)) / e_masked
    var_term = float(np.dot(wgt, (lap_v - m_hat) ** 2))
    if d > 1:
        with np.errstate(invalid="ignore"):
            aniso_sq = np.where(valid, (v2 - v1 / c) ** 2, 0.0)
        aniso_term = (1.0 - 1.0 / d) * float(np.dot(wgt, aniso_sq))
    else:
        aniso_sq = None
        aniso_term = 0.0
    value = e_total * ((sigma - 1.0) * var_term + (2.0 / (1.0 - p)) * aniso_term)

    flags: tuple[str, ...] = ()
    if p > 1.0:
        contrib = wgt * abs(sigma - 1.0) * (lap_v - m_hat) ** 2
        if aniso_sq is not None:
            contrib = contrib + wgt * abs(2.0 / (1.0 - p)) * (1.0 - 1.0 / d) * aniso_sq
        total = float(contrib.sum())
        if total > 0.0:
            # cells whose 3-wide neighborhood touches a masked-out cell
            near = np.zeros(n, dtype=bool)
            bad = ~mask
            for off in range(-3, 4):
                lo = max(0, -off)
                hi = n - max(0, off)
                near[lo:hi] |= bad[lo + off:hi + off]
            share = float(contrib[valid & near].sum()) / total
            if share > REMAINDER_BOUNDARY_SHARE:
                flags = ("remainder_boundary",)
    return value, flags


def relative_entropy(state: DensityState, s: float, params: ModelParams,
                     reference: BarenblattReference) -> float:
    """Bregman divergence of the entropy between u and the self-similar
    solution at time s: 1/(p-1) int [u^p - U^p - p U^(p-1) (u - U)].

    The integrand is pointwise nonnegative for every p in the admissible
    range, so the value is a genuine divergence (zero iff u = U a.e.).
    """
    if not s > 0.0:
        raise ValueError(f"match time must be positive, got {s}")
    p = params.p
    g = state.grid
    u = state.u
    cap_u = reference.self_similar(g.centers, s)
    up = pow_fn(p)(u)
    cap_up = pow_fn(p)(cap_u)
    cap_upm1 = pow_fn(p - 1.0)(cap_u) if p > 1.0 else None
    if p > 1.0:
        integrand = (up - cap_up - p * cap_upm1 * (u - cap_u)) / (p - 1.0)
    else:
        # U > 0 everywhere in the fast-diffusion range, so U**(p-1) is finite
        integrand = (up - cap_up - p * cap_up / cap_u * (u - cap_u)) / (p - 1.0)
    return g.integrate(integrand)


def tail_moment_fraction(state: DensityState) -> float:
    """Share of the second moment carried beyond r_max / 2."""
    g = state.grid
    w = g.centers * g.centers * state.u * g.volumes
    total = float(w.sum())
    if total <= 0.0:
        return 0.0
    return float(w[g.centers > 0.5 * g.r_max].sum()) / total


def diagnostics(state: DensityState, params: ModelParams,
                reference: BarenblattReference, dt: float = float("nan")) -> FunctionalRecord:
    """Evaluate every tracked functional of the state in one pass."""
    if params != reference.params:
        raise ValueError("reference was built for different parameters")
    ex = reference.exponents
    p = params.p

    mass = state.mass()
    theta = second_moment(state)
    entropy = generalized_entropy(state, p)
    fisher, flags_f = fisher_information_flagged(state, params)
    q_ratio, flags_q = cauchy_schwarz_ratio(state, params)
    remainder, flags_r = entropy_remainder_flagged(state, params)

    f_power = entropy**ex.sigma
    g_power = theta ** (0.5 * ex.mu)
    h_renyi = theta ** (-0.5 * ex.eta) * entropy
    j_scale = entropy ** (ex.sigma - 1.0) * fisher

    flags = list(flags_f + flags_q + flags_r)
    if ex.moments_finite and math.isfinite(reference.theta_star):
        s_match = (theta / reference.theta_star) ** (0.5 * ex.mu)
        tau = s_match - state.t
        rel_ent = relative_entropy(state, s_match, params, reference)
    else:
        s_match = tau = rel_ent = float("nan")
        flags.append("moments_infinite")

    tail = tail_moment_fraction(state)
    g = state.grid
    w = g.centers * g.centers * state.u * g.volumes
    total = float(w.sum())
    if total > 0.0 and float(w[g.centers > 0.9 * g.r_max].sum()) > 0.10 * total:
        flags.append("low_confidence_moments")

    return FunctionalRecord(
        t=state.t, dt=dt, mass=mass, theta=theta, entropy=entropy,
        fisher=fisher, f_power=f_power, g_power=g_power, h_renyi=h_renyi,
        j_scale=j_scale, q_ratio=q_ratio, s_match=s_match, tau=tau,
        rel_entropy=rel_ent, remainder=remainder, tail_frac=tail,
        flags=tuple(sorted(set(flags))),
    )
