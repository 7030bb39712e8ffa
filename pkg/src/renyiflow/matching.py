"""Best-matching self-similar scale, delay, and its two-sided bounds.

The match time s(t) = (Theta(t)/Theta_star)**(mu/2) is the time at which the
self-similar solution has the same second moment as the state; the delay
tau(t) = s(t) - t measures how far the state runs ahead of (p < 1) or behind
(p > 1) the self-similar clock. tau is monotone along the flow, its total
drop admits a quadratic lower bound in the initial data, and in the
fast-diffusion window 1 - 1/d <= p < 1 a moment-ratio envelope gives a
computable upper bound on tau(t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .barenblatt import BarenblattReference
from .functionals import FunctionalRecord, relative_entropy, second_moment
from .grid import DensityState
from .params import ModelParams, RegimeError

# Relative H-gap and Cauchy-Schwarz slack below which the quadratic drop
# bound is treated as degenerate (initial data already at the profile up to
# discretization noise); the bound there is below quadrature error.
DEGENERATE_REL = 1e-3
# 1-ulp slack so the window endpoint p = 1 - 1/d is admitted (float(2/3)
# sits one ulp below 1 - float(1/3)).
_EDGE_TOL = 1e-12


class MatchingError(RuntimeError):
    """Raised when a matching search or bound evaluation degenerates."""


def _require_moments(reference: BarenblattReference) -> None:
    if not reference.exponents.moments_finite or not math.isfinite(reference.theta_star):
        raise RegimeError(
            "matching needs a finite second moment of the stationary profile: "
            f"requires p > d/(d+2), got p = {reference.params.p}, d = {reference.params.d}"
        )


def _require_envelope_window(params: ModelParams) -> None:
    if not (params.p < 1.0 and params.p >= 1.0 - 1.0 / params.d - _EDGE_TOL):
        raise RegimeError(
            "delay envelope needs the fast-diffusion window 1 - 1/d <= p < 1, "
            f"got p = {params.p}, d = {params.d}"
        )


def best_match_scale(theta: float, reference: BarenblattReference) -> float:
    """Closed-form match time s = (theta / theta_star)**(mu/2)."""
    _require_moments(reference)
    if not theta > 0.0:
        raise ValueError(f"second moment must be positive, got {theta}")
    return (theta / reference.theta_star) ** (0.5 * reference.exponents.mu)


def delay(theta: float, t: float, reference: BarenblattReference) -> float:
    """tau = s(theta) - t."""
    return best_match_scale(theta, reference) - t


def best_match_scale_numeric(state: DensityState, params: ModelParams,
                             reference: BarenblattReference,
                             rel_tol: float = 1e-8) -> float:
    """Minimize s -> relative_entropy(state, s) by golden-section search.

    The bracket is [s0/10, 10*s0] around the closed-form moment match s0;
    the divergence is strictly convex near its minimum, so the search is
    well posed. Raises MatchingError if the minimum sits on the bracket
    edge (the state is nowhere near any self-similar time).
    """
    s0 = best_match_scale(second_moment(state), reference)
    lo, hi = 0.1 * s0, 10.0 * s0

    def phi(s: float) -> float:
        return relative_entropy(state, s, params, reference)

    invphi = 0.5 * (math.sqrt(5.0) - 1.0)
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > rel_tol * s0:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = phi(d)
    s = 0.5 * (a + b)
    if s <= lo + 0.005 * (hi - lo) or s >= hi - 0.005 * (hi - lo):
        raise MatchingError(
            f"no interior best match in bracket [{lo:.6g}, {hi:.6g}]; "
            f"search stalled at s = {s:.6g}"
        )
    return s


def delay_lower_bound(record0: FunctionalRecord, reference: BarenblattReference,
                      params: ModelParams, h_prime: float | None = None) -> tuple[float, float]:
    """Quadratic lower bound on the total delay drop |tau(0) - tau(inf)|.

    The drop equals (1/H_star) * integral of (H_star - H(t)); since the gap
    closes at initial rate H'(0) and |tau(0)-tau(t)| is nondecreasing, the
    triangle with base t_star = (H_star - H(0))/H'(0) and height the initial
    gap is always captured:

        bound = t_star * |H_star - H(0)| / (2 H_star).

    With the closed-form H'(0) = (1-p) Theta^(-1-eta/2) (Theta I - d E^2)
    this is Theta^(1+eta/2) (H_star-H(0))^2 / (2 H_star |1-p| (Theta I - d E^2)).
    Pass h_prime to use a measured initial slope instead (e.g. from the
    first recorded interval). Initial data already at the profile up to
    discretization noise (relative H-gap or Cauchy-Schwarz slack below
    DEGENERATE_REL) return (0.0, 0.0) rather than a 0/0 artifact.
    """
    d = params.d
    p = params.p
    if d > 1 and p < 1.0 - 1.0 / d - _EDGE_TOL:
        raise RegimeError(
            f"delay drop bound needs p >= 1 - 1/d, got p = {p}, d = {d}"
        )
    _require_moments(reference)
    ex = reference.exponents
    h_star = reference.h_star
    gap = h_star - record0.h_renyi
    denom = record0.theta * record0.fisher - d * record0.entropy**2
    if abs(gap) <= DEGENERATE_REL * h_star or denom <= DEGENERATE_REL * d * record0.entropy**2:
        return 0.0, 0.0
    if h_prime is None:
        h_prime = (1.0 - p) * record0.theta ** (-1.0 - 0.5 * ex.eta) * denom
    if h_prime == 0.0:
        return 0.0, 0.0
    t_star = gap / h_prime
    if t_star <= 0.0:
        # measured slope contradicts the monotone direction: noise floor
        return 0.0, t_star
    return t_star * abs(gap) / (2.0 * h_star), t_star


def q_envelope(q0: float, theta0: float, theta_t: float) -> float:
    """Envelope q_bar(t) = q0 theta(t) / (q0 theta(t) - (q0 - 1) theta0).

    Decreases from q0 toward 1 as the second moment grows; dominates the
    trajectory's moment/entropy/information ratio in the fast-diffusion
    window.
    """
    if q0 < 1.0 - 1e-9:
        raise ValueError(f"envelope needs q0 >= 1, got {q0}")
    if theta0 <= 0.0 or theta_t <= 0.0:
        raise ValueError("second moments must be positive")
    denom = q0 * theta_t - (q0 - 1.0) * theta0
    if denom <= 0.0:
        raise MatchingError(
            "envelope denominator nonpositive: second moment decreased "
            "below the admissible range (numerical violation)"
        )
    return q0 * theta_t / denom


def _records_of(trajectory) -> list[FunctionalRecord]:
    recs = list(getattr(trajectory, "records", trajectory))
    if len(recs) < 2:
        raise ValueError("need at least two records")
    return recs


def delay_upper_bound(trajectory, params: ModelParams,
                      reference: BarenblattReference) -> np.ndarray:
    """Integral upper bound on tau at each recorded time.

        tau(t) <= tau0 * exp( int_0^t ds / (s + Theta0/(mu E0)
                              - (eta/mu) int_0^s (q_bar - 1)) ) - t

    evaluated with trapezoid rules on the recorded time stamps. For data
    starting on the self-similar solution q_bar == 1 and the log integral
    telescopes to tau(t) = tau0 exactly. Raises MatchingError if the inner
    denominator becomes nonpositive (recording cadence too coarse).
    """
    _require_envelope_window(params)
    _require_moments(reference)
    ex = reference.exponents
    recs = _records_of(trajectory)
    t = np.array([r.t for r in recs]) - recs[0].t
    theta = np.array([r.theta for r in recs])
    q0 = recs[0].q_ratio
    tau0 = recs[0].tau
    e0 = recs[0].entropy
    qbar = np.array([q_envelope(q0, theta[0], th) for th in theta])
    inner = cumulative_trapezoid(qbar - 1.0, t, initial=0.0)
    denom = t + theta[0] / (ex.mu * e0) - (ex.eta / ex.mu) * inner
    if (denom <= 0.0).any():
        raise MatchingError(
            "inner denominator of the delay bound became nonpositive; "
            "record more often"
        )
    outer = cumulative_trapezoid(1.0 / denom, t, initial=0.0)
    return tau0 * np.exp(outer) - t


@dataclass(frozen=True)
class DelayReport:
    """Delay diagnostics of one trajectory: monotonicity, the quadratic
    lower bound on the total drop, and (fast-diffusion window only) the
    ratio envelope and integral upper bound. Slacks are signed margins,
    positive = satisfied with room."""

    times: np.ndarray
    tau_series: np.ndarray
    monotone_ok: bool
    monotone_worst: float     # worst wrong-direction step
    monotone_tol: float
    drop_bound: float
    drop_t_star: float
    drop_measured: float      # |tau(0) - tau(T)|
    drop_ok: bool
    drop_slack: float
    flat_ok: bool | None      # only when expected_tau is given
    flat_worst: float | None
    envelope_series: np.ndarray | None
    envelope_ok: bool | None
    envelope_worst: float | None
    upper_series: np.ndarray | None
    upper_ok: bool | None
    upper_worst: float | None


def build_delay_report(trajectory, params: ModelParams,
                       reference: BarenblattReference,
                       tol_scale: float = 1.0,
                       expected_tau: float | None = None) -> DelayReport:
    """Assemble the delay diagnostics for one recorded trajectory.

    The initial slope H'(0) entering t_star is estimated from the first
    recorded interval; tolerances are 1e-3 of the relevant scale times
    tol_scale, one-sided (an inequality only fails beyond discretization
    noise).
    """
    _require_moments(reference)
    recs = _records_of(trajectory)
    p = params.p
    t = np.array([r.t for r in recs])
    tau = np.array([r.tau for r in recs])
    tau0 = tau[0]

    dtau = np.diff(tau)
    tol_tau = 1e-3 * abs(tau0) * tol_scale
    # p < 1: tau nonincreasing; p > 1: tau nondecreasing
    worst = float(dtau.max()) if p < 1.0 else float(-dtau.min())
    monotone_ok = worst <= tol_tau

    flat_ok = flat_worst = None
    if expected_tau is not None:
        flat_worst = float(np.abs(tau - expected_tau).max())
        flat_ok = flat_worst <= 1e-3 * tol_scale

    h0, h1 = recs[0].h_renyi, recs[1].h_renyi
    h_prime = (h1 - h0) / (recs[1].t - recs[0].t)
    bound, t_star = delay_lower_bound(recs[0], reference, params, h_prime=h_prime)
    measured = abs(tau[0] - tau[-1])
    drop_slack = measured - bound

    envelope = env_ok = env_worst = None
    upper = upper_ok = upper_worst = None
    if p < 1.0 and p >= 1.0 - 1.0 / params.d - _EDGE_TOL:
        theta = np.array([r.theta for r in recs])
        q = np.array([r.q_ratio for r in recs])
        envelope = np.array([q_envelope(q[0], theta[0], th) for th in theta])
        env_worst = float((q - envelope).max())
        env_ok = env_worst <= 1e-3 * tol_scale
        upper = delay_upper_bound(trajectory, params, reference)
        upper_worst = float((tau - upper).max())
        upper_ok = upper_worst <= 1e-3 * abs(tau0) * tol_scale

    return DelayReport(
        times=t, tau_series=tau,
        monotone_ok=monotone_ok, monotone_worst=worst, monotone_tol=tol_tau,
        drop_bound=bound, drop_t_star=t_star, drop_measured=measured,
        drop_ok=measured >= bound, drop_slack=drop_slack,
        flat_ok=flat_ok, flat_worst=flat_worst,
        envelope_series=envelope, envelope_ok=env_ok, envelope_worst=env_worst,
        upper_series=upper, upper_ok=upper_ok, upper_worst=upper_worst,
    )
