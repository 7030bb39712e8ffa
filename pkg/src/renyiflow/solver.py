"""Explicit conservative finite-volume evolution of du/dt = Laplacian(u**p).

The update works on cell masses m_i = u_i V_i with face rates
Phi_j = A_j (w_j - w_{j-1})/(r_j - r_{j-1}), w = u**p, and zero flux at both
boundaries, so total mass telescopes exactly (conservation to summation
round-off, independent of step count). A donor-cell limiter scales outgoing
face rates so no cell can overdraw its mass within one step; this keeps the
state nonnegative without clipping even in fast-diffusion tails where the
local stability bound is intentionally relaxed by the diffusivity floor.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._pow import pow_fn
from .params import ModelParams, ExponentSet, derive_exponents
from .barenblatt import BarenblattReference, build_reference
from .grid import DensityState, RadialGrid
from .functionals import FunctionalRecord, diagnostics


class StiffnessError(RuntimeError):
    """Stable step fell below dt_min (or to zero): the state is too stiff."""


class InstabilityError(RuntimeError):
    """The state blew past 10x its initial maximum: the step size is unsafe."""


@dataclass(frozen=True)
class SolverConfig:
    cfl: float = 0.9
    dt_max: float = math.inf
    dt_min: float = 0.0
    # None resolves to 0 for p > 1 and 1e-10 * max(u0) for p < 1; the floor
    # enters only the diffusivity used in the step-size bound, never the state.
    u_floor: float | None = None
    record_every: float = 0.05
    # Explicit record offsets from the initial time (strictly increasing,
    # positive). When set they replace the uniform record_every schedule;
    # a final record at t_end is emitted either way. Useful to resolve fast
    # initial transients without paying for a uniformly fine cadence.
    record_times: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must be in (0, 1], got {self.cfl}")
        if self.dt_min > self.dt_max:
            raise ValueError("dt_min exceeds dt_max")
        if self.u_floor is not None and self.u_floor < 0.0:
            raise ValueError("u_floor must be nonnegative")
        if self.record_every <= 0.0:
            raise ValueError("record_every must be positive")
        if self.record_times is not None:
            rt = np.asarray(self.record_times, dtype=float)
            if rt.size == 0:
                raise ValueError("record_times must be nonempty when given")
            if not np.all(np.isfinite(rt)) or rt[0] <= 0.0 or np.any(np.diff(rt) <= 0.0):
                raise ValueError("record_times must be finite, positive, strictly increasing")


_pow_fn = pow_fn


def resolve_u_floor(config: SolverConfig, params: ModelParams, u_max: float) -> float:
    if config.u_floor is not None:
        return config.u_floor
    return 0.0 if params.p > 1.0 else 1e-10 * u_max


def stable_dt(state: DensityState, params: ModelParams, config: SolverConfig) -> float:
    """cfl * min_i dr_i^2 / (2 d D_i) with D_i = p max(u_i, floor)^(p-1)."""
    floor = resolve_u_floor(config, params, float(state.u.max()) if state.u.size else 0.0)
    dt = _raw_stable_dt(state.u, state.grid, params, config, floor, _pow_fn(params.p - 1.0))
    if dt < config.dt_min or dt <= 0.0:
        raise StiffnessError(
            f"stable dt {dt} below dt_min {config.dt_min}; "
            "for p < 1 a positive u_floor is required"
        )
    return dt


def _raw_stable_dt(u, grid, params, config, floor, pm1_fn) -> float:
    with np.errstate(divide="ignore", over="ignore"):
        diffusivity = params.p * pm1_fn(np.maximum(u, floor))
        local = grid.widths * grid.widths / (2.0 * grid.d * diffusivity)
    dt = config.cfl * float(local.min())
    return min(dt, config.dt_max)


def step(
    state: DensityState,
    params: ModelParams,
    config: SolverConfig,
    dt: float | None = None,
) -> DensityState:
    """Advance one explicit step, returning a new state."""
    if dt is None:
        dt = stable_dt(state, params, config)
    g = state.grid
    m = state.u * g.volumes
    _, clipped = _advance(m, state.u, g, _pow_fn(params.p),
                          1.0 / np.diff(g.centers), g.areas[1:-1], dt)
    if clipped > 0.0:
        warnings.warn(f"clipped {clipped:g} negative mass in one step", RuntimeWarning)
    u_new = m / g.volumes
    if float(u_new.max()) > 10.0 * float(state.u.max()) + 1e-300:
        raise InstabilityError(f"state exceeded 10x its previous maximum at t={state.t}")
    return DensityState(grid=g, u=u_new, t=state.t + dt)


def _advance(m, u, grid, pow_fn, inv_drc, area_int, dt):
    """In-place mass update for one step; returns (limited, clipped_mass)."""
    w = pow_fn(u)
    rate = (dt * area_int * inv_drc) * (w[1:] - w[:-1])
    gain = np.empty_like(m)
    gain[:-1] = rate
    gain[-1] = 0.0
    gain[1:] -= rate
    limited = False
    if (m + gain < 0.0).any():
        # donor-cell limiter: scale each face rate by its donor's budget so no
        # cell loses more mass than it holds
        limited = True
        outflow = np.zeros_like(m)
        outflow[1:] += np.maximum(rate, 0.0)
        outflow[:-1] += np.maximum(-rate, 0.0)
        scale = np.ones_like(m)
        mask = outflow > m
        scale[mask] = m[mask] / outflow[mask]
        rate *= np.where(rate > 0.0, scale[1:], scale[:-1])
        gain[:-1] = rate
        gain[-1] = 0.0
        gain[1:] -= rate
    m += gain
    clipped = 0.0
    if (m < 0.0).any():
        clipped = -float(m[m < 0.0].sum())
        np.maximum(m, 0.0, out=m)
    return limited, clipped


@dataclass
class Trajectory:
    params: ModelParams
    exponents: ExponentSet
    reference: BarenblattReference
    config: SolverConfig
    records: list[FunctionalRecord] = field(default_factory=list)
    final_state: DensityState | None = None
    n_steps: int = 0
    clipped_mass: float = 0.0
    limited_steps: int = 0
    wall_time: float = 0.0

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def evolve(
    state: DensityState,
    t_end: float,
    params: ModelParams,
    config: SolverConfig,
    reference: BarenblattReference | None = None,
    observer: Callable[[FunctionalRecord, DensityState], None] | None = None,
) -> Trajectory:
    """Run to t_end, recording diagnostics every record_every and at t_end."""
    if t_end < state.t:
        raise ValueError(f"t_end {t_end} precedes state time {state.t}")
    if reference is None:
        reference = build_reference(params)
    grid = state.grid
    exponents = derive_exponents(params)
    traj = Trajectory(params=params, exponents=exponents, reference=reference, config=config)
    start_wall = time.perf_counter()

    u = state.u.copy()
    m = u * grid.volumes
    inv_vol = 1.0 / grid.volumes
    inv_drc = 1.0 / np.diff(grid.centers)
    area_int = grid.areas[1:-1]
    pow_fn = _pow_fn(params.p)
    pm1_fn = _pow_fn(params.p - 1.0)
    u0_max = float(u.max())
    floor = resolve_u_floor(config, params, u0_max)
    t0 = state.t
    t = t0

    dt_last = _raw_stable_dt(u, grid, params, config, floor, pm1_fn)

    def emit(tag_t: float) -> None:
        snap = DensityState(grid=grid, u=u.copy(), t=tag_t)
        rec = diagnostics(snap, params, reference, dt=dt_last)
        traj.records.append(rec)
        if observer is not None:
            observer(rec, snap)

    if config.record_times is not None:
        pending = [t0 + off for off in config.record_times if t0 + off < t_end]
        pending.append(t_end)
    else:
        pending = None
    emit(t0)
    k_rec = 1
    if pending is not None:
        next_rec = pending[0]
    else:
        next_rec = min(t0 + config.record_every, t_end)
    while t < t_end:
        dt = _raw_stable_dt(u, grid, params, config, floor, pm1_fn)
        if dt < config.dt_min or dt <= 0.0:
            raise StiffnessError(f"stable dt {dt} below dt_min {config.dt_min} at t={t}")
        landed = False
        if t + dt >= next_rec:
            dt = next_rec - t
            landed = True
        limited, clipped = _advance(m, u, grid, pow_fn, inv_drc, area_int, dt)
        traj.n_steps += 1
        traj.limited_steps += limited
        traj.clipped_mass += clipped
        np.multiply(m, inv_vol, out=u)
        if float(u.max()) > 10.0 * u0_max:
            raise InstabilityError(
                f"density exceeded 10x the initial maximum at t={t + dt} "
                f"(step {traj.n_steps}); reduce cfl"
            )
        dt_last = dt
        if landed:
            t = next_rec
            emit(t)
            k_rec += 1
            if pending is not None:
                next_rec = pending[k_rec - 1] if k_rec - 1 < len(pending) else t_end
            else:
                next_rec = min(t0 + k_rec * config.record_every, t_end)
        else:
            t += dt

    traj.final_state = DensityState(grid=grid, u=u.copy(), t=t)
    traj.wall_time = time.perf_counter() - start_wall
    return traj
