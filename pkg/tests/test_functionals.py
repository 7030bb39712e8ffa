import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import renyiflow as rf
from renyiflow.functionals import (
    cauchy_schwarz_ratio,
    diagnostics,
    entropy_remainder,
    fisher_information,
    fisher_information_flagged,
    generalized_entropy,
    relative_entropy,
    second_moment,
    tail_moment_fraction,
)


def projected_profile(d, p, r_max, n, stretch=1.0):
    params = rf.ModelParams(d, p)
    ref = rf.build_reference(params)
    grid = rf.build_grid(d, r_max, n, stretch=stretch)
    state = rf.project_initial(lambda r: rf.self_similar_density(r, 1.0, params), grid)
    return params, ref, state


@pytest.mark.parametrize("d,p,r_max,n,stretch", [
    (1, 2.0, 5.0, 800, 1.0),
    (3, 2.0 / 3.0, 896000.0, 1050, 1.012),
])
def test_profile_state_diagnostics(d, p, r_max, n, stretch):
    """The projected source-type state at unit age reproduces the closed-form
    scale-invariant levels; tolerances are ~10x the measured discretization
    error at these resolutions."""
    params, ref, state = projected_profile(d, p, r_max, n, stretch)
    rec = diagnostics(state, params, ref)
    assert rec.mass == pytest.approx(1.0, abs=1e-13)
    assert rec.theta == pytest.approx(ref.theta_star, rel=1e-3)
    assert rec.h_renyi == pytest.approx(ref.h_star, rel=1e-4)
    assert rec.j_scale == pytest.approx(ref.j_star, rel=2e-4)
    # equality case of the moment/entropy/information inequality
    assert abs(rec.q_ratio - 1.0) <= 1e-12
    # the remainder vanishes on the profile (v quadratic in r)
    assert abs(rec.remainder) <= 1e-12 * rec.entropy * rec.fisher
    assert rec.tau == pytest.approx(1.0, abs=1e-4)
    assert rec.rel_entropy <= 1e-6 * rec.entropy


def test_recomposition_identities():
    params, ref, state = projected_profile(1, 2.0, 5.0, 800)
    rec = diagnostics(state, params, ref)
    ex = ref.exponents
    assert rec.f_power == pytest.approx(rec.entropy**ex.sigma, rel=1e-12)
    assert rec.g_power == pytest.approx(rec.theta ** (0.5 * ex.mu), rel=1e-12)
    assert rec.h_renyi == pytest.approx(
        rec.theta ** (-0.5 * ex.eta) * rec.entropy, rel=1e-12)
    assert rec.j_scale == pytest.approx(
        rec.entropy ** (ex.sigma - 1.0) * rec.fisher, rel=1e-12)


def test_gaussian_closed_forms():
    grid = rf.build_grid(1, 6.0, 800)
    state = rf.project_initial(lambda r: np.exp(-r * r), grid)
    assert second_moment(state) == pytest.approx(0.5, rel=1e-3)
    # u = exp(-r^2)/sqrt(pi): int u^2 = 1/sqrt(2 pi)
    assert generalized_entropy(state, 2.0) == pytest.approx(
        1.0 / math.sqrt(2.0 * math.pi), rel=1e-6)

    grid3 = rf.build_grid(3, 40.0, 800)
    state3 = rf.project_initial(lambda r: np.exp(-r * r), grid3)
    assert second_moment(state3) == pytest.approx(0.5, rel=1e-3)


def test_relative_entropy_is_a_divergence():
    params, ref, state = projected_profile(1, 2.0, 5.0, 800)
    s = rf.best_match_scale(second_moment(state), ref)
    assert relative_entropy(state, s, params, ref) <= 1e-6 * ref.entropy
    assert relative_entropy(state, 2.0 * s, params, ref) > 1e-3
    with pytest.raises(ValueError):
        relative_entropy(state, 0.0, params, ref)


@settings(max_examples=30, deadline=None)
@given(
    d=st.integers(min_value=1, max_value=3),
    amps=st.lists(st.floats(min_value=0.1, max_value=2.0), min_size=1, max_size=3),
    centers=st.lists(st.floats(min_value=0.0, max_value=3.0), min_size=1, max_size=3),
    p_off=st.floats(min_value=-0.25, max_value=1.5),
)
def test_ratio_lower_bound_by_construction(d, amps, centers, p_off):
    # q >= 1 must hold for arbitrary positive states, not just near the
    # profile: the discretization mirrors the Cauchy-Schwarz argument exactly
    p = 1.0 + p_off if abs(p_off) > 0.05 else 1.5  # p in [0.75, 2.5] minus p = 1
    params = rf.ModelParams(d, p)
    grid = rf.build_grid(d, 8.0, 200)
    k = min(len(amps), len(centers))

    def profile(r):
        out = np.zeros_like(r)
        for a, c in zip(amps[:k], centers[:k]):
            out += a * np.exp(-((r - c) ** 2))
        return out

    state = rf.project_initial(profile, grid)
    q, _ = cauchy_schwarz_ratio(state, params)
    assert q >= 1.0 - 1e-12


def test_remainder_sign_on_generic_data():
    # R >= 0 in the fast-diffusion window, R <= 0 in the degenerate regime
    params = rf.ModelParams(3, 2.0 / 3.0)
    grid = rf.build_grid(3, 60.0, 400, stretch=1.01)
    state = rf.project_initial(lambda r: np.exp(-r * r), grid)
    assert entropy_remainder(state, params) > 0.0

    params_pm = rf.ModelParams(1, 2.0)
    grid1 = rf.build_grid(1, 6.0, 400)
    state1 = rf.project_initial(lambda r: np.exp(-r * r), grid1)
    assert entropy_remainder(state1, params_pm) < 0.0


def test_gradient_quadratures_ignore_front_dust():
    # per-step transport noise decades below the profile must not leak
    # O(1) slopes of u**(p-1/2) into the Fisher integral
    params = rf.ModelParams(1, 2.0)
    grid = rf.build_grid(1, 6.0, 400)
    base = np.maximum(0.8 - grid.centers**2, 0.0)
    clean = rf.DensityState(grid=grid, u=base, t=0.0)
    noisy_u = base.copy()
    vacuum = np.where(base == 0.0)[0]
    noisy_u[vacuum[::2]] = 1e-22 * base.max()
    noisy = rf.DensityState(grid=grid, u=noisy_u, t=0.0)
    assert fisher_information(noisy, params) == fisher_information(clean, params)


def test_smooth_tail_stays_live():
    # the fast-diffusion power-law tail spans ~35 decades on the wide grid;
    # dropping faces by level alone would lose ~0.5% of the Fisher integral
    params = rf.ModelParams(3, 2.0 / 3.0)
    ref = rf.build_reference(params, verify=False)
    grid = rf.build_grid(3, 896000.0, 1050, stretch=1.012)
    u = ref.profile(grid.centers)
    live = rf.DensityState(grid=grid, u=u / grid.integrate(u), t=0.0)
    err_live = abs(fisher_information(live, params) - ref.fisher) / ref.fisher
    chopped_u = np.where(u >= 1e-15 * u.max(), u, 0.0)
    chopped = rf.DensityState(grid=grid, u=chopped_u / grid.integrate(chopped_u), t=0.0)
    err_chop = abs(fisher_information(chopped, params) - ref.fisher) / ref.fisher
    assert err_live < 1e-4
    assert err_chop > 10.0 * err_live


def test_fisher_low_exponent_branch():
    # p <= 1/2 loses the u**(p-1/2) substitution and needs the floored form
    params = rf.ModelParams(3, 0.45)
    grid = rf.build_grid(3, 60.0, 900, stretch=1.01)
    state = rf.project_initial(lambda r: np.exp(-r * r), grid)
    value, flags = fisher_information_flagged(state, params)
    assert math.isfinite(value) and value > 0.0
    assert set(flags) <= {"fisher_floor"}


def test_tail_fraction_and_confidence_flag():
    params = rf.ModelParams(1, 2.0)
    ref = rf.build_reference(params)
    grid = rf.build_grid(1, 6.0, 128)
    shell = rf.project_initial(lambda r: np.exp(-(((r - 5.7) / 0.1) ** 2)), grid)
    assert tail_moment_fraction(shell) > 0.99
    assert "low_confidence_moments" in diagnostics(shell, params, ref).flags
    core = rf.project_initial(lambda r: np.exp(-((r / 0.3) ** 2)), grid)
    assert tail_moment_fraction(core) < 1e-6
    assert "low_confidence_moments" not in diagnostics(core, params, ref).flags


def test_diagnostics_parameter_mismatch():
    params, ref, state = projected_profile(1, 2.0, 5.0, 800)
    with pytest.raises(ValueError):
        diagnostics(state, rf.ModelParams(1, 1.5), ref)
