from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segrestart.game_model import MomentSummary, analytic_moments, generate_problem
from segrestart.restart_schedule import interpolation_interval
from segrestart.spectral import ValidationError
from segrestart.stepsize import contraction_lambda, eta_choices, eta_max
from segrestart.theory_bounds import (BoundAssumptionError, averaged_rhs, averaged_rhs_any_step,
                                      baseline_comparison, conversion_constant, hamiltonian_metric,
                                      interpolation_rhs, last_iterate_interval_exponent, last_iterate_limit,
                                      last_iterate_rhs, metric_conversion_gap, noise_floor, restart_epoch_rhs,
                                      restarted_tail_rhs, averaged_taus)


def scalar(b2: float, sigma_g_sq: float = 0.0) -> MomentSummary:
    b = math.sqrt(b2)
    return MomentSummary([[b]], [[b2]], [[b2]], [[b2 * b2]], [[b2 * b2]], 0.0, 0.0, sigma_g_sq)


def problem(std_B=0.1, std_g=0.05, d=5, seed=0):
    return analytic_moments(generate_problem(d, std_B, std_g, seed))


def test_noise_floor_examples():
    assert noise_floor(scalar(1.0, 1.0)) == pytest.approx(3.0)
    assert noise_floor(scalar(2.0, 0.0)) == 0.0
    assert noise_floor(scalar(4.0, 0.04)) <= 0.03


def test_last_iterate_at_zero_steps_is_init():
    m = problem()
    eta = eta_choices(m, 0.5).eta_hat
    assert float(last_iterate_rhs(m, eta, 2.5, 0)) == pytest.approx(2.5)


def test_last_iterate_scalar_formula():
    m = scalar(1.0, 0.5)
    eta = 0.5
    lam = 1 - eta ** 2
    r = 1 - eta ** 2 * lam
    K = 7
    want = r ** K * 2.0 + eta ** 2 * (1 - r ** K) / (1 - r) * (1 + eta ** 2) * 0.5
    assert float(last_iterate_rhs(m, eta, 2.0, K)) == pytest.approx(want, rel=1e-12)
    assert float(last_iterate_rhs(m, eta, 2.0, 10 ** 6)) == pytest.approx(last_iterate_limit(m, eta), rel=1e-9)


def test_limit_dominance_chain():
    for seed in range(20):
        m = problem(0.1, 0.05, 6, seed)
        eta = eta_max(m)[0] / math.sqrt(2)
        lim = last_iterate_limit(m, eta)
        assert lim <= noise_floor(m) * (1 + 1e-12) <= 3 * lim * (1 + 1e-12)


def test_averaged_vanishes_and_starts_at_tau1():
    m = problem()
    tau1, tau2 = averaged_taus(m, 0.5)
    r0 = averaged_rhs(m, 0.5, 1.0, 0)
    assert float(r0) == pytest.approx(tau1 + tau2 * m.sigma_g_sq)
    assert float(averaged_rhs(m, 0.5, 1.0, 10 ** 9)) < 1e-6


def test_taus_without_coupling_noise():
    m = scalar(2.0, 0.1)
    eta = eta_choices(m, 0.5).eta_hat
    t1, t2 = averaged_taus(m, 0.5)
    assert t1 == pytest.approx(16 / (0.5 * 2.0 * eta ** 2)) and t2 == pytest.approx(18 / (0.5 * 2.0))


def test_gamma_form_equals_theorem2_without_coupling_noise():
    m = analytic_moments(generate_problem(5, 0.0, 0.05, 3))
    for K in (0, 10, 1000):
        a = float(averaged_rhs(m, 0.5, 1.3, K))
        b = float(averaged_rhs(m, 0.5, 1.3, K, variant="gamma_form", gamma=1.0))
        assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(ValidationError):
        averaged_rhs(m, 0.5, 1.0, 3, variant="nope")


def test_averaged_flags_large_coupling_noise():
    # the eta_hat cap keeps the conversion constant positive; a larger step does not
    m = MomentSummary([[1.0]], [[1.0]], [[1.0]], [[1.0]], [[1.0]], 100.0, 0.0, 0.1)
    assert averaged_rhs(m, 0.5, 1.0, 10).assumptions_ok
    rep = averaged_rhs_any_step(m, 0.1, 1.0, 10)
    assert conversion_constant(m, 0.1) < 0
    assert not rep.assumptions_ok and math.isinf(float(rep))


def test_averaged_any_step_rejects_bad_eta():
    m = problem()
    eta_M = eta_max(m)[0]
    assert not averaged_rhs_any_step(m, 1.5 * eta_M, 1.0, 10).assumptions_ok
    assert averaged_rhs_any_step(m, 0.5 * eta_M, 1.0, 10).assumptions_ok


def test_interpolation_bound():
    m = problem(0.1, 0.0)
    k, _ = interpolation_interval(m, 0.5)
    assert float(interpolation_rhs(m, 0.5, 4.0, 0)) == 4.0
    assert float(interpolation_rhs(m, 0.5, 4.0, k)) == pytest.approx(4.0 * math.exp(-2))
    assert float(interpolation_rhs(m, 0.5, 4.0, 3 * k)) == pytest.approx(4.0 * math.exp(-6))
    with pytest.raises(BoundAssumptionError):
        interpolation_rhs(m, 0.5, 4.0, k + 1)
    with pytest.raises(BoundAssumptionError):
        interpolation_rhs(problem(0.1, 0.05), 0.5, 4.0, 0)
    restart, last = last_iterate_interval_exponent(m, 0.5)
    assert restart == -2.0 and last > -2.0


def test_restart_helpers():
    assert restart_epoch_rhs(2.0, 0) == 2.0
    assert restart_epoch_rhs(2.0, 2) == pytest.approx(2.0 * math.exp(-4))
    m = problem()
    assert float(restarted_tail_rhs(m, 0.5, 10)) > float(restarted_tail_rhs(m, 0.5, 1000))


def test_hamiltonian_metric_example():
    m = scalar(1.0)
    assert hamiltonian_metric(m, 0.0, [3.0], [4.0]) == pytest.approx(25.0)
    # with eta: (y + eta x)^2 + (x - eta y)^2 = (1 + eta^2)(x^2 + y^2)
    assert hamiltonian_metric(m, 0.5, [3.0], [4.0]) == pytest.approx(1.25 * 25)
    with pytest.raises(ValidationError):
        hamiltonian_metric(m, 0.5, [1.0, 2.0], [1.0])


def test_metric_gap_scalar_equality():
    m = scalar(1.0)
    rep = metric_conversion_gap(m, 0.5, [3.0], [4.0])
    assert float(rep) == pytest.approx(0.0, abs=1e-12) and rep.assumptions_ok


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.floats(0.0, 0.15), st.integers(0, 10 ** 6), st.floats(0.0, 1.0))
def test_metric_gap_nonnegative(d, std_B, seed, frac):
    m = analytic_moments(generate_problem(d, std_B, 0.0, seed))
    eta = frac * eta_max(m)[0]
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((20, d)), rng.standard_normal((20, d))
    rep = metric_conversion_gap(m, eta, x, y)
    if conversion_constant(m, eta) > 0:
        scale = hamiltonian_metric(m, eta, x, y).max()
        assert float(rep) >= -1e-10 * scale
    else:
        assert not rep.assumptions_ok


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.floats(0.0, 0.2), st.floats(0.0, 0.2), st.integers(0, 10 ** 6),
       st.integers(0, 5000))
def test_last_iterate_bound_is_monotone_to_limit(d, std_B, std_g, seed, K):
    m = analytic_moments(generate_problem(d, std_B, std_g, seed))
    eta = eta_choices(m, 0.5).eta_hat
    if contraction_lambda(m, eta) <= 0:
        return
    lim = last_iterate_limit(m, eta)
    init = 10 * lim + 1.0
    a, b = float(last_iterate_rhs(m, eta, init, K)), float(last_iterate_rhs(m, eta, init, K + 1))
    assert b <= a * (1 + 1e-12) and a >= lim * (1 - 1e-9)


def test_bound_report_text_and_validation():
    m = problem()
    rep = averaged_rhs(m, 0.5, 1.0, 5)
    text = rep.to_text()
    assert "term.tau1=" in text and "inputs=" in text
    with pytest.raises(ValidationError):
        last_iterate_rhs(m, 0.01, 1.0, -1)


def test_baseline_comparison_ratio():
    m = scalar(4.0, 0.1)
    out = baseline_comparison(m, 1.0, 100)
    assert out["noise_coefficient_ratio"] == pytest.approx(1.0)
    assert out["baseline_noise_term"] == pytest.approx(out["seg_avg_noise_term"])
    with pytest.raises(ValidationError):
        baseline_comparison(m, 1.0, 0)
