from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segrestart.game_model import MomentSummary, analytic_moments, generate_problem
from segrestart.restart_schedule import (Schedule, ScheduleError, burn_in_estimate, epoch_coefficients,
                                         epoch_count, general_epoch_lengths, interpolation_interval,
                                         interpolation_schedule, interval_from_rate)
from segrestart.spectral import ValidationError
from segrestart.stepsize import eta_choices
from segrestart.theory_bounds import noise_floor


def scalar(b2: float, sigma_g_sq: float = 0.0) -> MomentSummary:
    b = math.sqrt(b2)
    return MomentSummary([[b]], [[b2]], [[b2]], [[b2 * b2]], [[b2 * b2]], 0.0, 0.0, sigma_g_sq)


def test_interval_from_rate_example():
    # a = 0: (4 / sqrt(8 r))^2 = 2 / r, so r = 1/e gives 2e
    assert interval_from_rate(0.0, 1 / math.e) == pytest.approx(2 * math.e)
    assert math.ceil(interval_from_rate(0.0, 1 / math.e)) == 6
    with pytest.raises(ScheduleError):
        interval_from_rate(0.1, 0.0)


def test_interpolation_interval_noise_free_coupling():
    m = scalar(3.0)
    k, rate = interpolation_interval(m, 0.5)
    eta = 1 / math.sqrt(3.0)  # eta_M of the scalar game
    assert rate == pytest.approx(math.sqrt(0.5 * eta ** 2 * 3.0) / math.e)
    assert k == math.ceil(2 / rate - 1e-9)
    # alpha = 0 is admitted in the interpolation setting
    k0, r0 = interpolation_interval(m, 0.0)
    assert r0 == pytest.approx(rate * math.sqrt(2)) and k0 <= k


def test_interpolation_interval_grows_with_coupling_noise():
    lo = analytic_moments(generate_problem(8, 0.05, 0.0, 1))
    hi = analytic_moments(generate_problem(8, 0.3, 0.0, 1))
    assert interpolation_interval(hi, 0.5)[0] > interpolation_interval(lo, 0.5)[0]


def test_interpolation_schedule_is_constant():
    m = analytic_moments(generate_problem(6, 0.1, 0.0, 2))
    k, _ = interpolation_interval(m, 0.5)
    sch = interpolation_schedule(m, 0.5, 10 * k + 3)
    assert sch.epoch_lengths == (k,) * 10 and sch.timestamps[-1] == 10 * k and sch.kind == "interpolation"


def test_epoch_count_example():
    m = scalar(3.0, 1.0)
    assert epoch_count(m, math.exp(4)) == 2
    assert epoch_count(m, math.exp(4) * 1.01) == 3
    assert epoch_count(m, 1.0) == 0


def test_at_or_below_floor_gives_empty_schedule():
    m = analytic_moments(generate_problem(5, 0.1, 0.1, 0))
    sch = general_epoch_lengths(m, 0.5, noise_floor(m))
    assert sch.epoch_count == 0 and sch.timestamps == () and sch.total == 0


def test_general_schedule_requires_intercept_noise():
    m = analytic_moments(generate_problem(5, 0.1, 0.0, 0))
    with pytest.raises(ScheduleError):
        general_epoch_lengths(m, 0.5, 1.0)
    with pytest.raises(ScheduleError):
        burn_in_estimate(m, 0.5, 1.0)


def test_general_lengths_noise_free_coupling_closed_form():
    m = scalar(2.0, 1e-6)
    eta = eta_choices(m, 0.5).eta_hat
    init = 1.0
    sch = general_epoch_lengths(m, 0.5, init)
    for ep, K in enumerate(sch.epoch_lengths, start=1):
        start = math.exp(2 - 2 * ep) * init
        q1 = 16 * start / (0.5 * 2.0 * eta ** 2)
        q2 = 18 * 1e-6 / (0.5 * 2.0)
        q3 = math.exp(-2 * ep) * init
        assert K == max(1, math.ceil((q2 + math.sqrt(q2 * q2 + 4 * q1 * q3)) / (2 * q3)) - 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.floats(0.0, 0.2), st.floats(1e-3, 0.3), st.integers(0, 10 ** 6),
       st.floats(1.0, 1e6))
def test_epoch_length_is_smallest_satisfying_k(d, std_B, std_g, seed, mult):
    m = analytic_moments(generate_problem(d, std_B, std_g, seed))
    init = mult * noise_floor(m)
    sch = general_epoch_lengths(m, 0.5, init)
    eta = eta_choices(m, 0.5).eta_hat
    assert sch.epoch_count == epoch_count(m, init)
    for ep, K in enumerate(sch.epoch_lengths, start=1):
        q1, q2, q3 = epoch_coefficients(m, 0.5, init, ep, eta)
        holds = lambda k: q1 / (k + 1) ** 2 + q2 / (k + 1) <= q3 * (1 + 1e-12)
        assert holds(K)
        assert K == 1 or not holds(K - 2)
    # lengths grow with the epoch index (the start value shrinks by e^2, the target by e^2 too)
    assert all(a <= b for a, b in zip(sch.epoch_lengths, sch.epoch_lengths[1:]))
    assert all(a < b for a, b in zip(sch.timestamps, sch.timestamps[1:]))


def test_burn_in_bounds_the_epoch_total():
    rng = np.random.default_rng(11)
    for i in range(50):
        d = int(rng.integers(2, 8))
        m = analytic_moments(generate_problem(d, float(rng.uniform(0, 0.2)), float(rng.uniform(1e-3, 0.1)), i))
        init = noise_floor(m) * float(10 ** rng.uniform(0, 6))
        total = general_epoch_lengths(m, 0.5, init).total
        assert burn_in_estimate(m, 0.5, init) >= total
        assert burn_in_estimate(m, 0.5, init, exact_geometric_sum=False) <= burn_in_estimate(m, 0.5, init)


def test_schedule_json_and_validation():
    sch = Schedule.from_lengths([3, 4, 5], rate=0.1)
    assert sch.timestamps == (3, 7, 12) and sch.restart_times(10) == (3, 7)
    assert Schedule.from_json(sch.to_json()) == sch
    with pytest.raises(ValidationError):
        Schedule((3, 8), (3, 4), 2)
    with pytest.raises(ValidationError):
        Schedule.from_lengths([3, 0])


def test_alpha_validation():
    m = analytic_moments(generate_problem(4, 0.1, 0.1, 0))
    for a in (0.0, 1.0, -0.1):
        with pytest.raises(ValidationError):
            general_epoch_lengths(m, a, 1.0)
    with pytest.raises(ValidationError):
        interpolation_interval(m, 1.0)
