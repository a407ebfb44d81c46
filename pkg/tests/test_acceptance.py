"""Acceptance suite: each test checks one criterion at its stated tolerance
and records a one-line pass/fail verdict (printed in the terminal summary).

The Monte-Carlo criteria use 200 oracle seeds and 10^4 iterations at
d = 100, std_B = 0.1, so this module takes several minutes.
"""
from __future__ import annotations

import math
import subprocess
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from segrestart import (OracleSample, SolverConfig, SolverState, analytic_moments, eta_choices, eta_max,
                        generate_problem, geometric_sum_Q, parse_csv, run_solver, seg_step, update_average)
from segrestart.game_model import monte_carlo_second_moments
from segrestart.harness import ExperimentConfig, run_experiment
from segrestart.harness.analysis import estimate_plateau, fit_linear_rate, fit_loglog_slope, window
from segrestart.harness.checks import SuiteResult, suite_exact_scalar, suite_spectral, suite_stepsize
from segrestart.solvers import run_batch, seg_step_combined
from segrestart.spectral import spectrum_relation_check
from segrestart.streams import OracleStream
from segrestart.theory_bounds import (averaged_rhs, conversion_constant, last_iterate_rhs, metric_conversion_gap,
                                      noise_floor, averaged_taus)

DIM, STD_B, STD_G = 100, 0.1, 0.01
ALPHA = 0.5
SEEDS = range(200)
K = 10_000


@lru_cache(maxsize=None)
def general():
    spec = generate_problem(DIM, STD_B, STD_G, 0)
    m = analytic_moments(spec)
    return spec, m, eta_choices(m, ALPHA)


@lru_cache(maxsize=None)
def seg_run(std_g: float, eta_factor: float, init: float):
    spec, m, pack = general()
    spec = spec.with_noise(std_g=std_g)
    return run_batch(spec, SolverConfig("seg", pack.eta_hat * eta_factor, K, init_norm_sq=init), SEEDS)


def crossover_init(m) -> float:
    """Initial squared distance that puts the averaged bound's crossover
    (init term = noise term) at ``K / 10``."""
    tau1, tau2 = averaged_taus(m, ALPHA)
    return (K / 10) * tau2 * m.sigma_g_sq / tau1


@lru_cache(maxsize=None)
def experiment(preset: str):
    cfg = ExperimentConfig.from_preset(preset, n_seeds=len(SEEDS), total_iters=K, write_files=False)
    return run_experiment(cfg, keep_batches=True)


def _series(t, v, lo=1):
    keep = t >= lo
    return t[keep], v[keep]


# -- 1 --------------------------------------------------------------------------------

def test_criterion_1_exact_algebra(criterion):
    t0 = time.perf_counter()
    r = SuiteResult("exact")
    for (x, y), want in (((1.0, 0.0), (0.75, 0.5)), ((0.0, 1.0), (-0.5, 0.75))):
        s = OracleSample([[1.0]], [0.0], [0.0])
        a = seg_step(SolverState.start([x], [y]), s, 0.5)
        b = seg_step_combined(SolverState.start([x], [y]), s, 0.5)
        r.expect(abs(a.x[0] - want[0]) <= 1e-12 and abs(a.y[0] - want[1]) <= 1e-12, "scalar example")
        r.expect(abs(b.x[0] - want[0]) <= 1e-12 and abs(b.y[0] - want[1]) <= 1e-12, "combined scalar example")
    suite_exact_scalar(r, seg_step)
    for eta, lam, k in ((0.1, 3.0, 10_000), (0.01, 0.5, 777), (1.0, 0.999, 50)):
        loop, p = 0.0, 1.0
        for _ in range(k):
            loop += p
            p *= 1 - eta ** 2 * lam
        r.expect(abs(geometric_sum_Q(eta, lam, k) - loop) <= 1e-10 * loop, "Q_K closed form")
    rng = np.random.default_rng(1)
    xs = rng.standard_normal(1000)
    st = SolverState.start([0.0], [0.0])
    for v in xs:
        st = update_average(SolverState(np.array([v]), np.array([0.0]), st.x_avg, st.y_avg, st.s, st.epoch, st.t))
    r.expect(abs(st.x_avg[0] - xs.mean()) <= 1e-10 * max(1.0, abs(xs.mean())), "average vs batch mean")
    dt = time.perf_counter() - t0
    ok = criterion(1, r.ok and dt < 1.0, f"{r.passed} checks, {r.failed} failed, {dt:.3f}s")
    assert ok, r.failures


# -- 2 --------------------------------------------------------------------------------

def test_criterion_2_step_size_identities(criterion):
    t0 = time.perf_counter()
    r = SuiteResult("lemmas")
    suite_spectral(r, seg_step)
    suite_stepsize(r, seg_step)
    rng = np.random.default_rng(2)
    m = analytic_moments(generate_problem(8, 0.02, 0.01, 3))
    eta = eta_choices(m, ALPHA).eta_hat
    assert conversion_constant(m, eta) > 0
    gap = metric_conversion_gap(m, eta, rng.standard_normal((1000, 8)), rng.standard_normal((1000, 8)))
    r.expect(gap.assumptions_ok and gap.rhs_value >= -1e-9, f"metric conversion gap {gap.rhs_value}")
    spec1 = generate_problem(1, 0.0, 0.0, 0)
    m1 = analytic_moments(spec1)
    for eta in (0.01, 0.1, eta_max(m1)[0]):
        g = metric_conversion_gap(m1, eta, np.array([[0.3]]), np.array([[-1.1]]))
        r.expect(abs(g.rhs_value) <= 1e-12 * max(1.0, float(m1.lam_max_BtB)), f"scalar equality gap {g.rhs_value}")
    for n in range(2, 12):
        spectrum_relation_check(rng.standard_normal((n, n)), 1e-9)
    dt = time.perf_counter() - t0
    ok = criterion(2, r.ok and dt < 30.0, f"{r.passed} checks, {r.failed} failed, {dt:.2f}s")
    assert ok, r.failures


# -- 3 --------------------------------------------------------------------------------

def test_criterion_3_noise_floor(criterion):
    spec, m, pack = general()
    floor = noise_floor(m)
    base = seg_run(STD_G, 1.0, floor)
    half = seg_run(STD_G, 0.5, floor)
    small = seg_run(STD_G / 10, 1.0, floor)
    w = len(base.t) // 10
    plateau = estimate_plateau((base.t, base.mean_last), w)
    p_half = estimate_plateau((half.t, half.mean_last), w)
    p_small = estimate_plateau((small.t, small.mean_last), w)
    # flat: the last two windows of the run agree within 10%
    prev = float(np.mean(base.mean_last[-2 * w:-w]))
    flat = abs(prev - plateau) <= 0.1 * plateau
    halving = max(plateau, p_half) / min(plateau, p_half)
    noise_ratio = plateau / p_small
    ok = (flat and plateau <= 1.2 * floor and halving < 3 and 100 / 3 <= noise_ratio <= 300)
    criterion(3, ok, f"plateau={plateau:.3e} floor={floor:.3e} flat={flat} eta/2 ratio={halving:.2f} "
                     f"std_g ratio={noise_ratio:.1f}")
    assert ok


# -- 4 --------------------------------------------------------------------------------

def test_criterion_4_averaged_rate(criterion):
    spec, m, pack = general()
    init = crossover_init(m)
    run = seg_run(STD_G, 1.0, init)
    t, avg = run.t, run.mean_avg
    tail = fit_loglog_slope(_series(t, avg), 0.5)
    kc = K // 10
    early = fit_loglog_slope(window((t, avg), kc / 10, kc), 1.0)
    bound_ok = []
    for k in (100, 1000, 10_000):
        emp = float(avg[np.searchsorted(t, k)])
        rhs = averaged_rhs(m, ALPHA, init, k).rhs_value
        bound_ok.append(emp <= 1.2 * rhs)
    ok = -1.3 <= tail <= -0.7 and early <= -1.5 and all(bound_ok)
    criterion(4, ok, f"init={init:.3e} tail slope={tail:.3f} early slope={early:.3f} bounds={bound_ok}")
    assert ok


def test_last_iterate_bound_compliance():
    """Mean last-iterate distance stays below the last-iterate bound (+20%)."""
    spec, m, pack = general()
    for init in (noise_floor(m), crossover_init(m)):
        run = seg_run(STD_G, 1.0, init)
        for k in (100, 1000, 10_000):
            emp = float(run.mean_last[np.searchsorted(run.t, k)])
            assert emp <= 1.2 * last_iterate_rhs(m, pack.eta_hat, init, k).rhs_value


# -- 5 --------------------------------------------------------------------------------

def test_criterion_5_interpolation_acceleration(criterion):
    res = experiment("fig_interpolation")
    seg = res.batches["SEG"]
    rst = res.batches["SEG-Avg-Restart"]
    avg_slope = fit_loglog_slope(_series(seg.t, seg.mean_avg), 0.5)
    seg_rate = fit_linear_rate((seg.t, seg.mean_last), 0.5)
    rst_rate = fit_linear_rate((rst.t, rst.mean_avg), 0.5)
    k_thres = res.provenance["variants"]["SEG-Avg-Restart"]["schedule"]["epoch_lengths"][0]
    ends = list(range(k_thres, K + 1, k_thres))
    vals = [1.0] + [float(rst.mean_last[np.searchsorted(rst.t, e)]) for e in ends]
    discounts = [a / b for a, b in zip(vals, vals[1:])]
    ok = (-2.4 <= avg_slope <= -1.6 and rst_rate < 0 and rst_rate <= 2 * seg_rate
          and min(discounts) >= 0.7 * math.e ** 2)
    criterion(5, ok, f"SEG-Avg slope={avg_slope:.3f} restart exponent={rst_rate:.3e} "
                     f"SEG exponent={seg_rate:.3e} min epoch discount={min(discounts):.2f} over {len(ends)} epochs")
    assert ok


# -- 6 --------------------------------------------------------------------------------

def test_criterion_6_general_schedule(criterion):
    res = experiment("fig_dseg_compare")
    rst = res.batches["SEG-Avg-Restart"]
    vprov = res.provenance["variants"]["SEG-Avg-Restart"]
    init = vprov["init_norm_sq"]
    _, m, _ = general()
    assert init == pytest.approx(1e3 * noise_floor(m), rel=1e-12)
    stamps = vprov["schedule"]["timestamps"]
    boundary = []
    for ep, ts in enumerate(stamps, start=1):
        v = float(rst.mean_last[np.searchsorted(rst.t, ts)])
        boundary.append(v <= math.exp(-2 * ep) * init * 1.3)
    last = stamps[-1]
    keep = rst.t > last
    tail = fit_loglog_slope((rst.t[keep] - last, rst.mean_avg[keep]), 0.5)
    ok = all(boundary) and -1.3 <= tail <= -0.7
    criterion(6, ok, f"epochs={len(stamps)} boundaries ok={boundary} tail slope={tail:.3f}")
    assert ok


# -- 7 --------------------------------------------------------------------------------

def test_criterion_7_moment_cross_validation(criterion):
    spec = generate_problem(10, 0.3, 0.01, 5)
    m = analytic_moments(spec)
    est = monte_carlo_second_moments(spec, 100_000, OracleStream(7, "acceptance/moments"))
    zM = np.abs(est.M - m.M) / est.M_stderr
    d = spec.dim
    zG = np.abs(est.noise_gram - m.sigma_B_sq * np.eye(d)) / est.noise_gram_stderr
    sigma_mc = float(np.linalg.norm(est.noise_gram, 2))
    # operator-norm error is at most the Frobenius error of the estimate
    sigma_ok = abs(sigma_mc - m.sigma_B_sq) <= 4 * float(np.linalg.norm(est.noise_gram_stderr))
    exact = all(analytic_moments(generate_problem(n, s, 0.0, 1)).sigma_B_sq == n * s ** 2
                for n in (1, 7, 100) for s in (0.0, 0.1, 0.37))
    ok = zM.max() <= 4 and zG.max() <= 4 and sigma_ok and exact
    criterion(7, ok, f"max z(M)={zM.max():.2f} max z(noise Gram)={zG.max():.2f} "
                     f"sigma_B^2 mc={sigma_mc:.5f} analytic={m.sigma_B_sq:.5f} identity exact={exact}")
    assert ok


# -- 8 --------------------------------------------------------------------------------

def test_criterion_8_dseg_baseline(criterion):
    res = experiment("fig_dseg_compare")
    final = {k: float(c[-1]) for k, (t, c) in res.curves.items()}
    ok = final["SEG-Avg"] < final["DSEG"] and final["SEG-Avg-Restart"] < final["DSEG"]
    criterion(8, ok, " ".join(f"{k}={v:.3e}" for k, v in final.items()) + " (default DSEG tuning)")
    assert ok


# -- 9 --------------------------------------------------------------------------------

def test_criterion_9_determinism_and_io(criterion, tmp_path):
    spec = generate_problem(20, 0.1, 0.01, 4)
    cfg = SolverConfig("seg_avg_restart", 0.01, 500, seed=42, restart_times=(100, 250))
    a = run_solver(spec, cfg).save_csv(tmp_path / "a.csv", {"alpha": ALPHA})
    b = run_solver(spec, cfg).save_csv(tmp_path / "b.csv", {"alpha": ALPHA})
    same = a.read_bytes() == b.read_bytes()
    text = a.read_text()
    tr = parse_csv(text)[0]
    lossless = tr.to_csv({"alpha": ALPHA}) == text
    proc = subprocess.run([sys.executable, "-m", "segrestart", "check"], capture_output=True, text=True)
    ok = same and lossless and proc.returncode == 0
    criterion(9, ok, f"byte-identical={same} round-trip={lossless} check exit={proc.returncode}")
    assert ok, proc.stdout + proc.stderr
