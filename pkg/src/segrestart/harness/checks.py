"""Property-check runner: every cross-module invariant on fixed seeds.

Each suite returns counts of passed and failed cases; the report prints one
machine-readable line per suite::

    suite=<name> passed=<n> failed=<m> status=PASS|FAIL
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..game_model import (OracleSample, ProblemSpec, analytic_moments, generate_problem,
                          monte_carlo_second_moments)
from ..oracles import make_oracle
from ..restart_schedule import general_epoch_lengths, interpolation_interval, interval_from_rate
from ..solvers import (SolverConfig, SolverState, parse_csv, restart, run_solver, seg_step,
                       update_average)
from ..spectral import operator_norm, spectrum_relation_check, sym_eig_extremes
from ..stepsize import contraction_lambda, eta_choices, eta_max, geometric_sum_Q
from ..streams import OracleStream
from ..theory_bounds import (averaged_rhs, conversion_constant, interpolation_rhs, last_iterate_limit,
                             metric_conversion_gap, noise_floor)

CHECK_SEED = 20240607


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    failed: int = 0
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def expect(self, ok: bool, what: str) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.failures) < 5:
                self.failures.append(what)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"suite={self.name} passed={self.passed} failed={self.failed} status={status}"


@dataclass
class CheckReport:
    suites: list[SuiteResult]

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.suites)

    def lines(self) -> list[str]:
        out = []
        for s in self.suites:
            out.append(s.line())
            out.extend(f"  failure: {f}" for f in s.failures)
        return out

    def __str__(self) -> str:
        return "\n".join(self.lines())


def _random_square(rng, n: int) -> np.ndarray:
    return rng.standard_normal((n, n)) + 2.0 * np.eye(n)


def _random_spec(rng) -> ProblemSpec:
    n = int(rng.integers(2, 7))
    B = _random_square(rng, n)
    return ProblemSpec.from_means(B, rng.standard_normal(n), rng.standard_normal(n),
                                  std_B=float(rng.uniform(0.0, 0.3)), std_g=float(rng.uniform(0.0, 0.1)))


def _scalar_spec(b: float) -> ProblemSpec:
    return ProblemSpec.from_means([[b]], [0.0], [0.0])


# -- suites -------------------------------------------------------------------------

def suite_spectral(r: SuiteResult, step) -> None:
    rng = np.random.default_rng(CHECK_SEED)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        B = rng.standard_normal((n, n))
        try:
            spectrum_relation_check(B, 1e-9)
            r.expect(True, "")
        except AssertionError as exc:
            r.expect(False, f"spectrum relation: {exc}")
        A = rng.standard_normal((n, int(rng.integers(1, 9))))
        r.expect(abs(operator_norm(A) - operator_norm(A.T)) <= 1e-12 * max(1.0, operator_norm(A)),
                 "operator norm transpose invariance")
        S = A @ A.T
        lo, hi = sym_eig_extremes(S)
        w = np.linalg.eigvals(S).real
        r.expect(abs(lo - w.min()) <= 1e-9 * max(1, hi) and abs(hi - w.max()) <= 1e-9 * max(1, hi),
                 "eigen extremes vs general eigensolver")


def suite_moments(r: SuiteResult, step) -> None:
    spec = generate_problem(3, 0.2, 0.05, CHECK_SEED)
    est = monte_carlo_second_moments(spec, 20_000, OracleStream(CHECK_SEED, "check/moments"))
    m = analytic_moments(spec)
    z = np.abs(est.M - m.M) / np.maximum(est.M_stderr, 1e-300)
    r.expect(bool(np.all(z <= 4.0)), f"Monte-Carlo M within 4 standard errors (max z {z.max():.2f})")
    se = operator_norm(est.noise_gram_stderr)
    r.expect(abs(operator_norm(est.noise_gram) - m.sigma_B_sq) <= 4 * max(se, 1e-12) * spec.dim,
             "sigma_B^2 vs Monte-Carlo noise Gram")
    r.expect(math.isclose(m.sigma_B_sq, spec.dim * spec.std_B ** 2, rel_tol=0, abs_tol=0),
             "sigma_B^2 = d std_B^2 exactly")
    r.expect(analytic_moments(spec.with_noise(std_B=0.0)).sigma_B2_sq <= 1e-12, "sigma_B2 vanishes at std_B = 0")
    a = generate_problem(5, 0.1, 0.01, 7)
    b = generate_problem(5, 0.1, 0.01, 7)
    r.expect(a.to_json() == b.to_json(), "generate_problem is pure")


def suite_stepsize(r: SuiteResult, step) -> None:
    rng = np.random.default_rng(CHECK_SEED + 1)
    for _ in range(200):
        m = analytic_moments(_random_spec(rng))
        eta_M = eta_max(m)[0]
        for f in (0.1, 0.5, 0.9, 1.0, 1.5, 3.0):
            eta = f * eta_M
            lam = contraction_lambda(m, eta)
            r.expect(eta ** 2 * lam <= 0.25 + 1e-12, "eta^2 lambda* <= 1/4")
            if f <= 1.0:
                low = (1 - eta ** 2 / eta_M ** 2) * m.lam_min
                r.expect(lam >= low - 1e-9 * max(1.0, m.lam_max) and low >= -1e-9,
                         "lambda* >= (1 - eta^2/eta_M^2) lambda_min")
        cap1 = 1 / math.sqrt(max(m.lam_max_M, m.lam_max_Mhat))
        r.expect(eta_M <= cap1 + 1e-9 and cap1 <= 1 / math.sqrt(m.lam_max_BtB) + 1e-9, "eta_M ordering")
    spec = _random_spec(rng).with_noise(std_B=0.0)
    m = analytic_moments(spec)
    r.expect(abs(eta_max(m)[0] - 1 / math.sqrt(m.lam_max_BtB)) <= 1e-9, "eta_M equality at std_B = 0")
    for K in (1, 7, 100, 2000):
        for q in (1e-6, 1e-3, 0.3):
            loop, p = 0.0, 1.0
            for _ in range(K):
                loop += p
                p *= 1 - q
            Q = geometric_sum_Q(1.0, q, K)
            r.expect(abs(Q - loop) <= 1e-10 * loop, f"Q_K closed form vs loop (K={K}, q={q})")
            r.expect(Q <= min(K, 1 / q) + 1e-9, "Q_K <= min(K, 1/(eta^2 lambda*))")


def suite_exact_scalar(r: SuiteResult, step) -> None:
    """Deterministic scalar SEG: the squared distance shrinks by exactly
    ``1 - eta^2 (b^2 - eta^2 b^4)`` per step."""
    for b in (0.5, 1.0, 2.0):
        spec = _scalar_spec(b)
        sample = OracleSample(spec.B, np.zeros(1), np.zeros(1))
        eta_M = eta_max(analytic_moments(spec))[0]
        for eta in (0.3 * eta_M, eta_M):
            ratio = 1 - eta ** 2 * (b * b - eta ** 2 * b ** 4)
            st = SolverState.start([1.0], [0.0])
            worst = 0.0
            for _ in range(100):
                d0 = float(st.x[0] ** 2 + st.y[0] ** 2)
                st = step(st, sample, eta)
                d1 = float(st.x[0] ** 2 + st.y[0] ** 2)
                worst = max(worst, abs(d1 / d0 - ratio))
            r.expect(worst <= 1e-12, f"scalar contraction ratio (b={b}, eta={eta:.4g}, err {worst:.2e})")
    st = step(SolverState.start([1.0], [0.0]), OracleSample([[1.0]], [0.0], [0.0]), 0.5)
    r.expect(np.allclose([st.x[0], st.y[0]], [0.75, 0.5], rtol=0, atol=1e-15), "scalar example (1,0) -> (0.75, 0.5)")


def suite_solver_semantics(r: SuiteResult, step) -> None:
    spec = generate_problem(4, 0.1, 0.05, CHECK_SEED)
    src = make_oracle(spec, [3])
    eta = 0.5 * eta_choices(analytic_moments(spec), 0.5).eta_hat
    st = SolverState.start(np.ones((1, 4)), -np.ones((1, 4)))
    xs, ys = [], []
    for k in range(1, 51):
        st = update_average(step(st, src.draw(), eta))
        xs.append(st.x)
        ys.append(st.y)
        r.expect(src.streams[0].draws == k, "one oracle draw per SEG step")
    err = max(np.max(np.abs(st.x_avg - np.mean(xs, axis=0))), np.max(np.abs(st.y_avg - np.mean(ys, axis=0))))
    r.expect(err <= 1e-10, f"running average equals batch mean (err {err:.2e})")
    before = st
    st = restart(st)
    r.expect(np.array_equal(st.x, before.x_avg) and np.array_equal(st.y, before.y_avg) and st.s == 0,
             "restart moves the iterate to the average")


def suite_schedule(r: SuiteResult, step) -> None:
    rng = np.random.default_rng(CHECK_SEED + 2)
    for _ in range(200):
        a, R = float(rng.uniform(1e-3, 10)), float(rng.uniform(1e-3, 10))
        lhs = interval_from_rate(a, R)
        rhs = ((math.sqrt(a) + math.sqrt(a + 8 * R)) / (2 * R)) ** 2
        r.expect(abs(lhs - rhs) <= 1e-9 * rhs, "rationalization identity")
    for R in (0.01, 0.1, 0.37, 1 / math.e):
        r.expect(math.ceil(interval_from_rate(0.0, R) * (1 - 1e-12)) == math.ceil(2 / R * (1 - 1e-12)),
                 "a = 0 gives ceil(2/rate)")
    m = analytic_moments(generate_problem(20, 0.1, 0.01, CHECK_SEED))
    sch = general_epoch_lengths(m, 0.5, 1e3 * noise_floor(m))
    ts = sch.timestamps
    r.expect(all(b > a for a, b in zip(ts, ts[1:])), "timestamps strictly increasing")
    ls = sch.epoch_lengths
    r.expect(all(b >= a for a, b in zip(ls, ls[1:])), "epoch lengths nondecreasing")
    k, _ = interpolation_interval(analytic_moments(generate_problem(20, 0.1, 0.0, CHECK_SEED)), 0.5)
    r.expect(k >= 1, "interpolation interval positive")


def suite_bounds(r: SuiteResult, step) -> None:
    rng = np.random.default_rng(CHECK_SEED + 3)
    for seed in range(10):
        m = analytic_moments(generate_problem(6, 0.05, 0.02, seed))
        eta = eta_max(m)[0] / math.sqrt(2)
        lim, fl = last_iterate_limit(m, eta), noise_floor(m)
        r.expect(lim <= fl * (1 + 1e-9) and fl <= 3 * lim * (1 + 1e-9), "noise floor within [1x, 3x] of the limit")
        m0 = analytic_moments(generate_problem(6, 0.0, 0.02, seed))
        t2 = averaged_rhs(m0, 0.5, 2.0, 50).rhs_value
        gf = averaged_rhs(m0, 0.5, 2.0, 50, variant="gamma_form", gamma=1.0).rhs_value
        r.expect(abs(t2 - gf) <= 1e-9 * gf, "closed and gamma=1 forms agree at sigma_B = 0")
    m = analytic_moments(generate_problem(6, 0.02, 0.0, 1))
    eta = eta_choices(m, 0.5).eta_hat
    if conversion_constant(m, eta) > 0:
        rep = metric_conversion_gap(m, eta, rng.standard_normal((1000, 6)), rng.standard_normal((1000, 6)))
        r.expect(rep.rhs_value >= -1e-9, "metric conversion gap nonnegative")
    m1 = analytic_moments(_scalar_spec(1.5))
    rep = metric_conversion_gap(m1, 0.3, np.array([[0.7]]), np.array([[-0.2]]))
    r.expect(abs(rep.rhs_value) <= 1e-12, "scalar metric conversion is an equality")
    k, _ = interpolation_interval(m, 0.5)
    one, two = interpolation_rhs(m, 0.5, 3.0, k).rhs_value, interpolation_rhs(m, 0.5, 3.0, 2 * k).rhs_value
    r.expect(abs(two - one * one / 3.0) <= 1e-12 * max(two, 1e-300), "interpolation bound multiplicative")


def suite_io(r: SuiteResult, step) -> None:
    spec = generate_problem(5, 0.1, 0.01, CHECK_SEED)
    cfg = SolverConfig("seg_avg_restart", 0.01, 60, seed=11, restart_times=(20, 40))
    a = run_solver(spec, cfg).to_csv({"alpha": 0.5})
    b = run_solver(spec, cfg).to_csv({"alpha": 0.5})
    r.expect(a == b, "identical seeds give byte-identical CSV")
    back = parse_csv(a)[0]
    r.expect(back.to_csv({"alpha": 0.5}) == a, "CSV round trip lossless")


SUITES: dict[str, Callable[[SuiteResult, Callable], None]] = {
    "spectral": suite_spectral,
    "moments": suite_moments,
    "stepsize": suite_stepsize,
    "exact_scalar": suite_exact_scalar,
    "solver_semantics": suite_solver_semantics,
    "schedule": suite_schedule,
    "bounds": suite_bounds,
    "io": suite_io,
}


def run_checks(step=seg_step, suites=None) -> CheckReport:
    """Run the named suites (all by default).  ``step`` replaces the SEG step,
    which lets a mutated step be audited."""
    out = []
    for name in suites or SUITES:
        r = SuiteResult(name)
        t0 = time.perf_counter()
        try:
            SUITES[name](r, step)
        except Exception as exc:  # a crashing suite counts as one failure
            r.expect(False, f"{type(exc).__name__}: {exc}")
        r.seconds = time.perf_counter() - t0
        out.append(r)
    return CheckReport(out)
