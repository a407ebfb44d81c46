"""SEG iterations, running averages, scheduled restarts and the DSEG baseline.

States may carry a leading batch axis: ``x`` of shape ``(S, d)`` advances
``S`` independent runs in lockstep.  Every run of a batch follows the same
restart schedule, so the scalar counters ``s``, ``epoch`` and ``t`` are
shared.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from .game_model import OracleSample, ProblemSpec, distance_sq_to_nash
from .oracles import make_oracle
from .spectral import ValidationError

Method = Literal["seg", "seg_avg", "seg_avg_restart", "dseg"]
METHODS = ("seg", "seg_avg", "seg_avg_restart", "dseg")
CSV_HEADER = ("t", "method", "seed", "dist_sq_last", "dist_sq_avg", "epoch")
FLOAT_FMT = "%.17e"


@dataclass(frozen=True, eq=False)
class SolverState:
    x: np.ndarray
    y: np.ndarray
    x_avg: np.ndarray
    y_avg: np.ndarray
    s: int = 0
    epoch: int = 0
    t: int = 0

    @classmethod
    def start(cls, x0, y0) -> "SolverState":
        """Fresh state at ``(x0, y0)``; the average is parked at the start point."""
        x0 = np.array(x0, dtype=float)
        y0 = np.array(y0, dtype=float)
        if x0.shape != y0.shape:
            raise ValidationError(f"x0 and y0 shapes differ: {x0.shape} vs {y0.shape}")
        return cls(x0, y0, x0.copy(), y0.copy())


def _check_dims(state: SolverState, sample) -> None:
    d = state.x.shape[-1]
    if state.y.shape[-1] != d or sample.g_x.shape[-1] != d or sample.g_y.shape[-1] != d:
        raise ValidationError("state and sample dimensions do not match")
    B = getattr(sample, "B_xi", None)
    if B is not None and B.shape[-2:] != (d, d):
        raise ValidationError(f"sample matrix shape {B.shape} does not match dimension {d}")


def _extragradient(x, y, s1, s2, eta1: float, eta2: float):
    """Half step with ``s1``/``eta1`` then the full step with ``s2``/``eta2``."""
    x_h = x - eta1 * (s1.matvec(y) + s1.g_x)
    y_h = y + eta1 * (s1.rmatvec(x) + s1.g_y)
    x_new = x - eta2 * (s2.matvec(y_h) + s2.g_x)
    y_new = y + eta2 * (s2.rmatvec(x_h) + s2.g_y)
    return x_new, y_new


def seg_step(state: SolverState, sample, eta: float) -> SolverState:
    """One same-sample extragradient step.

    The extrapolation ``(x_h, y_h)`` and the update both use ``sample``.
    Only matrix-vector products with ``B_xi`` are needed, so lazily revealed
    samples work as well as explicit ones.
    """
    if eta < 0:
        raise ValidationError("eta must be nonnegative")
    _check_dims(state, sample)
    x, y = _extragradient(state.x, state.y, sample, sample, eta, eta)
    return replace(state, x=x, y=y, t=state.t + 1)


def seg_step_combined(state: SolverState, sample: OracleSample, eta: float) -> SolverState:
    """The same step written as one explicit map::

        x' = x - eta^2 B B^T x - eta (B y + g_x) - eta^2 B g_y
        y' = y - eta^2 B^T B y + eta (B^T x + g_y) - eta^2 B^T g_x
    """
    if eta < 0:
        raise ValidationError("eta must be nonnegative")
    _check_dims(state, sample)
    B = sample.B_xi
    x, y = state.x, state.y
    e2 = eta * eta
    x_new = x - e2 * (B @ (B.T @ x)) - eta * (B @ y + sample.g_x) - e2 * (B @ sample.g_y)
    y_new = y - e2 * (B.T @ (B @ y)) + eta * (B.T @ x + sample.g_y) - e2 * (B.T @ sample.g_x)
    return replace(state, x=x_new, y=y_new, t=state.t + 1)


def dseg_step(state: SolverState, sample_extrap, sample_update, eta1: float, eta2: float) -> SolverState:
    """Double-step-size extragradient: extrapolate with ``eta1`` on one sample,
    update with the smaller ``eta2`` on an independent one."""
    if eta2 < 0 or eta1 < eta2:
        raise ValidationError(f"need eta1 >= eta2 >= 0, got eta1={eta1}, eta2={eta2}")
    _check_dims(state, sample_extrap)
    _check_dims(state, sample_update)
    x, y = _extragradient(state.x, state.y, sample_extrap, sample_update, eta1, eta2)
    return replace(state, x=x, y=y, t=state.t + 1)


def update_average(state: SolverState) -> SolverState:
    """Fold the current iterate into the running average of the epoch."""
    s = state.s + 1
    w = (s - 1) / s
    return replace(state, s=s,
                   x_avg=w * state.x_avg + state.x / s,
                   y_avg=w * state.y_avg + state.y / s)


def restart(state: SolverState) -> SolverState:
    """Move the iterate to the running average and start a new epoch."""
    if state.s < 1:
        raise ValidationError("restart before any averaging")
    return replace(state, x=state.x_avg.copy(), y=state.y_avg.copy(), s=0, epoch=state.epoch + 1)


# -- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class DsegParams:
    """Step schedule ``eta_i(t) = c_i * eta * ((1 + shift) / (t + shift))^rho_i``.

    ``eta`` is the run's reference step (the harness passes ``eta_M``), so
    at ``t = 1`` the steps are exactly ``c1 * eta`` and ``c2 * eta``.
    """
    c1: float = 0.5
    c2: float = 0.05
    rho1: float = 1.0 / 3.0
    rho2: float = 2.0 / 3.0
    shift: float = 19.0

    def __post_init__(self):
        if not (self.c1 >= self.c2 > 0 and 0 <= self.rho1 <= self.rho2 and self.shift > -1):
            raise ValidationError("DSEG schedule needs c1 >= c2 > 0, 0 <= rho1 <= rho2, shift > -1")

    def steps(self, eta: float, t: int) -> tuple[float, float]:
        base = (1.0 + self.shift) / (t + self.shift)
        return self.c1 * eta * base ** self.rho1, self.c2 * eta * base ** self.rho2


@dataclass(frozen=True)
class SolverConfig:
    method: Method
    eta: float
    total_iters: int
    seed: int = 0
    restart_times: tuple[int, ...] = ()
    dseg: DsegParams = field(default_factory=DsegParams)
    record_stride: int | None = None
    init_norm_sq: float = 1.0
    averaging: Literal["algorithm", "include_initial"] = "algorithm"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ValidationError("eta must be finite and nonnegative")
        if self.total_iters < 1:
            raise ValidationError("total_iters must be >= 1")
        rt = tuple(int(t) for t in self.restart_times)
        object.__setattr__(self, "restart_times", rt)
        if rt and self.method != "seg_avg_restart":
            raise ValidationError("restart_times only apply to seg_avg_restart")
        if any(b <= a for a, b in zip(rt, rt[1:])) or (rt and (rt[0] < 1 or rt[-1] > self.total_iters)):
            raise ValidationError("restart_times must be strictly increasing within [1, total_iters]")
        if self.record_stride is not None and self.record_stride < 1:
            raise ValidationError("record_stride must be >= 1")
        if self.init_norm_sq < 0:
            raise ValidationError("init_norm_sq must be nonnegative")
        if self.averaging not in ("algorithm", "include_initial"):
            raise ValidationError(f"unknown averaging convention {self.averaging!r}")

    @property
    def stride(self) -> int:
        if self.record_stride is not None:
            return self.record_stride
        return 1 if self.total_iters <= 10_000 else 10


def centered(spec: ProblemSpec) -> ProblemSpec:
    """The nash-centered game translated so that its Nash point is the origin."""
    z = np.zeros(spec.dim)
    return ProblemSpec(spec.dim, spec.B, z, z, spec.std_B, spec.std_g, z, z, spec.oracle_model)


def default_start(spec: ProblemSpec, init_norm_sq: float) -> tuple[np.ndarray, np.ndarray]:
    """``z0 = z* + c * 1`` with ``||z0 - z*||^2 = init_norm_sq``."""
    c = math.sqrt(init_norm_sq / (2 * spec.dim))
    return spec.nash_x + c, spec.nash_y + c


# -- trajectories ----------------------------------------------------------------

@dataclass(eq=False)
class Trajectory:
    """Recorded squared distances to the Nash point for one run."""
    method: str
    seed: int
    t: np.ndarray
    dist_sq_last: np.ndarray
    dist_sq_avg: np.ndarray
    epoch: np.ndarray
    final_state: SolverState | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.epoch = np.asarray(self.epoch, dtype=np.int64)
        self.dist_sq_last = np.asarray(self.dist_sq_last, dtype=float)
        self.dist_sq_avg = np.asarray(self.dist_sq_avg, dtype=float)
        if np.any(np.diff(self.t) <= 0):
            raise ValidationError("trajectory times must be strictly increasing")

    @property
    def records(self) -> list[tuple[int, float, float, int]]:
        return [(int(a), float(b), float(c), int(e))
                for a, b, c, e in zip(self.t, self.dist_sq_last, self.dist_sq_avg, self.epoch)]

    def write_csv(self, fh, provenance: dict | None = None) -> None:
        """Rows ``t,method,seed,dist_sq_last,dist_sq_avg,epoch``; optional
        provenance goes in leading ``#`` comment lines."""
        if provenance:
            for k in sorted(provenance):
                fh.write(f"# {k}={provenance[k]}\n")
        fh.write(",".join(CSV_HEADER) + "\n")
        for a, b, c, e in zip(self.t, self.dist_sq_last, self.dist_sq_avg, self.epoch):
            fh.write(f"{a},{self.method},{self.seed},{FLOAT_FMT % b},{FLOAT_FMT % c},{e}\n")

    def to_csv(self, provenance: dict | None = None) -> str:
        buf = io.StringIO()
        self.write_csv(buf, provenance)
        return buf.getvalue()

    def save_csv(self, path, provenance: dict | None = None) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            self.write_csv(fh, provenance)
        return path


def parse_csv(text: str) -> list[Trajectory]:
    """Inverse of :meth:`Trajectory.to_csv`; one trajectory per (method, seed)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValidationError(f"unexpected CSV header {header}")
    groups: dict[tuple[str, int], list] = {}
    for row in reader:
        if len(row) != len(CSV_HEADER):
            raise ValidationError(f"malformed CSV row {row}")
        groups.setdefault((row[1], int(row[2])), []).append(row)
    out = []
    for (method, seed), rows in groups.items():
        out.append(Trajectory(method, seed,
                              [int(r[0]) for r in rows], [float(r[3]) for r in rows],
                              [float(r[4]) for r in rows], [int(r[5]) for r in rows]))
    return out


def load_csv(path) -> list[Trajectory]:
    return parse_csv(Path(path).read_text())


@dataclass(eq=False)
class BatchTrajectory:
    """Lockstep runs over several seeds: arrays of shape ``(n_seeds, n_records)``."""
    method: str
    seeds: tuple[int, ...]
    t: np.ndarray
    epoch: np.ndarray
    dist_sq_last: np.ndarray
    dist_sq_avg: np.ndarray
    final_state: SolverState

    def trajectory(self, i: int) -> Trajectory:
        st = self.final_state
        fs = SolverState(st.x[i].copy(), st.y[i].copy(), st.x_avg[i].copy(), st.y_avg[i].copy(),
                         st.s, st.epoch, st.t)
        return Trajectory(self.method, self.seeds[i], self.t.copy(), self.dist_sq_last[i].copy(),
                          self.dist_sq_avg[i].copy(), self.epoch.copy(), fs)

    @property
    def mean_last(self) -> np.ndarray:
        return self.dist_sq_last.mean(axis=0)

    @property
    def mean_avg(self) -> np.ndarray:
        return self.dist_sq_avg.mean(axis=0)

    @property
    def curve(self) -> np.ndarray:
        """Mean-over-seeds squared distance of the method's output iterate."""
        return self.mean_last if self.method == "seg" else self.mean_avg


# -- runners ---------------------------------------------------------------------

def run_batch(spec: ProblemSpec, config: SolverConfig, seeds: Iterable[int],
              oracle: str = "lazy", start: tuple | None = None) -> BatchTrajectory:
    """Run ``config`` for every seed in lockstep; each seed owns its oracle stream.

    The seed in ``config`` is ignored in favour of ``seeds``.  ``start``
    overrides the default initialization ``(x0, y0)`` (broadcast over seeds).
    """
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValidationError("need at least one seed")
    S, d = len(seeds), spec.dim
    x0, y0 = default_start(spec, config.init_norm_sq) if start is None else start
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (S, d))
    y0 = np.broadcast_to(np.asarray(y0, dtype=float), (S, d))
    run_spec, shift = spec, None
    if oracle == "lazy" and spec.oracle_model == "nash_centered":
        # same dynamics written around the Nash point; spares the lazy
        # oracle the two reveals that center the intercept noise
        run_spec = centered(spec)
        shift = (spec.nash_x, spec.nash_y)
        x0, y0 = x0 - shift[0], y0 - shift[1]
    state = SolverState.start(x0, y0)
    src = make_oracle(run_spec, seeds, oracle)
    restarts = set(config.restart_times) if config.method == "seg_avg_restart" else set()
    stride = config.stride
    rec_t = [t for t in range(config.total_iters + 1)
             if t % stride == 0 or t in restarts or t == config.total_iters]
    n = len(rec_t)
    ts = np.array(rec_t, dtype=np.int64)
    epochs = np.zeros(n, dtype=np.int64)
    last = np.empty((S, n))
    avg = np.empty((S, n))
    last[:, 0] = distance_sq_to_nash(run_spec, state.x, state.y)
    avg[:, 0] = last[:, 0]
    # include_initial counts each epoch's start point as its first averaged
    # iterate; at s == 0 the average already sits at that point
    include_initial = config.averaging == "include_initial"
    k = 1
    for t in range(1, config.total_iters + 1):
        if config.method == "dseg":
            e1, e2 = config.dseg.steps(config.eta, t)
            state = dseg_step(state, src.draw(), src.draw(), e1, e2)
        else:
            state = seg_step(state, src.draw(), config.eta)
        if include_initial and state.s == 0:
            state = replace(state, s=1)
        state = update_average(state)
        if t in restarts:
            state = restart(state)
        if k < n and rec_t[k] == t:
            last[:, k] = distance_sq_to_nash(run_spec, state.x, state.y)
            avg[:, k] = distance_sq_to_nash(run_spec, state.x_avg, state.y_avg)
            epochs[k] = state.epoch
            k += 1
    if shift is not None:
        state = replace(state, x=state.x + shift[0], y=state.y + shift[1],
                        x_avg=state.x_avg + shift[0], y_avg=state.y_avg + shift[1])
    return BatchTrajectory(config.method, seeds, ts, epochs, last, avg, state)


def run_solver(spec: ProblemSpec, config: SolverConfig, oracle: str = "lazy",
               start: tuple | None = None) -> Trajectory:
    """Single seeded run; deterministic given ``config.seed``."""
    return run_batch(spec, config, [config.seed], oracle, start).trajectory(0)
