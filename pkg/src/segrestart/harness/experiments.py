"""Multi-seed experiment presets mirroring the synthetic bilinear figures.

One game is generated from ``base_seed`` and shared by every method and
seed; each seed drives an independent oracle stream.  Curves are means over
seeds of squared distances to the Nash point.
"""
from __future__ import annotations

import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..game_model import ProblemSpec, analytic_moments, generate_problem
from ..restart_schedule import Schedule, general_epoch_lengths, interpolation_schedule
from ..solvers import BatchTrajectory, SolverConfig, SolverState, run_batch
from ..spectral import ValidationError
from ..stepsize import eta_choices
from ..theory_bounds import noise_floor
from .analysis import estimate_plateau, fit_linear_rate, fit_loglog_slope
from .svg import emit_svg

OUT_ENV = "SEGRESTART_OUT"
DEFAULT_ALPHA = 0.5
LABELS = {"seg": "SEG", "seg_avg": "SEG-Avg", "seg_avg_restart": "SEG-Avg-Restart", "dseg": "DSEG"}
PRESET_NAMES = ("fig_general", "fig_interpolation", "fig_restart_compare", "fig_stepsize_sweep",
                "fig_noise_sweep", "fig_dseg_compare", "custom")

_PRESETS = {
    "fig_general": dict(std_g=0.01, methods=("seg", "seg_avg", "seg_avg_restart"), total_iters=100_000),
    "fig_interpolation": dict(std_g=0.0, methods=("seg", "seg_avg", "seg_avg_restart"), total_iters=20_000),
    "fig_restart_compare": dict(std_g=0.0, methods=("seg", "seg_avg_restart"), total_iters=20_000),
    "fig_stepsize_sweep": dict(std_g=0.01, methods=("seg",), total_iters=100_000,
                               eta_factors=(1.0, 0.75, 0.5, 0.25)),
    "fig_noise_sweep": dict(std_g=0.01, methods=("seg",), total_iters=100_000,
                            std_g_values=(0.01, 0.001, 0.0001)),
    "fig_dseg_compare": dict(std_g=0.01, methods=("seg_avg", "seg_avg_restart", "dseg"), total_iters=100_000),
    "custom": dict(std_g=0.01, methods=("seg", "seg_avg", "seg_avg_restart"), total_iters=10_000),
}
_AXES = {"fig_restart_compare": "semilogy"}


def default_output_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "segrestart_out"))


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "custom"
    dim: int = 100
    std_B: float = 0.1
    std_g: float = 0.01
    alpha: float = DEFAULT_ALPHA
    methods: tuple[str, ...] = ("seg", "seg_avg", "seg_avg_restart")
    total_iters: int = 10_000
    n_seeds: int = 32
    base_seed: int = 0
    output_dir: str | None = None
    workers: int = 1
    oracle: str = "lazy"
    init_norm_sq: float | None = None
    record_stride: int | None = None
    eta_factors: tuple[float, ...] | None = None
    std_g_values: tuple[float, ...] | None = None
    write_files: bool = True

    def __post_init__(self):
        if self.preset not in PRESET_NAMES:
            raise ValidationError(f"unknown preset {self.preset!r}")
        if self.n_seeds < 1 or self.total_iters < 1:
            raise ValidationError("n_seeds and total_iters must be >= 1")
        if self.dim < 1 or self.std_B < 0 or self.std_g < 0:
            raise ValidationError("dim must be positive and noise scales nonnegative")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        for m in self.methods:
            if m not in LABELS:
                raise ValidationError(f"unknown method {m!r}")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")

    @classmethod
    def from_preset(cls, preset: str, **overrides) -> "ExperimentConfig":
        if preset not in _PRESETS:
            raise ValidationError(f"unknown preset {preset!r}")
        base = dict(_PRESETS[preset])
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(preset=preset, **base)

    @property
    def axes(self) -> str:
        return _AXES.get(self.preset, "loglog")

    @property
    def out_path(self) -> Path:
        return Path(self.output_dir) if self.output_dir else default_output_dir() / self.preset


@dataclass(frozen=True)
class Variant:
    """One curve: a method at a step-size rule and intercept noise level."""
    label: str
    method: str
    std_g: float
    eta_rule: str  # "hat", "bar" or "M"
    eta_factor: float = 1.0


@dataclass
class AnalysisResult:
    method: str
    tail_loglog_slope: float | None
    plateau_level: float | None
    linear_rate_exponent: float | None
    seeds_aggregated: int
    label: str = ""
    eta: float | None = None
    error: str | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    analyses: dict[str, AnalysisResult]
    curves: dict[str, tuple[np.ndarray, np.ndarray]]
    files: list[Path]
    provenance: dict
    batches: dict[str, BatchTrajectory] = field(default_factory=dict)


def variants_for(config: ExperimentConfig) -> list[Variant]:
    interp = config.std_g == 0
    rule = "bar" if interp else "hat"
    if config.eta_factors:
        return [Variant(f"SEG eta={f:g}*eta_M", "seg", config.std_g, "M", f) for f in config.eta_factors]
    if config.std_g_values:
        return [Variant(f"SEG std_g={s:g}", "seg", s, "bar" if s == 0 else "hat") for s in config.std_g_values]
    return [Variant(LABELS[m], m, config.std_g, "M" if m == "dseg" else rule) for m in config.methods]


def default_init(moments) -> float:
    """``10^3`` noise floors when ``sigma_g > 0``, else 1."""
    return 1e3 * noise_floor(moments) if moments.sigma_g_sq > 0 else 1.0


def restart_schedule_for(moments, alpha: float, init_norm_sq: float, total_iters: int) -> Schedule:
    if moments.sigma_g_sq > 0:
        return general_epoch_lengths(moments, alpha, init_norm_sq)
    return interpolation_schedule(moments, alpha, total_iters)


def _batch_chunk(args) -> BatchTrajectory:
    spec, cfg, seeds, oracle = args
    return run_batch(spec, cfg, seeds, oracle)


def run_seeds(spec: ProblemSpec, cfg: SolverConfig, seeds, oracle: str = "lazy",
              workers: int = 1) -> BatchTrajectory:
    """Run all seeds, splitting them over ``workers`` processes."""
    seeds = tuple(seeds)
    if workers <= 1 or len(seeds) < 2:
        return run_batch(spec, cfg, seeds, oracle)
    chunks = [c.tolist() for c in np.array_split(np.array(seeds), min(workers, len(seeds)))]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_batch_chunk, [(spec, cfg, c, oracle) for c in chunks]))
    fs = [p.final_state for p in parts]
    state = SolverState(*(np.concatenate([getattr(f, k) for f in fs]) for k in ("x", "y", "x_avg", "y_avg")),
                        fs[0].s, fs[0].epoch, fs[0].t)
    return BatchTrajectory(cfg.method, seeds, parts[0].t, parts[0].epoch,
                           np.concatenate([p.dist_sq_last for p in parts]),
                           np.concatenate([p.dist_sq_avg for p in parts]), state)


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", label).strip("_").lower()


def analyze_curve(method: str, t: np.ndarray, curve: np.ndarray, n_seeds: int, interpolation: bool,
                  label: str = "", eta: float | None = None) -> AnalysisResult:
    keep = t >= 1
    series = (t[keep], curve[keep])
    slope = plateau = rate = None
    try:
        slope = fit_loglog_slope(series, 0.5)
    except ValidationError:
        pass
    if method == "seg" and not interpolation:
        plateau = estimate_plateau(series, max(1, len(series[0]) // 10))
    if interpolation:
        try:
            rate = fit_linear_rate(series, 0.5)
        except ValidationError:
            pass
    return AnalysisResult(method, slope, plateau, rate, n_seeds, label, eta)


def run_experiment(config: ExperimentConfig, keep_batches: bool = False) -> ExperimentResult:
    """Run every variant of ``config`` over all seeds; write CSVs, the mean
    curves, an SVG figure and a provenance record."""
    base = generate_problem(config.dim, config.std_B, config.std_g, config.base_seed)
    seeds = range(config.base_seed, config.base_seed + config.n_seeds)
    out = config.out_path
    if config.write_files:
        out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    analyses: dict[str, AnalysisResult] = {}
    curves: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    batches: dict[str, BatchTrajectory] = {}
    cache: dict[tuple, BatchTrajectory] = {}
    prov = {"preset": config.preset, "alpha": config.alpha, "dim": config.dim, "std_B": config.std_B,
            "base_seed": config.base_seed, "n_seeds": config.n_seeds, "total_iters": config.total_iters,
            "oracle": config.oracle, "oracle_model": base.oracle_model, "variants": {}}
    for v in variants_for(config):
        spec = base.with_noise(std_g=v.std_g)
        moments = analytic_moments(spec)
        try:
            pack = eta_choices(moments, config.alpha)
            eta = {"hat": pack.eta_hat, "bar": pack.eta_bar, "M": pack.eta_M}[v.eta_rule] * v.eta_factor
            init = config.init_norm_sq if config.init_norm_sq is not None else default_init(moments)
            restarts: tuple[int, ...] = ()
            schedule = None
            if v.method == "seg_avg_restart":
                schedule = restart_schedule_for(moments, config.alpha, init, config.total_iters)
                restarts = schedule.restart_times(config.total_iters)
            cfg = SolverConfig(v.method if v.method != "seg_avg" else "seg", eta, config.total_iters,
                               restart_times=restarts, init_norm_sq=init, record_stride=config.record_stride)
            if v.method == "seg_avg_restart" and not restarts:
                cfg = replace(cfg, method="seg")
        except (ValueError, ArithmeticError) as exc:
            analyses[v.label] = AnalysisResult(v.method, None, None, None, 0, v.label, None, str(exc))
            prov["variants"][v.label] = {"error": str(exc)}
            continue
        key = (cfg.method, eta, v.std_g, restarts, init)
        if key not in cache:
            cache[key] = run_seeds(spec, cfg, seeds, config.oracle, config.workers)
        batch = cache[key]
        curve = batch.mean_last if v.method == "seg" else batch.mean_avg
        curves[v.label] = (batch.t, curve)
        if keep_batches:
            batches[v.label] = batch
        analyses[v.label] = analyze_curve(v.method, batch.t, curve, len(batch.seeds), v.std_g == 0, v.label, eta)
        vprov = {"method": v.method, "eta": eta, "eta_rule": v.eta_rule, "eta_factor": v.eta_factor,
                 "std_g": v.std_g, "init_norm_sq": init, "noise_floor": noise_floor(moments),
                 "step_sizes": asdict(pack), "moments": moments.summary()}
        if schedule is not None:
            vprov["schedule"] = schedule.to_dict()
        prov["variants"][v.label] = vprov
        if config.write_files:
            header = {"preset": config.preset, "alpha": config.alpha, "label": v.label, "eta": repr(eta),
                      "dim": config.dim, "std_B": config.std_B, "std_g": v.std_g,
                      "init_norm_sq": repr(init), "base_seed": config.base_seed}
            for i in range(len(batch.seeds)):
                traj = batch.trajectory(i)
                traj.method = v.method
                files.append(traj.save_csv(out / f"{_slug(v.label)}_seed{batch.seeds[i]}.csv", header))
    if config.write_files and curves:
        files.append(_write_means(out / "mean_curves.csv", curves, config.alpha))
        plotted = {k: (t[t >= 1] if config.axes == "loglog" else t, c[t >= 1] if config.axes == "loglog" else c)
                   for k, (t, c) in curves.items()}
        plotted = {k: (t, c) for k, (t, c) in plotted.items() if np.all(c > 0) and np.all(np.isfinite(c))}
        if plotted:
            files.append(emit_svg(plotted, config.axes, out / f"{config.preset}.svg",
                                  title=f"{config.preset} (d={config.dim}, std_B={config.std_B}, "
                                        f"{config.n_seeds} seeds)"))
        prov["analyses"] = {k: asdict(a) for k, a in analyses.items()}
        (out / "provenance.json").write_text(json.dumps(prov, indent=1, default=_jsonable) + "\n")
        files.append(out / "provenance.json")
    return ExperimentResult(config, analyses, curves, files, prov, batches)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _write_means(path: Path, curves: dict, alpha: float) -> Path:
    labels = list(curves)
    t = curves[labels[0]][0]
    with open(path, "w") as fh:
        fh.write(f"# alpha={alpha}\n")
        fh.write("t," + ",".join(labels) + "\n")
        for i, ti in enumerate(t):
            row = [f"{curves[k][1][i]:.17e}" if i < len(curves[k][1]) else "" for k in labels]
            fh.write(f"{ti}," + ",".join(row) + "\n")
    return path
