"""Command line: ``run``, ``check``, ``schedule`` and ``bounds``.

Exit status is 0 on success, 1 when a property check fails and 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import sys

from ..game_model import analytic_moments, generate_problem
from ..restart_schedule import ScheduleError, general_epoch_lengths, interpolation_schedule
from ..spectral import ValidationError
from ..stepsize import eta_choices
from ..theory_bounds import BoundAssumptionError, averaged_rhs, interpolation_rhs, last_iterate_rhs, noise_floor
from .checks import run_checks
from .experiments import DEFAULT_ALPHA, OUT_ENV, PRESET_NAMES, ExperimentConfig, default_init, run_experiment

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2


def _problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, help="problem dimension d")
    p.add_argument("--std-b", type=float, dest="std_B", help="coupling noise scale")
    p.add_argument("--std-g", type=float, dest="std_g", help="intercept noise scale")
    p.add_argument("--alpha", type=float, help=f"step-size split in (0, 1), default {DEFAULT_ALPHA}")
    p.add_argument("--seed", type=int, dest="base_seed", help="problem seed; oracle seeds start here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="segrestart", description="Same-sample SEG experiments on bilinear games")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment preset")
    run.add_argument("--preset", choices=PRESET_NAMES, default="custom")
    _problem_args(run)
    run.add_argument("--iters", type=int, dest="total_iters", help="iterations per run")
    run.add_argument("--seeds", type=int, dest="n_seeds", help="number of oracle seeds")
    run.add_argument("--out", dest="output_dir", help=f"output directory (default ${OUT_ENV}/<preset>)")
    run.add_argument("--workers", type=int, help="worker processes")
    run.add_argument("--init", type=float, dest="init_norm_sq", help="initial squared distance to the Nash point")

    sub.add_parser("check", help="run the property-check suites")

    sch = sub.add_parser("schedule", help="print the restart schedule")
    _problem_args(sch)
    sch.add_argument("--init", type=float, dest="init_norm_sq", help="initial squared distance")
    sch.add_argument("--iters", type=int, dest="total_iters", default=20_000,
                     help="horizon for the interpolation schedule")

    bd = sub.add_parser("bounds", help="print bound values for a preset")
    bd.add_argument("--preset", choices=PRESET_NAMES, default="fig_general")
    _problem_args(bd)
    bd.add_argument("--init", type=float, dest="init_norm_sq")
    bd.add_argument("--at", default="100,1000,10000", help="comma-separated iteration counts")
    return ap


def _config(args) -> ExperimentConfig:
    keys = ("dim", "std_B", "std_g", "alpha", "base_seed", "total_iters", "n_seeds", "output_dir", "workers",
            "init_norm_sq")
    over = {k: getattr(args, k, None) for k in keys}
    return ExperimentConfig.from_preset(getattr(args, "preset", "custom") or "custom", **over)


def cmd_run(args) -> int:
    res = run_experiment(_config(args))
    for label, a in res.analyses.items():
        if a.error:
            print(f"{label}: error={a.error}")
            continue
        print(f"{label}: tail_loglog_slope={a.tail_loglog_slope} plateau_level={a.plateau_level} "
              f"linear_rate_exponent={a.linear_rate_exponent} seeds={a.seeds_aggregated}")
    print(f"wrote {len(res.files)} files to {res.config.out_path}")
    return EXIT_OK


def cmd_check(args) -> int:
    report = run_checks()
    print(report)
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


def cmd_schedule(args) -> int:
    cfg = _config(args)
    m = analytic_moments(generate_problem(cfg.dim, cfg.std_B, cfg.std_g, cfg.base_seed))
    if cfg.std_g == 0:
        sch = interpolation_schedule(m, cfg.alpha, args.total_iters)
    else:
        init = cfg.init_norm_sq if cfg.init_norm_sq is not None else default_init(m)
        sch = general_epoch_lengths(m, cfg.alpha, init)
    print(sch.to_json())
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _config(args)
    try:
        at = [int(k) for k in args.at.split(",") if k.strip()]
    except ValueError:
        raise ValidationError(f"--at expects comma-separated integers, got {args.at!r}")
    m = analytic_moments(generate_problem(cfg.dim, cfg.std_B, cfg.std_g, cfg.base_seed))
    pack = eta_choices(m, cfg.alpha)
    init = cfg.init_norm_sq if cfg.init_norm_sq is not None else default_init(m)
    print(f"# preset={cfg.preset} dim={cfg.dim} std_B={cfg.std_B} std_g={cfg.std_g} alpha={cfg.alpha} "
          f"init_norm_sq={init!r}")
    if m.sigma_g_sq > 0:
        print(f"# noise_floor={noise_floor(m)!r}")
    for K in at:
        reports = [last_iterate_rhs(m, pack.eta_hat if m.sigma_g_sq > 0 else pack.eta_bar, init, K),
                   averaged_rhs(m, cfg.alpha, init, K)]
        if m.sigma_g_sq == 0:
            try:
                reports.append(interpolation_rhs(m, cfg.alpha, init, K))
            except BoundAssumptionError as exc:
                print(f"# K={K} interpolation: {exc}")
        for rep in reports:
            print(f"K={K}")
            print(rep.to_text())
    return EXIT_OK


COMMANDS = {"run": cmd_run, "check": cmd_check, "schedule": cmd_schedule, "bounds": cmd_bounds}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ScheduleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
