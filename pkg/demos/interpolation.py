"""No intercept noise: restarting the average turns a 1/K^2 rate into a
linear one.

    python demos/interpolation.py --dim 30 --seeds 16 --iters 6000
"""
from __future__ import annotations

import argparse

import numpy as np

from segrestart import analytic_moments, eta_choices, generate_problem
from segrestart.restart_schedule import interpolation_schedule
from segrestart.solvers import SolverConfig, run_batch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=30)
    ap.add_argument("--std-b", type=float, default=0.1)
    ap.add_argument("--seeds", type=int, default=16)
    ap.add_argument("--iters", type=int, default=6000)
    ap.add_argument("--alpha", type=float, default=0.5)
    args = ap.parse_args()

    spec = generate_problem(args.dim, args.std_b, 0.0, 0)
    m = analytic_moments(spec)
    eta = eta_choices(m, args.alpha).eta_bar
    sch = interpolation_schedule(m, args.alpha, args.iters)
    k = sch.epoch_lengths[0] if sch.epoch_lengths else args.iters
    print(f"eta_bar={eta:.4g} K_thres={k} rate={sch.rate:.4g} restarts={sch.epoch_count}")

    seeds = range(args.seeds)
    plain = run_batch(spec, SolverConfig("seg", eta, args.iters), seeds)
    rest = run_batch(spec, SolverConfig("seg_avg_restart", eta, args.iters,
                                        restart_times=sch.restart_times(args.iters)), seeds)
    print(f"{'K':>7} {'SEG':>11} {'SEG-Avg':>11} {'Restart':>11} {'e^(-2K/Kt)':>11}")
    for t in [0] + list(sch.timestamps[:: max(1, sch.epoch_count // 8)]):
        i, j = int(np.searchsorted(plain.t, t)), int(np.searchsorted(rest.t, t))
        print(f"{t:>7} {plain.mean_last[i]:11.4e} {plain.mean_avg[i]:11.4e} {rest.mean_last[j]:11.4e} "
              f"{np.exp(-2 * t / k):11.4e}")


if __name__ == "__main__":
    main()
