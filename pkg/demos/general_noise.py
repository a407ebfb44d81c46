"""Noisy intercepts: last iterate stalls at a floor, the average keeps going.

Runs SEG, its running average and the restarted average on a d-dimensional
bilinear game with sigma_g > 0 and prints a few checkpoints next to the
floor and the averaged-iterate bound.

    python demos/general_noise.py --dim 30 --seeds 16 --iters 5000
"""
from __future__ import annotations

import argparse

import numpy as np

from segrestart import analytic_moments, eta_choices, generate_problem, noise_floor
from segrestart.harness.experiments import restart_schedule_for
from segrestart.solvers import SolverConfig, run_batch
from segrestart.theory_bounds import averaged_rhs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=30)
    ap.add_argument("--std-b", type=float, default=0.1)
    ap.add_argument("--std-g", type=float, default=0.01)
    ap.add_argument("--seeds", type=int, default=16)
    ap.add_argument("--iters", type=int, default=5000)
    ap.add_argument("--alpha", type=float, default=0.5)
    args = ap.parse_args()

    spec = generate_problem(args.dim, args.std_b, args.std_g, 0)
    m = analytic_moments(spec)
    pack = eta_choices(m, args.alpha)
    floor = noise_floor(m)
    init = 100 * floor
    print(f"eta_M={pack.eta_M:.4g} eta_hat={pack.eta_hat:.4g} floor={floor:.4g} init={init:.4g}")

    seeds = range(args.seeds)
    plain = run_batch(spec, SolverConfig("seg", pack.eta_hat, args.iters, init_norm_sq=init), seeds)
    sch = restart_schedule_for(m, args.alpha, init, args.iters)
    restarts = sch.restart_times(args.iters)
    print(f"restart times: {list(restarts)}")
    method = "seg_avg_restart" if restarts else "seg"
    rest = run_batch(spec, SolverConfig(method, pack.eta_hat, args.iters, restart_times=restarts,
                                        init_norm_sq=init), seeds)

    print(f"{'K':>7} {'SEG':>11} {'SEG-Avg':>11} {'Restart':>11} {'avg bound':>11}")
    for k in np.unique(np.geomspace(10, args.iters, 8).astype(int)):
        i = int(np.searchsorted(plain.t, k))
        j = int(np.searchsorted(rest.t, k))
        bound = float(averaged_rhs(m, args.alpha, init, int(plain.t[i])))
        print(f"{plain.t[i]:>7} {plain.mean_last[i]:11.4e} {plain.mean_avg[i]:11.4e} "
              f"{rest.mean_avg[j]:11.4e} {bound:11.4e}")


if __name__ == "__main__":
    main()
