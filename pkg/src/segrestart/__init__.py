"""Same-sample stochastic extragradient for bilinear games, with iteration
averaging, scheduled restarting and the step-size/restart calculus."""
from .spectral import ValidationError, operator_norm, spectrum_relation_check, sym_eig_extremes
from .game_model import (
    MomentSummary, OracleSample, ProblemSpec, analytic_moments, distance_sq_to_nash,
    estimate_moments, generate_problem, sample_oracle,
)
from .stepsize import StepSizePack, contraction_lambda, eta_choices, eta_max, geometric_sum_Q, kappa_zeta
from .solvers import (
    SolverConfig, SolverState, Trajectory, dseg_step, load_csv, parse_csv, restart, run_batch,
    run_solver, seg_step, update_average,
)
from .restart_schedule import (
    Schedule, ScheduleError, burn_in_estimate, general_epoch_lengths, interpolation_interval,
    interpolation_schedule,
)
from .theory_bounds import (
    BoundReport, averaged_rhs, interpolation_rhs, last_iterate_rhs, metric_conversion_gap, noise_floor,
)

__version__ = "0.1.0"
