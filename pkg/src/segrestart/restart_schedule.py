"""Restart timestamps for averaged SEG.

Two schedules are computed up front from the moments and the initial
distance, never adapted to realized iterates:

* interpolation (``sigma_g = 0``): a constant epoch length ``K_thres``, each
  epoch shrinking the expected squared distance by ``e^2``;
* general (``sigma_g > 0``): epochs of growing length, the ``k``-th one long
  enough to bring the bound from ``e^{2-2k} D0`` down to ``e^{-2k} D0``,
  stopping once the noise floor is reached.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .game_model import MomentSummary
from .spectral import ValidationError
from .stepsize import check_alpha, eta_choices, eta_max, noise_cap


class ScheduleError(ValueError):
    """No valid schedule exists for the given inputs."""


@dataclass(frozen=True)
class Schedule:
    timestamps: tuple[int, ...]
    epoch_lengths: tuple[int, ...]
    epoch_count: int
    rate: float | None = None
    kind: str = "general"

    def __post_init__(self):
        ts = tuple(int(t) for t in self.timestamps)
        ls = tuple(int(k) for k in self.epoch_lengths)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "epoch_lengths", ls)
        if any(k < 1 for k in ls):
            raise ValidationError("epoch lengths must be positive")
        acc, sums = 0, []
        for k in ls:
            acc += k
            sums.append(acc)
        if tuple(sums) != ts:
            raise ValidationError("timestamps must be the prefix sums of the epoch lengths")

    @classmethod
    def from_lengths(cls, lengths, rate: float | None = None, kind: str = "general") -> "Schedule":
        ts, acc = [], 0
        for k in lengths:
            acc += int(k)
            ts.append(acc)
        return cls(tuple(ts), tuple(int(k) for k in lengths), len(ts), rate, kind)

    @property
    def total(self) -> int:
        return self.timestamps[-1] if self.timestamps else 0

    def restart_times(self, total_iters: int) -> tuple[int, ...]:
        """Timestamps that fall inside a run of ``total_iters`` steps."""
        return tuple(t for t in self.timestamps if t <= total_iters)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["timestamps"] = list(self.timestamps)
        d["epoch_lengths"] = list(self.epoch_lengths)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        d = json.loads(text)
        return cls(tuple(d["timestamps"]), tuple(d["epoch_lengths"]), d["epoch_count"],
                   d.get("rate"), d.get("kind", "general"))


def _interp_step(moments: MomentSummary, alpha: float) -> float:
    """``eta_bar`` for ``alpha`` in ``[0, 1)``; ``alpha = 0`` is admitted
    here because it is meaningful when ``sigma_B = 0``."""
    alpha = float(alpha)
    if not 0.0 <= alpha < 1.0:
        raise ValidationError(f"alpha must lie in [0, 1), got {alpha}")
    eta_M = eta_max(moments)[0]
    return min(eta_M, noise_cap(moments, alpha))


def interval_from_rate(a: float, rate: float) -> float:
    """Unrounded epoch length ``(4 / (sqrt(a + 8 rate) - sqrt(a)))^2``."""
    if not rate > 0:
        raise ScheduleError("restart schedule undefined at this noise level (rate <= 0)")
    gap = math.sqrt(a + 8 * rate) - math.sqrt(a)
    if not gap > 0:
        raise ScheduleError("restart schedule undefined at this noise level")
    return (4.0 / gap) ** 2


def interpolation_interval(moments: MomentSummary, alpha: float) -> tuple[int, float]:
    """Constant restart interval for the interpolation setting.

    ``rate = sqrt((1 - alpha) eta_bar^2 lambda_min(BB^T)) / e`` and, with
    ``a = 2 eta_bar^2 (sigma_B^2 + eta_bar^2 sigma_B2^2)``, the interval is
    ``ceil((4 / (sqrt(a + 8 rate) - sqrt(a)))^2)``.  Returns ``(K_thres, rate)``.
    """
    eta = _interp_step(moments, alpha)
    rate = math.sqrt((1 - alpha) * eta ** 2 * moments.lam_min_BBt) / math.e
    a = 2 * eta ** 2 * (moments.sigma_B_sq + eta ** 2 * moments.sigma_B2_sq)
    raw = interval_from_rate(a, rate)
    # guard against 5.000000000001 style rounding before the ceiling
    return max(1, math.ceil(raw * (1 - 1e-12))), rate


def interpolation_schedule(moments: MomentSummary, alpha: float, total_iters: int) -> Schedule:
    """Restart every ``K_thres`` steps up to ``total_iters``."""
    k, rate = interpolation_interval(moments, alpha)
    n = total_iters // k
    return Schedule.from_lengths([k] * n, rate, kind="interpolation")


def _general_inputs(moments: MomentSummary, alpha: float, init_norm_sq: float):
    alpha = check_alpha(alpha)
    if moments.sigma_g_sq <= 0:
        raise ScheduleError("sigma_g = 0: use the interpolation schedule")
    if not init_norm_sq > 0:
        raise ValidationError("init_norm_sq must be positive")
    pack = eta_choices(moments, alpha)
    return alpha, pack.eta_hat


def epoch_count(moments: MomentSummary, init_norm_sq: float) -> int:
    """``ceil(log(lambda_min init / (3 sigma_g^2)) / 2)``, zero at or below the noise floor."""
    ratio = moments.lam_min * init_norm_sq / (3 * moments.sigma_g_sq)
    if ratio <= 1:
        return 0
    return max(0, math.ceil(0.5 * math.log(ratio) * (1 - 1e-15)))


def epoch_coefficients(moments: MomentSummary, alpha: float, init_norm_sq: float,
                       epoch: int, eta: float) -> tuple[float, float, float]:
    """``(q1, q2, q3)`` of the per-epoch quadratic ``q1/(K+1)^2 + q2/(K+1) - q3 <= 0``."""
    denom = (1 - alpha) * moments.lam_min_BBt
    start = math.exp(2 - 2 * epoch) * init_norm_sq
    zeta = moments.sigma_B_sq + eta ** 2 * moments.sigma_B2_sq
    q1 = 16.0 / denom * start / eta ** 2
    q2 = (4 * zeta * (start + 3 * moments.sigma_g_sq / moments.lam_min) + 18 * moments.sigma_g_sq) / denom
    q3 = init_norm_sq * math.exp(-2 * epoch)
    return q1, q2, q3


def general_epoch_lengths(moments: MomentSummary, alpha: float, init_norm_sq: float) -> Schedule:
    """Epoch lengths ``K_k = ceil((q2 + sqrt(q2^2 + 4 q1 q3)) / (2 q3)) - 1`` (at least 1)."""
    alpha, eta = _general_inputs(moments, alpha, init_norm_sq)
    lengths = []
    for ep in range(1, epoch_count(moments, init_norm_sq) + 1):
        q1, q2, q3 = epoch_coefficients(moments, alpha, init_norm_sq, ep, eta)
        root = (q2 + math.sqrt(q2 * q2 + 4 * q1 * q3)) / (2 * q3)
        lengths.append(max(1, math.ceil(root) - 1))
    return Schedule.from_lengths(lengths, None, kind="general")


def burn_in_estimate(moments: MomentSummary, alpha: float, init_norm_sq: float,
                     exact_geometric_sum: bool = True) -> float:
    """Closed-form upper estimate of the total length of all epochs::

        (sqrt(16 e^2 / ((1-a) eta^2 lam)) + 4 e^2 z / ((1-a) lam)) * ceil(LOG / 2)
          + c * (6 lambda_min + 4 z) / ((1-a) lam (1 - e^-2))

    with ``lam = lambda_min(BB^T)``, ``z = sigma_B^2 + eta^2 sigma_B2^2``,
    ``eta = eta_hat`` and ``LOG = log(lambda_min init / (3 sigma_g^2))``.

    The second term bounds ``sum_k e^{2k}`` over the epochs.  That sum is at
    most ``e^{2 Epoch} / (1 - e^-2)`` and ``e^{2 Epoch}`` can reach
    ``e^2 lambda_min init / (3 sigma_g^2)``, hence ``c = e^2``.  With
    ``exact_geometric_sum=False``, ``c = 1``, which is not always an upper
    bound on the epoch total.
    """
    alpha, eta = _general_inputs(moments, alpha, init_norm_sq)
    denom = (1 - alpha) * moments.lam_min_BBt
    zeta = moments.sigma_B_sq + eta ** 2 * moments.sigma_B2_sq
    lead = math.sqrt(16 * math.e ** 2 / (denom * eta ** 2)) + 4 * math.e ** 2 * zeta / denom
    tail = (6 * moments.lam_min + 4 * zeta) / (denom * (1 - math.exp(-2)))
    if exact_geometric_sum:
        tail *= math.e ** 2
    return lead * epoch_count(moments, init_norm_sq) + tail
