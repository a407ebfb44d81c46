"""Numeric right-hand sides of the convergence bounds and the quantities they depend on.

All bounds measure ``E ||z - z*||^2`` in Nash-centered coordinates and take
``init_norm_sq = ||z_0 - z*||^2``.  Only the explicit leading expressions are
evaluated; unspecified ``O(.)`` remainders are dropped, which every report
flags with ``leading_order=True``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .game_model import MomentSummary
from .restart_schedule import interpolation_interval
from .spectral import ValidationError
from .stepsize import DegenerateMomentsError, check_alpha, contraction_lambda, eta_choices, eta_max, geometric_sum_Q


class BoundAssumptionError(ValueError):
    """A bound is requested outside the setting it is stated for."""


def moments_digest(moments: MomentSummary) -> str:
    h = hashlib.sha256()
    for A in (moments.B, moments.M, moments.M_hat, moments.EM2, moments.EMhat2):
        h.update(np.ascontiguousarray(A).tobytes())
    h.update(repr((moments.sigma_B_sq, moments.sigma_B2_sq, moments.sigma_g_sq)).encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class BoundReport:
    bound_name: str
    rhs_value: float
    inputs_digest: dict
    assumptions_ok: bool = True
    reason: str = ""
    leading_order: bool = True
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.assumptions_ok and not math.isfinite(self.rhs_value):
            raise ValidationError(f"{self.bound_name}: non-finite value with assumptions satisfied")

    def __float__(self) -> float:
        return float(self.rhs_value)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        """One ``key=value`` line per field, the provenance text format."""
        lines = [f"bound={self.bound_name}", f"rhs={self.rhs_value!r}",
                 f"assumptions_ok={str(self.assumptions_ok).lower()}"]
        if self.reason:
            lines.append(f"reason={self.reason}")
        lines.append(f"leading_order={str(self.leading_order).lower()}")
        for k, v in self.terms.items():
            lines.append(f"term.{k}={v!r}")
        lines.append("inputs=" + json.dumps(self.inputs_digest, sort_keys=True))
        return "\n".join(lines)


def _inputs(moments: MomentSummary, **kw) -> dict:
    return {"moments": moments_digest(moments), **kw}


def noise_floor(moments: MomentSummary) -> float:
    """``3 sigma_g^2 / (lambda_min(M) ∧ lambda_min(M_hat))``."""
    if not moments.lam_min > 0:
        raise DegenerateMomentsError("noise floor undefined: M or M_hat is singular")
    return 3.0 * moments.sigma_g_sq / moments.lam_min


# -- last iterate ----------------------------------------------------------------

def last_iterate_rhs(moments: MomentSummary, eta: float, init_norm_sq: float, K: int) -> BoundReport:
    """``(1 - eta^2 lam*)^K D0 + eta^2 Q_K (1 + eta^2 lambda_max) sigma_g^2``."""
    if K < 0 or init_norm_sq < 0:
        raise ValidationError("K and init_norm_sq must be nonnegative")
    inputs = _inputs(moments, eta=eta, init_norm_sq=init_norm_sq, K=K)
    lam = contraction_lambda(moments, eta)
    r = 1.0 - eta ** 2 * lam
    if not 0.0 <= r <= 1.0:
        return BoundReport("last_iterate", math.inf, inputs, False,
                           f"contraction factor {r:.6g} outside [0, 1]")
    decay = r ** K * init_norm_sq
    noise = eta ** 2 * geometric_sum_Q(eta, lam, K) * (1 + eta ** 2 * moments.lam_max) * moments.sigma_g_sq
    return BoundReport("last_iterate", decay + noise, inputs, terms={"decay": decay, "noise": noise,
                                                                      "lambda_star": lam})


def last_iterate_limit(moments: MomentSummary, eta: float) -> float:
    """``K -> inf`` value of :func:`last_iterate_rhs`: ``(1 + eta^2 lambda_max) sigma_g^2 / lam*``."""
    lam = contraction_lambda(moments, eta)
    if not lam > 0:
        raise BoundAssumptionError("limit needs lambda*(eta) > 0")
    return (1 + eta ** 2 * moments.lam_max) * moments.sigma_g_sq / lam


# -- averaged iterate ------------------------------------------------------------

def conversion_constant(moments: MomentSummary, eta: float) -> float:
    """``lambda_min(BB^T)(1 + eta^2 lambda_min(BB^T)) - 2 eta sigma_B^2 sqrt(lambda_max(B^T B))``."""
    lm = moments.lam_min_BBt
    return lm * (1 + eta ** 2 * lm) - 2 * eta * moments.sigma_B_sq * math.sqrt(moments.lam_max_BtB)


def averaged_taus(moments: MomentSummary, alpha: float) -> tuple[float, float]:
    """``tau1 = (16 + 8 kappa) / ((1-alpha) eta_hat^2 lam)``, ``tau2 = (18 + 12 kappa) / ((1-alpha) lam)``."""
    pack = eta_choices(moments, alpha)
    denom = (1 - pack.alpha) * moments.lam_min_BBt
    k = pack.kappa_zeta
    return (16 + 8 * k) / (denom * pack.eta_hat ** 2), (18 + 12 * k) / denom


def averaged_rhs(moments: MomentSummary, alpha: float, init_norm_sq: float, K: int,
                 variant: str = "theorem2", gamma: float = 1.0) -> BoundReport:
    """Bound on ``E ||z_bar_K - z*||^2`` for SEG with averaging at ``eta_hat(alpha)``.

    ``variant="theorem2"``: ``tau1 D0 / (K+1)^2 + tau2 sigma_g^2 / (K+1)``.

    ``variant="gamma_form"``::

        8(1+g) D0 / ((1-a) eta^2 lam (K+1)^2)
          + [2(1+1/g) z (D0 + 3 sigma_g^2 / lambda_min) + 9(1+g) sigma_g^2] / ((1-a) lam (K+1))

    with ``z = sigma_B^2 + eta^2 sigma_B2^2`` and any ``g > 0``.
    """
    if K < 0 or init_norm_sq < 0:
        raise ValidationError("K and init_norm_sq must be nonnegative")
    alpha = check_alpha(alpha)
    pack = eta_choices(moments, alpha)
    eta = pack.eta_hat
    inputs = _inputs(moments, alpha=alpha, init_norm_sq=init_norm_sq, K=K, variant=variant, gamma=gamma,
                     eta=eta)
    if conversion_constant(moments, eta) <= 0:
        return BoundReport(f"averaged/{variant}", math.inf, inputs, False, "σ_B threshold violated")
    denom = (1 - alpha) * moments.lam_min_BBt
    if variant == "theorem2":
        tau1, tau2 = averaged_taus(moments, alpha)
        a = tau1 * init_norm_sq / (K + 1) ** 2
        b = tau2 * moments.sigma_g_sq / (K + 1)
        return BoundReport("averaged/theorem2", a + b, inputs,
                           terms={"tau1": tau1, "tau2": tau2, "init_term": a, "noise_term": b})
    if variant == "gamma_form":
        if not gamma > 0:
            raise ValidationError("gamma must be positive")
        zeta = moments.sigma_B_sq + eta ** 2 * moments.sigma_B2_sq
        a = 8 * (1 + gamma) / (denom * eta ** 2) * init_norm_sq / (K + 1) ** 2
        num = (2 * (1 + 1 / gamma) * zeta * (init_norm_sq + 3 * moments.sigma_g_sq / moments.lam_min)
               + 9 * (1 + gamma) * moments.sigma_g_sq)
        b = num / denom / (K + 1)
        return BoundReport("averaged/gamma_form", a + b, inputs, terms={"init_term": a, "linear_term": b})
    raise ValidationError(f"unknown variant {variant!r}")


def averaged_rhs_any_step(moments: MomentSummary, eta: float, init_norm_sq: float, K: int,
                          gamma: float = 1.0) -> BoundReport:
    """Averaged-iterate bound at an arbitrary ``eta`` in ``(0, eta_M]`` with ``lam*(eta) > 0``.

    The metric bound
    ``(8(1+g)/(eta^2 (K+1)^2) + 2(1+1/g) z/(K+1)) D0
    + (6(1+g) + 2(1+1/g) z / lam*) (1 + eta^2 lambda_max) sigma_g^2 / (K+1)``
    is divided by :func:`conversion_constant`.
    """
    inputs = _inputs(moments, eta=eta, init_norm_sq=init_norm_sq, K=K, gamma=gamma)
    eta_M = eta_max(moments)[0]
    lam = contraction_lambda(moments, eta)
    c = conversion_constant(moments, eta)
    if not (0 < eta <= eta_M * (1 + 1e-12)) or not lam > 0:
        return BoundReport("averaged/any_step", math.inf, inputs, False, "needs 0 < eta <= eta_M and lambda* > 0")
    if c <= 0:
        return BoundReport("averaged/any_step", math.inf, inputs, False, "σ_B threshold violated")
    zeta = moments.sigma_B_sq + eta ** 2 * moments.sigma_B2_sq
    g = gamma
    metric = ((8 * (1 + g) / (eta ** 2 * (K + 1) ** 2) + 2 * (1 + 1 / g) * zeta / (K + 1)) * init_norm_sq
              + (6 * (1 + g) + 2 * (1 + 1 / g) * zeta / lam) / (K + 1)
              * (1 + eta ** 2 * moments.lam_max) * moments.sigma_g_sq)
    return BoundReport("averaged/any_step", metric / c, inputs, terms={"metric_bound": metric,
                                                                       "conversion_constant": c})


# -- restarted schedules ---------------------------------------------------------

def restart_epoch_rhs(init_norm_sq: float, epoch: int) -> float:
    """Bound at the end of epoch ``epoch`` of the general schedule: ``e^{-2 epoch} D0``."""
    if epoch < 0:
        raise ValidationError("epoch must be nonnegative")
    return math.exp(-2.0 * epoch) * init_norm_sq


def restarted_tail_rhs(moments: MomentSummary, alpha: float, K_hat: int) -> BoundReport:
    """Averaged iterate ``K_hat`` steps after the last general-schedule restart::

        16 (3 sigma_g^2 / lambda_min) / ((1-a) lam eta^2 (K_hat+1)^2)
          + [4 z 6 sigma_g^2 / lambda_min + 18 sigma_g^2] / ((1-a) lam (K_hat+1))
    """
    alpha = check_alpha(alpha)
    eta = eta_choices(moments, alpha).eta_hat
    inputs = _inputs(moments, alpha=alpha, K_hat=K_hat, eta=eta)
    denom = (1 - alpha) * moments.lam_min_BBt
    zeta = moments.sigma_B_sq + eta ** 2 * moments.sigma_B2_sq
    fl = noise_floor(moments)
    a = 16 / denom * fl / (eta ** 2 * (K_hat + 1) ** 2)
    b = (4 * zeta * 2 * fl + 18 * moments.sigma_g_sq) / denom / (K_hat + 1)
    return BoundReport("restarted_tail", a + b, inputs, terms={"init_term": a, "noise_term": b})


def interpolation_rhs(moments: MomentSummary, alpha: float, init_norm_sq: float, K: int) -> BoundReport:
    """``exp(-2 K / K_thres) D0`` for restarted averaging when ``sigma_g = 0``."""
    if moments.sigma_g_sq != 0:
        raise BoundAssumptionError("interpolation bound requires σ_g=0")
    k_thres, rate = interpolation_interval(moments, alpha)
    if K < 0 or K % k_thres:
        raise BoundAssumptionError(f"K={K} is not a multiple of K_thres={k_thres}")
    value = math.exp(-2.0 * K / k_thres) * init_norm_sq
    return BoundReport("interpolation", value, _inputs(moments, alpha=alpha, init_norm_sq=init_norm_sq, K=K),
                       terms={"K_thres": k_thres, "rate": rate})


def last_iterate_interval_exponent(moments: MomentSummary, alpha: float) -> tuple[float, float]:
    """Log-decay per ``K_thres`` steps: restarted averaging (``-2``) versus the
    last-iterate guarantee ``-K_thres eta_M^2 lambda_min / 4``."""
    k_thres, _ = interpolation_interval(moments, alpha)
    eta_M = eta_max(moments)[0]
    return -2.0, -k_thres * eta_M ** 2 * moments.lam_min / 4


# -- metric conversion -----------------------------------------------------------

def hamiltonian_metric(moments: MomentSummary, eta: float, x, y) -> np.ndarray | float:
    """``||B y + eta M x||^2 + ||B^T x - eta M_hat y||^2`` with the mean matrices;
    batched over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = moments.B.shape
    if x.shape[-1:] != (n,) or y.shape[-1:] != (m,):
        raise ValidationError(f"expected x in R^{n} and y in R^{m}, got {x.shape} and {y.shape}")
    u = y @ moments.B.T + eta * (x @ moments.M)
    v = x @ moments.B - eta * (y @ moments.M_hat)
    out = np.sum(u * u, axis=-1) + np.sum(v * v, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def metric_conversion_gap(moments: MomentSummary, eta: float, x, y) -> BoundReport:
    """``hamiltonian_metric - conversion_constant * (||x||^2 + ||y||^2)``.

    Nonnegative whenever the constant is positive; otherwise the lower bound
    is vacuous and the report says so.
    """
    c = conversion_constant(moments, eta)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = hamiltonian_metric(moments, eta, x, y)
    gap = h - c * (np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1))
    gap = float(np.min(gap))
    inputs = _inputs(moments, eta=eta)
    if c <= 0:
        return BoundReport("metric_conversion_gap", gap, inputs, False, "conversion constant <= 0",
                           leading_order=False, terms={"constant": c})
    return BoundReport("metric_conversion_gap", gap, inputs, leading_order=False, terms={"constant": c})


# -- comparison with the double-step-size baseline --------------------------------

def baseline_comparison(moments: MomentSummary, init_norm_sq: float, K: int) -> dict:
    """Coarse rate shapes with ``sigma_B = 0``: the baseline's
    ``lambda_max(B^T B) / lambda_min(BB^T)^2 * sigma_g^2 / K`` against the
    averaged-SEG ``sigma_g^2 / (lambda_min K) + kappa D0 / K^2``."""
    if K < 1:
        raise ValidationError("K must be >= 1")
    lmin, lmax = moments.lam_min_BBt, moments.lam_max_BtB
    baseline = lmax / lmin ** 2 * moments.sigma_g_sq / K
    ours = moments.sigma_g_sq / (lmin * K) + lmax / lmin * init_norm_sq / K ** 2
    return {"baseline_noise_term": baseline, "seg_avg_noise_term": moments.sigma_g_sq / (lmin * K),
            "seg_avg_total": ours, "noise_coefficient_ratio": lmax / lmin}
