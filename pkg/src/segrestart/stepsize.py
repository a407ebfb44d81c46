"""Step-size and contraction calculus for same-sample SEG on bilinear games."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game_model import MomentSummary
from .spectral import ValidationError, sym_eig_extremes, sym_eigh

EIG_FLOOR = 1e-12


class DegenerateMomentsError(ValueError):
    """``M`` or ``M_hat`` is (numerically) singular."""


class ContractionRegimeError(ValueError):
    """The step size leaves ``1 - eta^2 lambda*`` negative."""


def _sym(A: np.ndarray) -> np.ndarray:
    # products and differences of symmetric matrices: drop rounding asymmetry
    return 0.5 * (A + A.T)


def _inv_sqrt(A: np.ndarray) -> np.ndarray:
    w, V = sym_eigh(A)
    if w[0] <= EIG_FLOOR * max(w[-1], 0.0) or w[-1] <= 0:
        raise DegenerateMomentsError("interpolation-degenerate moments: M or M_hat is singular")
    return (V / np.sqrt(w)) @ V.T


def eta_max(moments: MomentSummary) -> tuple[float, float, float]:
    """Maximal analyzable step size ``eta_M = 1/sqrt(max(rho1, rho2))``.

    ``rho1 = lambda_max(M^{-1/2} E[M_xi^2] M^{-1/2})`` and ``rho2`` is the same
    with the hatted matrices.  Returns ``(eta_M, rho1, rho2)``.
    """
    S = _inv_sqrt(moments.M)
    rho1 = sym_eig_extremes(_sym(S @ moments.EM2 @ S))[1]
    Sh = _inv_sqrt(moments.M_hat)
    rho2 = sym_eig_extremes(_sym(Sh @ moments.EMhat2 @ Sh))[1]
    return 1.0 / math.sqrt(max(rho1, rho2)), rho1, rho2


def noise_cap(moments: MomentSummary, alpha: float) -> float:
    """``alpha lambda_min(BB^T) / (2 sigma_B^2 sqrt(lambda_max(B^T B)))``; infinite when sigma_B = 0."""
    if moments.sigma_B_sq == 0:
        return math.inf
    return alpha * moments.lam_min_BBt / (2.0 * moments.sigma_B_sq * math.sqrt(moments.lam_max_BtB))


@dataclass(frozen=True)
class StepSizePack:
    eta_M: float
    rho1: float
    rho2: float
    alpha: float
    eta_hat: float
    eta_bar: float
    kappa_zeta: float

    def __post_init__(self):
        if self.eta_hat > self.eta_M / math.sqrt(2) + 1e-12 or self.eta_bar > self.eta_M + 1e-12:
            raise ValidationError("step sizes exceed their caps")
        if self.eta_hat > self.eta_bar + 1e-12:
            raise ValidationError("eta_hat must not exceed eta_bar")


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def kappa_zeta(moments: MomentSummary, eta: float) -> float:
    """Effective noise condition number at step size ``eta``."""
    return (moments.sigma_B_sq + eta ** 2 * moments.sigma_B2_sq) / moments.lam_min


def eta_choices(moments: MomentSummary, alpha: float) -> StepSizePack:
    """The averaged-iterate step ``eta_hat(alpha)`` and the interpolation step ``eta_bar(alpha)``."""
    alpha = check_alpha(alpha)
    eta_M, rho1, rho2 = eta_max(moments)
    cap = noise_cap(moments, alpha)
    eta_hat = min(eta_M / math.sqrt(2.0), cap)
    eta_bar = min(eta_M, cap)
    return StepSizePack(eta_M, rho1, rho2, alpha, eta_hat, eta_bar, kappa_zeta(moments, eta_hat))


def contraction_lambda(moments: MomentSummary, eta: float) -> float:
    """``lambda*(eta) = min(lambda_min(M - eta^2 E[M_xi^2]), lambda_min(M_hat - eta^2 E[M_hat_xi^2]))``.

    May be negative for large ``eta``; ``eta = 0`` gives ``lambda_min(M) ∧ lambda_min(M_hat)``.
    """
    if eta < 0:
        raise ValidationError("eta must be nonnegative")
    e2 = float(eta) ** 2
    a = sym_eig_extremes(_sym(moments.M - e2 * moments.EM2))[0]
    b = sym_eig_extremes(_sym(moments.M_hat - e2 * moments.EMhat2))[0]
    return min(a, b)


def geometric_sum_Q(eta: float, lambda_star: float, K: int) -> float:
    """``Q_K = sum_{t=1..K} (1 - eta^2 lambda*)^{t-1}`` in closed form."""
    if K < 0:
        raise ValidationError("K must be nonnegative")
    q = float(eta) ** 2 * float(lambda_star)
    r = 1.0 - q
    if r < 0:
        raise ContractionRegimeError("step size beyond contraction regime (1 - eta^2 lambda* < 0)")
    if abs(q) < 1e-14 or K <= 1:
        return float(K)
    # -expm1(K log r) keeps precision when q is tiny
    if r == 0.0:
        return 1.0 if K >= 1 else 0.0
    return float(-math.expm1(K * math.log(r)) / q)
