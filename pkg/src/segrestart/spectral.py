"""Dense symmetric eigenvalue extremes and operator norms.

Everything here works on small dense matrices (a few hundred rows at most),
so LAPACK's symmetric eigensolver is used directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYM_RTOL = 1e-12


class ValidationError(ValueError):
    """Raised when a numeric input violates an operation's preconditions."""


def _as_finite_matrix(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    return A


def as_symmetric(A, name: str = "A") -> np.ndarray:
    """Validate near-symmetry and return the symmetrized copy ``(A + A.T) / 2``.

    Monte-Carlo moment matrices carry rounding asymmetry, so entries may
    differ from their transpose by at most ``1e-12 * max(1, |A_ij|)``.
    """
    A = _as_finite_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {A.shape}")
    gap = np.abs(A - A.T)
    if np.any(gap > SYM_RTOL * np.maximum(1.0, np.abs(A))):
        raise ValidationError(f"{name} is not symmetric (max asymmetry {gap.max():.3e})")
    return 0.5 * (A + A.T)


def sym_eig_extremes(A) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix."""
    w = np.linalg.eigvalsh(as_symmetric(A))
    return float(w[0]), float(w[-1])


def sym_eigh(A) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a validated symmetric matrix (ascending)."""
    return np.linalg.eigh(as_symmetric(A))


def operator_norm(A) -> float:
    """Largest singular value, i.e. ``sqrt(lambda_max(A.T @ A))``."""
    A = _as_finite_matrix(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, ord=2))


@dataclass(frozen=True)
class SpectrumReport:
    lam_min_BBt: float
    lam_max_BBt: float
    lam_min_BtB: float
    lam_max_BtB: float
    square: bool

    @property
    def condition_number(self) -> float:
        """``lambda_max(B^T B) / lambda_min(B B^T)``; infinite for tall B."""
        if self.lam_min_BBt <= 0:
            return float("inf")
        return self.lam_max_BtB / self.lam_min_BBt


def spectrum_relation_check(B, rtol: float = 1e-9) -> SpectrumReport:
    """Compare the spectra of ``B B^T`` and ``B^T B``.

    The nonzero parts of the two spectra coincide, so the largest
    eigenvalues agree always and the smallest agree when B is square.
    Raises ``AssertionError`` if either relation fails at ``rtol``.
    """
    B = _as_finite_matrix(B, "B")
    BBt = B @ B.T
    BtB = B.T @ B
    lo1, hi1 = sym_eig_extremes(0.5 * (BBt + BBt.T))
    lo2, hi2 = sym_eig_extremes(0.5 * (BtB + BtB.T))
    scale = max(abs(hi1), abs(hi2), 1e-300)
    if abs(hi1 - hi2) > rtol * scale:
        raise AssertionError(f"lambda_max mismatch: {hi1!r} vs {hi2!r}")
    square = B.shape[0] == B.shape[1]
    if square and abs(lo1 - lo2) > rtol * scale:
        raise AssertionError(f"lambda_min mismatch on square B: {lo1!r} vs {lo2!r}")
    return SpectrumReport(lo1, hi1, lo2, hi2, square)
