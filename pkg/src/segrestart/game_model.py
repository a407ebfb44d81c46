"""The stochastic bilinear game, its synthetic generator and oracle, and moments.

The game is ``min_x max_y  x^T B y + x^T g_x + g_y^T y`` with a noisy coupling
``B_xi = B + std_B * E`` (``E`` i.i.d. standard normal) and noisy intercepts.
Its Nash equilibrium is ``x* = -(B^T)^{-1} g_y``, ``y* = -B^{-1} g_x``.

Two oracle models are available:

``"nash_centered"`` (default)
    The intercept sample is ``g_mean - (B_xi - B) z* + std_g * zeta`` so that,
    measured around the Nash point, the stochastic field is
    ``B_xi (y - y*) + std_g * zeta``: intercept noise is zero-mean and
    independent of the coupling, and vanishes at the Nash point when
    ``std_g = 0``.
``"raw"``
    Intercepts are ``N(g_mean, std_g^2 I)`` independent of ``B_xi``.  Around
    the Nash point the field then carries the extra term ``(B_xi - B) y*``,
    so the noise at equilibrium does not vanish even with ``std_g = 0``.

Both models share the law of ``B_xi`` and the mean field.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .spectral import ValidationError, as_symmetric, operator_norm, sym_eig_extremes
from .streams import OracleStream, substream

OracleModel = Literal["nash_centered", "raw"]
G_MEAN_VARIANCE = 0.1


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    dim: int
    B: np.ndarray
    g_x_mean: np.ndarray
    g_y_mean: np.ndarray
    std_B: float
    std_g: float
    nash_x: np.ndarray
    nash_y: np.ndarray
    oracle_model: OracleModel = "nash_centered"

    def __post_init__(self):
        d = self.dim
        if d < 1:
            raise ValidationError("dim must be >= 1")
        for name in ("B", "g_x_mean", "g_y_mean", "nash_x", "nash_y"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.B.shape != (d, d):
            raise ValidationError(f"B must be {d}x{d}, got {self.B.shape}")
        for name in ("g_x_mean", "g_y_mean", "nash_x", "nash_y"):
            if getattr(self, name).shape != (d,):
                raise ValidationError(f"{name} must have shape ({d},)")
        if self.std_B < 0 or self.std_g < 0:
            raise ValidationError("noise scales must be nonnegative")
        if self.oracle_model not in ("nash_centered", "raw"):
            raise ValidationError(f"unknown oracle model {self.oracle_model!r}")
        sv = np.linalg.svd(self.B, compute_uv=False)
        if not sv[-1] > 1e-12 * sv[0]:
            raise ValidationError("B is singular")
        res = np.linalg.norm(self.B.T @ self.nash_x + self.g_y_mean)
        res += np.linalg.norm(self.B @ self.nash_y + self.g_x_mean)
        if res > 1e-9 * max(1.0, np.linalg.norm(self.g_x_mean) + np.linalg.norm(self.g_y_mean)):
            raise ValidationError(f"Nash fields inconsistent with B and intercepts (residual {res:.3e})")

    @classmethod
    def from_means(cls, B, g_x_mean, g_y_mean, std_B: float = 0.0, std_g: float = 0.0,
                   oracle_model: OracleModel = "nash_centered") -> "ProblemSpec":
        """Build a spec from B and intercept means, solving for the Nash point."""
        B = np.atleast_2d(np.asarray(B, dtype=float))
        g_x_mean = np.atleast_1d(np.asarray(g_x_mean, dtype=float))
        g_y_mean = np.atleast_1d(np.asarray(g_y_mean, dtype=float))
        try:
            nash_x = -np.linalg.solve(B.T, g_y_mean)
            nash_y = -np.linalg.solve(B, g_x_mean)
        except np.linalg.LinAlgError as exc:
            raise ValidationError(f"B is singular: {exc}") from None
        return cls(B.shape[0], B, g_x_mean, g_y_mean, float(std_B), float(std_g),
                   nash_x, nash_y, oracle_model)

    # -- provenance text format -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "B": self.B.tolist(),
            "g_x_mean": self.g_x_mean.tolist(),
            "g_y_mean": self.g_y_mean.tolist(),
            "std_B": self.std_B,
            "std_g": self.std_g,
            "nash_x": self.nash_x.tolist(),
            "nash_y": self.nash_y.tolist(),
            "oracle_model": self.oracle_model,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemSpec":
        return cls(int(data["dim"]), np.array(data["B"]), np.array(data["g_x_mean"]),
                   np.array(data["g_y_mean"]), float(data["std_B"]), float(data["std_g"]),
                   np.array(data["nash_x"]), np.array(data["nash_y"]),
                   data.get("oracle_model", "nash_centered"))

    @classmethod
    def from_json(cls, text: str) -> "ProblemSpec":
        return cls.from_dict(json.loads(text))

    def with_noise(self, std_B: float | None = None, std_g: float | None = None,
                   oracle_model: OracleModel | None = None) -> "ProblemSpec":
        """Same B and intercept means with different noise settings."""
        return ProblemSpec(
            self.dim, self.B, self.g_x_mean, self.g_y_mean,
            self.std_B if std_B is None else float(std_B),
            self.std_g if std_g is None else float(std_g),
            self.nash_x, self.nash_y,
            self.oracle_model if oracle_model is None else oracle_model,
        )


@dataclass(frozen=True, eq=False)
class OracleSample:
    """One stochastic draw ``(B_xi, g_x, g_y)``."""
    B_xi: np.ndarray
    g_x: np.ndarray
    g_y: np.ndarray

    def __post_init__(self):
        for name in ("B_xi", "g_x", "g_y"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"{name} has non-finite entries")

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return v @ self.B_xi.T

    def rmatvec(self, u: np.ndarray) -> np.ndarray:
        return u @ self.B_xi


def generate_problem(dim: int, std_B: float, std_g: float, seed: int,
                     oracle_model: OracleModel = "nash_centered") -> ProblemSpec:
    """Synthetic instance: ``B = Diag(u)`` with ``u_j ~ Unif[1, d+1]`` and
    intercept means drawn once from ``N(0, 0.1 I)``."""
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    if std_B < 0 or std_g < 0:
        raise ValidationError("noise scales must be nonnegative")
    rng = substream(seed, "problem")
    u = rng.uniform(1.0, dim + 1.0, size=dim)
    g_x = rng.normal(0.0, np.sqrt(G_MEAN_VARIANCE), size=dim)
    g_y = rng.normal(0.0, np.sqrt(G_MEAN_VARIANCE), size=dim)
    B = np.diag(u)
    # diagonal B: the Nash point is an exact elementwise division
    return ProblemSpec(dim, B, g_x, g_y, float(std_B), float(std_g), -g_y / u, -g_x / u, oracle_model)


def sample_oracle(spec: ProblemSpec, stream: OracleStream) -> OracleSample:
    """Draw one explicit oracle sample (``d^2 + 2d`` normals)."""
    d = spec.dim
    stream.draws += 1
    E = stream.coupling.standard_normal((d, d))
    z = stream.intercept.standard_normal((2, d))
    noise = spec.std_B * E
    B_xi = spec.B + noise
    g_x = spec.g_x_mean + spec.std_g * z[0]
    g_y = spec.g_y_mean + spec.std_g * z[1]
    if spec.oracle_model == "nash_centered" and spec.std_B > 0:
        g_x = g_x - noise @ spec.nash_y
        g_y = g_y - noise.T @ spec.nash_x
    return OracleSample(B_xi, g_x, g_y)


def distance_sq_to_nash(spec: ProblemSpec, x, y) -> np.ndarray | float:
    """``||x - x*||^2 + ||y - y*||^2``; batched over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1:] != (spec.dim,) or y.shape[-1:] != (spec.dim,):
        raise ValidationError(f"expected trailing dimension {spec.dim}, got {x.shape} and {y.shape}")
    dx = x - spec.nash_x
    dy = y - spec.nash_y
    out = np.sum(dx * dx, axis=-1) + np.sum(dy * dy, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


# -- moments --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MomentSummary:
    """Second- and fourth-moment quantities of the coupling and intercept noise.

    ``M = E[B_xi B_xi^T]``, ``M_hat = E[B_xi^T B_xi]``, ``EM2 = E[M_xi^2]``,
    ``EMhat2 = E[M_hat_xi^2]``; ``B`` is the mean coupling.
    """
    B: np.ndarray
    M: np.ndarray
    M_hat: np.ndarray
    EM2: np.ndarray
    EMhat2: np.ndarray
    sigma_B_sq: float
    sigma_B2_sq: float
    sigma_g_sq: float
    lam_min_M: float = field(init=False)
    lam_max_M: float = field(init=False)
    lam_min_Mhat: float = field(init=False)
    lam_max_Mhat: float = field(init=False)
    lam_min_BBt: float = field(init=False)
    lam_max_BtB: float = field(init=False)
    source: str = "analytic"
    sample_count: int | None = None

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        object.__setattr__(self, "B", B)
        for name in ("M", "M_hat", "EM2", "EMhat2"):
            object.__setattr__(self, name, as_symmetric(np.atleast_2d(getattr(self, name)), name))
        for name in ("sigma_B_sq", "sigma_B2_sq", "sigma_g_sq"):
            v = float(getattr(self, name))
            if not v >= 0:
                raise ValidationError(f"{name} must be nonnegative, got {v}")
            object.__setattr__(self, name, v)
        lo, hi = sym_eig_extremes(self.M)
        object.__setattr__(self, "lam_min_M", lo)
        object.__setattr__(self, "lam_max_M", hi)
        lo, hi = sym_eig_extremes(self.M_hat)
        object.__setattr__(self, "lam_min_Mhat", lo)
        object.__setattr__(self, "lam_max_Mhat", hi)
        BBt = B @ B.T
        BtB = B.T @ B
        object.__setattr__(self, "lam_min_BBt", sym_eig_extremes(0.5 * (BBt + BBt.T))[0])
        object.__setattr__(self, "lam_max_BtB", sym_eig_extremes(0.5 * (BtB + BtB.T))[1])

    @property
    def lam_min(self) -> float:
        """``lambda_min(M) ∧ lambda_min(M_hat)``."""
        return min(self.lam_min_M, self.lam_min_Mhat)

    @property
    def lam_max(self) -> float:
        """``lambda_max(M) ∨ lambda_max(M_hat)``."""
        return max(self.lam_max_M, self.lam_max_Mhat)

    @property
    def condition_number(self) -> float:
        return self.lam_max_BtB / self.lam_min_BBt

    def summary(self) -> dict:
        return {
            "source": self.source,
            "sample_count": self.sample_count,
            "sigma_B_sq": self.sigma_B_sq,
            "sigma_B2_sq": self.sigma_B2_sq,
            "sigma_g_sq": self.sigma_g_sq,
            "lam_min_M": self.lam_min_M,
            "lam_max_M": self.lam_max_M,
            "lam_min_Mhat": self.lam_min_Mhat,
            "lam_max_Mhat": self.lam_max_Mhat,
            "lam_min_BBt": self.lam_min_BBt,
            "lam_max_BtB": self.lam_max_BtB,
        }


def gaussian_fourth_moments(B, std_B: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form ``E[M_xi^2]`` and ``E[M_hat_xi^2]`` for ``B_xi = B + std_B * E``.

    With ``E`` an ``n x m`` standard Gaussian matrix, ``A = B B^T`` and
    ``s = std_B^2``::

        E[M_xi^2] = A^2 + s((2m + n + 2) A + tr(A) I) + s^2 m(m + n + 1) I

    and symmetrically for ``M_hat_xi`` with ``n`` and ``m`` swapped.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n, m = B.shape
    s = float(std_B) ** 2
    A = B @ B.T
    Ah = B.T @ B
    tr = float(np.trace(Ah))
    EM2 = A @ A + s * ((2 * m + n + 2) * A + tr * np.eye(n)) + s * s * m * (m + n + 1) * np.eye(n)
    EMh2 = Ah @ Ah + s * ((2 * n + m + 2) * Ah + tr * np.eye(m)) + s * s * n * (n + m + 1) * np.eye(m)
    return EM2, EMh2


def analytic_moments(spec: ProblemSpec) -> MomentSummary:
    """All moment quantities in closed form for the Gaussian model."""
    B = spec.B
    d = spec.dim
    s = spec.std_B ** 2
    M = B @ B.T + d * s * np.eye(d)
    M_hat = B.T @ B + d * s * np.eye(d)
    EM2, EMh2 = gaussian_fourth_moments(B, spec.std_B)
    sigma_B2_sq = max(operator_norm(EM2 - M @ M), operator_norm(EMh2 - M_hat @ M_hat)) if s > 0 else 0.0
    return MomentSummary(B, M, M_hat, EM2, EMh2, d * s, sigma_B2_sq, 2 * d * spec.std_g ** 2,
                         source="analytic")


def estimate_moments(spec: ProblemSpec, sample_count: int = 100_000,
                     stream: OracleStream | None = None, chunk: int = 256) -> MomentSummary:
    """Moments with ``E[M_xi^2]``, ``E[M_hat_xi^2]`` and ``sigma_B2`` from Monte Carlo.

    ``M``, ``M_hat``, ``sigma_B^2 = d std_B^2`` and ``sigma_g^2 = 2 d std_g^2``
    use their closed forms.  Cost is ``O(sample_count * d^3)``.
    """
    if sample_count < 2:
        raise ValidationError("sample_count must be >= 2")
    d = spec.dim
    s = spec.std_B ** 2
    B = spec.B
    M = B @ B.T + d * s * np.eye(d)
    M_hat = B.T @ B + d * s * np.eye(d)
    if s == 0:
        A = B @ B.T
        Ah = B.T @ B
        return MomentSummary(B, M, M_hat, A @ A, Ah @ Ah, 0.0, 0.0, 2 * d * spec.std_g ** 2,
                             source="monte_carlo", sample_count=sample_count)
    if stream is None:
        stream = OracleStream(0, "moments")
    EM2 = np.zeros((d, d))
    EMh2 = np.zeros((d, d))
    done = 0
    while done < sample_count:
        k = min(chunk, sample_count - done)
        Bs = B + spec.std_B * stream.coupling.standard_normal((k, d, d))
        Ms = Bs @ Bs.transpose(0, 2, 1)
        Mhs = Bs.transpose(0, 2, 1) @ Bs
        EM2 += np.einsum("kij,kjl->il", Ms, Ms)
        EMh2 += np.einsum("kij,kjl->il", Mhs, Mhs)
        stream.draws += k
        done += k
    EM2 = EM2 / sample_count
    EMh2 = EMh2 / sample_count
    EM2 = 0.5 * (EM2 + EM2.T)
    EMh2 = 0.5 * (EMh2 + EMh2.T)
    sigma_B2_sq = max(operator_norm(EM2 - M @ M), operator_norm(EMh2 - M_hat @ M_hat))
    return MomentSummary(B, M, M_hat, EM2, EMh2, d * s, sigma_B2_sq, 2 * d * spec.std_g ** 2,
                         source="monte_carlo", sample_count=sample_count)


@dataclass(frozen=True)
class SecondMomentEstimate:
    """Monte-Carlo means and entrywise standard errors of second moments."""
    M: np.ndarray
    M_stderr: np.ndarray
    noise_gram: np.ndarray
    noise_gram_stderr: np.ndarray
    sample_count: int


def monte_carlo_second_moments(spec: ProblemSpec, sample_count: int,
                               stream: OracleStream, chunk: int = 512) -> SecondMomentEstimate:
    """Estimate ``E[B_xi B_xi^T]`` and ``E[(B_xi - B)^T (B_xi - B)]`` with standard errors."""
    if sample_count < 2:
        raise ValidationError("sample_count must be >= 2")
    d = spec.dim
    sums = np.zeros((2, d, d))
    sq = np.zeros((2, d, d))
    done = 0
    while done < sample_count:
        k = min(chunk, sample_count - done)
        N = spec.std_B * stream.coupling.standard_normal((k, d, d))
        Bs = spec.B + N
        Ms = Bs @ Bs.transpose(0, 2, 1)
        Gs = N.transpose(0, 2, 1) @ N
        sums[0] += Ms.sum(0)
        sums[1] += Gs.sum(0)
        sq[0] += (Ms * Ms).sum(0)
        sq[1] += (Gs * Gs).sum(0)
        stream.draws += k
        done += k
    n = sample_count
    mean = sums / n
    var = np.maximum(sq / n - mean * mean, 0.0) * n / (n - 1)
    se = np.sqrt(var / n)
    return SecondMomentEstimate(mean[0], se[0], mean[1], se[1], n)


def build_moments(B, M, M_hat, EM2, EMhat2, sigma_B_sq: float | None = None,
                  sigma_B2_sq: float | None = None, sigma_g_sq: float = 0.0) -> MomentSummary:
    """MomentSummary from explicit matrices; missing noise scalars are derived
    as the smallest values satisfying the operator-norm conditions."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    M = as_symmetric(M, "M")
    M_hat = as_symmetric(M_hat, "M_hat")
    if sigma_B_sq is None:
        sigma_B_sq = max(operator_norm(M - B @ B.T), operator_norm(M_hat - B.T @ B))
    if sigma_B2_sq is None:
        sigma_B2_sq = max(operator_norm(as_symmetric(EM2) - M @ M),
                          operator_norm(as_symmetric(EMhat2) - M_hat @ M_hat))
    return MomentSummary(B, M, M_hat, EM2, EMhat2, sigma_B_sq, sigma_B2_sq, sigma_g_sq, source="explicit")
