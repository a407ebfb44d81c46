"""Batched stochastic oracles: one independent stream per seed.

``DenseOracle`` materializes ``B_xi`` for every draw via :func:`sample_oracle`.

``LazyGaussianOracle`` never forms ``B_xi``.  The Gaussian noise matrix ``E``
of a draw is revealed only along the vectors a solver multiplies it with:
after products ``E V`` and ``E^T U`` are known (orthonormal ``V``, ``U``), a
new right product is

    E r = E V c + rho * (U Z^T v + (I - U U^T) zeta),   Z = E^T U,

with ``r = V c + rho v`` and a fresh ``zeta ~ N(0, I)``; left products are
symmetric.  Each product is exactly distributed as with the explicit
matrix, but a draw costs ``O(d)`` normals instead of ``d^2``.

For the nash-centered model the intercept sample needs the products
``E y*`` and ``E^T x*``; solvers avoid them by iterating in Nash-centered
coordinates, where the game has zero intercept means and ``z* = 0``.
"""
from __future__ import annotations

import numpy as np

from .game_model import OracleSample, ProblemSpec, sample_oracle
from .streams import OracleStream

SEG_REVEALS = 4  # B y, B^T x, B y_h, B^T x_h
ANCHOR_REVEALS = 2  # B y*, B^T x* for the nash-centered intercepts
_TINY = 1e-13


# bases are stored row-wise, shape (S, k, d)

def _coef(P, r):
    """Coordinates of ``r`` on the rows of ``P``: ``(S, k, d), (S, d) -> (S, k)``."""
    return np.matmul(P, r[:, :, None])[:, :, 0]


def _comb(P, c):
    """Row combination ``c^T P``: ``(S, k, d), (S, k) -> (S, d)``."""
    return np.matmul(c[:, None, :], P)[:, 0, :]


class StackedSample:
    """A batch of explicit samples, ``B_xi`` with shape ``(S, d, d)``."""

    def __init__(self, samples: list[OracleSample]):
        self.B_xi = np.stack([s.B_xi for s in samples])
        self.g_x = np.stack([s.g_x for s in samples])
        self.g_y = np.stack([s.g_y for s in samples])

    def matvec(self, v):
        return np.einsum("sij,sj->si", self.B_xi, v)

    def rmatvec(self, u):
        return np.einsum("sij,si->sj", self.B_xi, u)


class LazyGaussianSample:
    """One draw of ``B_xi = B + std_B E`` per batch member, revealed on demand."""

    def __init__(self, spec: ProblemSpec, xi: np.ndarray | None, z: np.ndarray,
                 diag: np.ndarray | None = None):
        S = z.shape[0]
        self._diag = diag
        d = spec.dim
        self._spec = spec
        self._xi = xi
        self._slot = 0
        n = 0 if xi is None else xi.shape[1]
        self._V = np.zeros((S, n, d))
        self._W = np.zeros((S, n, d))
        self._U = np.zeros((S, n, d))
        self._Z = np.zeros((S, n, d))
        self._kv = 0
        self._ku = 0
        self.g_x = spec.g_x_mean + spec.std_g * z[:, 0]
        self.g_y = spec.g_y_mean + spec.std_g * z[:, 1]
        if needs_anchors(spec) and self.random_coupling:
            ny = np.broadcast_to(spec.nash_y, (S, d))
            nx = np.broadcast_to(spec.nash_x, (S, d))
            self.g_x = self.g_x - spec.std_B * self._noise_right(ny)
            self.g_y = self.g_y - spec.std_B * self._noise_left(nx)

    @property
    def random_coupling(self) -> bool:
        return self._xi is not None and self._spec.std_B > 0

    def _fresh(self) -> np.ndarray:
        if self._slot >= self._xi.shape[1]:
            raise RuntimeError("lazy sample exhausted its reveal budget")
        out = self._xi[:, self._slot]
        self._slot += 1
        return out

    @staticmethod
    def _reveal(r, P, Q, kp, R, T, kr, fresh):
        """Noise product along ``r``: ``P`` is the basis on r's side with known
        products ``Q``; ``R``/``T`` is the opposite side's basis and products."""
        if kp == 0 and kr == 0:
            rho = np.sqrt(np.einsum("sd,sd->s", r, r))
            P[:, 0] = r / np.where(rho > 0, rho, 1.0)[:, None]
            Q[:, 0] = fresh * (rho > 0)[:, None]
            return rho[:, None] * fresh
        Pk = P[:, :kp]
        c = _coef(Pk, r)
        r_perp = r - _comb(Pk, c)
        c2 = _coef(Pk, r_perp)  # second Gram-Schmidt pass
        r_perp = r_perp - _comb(Pk, c2)
        c = c + c2
        rho = np.sqrt(np.einsum("sd,sd->s", r_perp, r_perp))
        scale = np.sqrt(np.einsum("sd,sd->s", r, r))
        keep = rho > _TINY * np.maximum(scale, 1e-300)
        rho = np.where(keep, rho, 0.0)
        v = r_perp / np.where(keep, rho, 1.0)[:, None]
        Rk = R[:, :kr]
        ev = fresh - _comb(Rk, _coef(Rk, fresh)) + _comb(Rk, _coef(T[:, :kr], v))
        ev = ev * keep[:, None]
        out = _comb(Q[:, :kp], c) + rho[:, None] * ev
        P[:, kp] = v
        Q[:, kp] = ev
        return out

    def _noise_right(self, r):
        out = self._reveal(r, self._V, self._W, self._kv, self._U, self._Z, self._ku, self._fresh())
        self._kv += 1
        return out

    def _noise_left(self, u):
        out = self._reveal(u, self._U, self._Z, self._ku, self._V, self._W, self._kv, self._fresh())
        self._ku += 1
        return out

    def matvec(self, v):
        out = v * self._diag if self._diag is not None else v @ self._spec.B.T
        if self.random_coupling:
            out = out + self._spec.std_B * self._noise_right(v)
        return out

    def rmatvec(self, u):
        out = u * self._diag if self._diag is not None else u @ self._spec.B
        if self.random_coupling:
            out = out + self._spec.std_B * self._noise_left(u)
        return out


def diagonal_of(B: np.ndarray) -> np.ndarray | None:
    """The diagonal of ``B`` if ``B`` is diagonal, else ``None``."""
    dg = np.diag(B)
    return dg.copy() if np.array_equal(B, np.diag(dg)) else None


def needs_anchors(spec: ProblemSpec) -> bool:
    return spec.oracle_model == "nash_centered" and bool(np.any(spec.nash_x) or np.any(spec.nash_y))


def reveal_slots(spec: ProblemSpec) -> int:
    return SEG_REVEALS + (ANCHOR_REVEALS if needs_anchors(spec) else 0)


class DenseOracle:
    """Explicit samples, one :class:`OracleStream` per seed."""

    def __init__(self, spec: ProblemSpec, seeds, tag: str = "oracle"):
        self.spec = spec
        self.streams = [OracleStream(s, tag) for s in seeds]

    def draw(self) -> StackedSample:
        return StackedSample([sample_oracle(self.spec, st) for st in self.streams])


class LazyGaussianOracle:
    """Lazily revealed Gaussian samples, one :class:`OracleStream` per seed.

    Normals are prefetched per seed in blocks; numpy generators produce the
    same values whatever the block size, so results do not depend on it.
    """

    def __init__(self, spec: ProblemSpec, seeds, tag: str = "oracle", block: int | None = None,
                 slots: int | None = None):
        self.spec = spec
        self.streams = [OracleStream(s, tag) for s in seeds]
        S = len(self.streams)
        d = spec.dim
        self.slots = reveal_slots(spec) if slots is None else int(slots)
        if block is None:
            block = max(1, min(64, (1 << 22) // max(1, S * self.slots * d)))
        self.block = int(block)
        self._pos = self.block
        self._coupling = spec.std_B > 0
        self._xi = np.empty((S, self.block, self.slots, d)) if self._coupling else None
        self._z = np.empty((S, self.block, 2, d))
        self._diag = diagonal_of(spec.B)

    def _refill(self):
        for i, st in enumerate(self.streams):
            if self._coupling:
                st.coupling.standard_normal(out=self._xi[i])
            st.intercept.standard_normal(out=self._z[i])
        self._pos = 0

    def draw(self) -> LazyGaussianSample:
        if self._pos >= self.block:
            self._refill()
        j = self._pos
        self._pos += 1
        for st in self.streams:
            st.draws += 1
        xi = self._xi[:, j] if self._coupling else None
        return LazyGaussianSample(self.spec, xi, self._z[:, j], self._diag)


def make_oracle(spec: ProblemSpec, seeds, kind: str = "lazy", tag: str = "oracle"):
    if kind == "lazy":
        return LazyGaussianOracle(spec, seeds, tag)
    if kind == "dense":
        return DenseOracle(spec, seeds, tag)
    raise ValueError(f"unknown oracle kind {kind!r}")
