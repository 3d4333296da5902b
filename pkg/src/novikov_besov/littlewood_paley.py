"""Dyadic partition of unity, Littlewood-Paley blocks and Besov norms (d = 1)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .spectral import Field, GridSpec, lp_norm

__all__ = [
    "smooth_step",
    "DyadicPartition",
    "BesovIndex",
    "ResolutionWarning",
    "build_partition",
    "j_max",
    "block_multiplier",
    "dyadic_block",
    "low_cutoff",
    "block_profile",
    "besov_norm",
    "aggregate",
]

RESOLUTION_FRACTION = 1e-8


class ResolutionWarning(UserWarning):
    """The highest resolved dyadic block carries a non-negligible share of a norm."""


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``.

    Built from ``h(t) = exp(-1/t)`` as ``h(t) / (h(t) + h(1 - t))``.  Values
    outside the open unit interval are exactly 0 or 1.
    """
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    ti = np.where(inside, t, 0.5)
    a = np.exp(-1.0 / ti)
    b = np.exp(-1.0 / (1.0 - ti))
    return np.where(t >= 1.0, 1.0, np.where(inside, a / (a + b), 0.0))


@dataclass(frozen=True)
class DyadicPartition:
    """The pair ``(chi, phi)`` generating the nonhomogeneous blocks.

    ``chi`` equals 1 on ``|xi| <= inner`` and 0 on ``|xi| >= outer``;
    ``phi(xi) = chi(xi/2) - chi(xi)``.  With ``inner = 3/4`` and
    ``outer = 4/3`` this gives ``supp phi`` in ``[3/4, 8/3]`` and
    ``phi = 1`` on ``[4/3, 3/2]``.
    """

    inner: float = 0.75
    outer: float = 4.0 / 3.0

    def chi(self, xi):
        a = np.abs(np.asarray(xi, dtype=float))
        return 1.0 - smooth_step((a - self.inner) / (self.outer - self.inner))

    def phi(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.chi(0.5 * xi) - self.chi(xi)

    def block_symbol(self, j: int, xi):
        if j <= -2:
            return np.zeros_like(np.asarray(xi, dtype=float))
        if j == -1:
            return self.chi(xi)
        return self.phi(np.ldexp(np.asarray(xi, dtype=float), -j))


def build_partition() -> DyadicPartition:
    return DyadicPartition()


@dataclass(frozen=True)
class BesovIndex:
    """Regularity ``s``, integrability ``p`` and summability ``r``."""

    s: float
    p: float = 2.0
    r: float = 2.0

    def __post_init__(self):
        for name in ("p", "r"):
            v = float(getattr(self, name))
            if not v >= 1.0:
                raise ValueError(f"{name} must lie in [1, inf], got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "s", float(self.s))

    @property
    def threshold(self) -> float:
        """``max{1 + 1/p, 3/2}``; the well-posedness regime needs ``s`` above it."""
        return max(1.0 + 1.0 / self.p, 1.5)

    @property
    def admissible(self) -> bool:
        return self.s > self.threshold


def j_max(grid: GridSpec) -> int:
    """Largest ``j`` with ``3/4 * 2**j <= xi_max``."""
    return int(math.floor(math.log2(grid.xi_max / 0.75) + 1e-12))


@lru_cache(maxsize=512)
def block_multiplier(grid: GridSpec, j: int, P: DyadicPartition) -> np.ndarray:
    """Half-spectrum weights of ``Delta_j`` on ``grid`` (read-only)."""
    w = np.asarray(P.block_symbol(j, grid.xi_half), dtype=float)
    w.setflags(write=False)
    return w


def _blocks_from_hat(uh: np.ndarray, grid: GridSpec, js, P: DyadicPartition):
    for j in js:
        w = block_multiplier(grid, j, P)
        if not np.any(w):
            yield j, np.zeros(grid.N)
            continue
        yield j, sfft.irfft(uh * w, n=grid.N)


def dyadic_block(u: Field, j: int, P: DyadicPartition | None = None) -> Field:
    """``Delta_j u``; identically zero for ``j <= -2``."""
    P = P or build_partition()
    if j <= -2:
        return Field.zeros(u.grid)
    w = block_multiplier(u.grid, j, P)
    return Field(u.grid, sfft.irfft(sfft.rfft(u.samples) * w, n=u.grid.N))


def low_cutoff(u: Field, j: int, P: DyadicPartition | None = None) -> Field:
    """``S_j u``: the sum of the blocks ``Delta_j'`` with ``j' < j``."""
    P = P or build_partition()
    if j <= -1:
        return Field.zeros(u.grid)
    w = np.zeros(u.grid.N // 2 + 1)
    for jj in range(-1, j):
        w = w + block_multiplier(u.grid, jj, P)
    return Field(u.grid, sfft.irfft(sfft.rfft(u.samples) * w, n=u.grid.N))


def block_profile(u: Field, P: DyadicPartition | None = None, p: float = 2.0):
    """List of ``(j, ||Delta_j u||_{L^p})`` for ``j = -1 .. j_max(grid)``."""
    P = P or build_partition()
    grid = u.grid
    uh = sfft.rfft(u.samples)
    js = range(-1, j_max(grid) + 1)
    return [(j, lp_norm(b, p, grid.dx)) for j, b in _blocks_from_hat(uh, grid, js, P)]


def aggregate(values, r: float) -> float:
    """``l^r`` norm of a finite sequence (max for ``r = inf``)."""
    v = np.abs(np.asarray(values, dtype=float))
    if v.size == 0:
        return 0.0
    if np.isinf(r):
        return float(v.max())
    top = v.max()
    if top == 0.0:
        return 0.0
    return float(top * np.sum((v / top) ** r) ** (1.0 / r))


def besov_norm(u: Field, idx: BesovIndex, P: DyadicPartition | None = None) -> float:
    """Discrete nonhomogeneous ``B^s_{p,r}`` norm, truncated at ``j_max``.

    Emits :class:`ResolutionWarning` when the top block carries more than
    ``1e-8`` of the total.
    """
    prof = block_profile(u, P, idx.p)
    terms = np.array([2.0 ** (j * idx.s) * nrm for j, nrm in prof])
    total = aggregate(terms, idx.r)
    if total > 0 and terms[-1] > RESOLUTION_FRACTION * total:
        warnings.warn(
            f"block j={prof[-1][0]} holds {terms[-1] / total:.2e} of the "
            f"B^{idx.s}_{{{idx.p},{idx.r}}} norm; field may be under-resolved",
            ResolutionWarning,
            stacklevel=2,
        )
    return total
