"""Initial-data families for the non-uniform dependence experiment.

    f_n(x) = 2^{-ns} phi_b(x) sin(17/12 2^n x),      g_n(x) = 2^{-n/2} phi_b(x),
    u0^n = f_n,   v0^n = f_n + g_n.

``phi_b`` is the bump whose Fourier transform equals 1 on ``|xi| <= 1/4`` and
0 on ``|xi| >= 1/2``.  Every field is built from its exact Fourier
transform sampled on the grid, so it is the periodization of the
corresponding function on the line and its discrete spectrum has exactly the
stated support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import transport_term
from .littlewood_paley import BesovIndex, smooth_step
from .spectral import Field, GridSpec, make_grid, to_physical

__all__ = [
    "FREQ_RATIO",
    "DEFAULT_L",
    "DEFAULT_N_OFFSET",
    "SequenceParams",
    "epsilon_s",
    "bump_symbol",
    "bump",
    "carrier_frequency",
    "f_seq",
    "g_seq",
    "initial_pair",
    "drift_term",
    "grid_for",
]

FREQ_RATIO = 17.0 / 12.0
DEFAULT_L = 256.0 * math.pi
# N(n) = 2**(n + DEFAULT_N_OFFSET) keeps the f_n band below xi_max / 3
DEFAULT_N_OFFSET = 11


def epsilon_s(idx: BesovIndex) -> float:
    """``min{(s - max{1 + 1/p, 3/2}) / 2, 1/2}``; requires ``s`` strictly above the threshold."""
    if not idx.admissible:
        raise ValueError(
            f"s={idx.s} must exceed max(1 + 1/p, 3/2) = {idx.threshold} for p={idx.p}"
        )
    return min(0.5 * (idx.s - idx.threshold), 0.5)


def carrier_frequency(n: int) -> float:
    return FREQ_RATIO * 2.0**n


def grid_for(n: int, L: float = DEFAULT_L, offset: int = DEFAULT_N_OFFSET) -> GridSpec:
    return make_grid(L, 2 ** (n + offset))


@dataclass(frozen=True)
class SequenceParams:
    n: int
    idx: BesovIndex
    grid: GridSpec

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"dyadic index n must be an integer >= 3, got {self.n}")
        band_top = carrier_frequency(self.n) + 0.5
        if band_top > self.grid.xi_max / 3.0:
            raise ValueError(
                f"band edge {band_top:.4g} of f_{self.n} exceeds xi_max/3 = "
                f"{self.grid.xi_max / 3:.4g}; refine the grid"
            )
        if not self.idx.admissible:
            raise ValueError(
                f"s={self.idx.s} must exceed max(1 + 1/p, 3/2) = {self.idx.threshold}"
            )

    @classmethod
    def default(cls, n: int, idx: BesovIndex) -> "SequenceParams":
        return cls(n, idx, grid_for(n))


def bump_symbol(xi):
    """Fourier transform of ``phi_b``: 1 on ``|xi| <= 1/4``, 0 on ``|xi| >= 1/2``."""
    a = np.abs(np.asarray(xi, dtype=float))
    return 1.0 - smooth_step((a - 0.25) / 0.25)


def bump(grid: GridSpec) -> Field:
    """``phi_b`` on ``grid``: real, even, with ``int phi_b dx = 1``."""
    return to_physical(grid, bump_symbol(grid.xi).astype(complex))


def f_seq(P: SequenceParams) -> Field:
    """``2^{-ns} phi_b(x) sin(omega x)`` with ``omega = 17/12 2^n``."""
    xi = P.grid.xi
    w = carrier_frequency(P.n)
    # F[phi sin(w .)](xi) = (phi_hat(xi - w) - phi_hat(xi + w)) / (2i)
    spec = (bump_symbol(xi - w) - bump_symbol(xi + w)) * (-0.5j)
    return to_physical(P.grid, 2.0 ** (-P.n * P.idx.s) * spec)


def g_seq(P: SequenceParams) -> Field:
    return 2.0 ** (-0.5 * P.n) * bump(P.grid)


def initial_pair(P: SequenceParams) -> tuple[Field, Field]:
    """``(u0, v0) = (f_n, f_n + g_n)``."""
    f = f_seq(P)
    return f, f + g_seq(P)


def drift_term(v0: Field) -> Field:
    """``-v0^2 d_x v0`` (dealiased): the first-order-in-time drift of ``v``."""
    return transport_term(v0)
