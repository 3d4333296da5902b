"""Periodic grids, Fourier transforms and Fourier multipliers.

All fields live on the torus ``[-L/2, L/2)`` sampled at ``N`` equispaced
points ``x_j = -L/2 + j*dx``.  The forward transform carries the ``dx``
weight and the phase of the left endpoint,

    F[u](xi_k) = dx * sum_j u_j exp(-i xi_k x_j),

so that the discrete spectrum of a well localized function approximates its
continuous Fourier transform ``int u(x) exp(-i xi x) dx``.  The inverse is

    u_j = (1/L) * sum_k F_k exp(i xi_k x_j).

Spectra are stored in numpy FFT order (``k = 0, 1, ..., N/2-1, -N/2, ..., -1``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "Field",
    "Multiplier",
    "make_grid",
    "to_spectral",
    "to_physical",
    "apply_multiplier",
    "derivative",
    "helmholtz_inverse",
    "lp_norm",
    "dealias",
    "derivative_multiplier",
    "helmholtz_multiplier",
    "dealias_mask",
]

REALNESS_TOL = 1e-10


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid of ``N`` points on ``[-L/2, L/2)``."""

    L: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"domain length must be positive, got L={self.L}")
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise ValueError(f"point count must be an integer, got N={self.N}")
        if not _is_power_of_two(int(self.N)) or self.N < 16:
            raise ValueError(f"N must be a power of two >= 16, got N={self.N}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", int(self.N))

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dxi(self) -> float:
        """Spacing of the frequency ladder, ``2*pi/L``."""
        return 2.0 * np.pi / self.L

    @property
    def xi_max(self) -> float:
        """Nyquist frequency ``pi*N/L``."""
        return np.pi * self.N / self.L

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.N)

    @property
    def xi(self) -> np.ndarray:
        """Grid frequencies in FFT order."""
        return _xi(self)

    @property
    def xi_half(self) -> np.ndarray:
        """Non-negative frequencies matching the ``rfft`` layout."""
        return _xi_half(self)


@lru_cache(maxsize=64)
def _xi(grid: GridSpec) -> np.ndarray:
    xi = 2.0 * np.pi * sfft.fftfreq(grid.N, grid.dx)
    xi.setflags(write=False)
    return xi


@lru_cache(maxsize=64)
def _xi_half(grid: GridSpec) -> np.ndarray:
    xi = 2.0 * np.pi * sfft.rfftfreq(grid.N, grid.dx)
    xi.setflags(write=False)
    return xi


@lru_cache(maxsize=64)
def _phase(N: int) -> np.ndarray:
    # exp(-i xi_k x_0) with x_0 = -L/2 reduces to (-1)^k
    ph = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
    ph.setflags(write=False)
    return ph


def make_grid(L: float, N: int) -> GridSpec:
    """Build a periodic grid; raises ``ValueError`` on invalid ``L`` or ``N``."""
    return GridSpec(L, N)


@dataclass(frozen=True, eq=False)
class Field:
    """A real function sampled on a :class:`GridSpec`.

    Fields are treated as immutable values; the sample array is made
    read-only on construction.
    """

    grid: GridSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.array(self.samples, dtype=float, copy=True)
        if u.ndim != 1 or u.shape[0] != self.grid.N:
            raise ValueError(
                f"expected {self.grid.N} samples, got shape {np.shape(self.samples)}"
            )
        u.setflags(write=False)
        object.__setattr__(self, "samples", u)

    @property
    def spectrum(self) -> np.ndarray:
        return to_spectral(self)

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.samples + other.samples)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.samples - other.samples)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.samples)

    def __mul__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, self.samples * other.samples)
        return Field(self.grid, self.samples * float(other))

    __rmul__ = __mul__

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "Field":
        return cls(grid, fn(grid.x))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.N))


def _check_same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass(frozen=True, eq=False)
class Multiplier:
    """Fourier multiplier ``m(xi)`` sampled at a grid's frequencies (FFT order)."""

    grid: GridSpec
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, copy=True)
        if w.ndim != 1 or w.shape[0] != self.grid.N:
            raise ValueError(
                f"expected {self.grid.N} weights, got shape {np.shape(self.weights)}"
            )
        if not np.isfinite(w[0]):
            raise ValueError("multiplier weight at xi = 0 must be finite")
        if not np.isrealobj(w) and not np.any(w.imag):
            w = w.real.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_symbol(cls, grid: GridSpec, symbol) -> "Multiplier":
        """Sample a callable ``symbol(xi)`` on the grid frequencies."""
        return cls(grid, symbol(grid.xi))

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        if self.grid != other.grid:
            raise ValueError("grid mismatch")
        return Multiplier(self.grid, self.weights * other.weights)

    @property
    def is_hermitian(self) -> bool:
        """True when ``m(-xi) = conj(m(xi))``, i.e. the operator preserves realness."""
        w = self.weights
        mirrored = np.conj(np.roll(w[::-1], 1))
        scale = max(np.max(np.abs(w)), 1.0)
        return bool(np.max(np.abs(w - mirrored)) <= 1e-14 * scale)

    @property
    def half(self) -> np.ndarray:
        """Weights on the ``rfft`` half spectrum (valid for Hermitian multipliers)."""
        return self.weights[: self.grid.N // 2 + 1]


def to_spectral(f: Field) -> np.ndarray:
    """Forward transform with ``dx`` weight; returns ``N`` complex coefficients."""
    return f.grid.dx * _phase(f.grid.N) * sfft.fft(f.samples)


def to_physical(grid: GridSpec, spectrum: np.ndarray, *, check_real: bool = True) -> Field:
    """Inverse of :func:`to_spectral`.

    Raises ``ValueError`` if the length does not match the grid, or if the
    inverse carries an imaginary part above ``1e-10`` relative (the
    spectrum is not conjugate symmetric).
    """
    spectrum = np.asarray(spectrum)
    if spectrum.shape != (grid.N,):
        raise ValueError(f"expected {grid.N} coefficients, got shape {spectrum.shape}")
    u = sfft.ifft(spectrum * _phase(grid.N)) / grid.dx
    if check_real:
        _check_realness(u)
    return Field(grid, u.real)


def _check_realness(u: np.ndarray) -> None:
    if not u.size:
        return
    scale = np.max(np.abs(u.real))
    resid = np.max(np.abs(u.imag))
    if resid > REALNESS_TOL * scale and resid > 1e-300:
        raise ValueError(
            f"multiplier output has imaginary residue {resid:.3e} "
            f"(relative {resid / max(scale, 1e-300):.3e})"
        )


def apply_multiplier(f: Field, m: Multiplier) -> Field:
    """Return the field whose spectrum is ``m(xi_k) * F[f](xi_k)``."""
    if f.grid != m.grid:
        raise ValueError(f"grid mismatch: field on {f.grid}, multiplier on {m.grid}")
    if m.is_hermitian:
        half = m.half
        if np.iscomplexobj(half):
            # Hermitian symmetry forces real weights at xi = 0 and at Nyquist
            half = half.copy()
            half[0] = half[0].real
            half[-1] = half[-1].real
        return Field(f.grid, _apply_half(f.samples, half))
    out = sfft.ifft(sfft.fft(f.samples) * m.weights)
    _check_realness(out)
    return Field(f.grid, out.real)


def _apply_half(u: np.ndarray, half: np.ndarray) -> np.ndarray:
    return sfft.irfft(sfft.rfft(u) * half, n=u.shape[0])


def derivative_multiplier(grid: GridSpec) -> Multiplier:
    """``i*xi``, with the unpaired Nyquist mode set to zero."""
    w = 1j * grid.xi
    w[grid.N // 2] = 0.0
    return Multiplier(grid, w)


def helmholtz_multiplier(grid: GridSpec) -> Multiplier:
    """Symbol ``1/(1 + xi^2)`` of ``(1 - d^2/dx^2)^{-1}``."""
    return Multiplier(grid, 1.0 / (1.0 + grid.xi**2))


def dealias_mask(grid: GridSpec) -> Multiplier:
    """Keep ``|xi| <= xi_max/2``; the half rule for cubic products."""
    return Multiplier(grid, (np.abs(grid.xi) <= 0.5 * grid.xi_max).astype(float))


def derivative(f: Field) -> Field:
    return apply_multiplier(f, derivative_multiplier(f.grid))


def helmholtz_inverse(f: Field) -> Field:
    return apply_multiplier(f, helmholtz_multiplier(f.grid))


def dealias(f: Field) -> Field:
    return apply_multiplier(f, dealias_mask(f.grid))


def lp_norm(f, p: float, dx: float | None = None) -> float:
    """Rectangle-rule ``L^p`` norm; ``p = inf`` gives the grid maximum.

    ``f`` may be a :class:`Field` or a raw sample array together with ``dx``.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if isinstance(f, Field):
        u, dx = f.samples, f.grid.dx
    else:
        u = np.asarray(f, dtype=float)
        if dx is None:
            raise ValueError("dx is required for raw sample arrays")
    a = np.abs(u)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    if p == 2:
        return float(np.sqrt(dx * np.dot(a, a)))
    if p == 1:
        return float(dx * a.sum())
    top = a.max() if a.size else 0.0
    if top == 0.0:
        return 0.0
    # scale to avoid under/overflow of |u|^p
    return float(top * (dx * np.sum((a / top) ** p)) ** (1.0 / p))
