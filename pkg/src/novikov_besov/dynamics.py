"""Right-hand side of the Novikov equation in nonlocal transport form and RK4.

The equation is integrated as

    u_t = -u^2 u_x + R1(u) + R2(u) + R3(u),

    R1(u) = -1/2 (1 - d_x^2)^{-1} (u_x^3),
    R2(u) = -d_x (1 - d_x^2)^{-1} (u^3),
    R3(u) = -3/2 d_x (1 - d_x^2)^{-1} (u u_x^2).

Every pointwise cubic product is dealiased with the half rule before it is
used.  Internally the solver works on raw sample arrays and real FFTs; the
public functions take and return :class:`~novikov_besov.spectral.Field`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .spectral import Field, GridSpec

__all__ = [
    "BlowUpError",
    "SolverConfig",
    "Trajectory",
    "remainder_r1",
    "remainder_r2",
    "remainder_r3",
    "transport_term",
    "rhs",
    "rk4_step",
    "integrate_fixed",
    "evolve",
    "cfl_step",
    "h1_energy",
]

BLOWUP_FACTOR = 1e3


class BlowUpError(RuntimeError):
    """Non-finite values or runaway growth during time stepping.

    ``trajectory`` holds the snapshots accepted before the failure, when
    available.
    """

    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class _Operators:
    N: int
    ik: np.ndarray
    helm: np.ndarray
    mask: np.ndarray


@lru_cache(maxsize=32)
def _operators(grid: GridSpec, dealias_enabled: bool = True) -> _Operators:
    xi = grid.xi_half
    ik = 1j * xi
    ik[-1] = 0.0  # unpaired Nyquist mode
    helm = 1.0 / (1.0 + xi**2)
    if dealias_enabled:
        mask = (xi <= 0.5 * grid.xi_max).astype(float)
    else:
        mask = np.ones_like(xi)
    for a in (ik, helm, mask):
        a.setflags(write=False)
    return _Operators(grid.N, ik, helm, mask)


def _dx(u: np.ndarray, ops: _Operators) -> np.ndarray:
    return sfft.irfft(sfft.rfft(u) * ops.ik, n=ops.N)


def _parts_hat(u: np.ndarray, ops: _Operators):
    """Half spectra of the transport term and of R1, R2, R3."""
    ux = _dx(u, ops)
    uu = u * u
    transport = -sfft.rfft(uu * ux) * ops.mask
    r1 = -0.5 * ops.helm * (sfft.rfft(ux * ux * ux) * ops.mask)
    r2 = -ops.ik * ops.helm * (sfft.rfft(uu * u) * ops.mask)
    r3 = -1.5 * ops.ik * ops.helm * (sfft.rfft(u * ux * ux) * ops.mask)
    return transport, r1, r2, r3


def _rhs_array(u: np.ndarray, ops: _Operators) -> np.ndarray:
    ux = _dx(u, ops)
    uu = u * u
    total = -sfft.rfft(uu * ux)
    total -= ops.helm * (
        0.5 * sfft.rfft(ux * ux * ux)
        + ops.ik * (sfft.rfft(uu * u) + 1.5 * sfft.rfft(u * ux * ux))
    )
    return sfft.irfft(total * ops.mask, n=ops.N)


def _rk4_array(u: np.ndarray, dt: float, ops: _Operators) -> np.ndarray:
    k1 = _rhs_array(u, ops)
    k2 = _rhs_array(u + 0.5 * dt * k1, ops)
    k3 = _rhs_array(u + 0.5 * dt * k2, ops)
    k4 = _rhs_array(u + dt * k3, ops)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _part(u: Field, which: int, dealias_enabled: bool = True) -> Field:
    ops = _operators(u.grid, dealias_enabled)
    hat = _parts_hat(u.samples, ops)[which]
    return Field(u.grid, sfft.irfft(hat, n=ops.N))


def transport_term(u: Field) -> Field:
    """``-u^2 u_x``, dealiased."""
    return _part(u, 0)


def remainder_r1(u: Field) -> Field:
    return _part(u, 1)


def remainder_r2(u: Field) -> Field:
    return _part(u, 2)


def remainder_r3(u: Field) -> Field:
    return _part(u, 3)


def rhs(u: Field, dealias_enabled: bool = True) -> Field:
    """``-u^2 u_x + R1(u) + R2(u) + R3(u)``; raises :class:`BlowUpError` on NaN/Inf."""
    out = _rhs_array(u.samples, _operators(u.grid, dealias_enabled))
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite right-hand side")
    return Field(u.grid, out)


def rk4_step(u: Field, dt: float, dealias_enabled: bool = True) -> Field:
    """One classical Runge-Kutta step of size ``dt`` (negative ``dt`` steps back).

    No step-size control happens here; :func:`evolve` enforces the CFL bound.
    """
    out = _rk4_array(u.samples, float(dt), _operators(u.grid, dealias_enabled))
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"non-finite state after RK4 step dt={dt}")
    return Field(u.grid, out)


def integrate_fixed(u0: Field, T: float, nsteps: int, dealias_enabled: bool = True) -> Field:
    """March ``nsteps`` equal RK4 steps to time ``T`` (for convergence studies)."""
    ops = _operators(u0.grid, dealias_enabled)
    u = np.array(u0.samples)
    dt = T / nsteps
    for _ in range(nsteps):
        u = _rk4_array(u, dt, ops)
    if not np.all(np.isfinite(u)):
        raise BlowUpError("non-finite state in fixed-step integration")
    return Field(u0.grid, u)


def h1_energy(u: Field) -> float:
    """``int (u^2 + u_x^2) dx`` evaluated spectrally (exact for grid fields)."""
    return _h1_array(u.samples, u.grid)


def _h1_array(u: np.ndarray, grid: GridSpec) -> float:
    uh = sfft.rfft(u)
    xi = grid.xi_half
    wts = np.full(uh.shape, 2.0)
    wts[0] = 1.0
    if grid.N % 2 == 0:
        wts[-1] = 1.0
    return float(grid.dx / grid.N * np.sum(wts * (1.0 + xi**2) * np.abs(uh) ** 2))


def cfl_step(grid: GridSpec, linf: float, cfl: float = 0.5) -> float:
    """``cfl * dx / max(1, linf**2)``."""
    return cfl * grid.dx / max(1.0, linf * linf)


@dataclass
class SolverConfig:
    """Time-stepping parameters.

    ``dt`` is an optional cap on the step; the step actually taken is the
    smaller of the cap and the CFL step, shortened to land on sample times.
    """

    T: float
    sample_times: tuple = ()
    cfl: float = 0.5
    dt: float | None = None
    dealias_enabled: bool = True
    blowup_factor: float = BLOWUP_FACTOR

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got T={self.T}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt cap must be positive, got {self.dt}")
        ts = tuple(float(t) for t in (self.sample_times or (0.0, self.T)))
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample_times must be strictly increasing")
        if ts[0] < 0.0 or ts[-1] > self.T * (1 + 1e-12):
            raise ValueError("sample_times must lie in [0, T]")
        self.sample_times = ts


@dataclass
class Trajectory:
    """Snapshots of a solution plus per-step diagnostics."""

    grid: GridSpec
    times: np.ndarray
    samples: np.ndarray
    diag_t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diag_linf: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diag_h1: np.ndarray = field(default_factory=lambda: np.zeros(0))
    max_step: float = 0.0

    def __len__(self):
        return len(self.times)

    def field(self, i: int) -> Field:
        return Field(self.grid, self.samples[i])

    def fields(self):
        return [self.field(i) for i in range(len(self))]

    # -- serialization -------------------------------------------------
    # CSV: a '# grid L=<L> N=<N>' preamble, a header 't,u_0,...,u_{N-1}',
    # then one row per snapshot.  Floats are written with repr() so they
    # round-trip exactly.
    # NPZ: arrays 't' (M,), 'u' (M, N) float64 and scalars 'L', 'N'.

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# grid L={self.grid.L!r} N={self.grid.N}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"u_{i}" for i in range(self.grid.N)])
            for t, row in zip(self.times, self.samples):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        path = Path(path)
        with path.open() as fh:
            pre = fh.readline().split()
            meta = dict(tok.split("=", 1) for tok in pre[2:])
            grid = GridSpec(float(meta["L"]), int(meta["N"]))
            rd = csv.reader(fh)
            next(rd)
            rows = [[float(v) for v in r] for r in rd if r]
        arr = np.array(rows, dtype=float).reshape(len(rows), grid.N + 1)
        return cls(grid, arr[:, 0], arr[:, 1:])

    def to_npz(self, path) -> None:
        np.savez(Path(path), t=self.times, u=self.samples, L=self.grid.L, N=self.grid.N)

    @classmethod
    def from_npz(cls, path) -> "Trajectory":
        with np.load(Path(path)) as z:
            grid = GridSpec(float(z["L"]), int(z["N"]))
            return cls(grid, np.array(z["t"]), np.array(z["u"]))


def evolve(u0: Field, cfg: SolverConfig) -> Trajectory:
    """Integrate from ``u0`` through ``cfg.sample_times`` with CFL-limited RK4.

    Raises :class:`BlowUpError` (carrying the accepted prefix) on non-finite
    values or when the sup norm exceeds ``blowup_factor`` times its
    initial value.
    """
    grid = u0.grid
    ops = _operators(grid, cfg.dealias_enabled)
    u = np.array(u0.samples)
    linf0 = float(np.max(np.abs(u)))
    limit = cfg.blowup_factor * linf0

    times, snaps = [], []
    dts, dlinf, dh1 = [0.0], [linf0], [_h1_array(u, grid)]
    t = 0.0
    max_step = 0.0

    def partial():
        return Trajectory(grid, np.array(times), np.array(snaps).reshape(len(snaps), grid.N),
                          np.array(dts), np.array(dlinf), np.array(dh1), max_step)

    for ts in cfg.sample_times:
        while ts - t > 1e-13 * max(1.0, ts):
            linf = float(np.max(np.abs(u)))
            h = cfl_step(grid, linf, cfg.cfl)
            if cfg.dt is not None:
                h = min(h, cfg.dt)
            if ts - t <= h * (1 + 1e-9):
                h = ts - t
            u = _rk4_array(u, h, ops)
            t = ts if h == ts - t else t + h
            max_step = max(max_step, h)
            linf = float(np.max(np.abs(u)))
            if not math.isfinite(linf):
                raise BlowUpError(f"non-finite solution at t={t:.6g}", partial())
            if linf > limit and linf > 0.0:
                raise BlowUpError(
                    f"sup norm {linf:.3e} exceeds {cfg.blowup_factor:g}x initial at t={t:.6g}",
                    partial(),
                )
            dts.append(t)
            dlinf.append(linf)
            dh1.append(_h1_array(u, grid))
        times.append(ts)
        snaps.append(u.copy())
    return partial()
