"""Paired evolutions, Besov-norm separations and lemma residuals.

For every dyadic index ``n`` the harness evolves ``u0 = f_n`` and
``v0 = f_n + g_n`` on the grid ``N(n) = 2**(n + N_policy)``, ``L`` fixed, and
tabulates at each sample time

* ``delta0``  = ||u0 - v0||_{B^s_{p,r}}
* ``delta``   = ||u(t) - v(t)||
* ``lemma_u`` = ||u(t) - u0||
* ``lemma_v`` = ||v(t) - v0 - t V0||, with ``V0 = -v0^2 d_x v0``
* ``rl_value`` = 2^{ns} ||g_n^2 d_x f_n||_{L^p}

All Besov norms use the same ``(s, p, r)``.  The CSV produced by
:func:`emit_report` has exactly the columns in :data:`CSV_COLUMNS`; fitted
slopes and constants go to a sibling ``.summary.json`` file.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import integrate

from .dynamics import BlowUpError, SolverConfig, evolve
from .littlewood_paley import (
    BesovIndex,
    DyadicPartition,
    ResolutionWarning,
    besov_norm,
    build_partition,
)
from .sequences import (
    DEFAULT_L,
    DEFAULT_N_OFFSET,
    FREQ_RATIO,
    SequenceParams,
    bump,
    drift_term,
    epsilon_s,
    f_seq,
    g_seq,
    grid_for,
)
from .spectral import Field, derivative, lp_norm

log = logging.getLogger(__name__)

CSV_COLUMNS = ("n", "t", "delta0", "delta", "lemma_u", "lemma_v", "rl_value",
               "s", "p", "r", "N", "L", "dt")
INT_COLUMNS = {"n", "N"}
CONFIG_KEYS = ("s", "p", "r", "n_list", "T0", "cfl", "L", "N_policy", "out_dir")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    idx: BesovIndex = field(default_factory=lambda: BesovIndex(2.0, 2.0, 2.0))
    n_list: tuple = (4, 5, 6, 7, 8)
    T0: float = 0.25
    n_samples: int = 16
    cfl: float = 0.5
    L: float = DEFAULT_L
    N_offset: int = DEFAULT_N_OFFSET
    out_dir: Path = Path("out")
    # separation constants are taken over t in [sep_start, T0]
    sep_start: float = 0.1

    def __post_init__(self):
        self.n_list = tuple(sorted(int(n) for n in self.n_list))
        if not self.n_list:
            raise ConfigError("n_list is empty")
        if not self.T0 > 0:
            raise ConfigError(f"T0 must be positive, got {self.T0}")
        try:
            epsilon_s(self.idx)
            for n in self.n_list:
                SequenceParams(n, self.idx, self.grid(n))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.out_dir = Path(self.out_dir)

    def grid(self, n: int):
        return grid_for(n, self.L, self.N_offset)

    @property
    def sample_times(self) -> np.ndarray:
        return np.linspace(0.0, self.T0, self.n_samples + 1)

    def solver(self) -> SolverConfig:
        return SolverConfig(T=self.T0, sample_times=tuple(self.sample_times), cfl=self.cfl)


def _parse_float(v: str) -> float:
    v = v.strip().lower()
    if v in ("inf", "infinity", "oo"):
        return math.inf
    if "pi" in v:
        # allow e.g. "256*pi" or "256pi"
        coef = v.replace("*", "").replace("pi", "").strip() or "1"
        return float(coef) * math.pi
    return float(v)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in vals:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        vals[key] = value
    try:
        kw = {}
        idx = BesovIndex(_parse_float(vals.get("s", "2")),
                         _parse_float(vals.get("p", "2")),
                         _parse_float(vals.get("r", "2")))
        kw["idx"] = idx
        if "n_list" in vals:
            kw["n_list"] = tuple(int(tok) for tok in vals["n_list"].replace(",", " ").split())
        if "T0" in vals:
            kw["T0"] = _parse_float(vals["T0"])
        if "cfl" in vals:
            kw["cfl"] = _parse_float(vals["cfl"])
            if not 0.0 < kw["cfl"] <= 1.0:
                raise ConfigError(f"cfl must lie in (0, 1], got {kw['cfl']}")
        if "L" in vals:
            kw["L"] = _parse_float(vals["L"])
        if "N_policy" in vals:
            pol = vals["N_policy"].replace(" ", "")
            if pol.startswith("n+"):
                pol = pol[2:]
            kw["N_offset"] = int(pol)
        if "out_dir" in vals:
            kw["out_dir"] = Path(vals["out_dir"])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


@dataclass
class Row:
    n: int
    t: float
    delta0: float
    delta: float
    lemma_u: float
    lemma_v: float
    rl_value: float
    s: float
    p: float
    r: float
    N: int
    L: float
    dt: float

    def values(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class CellResult:
    """Everything computed for one dyadic index ``n``."""

    n: int
    rows: list
    flagged: bool = False
    message: str = ""
    # diagnostics kept out of the CSV
    growth: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v_drift: np.ndarray = field(default_factory=lambda: np.zeros(0))
    u0_norm: float = 0.0
    v0_norm: float = 0.0
    resolution_warnings: int = 0


@dataclass
class SeparationReport:
    rows: list = field(default_factory=list)
    cells: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def flagged(self):
        return sorted(n for n, c in self.cells.items() if c.flagged)

    def column(self, name, n=None):
        return np.array([getattr(r, name) for r in self.rows if n is None or r.n == n])

    def ns(self):
        return sorted({r.n for r in self.rows})


def rl_value(f: Field, g: Field, n: int, idx: BesovIndex) -> float:
    """``2^{ns} ||g^2 d_x f||_{L^p}``."""
    prod = g.samples**2 * derivative(f).samples
    return 2.0 ** (n * idx.s) * lp_norm(prod, idx.p, f.grid.dx)


def oscillation_factor(p: float) -> float:
    """``(int_0^pi |cos x|^p dx / pi)^{1/p}``; 1 for ``p = inf``."""
    if math.isinf(p):
        return 1.0
    val, _ = integrate.quad(lambda x: abs(math.cos(x)) ** p, 0.0, math.pi, limit=200)
    return (val / math.pi) ** (1.0 / p)


def rl_limit(idx: BesovIndex, grid) -> float:
    """``17/12 * oscillation_factor(p) * ||phi_b^3||_{L^p}`` evaluated on ``grid``."""
    phi3 = bump(grid).samples ** 3
    return FREQ_RATIO * oscillation_factor(idx.p) * lp_norm(phi3, idx.p, grid.dx)


def _safe_evolve(u0: Field, solver: SolverConfig):
    try:
        return evolve(u0, solver), ""
    except BlowUpError as exc:
        return exc.trajectory, str(exc)


def run_cell(n: int, cfg: ExperimentConfig, P: DyadicPartition | None = None) -> CellResult:
    """Evolve the pair for one ``n`` and tabulate every column."""
    P = P or build_partition()
    idx = cfg.idx
    grid = cfg.grid(n)
    sp = SequenceParams(n, idx, grid)
    f = f_seq(sp)
    g = g_seq(sp)
    u0, v0 = f, f + g
    V0 = drift_term(v0)
    solver = cfg.solver()

    resolution_notes = []

    def norm(a: np.ndarray) -> float:
        # differences of nearly equal fields put roundoff into the top block,
        # which the 2^{js} weight amplifies; collect rather than spam
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ResolutionWarning)
            val = besov_norm(Field(grid, a), idx, P)
        resolution_notes.extend(str(w.message) for w in caught)
        return val

    tu, msg_u = _safe_evolve(u0, solver)
    tv, msg_v = _safe_evolve(v0, solver)
    flagged = bool(msg_u or msg_v)
    message = "; ".join(m for m in (msg_u, msg_v) if m)
    if flagged:
        log.warning("n=%d: %s", n, message)
        m = min(len(tu), len(tv))
        tu.times, tu.samples = tu.times[:m], tu.samples[:m]
        tv.times, tv.samples = tv.times[:m], tv.samples[:m]

    d0 = norm(u0.samples - v0.samples)
    rl = rl_value(f, g, n, idx)
    step = max(tu.max_step, tv.max_step)
    rows, growth, vdrift = [], [], []
    diff0 = u0.samples - v0.samples
    for i, t in enumerate(tu.times):
        u, v = tu.samples[i], tv.samples[i]
        rows.append(Row(
            n=n, t=float(t), delta0=d0,
            delta=norm(u - v),
            lemma_u=norm(u - u0.samples),
            lemma_v=norm(v - v0.samples - t * V0.samples),
            rl_value=rl, s=idx.s, p=idx.p, r=idx.r, N=grid.N, L=grid.L, dt=step,
        ))
        growth.append(norm((u - v) - diff0))
        vdrift.append(norm(v - v0.samples))
    cell = CellResult(n, rows, flagged, message, np.array(growth), np.array(vdrift),
                      norm(u0.samples), norm(v0.samples))
    cell.resolution_warnings = len(resolution_notes)
    if resolution_notes:
        log.debug("n=%d: %d resolution warnings, e.g. %s", n, len(resolution_notes),
                  resolution_notes[0])
    return cell


def _run_cell_star(args):
    return run_cell(*args)


def run_cells(cfg: ExperimentConfig, workers: int = 1) -> SeparationReport:
    """Run every ``n`` (optionally in worker processes) and merge ordered by ``(n, t)``."""
    if workers > 1 and len(cfg.n_list) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(_run_cell_star, [(n, cfg) for n in cfg.n_list]))
    else:
        cells = [run_cell(n, cfg) for n in cfg.n_list]
    rep = SeparationReport()
    for c in sorted(cells, key=lambda c: c.n):
        rep.cells[c.n] = c
        rep.rows.extend(sorted(c.rows, key=lambda r: r.t))
    rep.summary = summarize(rep, cfg)
    return rep


# -- fits -------------------------------------------------------------------

def log2_slope(ns, values) -> float:
    """Least-squares slope of ``log2(values)`` against ``ns``."""
    ns = np.asarray(ns, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(ns) < 2 or np.any(v <= 0):
        return math.nan
    return float(np.polyfit(ns, np.log2(v), 1)[0])


def quadratic_fit(t, w):
    """Fit ``w = a + b t^2``; returns ``(a, b, max |residual|)``."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    A = np.column_stack([np.ones_like(t), t * t])
    (a, b), *_ = np.linalg.lstsq(A, w, rcond=None)
    resid = w - A @ np.array([a, b])
    return float(a), float(b), float(np.max(np.abs(resid)))


def separation_constants(rep: SeparationReport, cfg: ExperimentConfig, *, growth=False):
    """Per-``n`` ``min_t delta/t`` over ``t in [sep_start, T0]``.

    With ``growth=True`` the numerator is instead
    ``||(u - v)(t) - (u0 - v0)||``, which removes the initial offset.
    """
    out = {}
    for n in rep.ns():
        c = rep.cells[n]
        t = rep.column("t", n)
        num = c.growth if growth else rep.column("delta", n)
        sel = t >= cfg.sep_start - 1e-12
        if not np.any(sel):
            continue
        out[n] = float(np.min(num[sel] / t[sel]))
    return out


@dataclass
class LemmaUResult:
    eps_s: float
    sup: dict
    slope: float
    plateau: list
    rows: list


def check_lemma_u(cfg: ExperimentConfig, report: SeparationReport | None = None) -> LemmaUResult:
    """``sup_t ||u^n(t) - u0^n||_{B^s}`` per ``n`` and its log2 decay slope.

    Values below ``1e-12 * ||u0^n||`` are reported as a roundoff plateau and
    excluded from the slope.
    """
    rep = report or run_cells(cfg)
    sup, plateau = {}, []
    for n in rep.ns():
        sup[n] = float(np.max(rep.column("lemma_u", n)))
        if sup[n] <= 1e-12 * rep.cells[n].u0_norm:
            plateau.append(n)
    fit_ns = [n for n in sup if n not in plateau]
    slope = log2_slope(fit_ns, [sup[n] for n in fit_ns])
    rows = [r for r in rep.rows]
    return LemmaUResult(epsilon_s(cfg.idx), sup, slope, plateau, rows)


@dataclass
class LemmaVResult:
    fits: dict        # n -> (a, b, max residual)
    endpoint: dict    # n -> ||w_n(T0)||
    rows: list

    def residual_fraction(self, n):
        return self.fits[n][2] / self.endpoint[n] if self.endpoint[n] > 0 else math.inf


def check_lemma_v(cfg: ExperimentConfig, report: SeparationReport | None = None) -> LemmaVResult:
    """Fit ``||w_n(t)|| = a + b t^2`` on the sample times for each ``n``."""
    rep = report or run_cells(cfg)
    fits, endpoint = {}, {}
    for n in rep.ns():
        t = rep.column("t", n)
        w = rep.column("lemma_v", n)
        fits[n] = quadratic_fit(t, w)
        endpoint[n] = float(w[-1])
    return LemmaVResult(fits, endpoint, list(rep.rows))


@dataclass
class RLResult:
    values: dict
    limit: float
    rel_err: dict


def check_rl_limit(cfg: ExperimentConfig) -> RLResult:
    """``2^{ns}||g_n^2 d_x f_n||_{L^p}`` against its Riemann-Lebesgue limit.

    Needs no time stepping, so it is cheap for any ``n``.
    """
    if cfg.idx.p < 1:
        raise ConfigError("p must be >= 1")
    values = {}
    for n in cfg.n_list:
        sp = SequenceParams(n, cfg.idx, cfg.grid(n))
        values[n] = rl_value(f_seq(sp), g_seq(sp), n, cfg.idx)
    limit = rl_limit(cfg.idx, cfg.grid(cfg.n_list[-1]))
    rel = {n: abs(v - limit) / limit for n, v in values.items()}
    return RLResult(values, limit, rel)


def summarize(rep: SeparationReport, cfg: ExperimentConfig) -> dict:
    ns = rep.ns()
    if not ns:
        return {}
    d0 = {n: float(rep.column("delta0", n)[0]) for n in ns}
    lu = check_lemma_u(cfg, rep)
    lv = check_lemma_v(cfg, rep)
    c_ratio = separation_constants(rep, cfg)
    c_growth = separation_constants(rep, cfg, growth=True)

    def spread(d):
        v = [x for x in d.values() if x > 0]
        return float(max(v) / min(v) - 1.0) if v else math.nan

    return {
        "s": cfg.idx.s, "p": cfg.idx.p, "r": cfg.idx.r,
        "eps_s": epsilon_s(cfg.idx),
        "T0": cfg.T0,
        "n_list": list(ns),
        "flagged": rep.flagged,
        "delta0": {str(n): d0[n] for n in ns},
        "delta0_log2_slope": log2_slope(ns, [d0[n] for n in ns]),
        "data_norm_max": max(rep.cells[n].u0_norm + rep.cells[n].v0_norm for n in ns),
        "lemma_u_sup": {str(n): lu.sup[n] for n in ns},
        "lemma_u_log2_slope": lu.slope,
        "lemma_u_plateau": lu.plateau,
        "lemma_v_fit": {str(n): {"a": a, "b": b, "max_residual": res}
                        for n, (a, b, res) in lv.fits.items()},
        "separation_c": {str(n): v for n, v in c_ratio.items()},
        "separation_c_min": min(c_ratio.values()) if c_ratio else math.nan,
        "separation_c_spread": spread(c_ratio),
        "growth_c": {str(n): v for n, v in c_growth.items()},
        "growth_c_spread": spread(c_growth),
        "rl_value": {str(n): float(rep.column("rl_value", n)[0]) for n in ns},
    }


def run_separation(cfg: ExperimentConfig, workers: int = 1) -> SeparationReport:
    """Full paired experiment; identical to :func:`run_cells`."""
    return run_cells(cfg, workers)


# -- report I/O ---------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def emit_report(rep: SeparationReport, path) -> Path:
    """Write the CSV and ``<stem>.summary.json`` next to it; returns the CSV path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in sorted(rep.rows, key=lambda r: (r.n, r.t)):
            w.writerow([_fmt(v) for v in r.values()])
    summary_path = path.with_name(path.stem + ".summary.json")
    summary_path.write_text(json.dumps(rep.summary, indent=2, sort_keys=True) + "\n")
    return path


def parse_report(path) -> list:
    """Read rows written by :func:`emit_report`; rejects a wrong header."""
    with Path(path).open(newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        rows = []
        for rec in rd:
            if not rec:
                continue
            kw = {c: (int(v) if c in INT_COLUMNS else float(v)) for c, v in zip(CSV_COLUMNS, rec)}
            rows.append(Row(**kw))
    return rows


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
