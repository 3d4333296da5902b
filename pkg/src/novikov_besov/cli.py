"""Command line entry point: ``novikov-lab <subcommand> ...``.

Exit status is 0 on success, 2 when any experiment row is flagged (solver
blow-up), and 1 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .dynamics import BlowUpError, evolve
from .harness import (
    ConfigError,
    ExperimentConfig,
    check_lemma_u,
    check_lemma_v,
    check_rl_limit,
    emit_report,
    load_config,
    run_separation,
)
from .littlewood_paley import BesovIndex, besov_norm, block_profile, build_partition
from .sequences import SequenceParams, epsilon_s, f_seq, g_seq, grid_for
from .spectral import Field, GridSpec

EXIT_OK, EXIT_CONFIG, EXIT_FLAGGED = 0, 1, 2


def write_field_csv(u: Field, path) -> None:
    """Two columns ``x,u`` with repr-exact floats."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for x, v in zip(u.grid.x, u.samples):
            w.writerow([repr(float(x)), repr(float(v))])


def read_field_csv(path) -> Field:
    """Inverse of :func:`write_field_csv`; the grid is inferred from ``x``."""
    with Path(path).open(newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if [h.strip() for h in header[:2]] != ["x", "u"]:
            raise ConfigError(f"{path}: expected header 'x,u', got {header}")
        data = np.array([[float(a), float(b)] for a, b, *_ in rd if a], dtype=float)
    N = data.shape[0]
    dx = data[1, 0] - data[0, 0]
    return Field(GridSpec(N * dx, N), data[:, 1])


def _config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return ExperimentConfig()


def cmd_partition_check(args) -> int:
    P = build_partition()
    rng = np.random.default_rng(args.seed)
    xi = rng.uniform(0.0, args.xi_max, args.samples)
    total = P.chi(xi) + sum(P.phi(np.ldexp(xi, -j)) for j in range(args.terms + 1))
    err = float(np.max(np.abs(total - 1.0)))
    print(f"max |chi + sum phi - 1| over {args.samples} points: {err:.3e}")
    print(f"chi(0) = {float(P.chi(0.0))}, chi(2) = {float(P.chi(2.0))}, "
          f"phi(17/12) = {float(P.phi(17 / 12))}")
    return EXIT_OK if err < 1e-10 else EXIT_FLAGGED


def cmd_besov(args) -> int:
    u = read_field_csv(args.input)
    idx = BesovIndex(args.s, args.p, args.r)
    print(f"B^{idx.s}_{{{idx.p},{idx.r}}} norm: {besov_norm(u, idx)!r}")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["j", "norm"])
    for j, nrm in block_profile(u, p=idx.p):
        w.writerow([j, repr(nrm)])
    return EXIT_OK


def cmd_sequence(args) -> int:
    idx = BesovIndex(args.s, args.p, args.r)
    sp = SequenceParams(args.n, idx, grid_for(args.n))
    f, g = f_seq(sp), g_seq(sp)
    fields = {"f": f, "g": g, "v0": f + g}
    out = {
        "n": args.n, "N": sp.grid.N, "L": sp.grid.L, "eps_s": epsilon_s(idx),
        "besov_f": besov_norm(f, idx), "besov_g": besov_norm(g, idx),
        "besov_v0": besov_norm(fields["v0"], idx),
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    if args.emit_field:
        write_field_csv(fields[args.which], args.emit_field)
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _config(args)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for n in cfg.n_list:
        sp = SequenceParams(n, cfg.idx, cfg.grid(n))
        f = f_seq(sp)
        for name, u0 in (("u", f), ("v", f + g_seq(sp))):
            try:
                traj = evolve(u0, cfg.solver())
            except BlowUpError as exc:
                logging.error("n=%d %s: %s", n, name, exc)
                traj, status = exc.trajectory, EXIT_FLAGGED
            stem = cfg.out_dir / f"traj_{name}_n{n}"
            traj.to_npz(stem.with_suffix(".npz"))
            if args.csv:
                traj.to_csv(stem.with_suffix(".csv"))
            print(f"wrote {stem}.npz ({len(traj)} snapshots, N={traj.grid.N})")
    return status


def cmd_separation(args) -> int:
    cfg = _config(args)
    rep = run_separation(cfg, workers=args.workers)
    path = emit_report(rep, cfg.out_dir / "separation.csv")
    print(f"wrote {path}")
    print(json.dumps(rep.summary, indent=2, sort_keys=True))
    return EXIT_FLAGGED if rep.flagged else EXIT_OK


def cmd_lemma_u(args) -> int:
    cfg = _config(args)
    res = check_lemma_u(cfg)
    print(f"eps_s = {res.eps_s}")
    for n, v in res.sup.items():
        tag = "  (roundoff plateau)" if n in res.plateau else ""
        print(f"n={n}  sup_t ||u(t)-u0||_B = {v:.6e}{tag}")
    print(f"log2 slope = {res.slope:.4f}  (bound: <= {-res.eps_s:.4f})")
    return EXIT_OK


def cmd_lemma_v(args) -> int:
    cfg = _config(args)
    res = check_lemma_v(cfg)
    for n, (a, b, resid) in res.fits.items():
        print(f"n={n}  a={a:.6e}  b={b:.6e}  max residual/endpoint={res.residual_fraction(n):.4f}")
    return EXIT_OK


def cmd_rl_limit(args) -> int:
    cfg = _config(args)
    res = check_rl_limit(cfg)
    print(f"limit = {res.limit:.10e}")
    for n, v in res.values.items():
        print(f"n={n}  value={v:.10e}  rel.err={res.rel_err[n]:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="novikov-lab",
        description="Novikov separation experiments and Besov-norm diagnostics.",
        epilog="exit status: 0 ok, 1 config/input error, 2 flagged (solver blow-up)",
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("partition-check", help="check the dyadic partition of unity")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--xi-max", type=float, default=1e5)
    sp.add_argument("--terms", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_partition_check)

    sp = sub.add_parser("besov", help="Besov norm and block profile of a field CSV (x,u)")
    sp.add_argument("input")
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--r", type=float, default=2.0)
    sp.set_defaults(func=cmd_besov)

    sp = sub.add_parser("sequence", help="build f_n, g_n and report their norms")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--r", type=float, default=2.0)
    sp.add_argument("--emit-field", metavar="PATH")
    sp.add_argument("--which", choices=("f", "g", "v0"), default="f")
    sp.set_defaults(func=cmd_sequence)

    sp = sub.add_parser("evolve", help="evolve u0^n and v0^n, write trajectories")
    sp.add_argument("--config")
    sp.add_argument("--csv", action="store_true", help="also write CSV trajectories")
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("separation", help="full separation experiment -> CSV report")
    sp.add_argument("--config")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_separation)

    for name, fn, hlp in (
        ("lemma-u", cmd_lemma_u, "sup_t ||u(t) - u0|| per n and its decay slope"),
        ("lemma-v", cmd_lemma_v, "a + b t^2 fits of the drift remainder w_n(t)"),
        ("rl-limit", cmd_rl_limit, "2^{ns} ||g^2 d_x f|| against its oscillatory limit"),
    ):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config")
        sp.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
