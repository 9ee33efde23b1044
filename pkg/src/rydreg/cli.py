"""Command-line entry point ``rydreg``.

Exit codes: 0 success, 2 a scenario's checks failed (report still written),
3 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .analysis import analyze
from .basis import ConfigurationError
from .config import RydregConfig, load_config, threads
from .kick import unitarity_defect
from .output import META_PREFIX, _json, fmt, read_dataset, write_csv, write_dataset
from .register import PulseSequence, run_sequence
from .scenarios import RUNNERS, SCENARIOS, Workspace

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG = 0, 2, 3


def _load(args) -> RydregConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigurationError("--seed must be non-negative")
        cfg.seed = args.seed
    return cfg


def cmd_basis(args) -> int:
    cfg = _load(args)
    b = cfg.build_basis()
    rows = [(lv.n, lv.l, lv.n_eff, lv.energy, lv.kepler_ps) for lv in b.levels]
    write_csv(args.out, ["n", "l", "n_eff", "energy_au", "kepler_ps"], rows,
              cfg.meta(command="basis", levels=len(b)))
    print(f"{len(b)} levels -> {args.out}")
    return EXIT_OK


def cmd_kick(args) -> int:
    cfg = _load(args)
    if args.cache is not None:
        cfg.kick.cache_dir = args.cache
    ws = Workspace(cfg)
    Q = cfg.kick.q1 if args.q is None else args.q
    if Q < 0:
        raise ConfigurationError("--q must be non-negative")
    K = ws.kick(Q)
    b = ws.basis
    idx = {"all": range(len(b)), "interior": b.interior, "register": b.register}[args.subset]
    idx = list(idx)
    M = K.matrix
    rows = ((b.labels[i], b.labels[j], abs(M[i, j]), float(np.angle(M[i, j]))) for i in idx for j in idx)
    defect = unitarity_defect(K, b.interior)
    write_csv(args.out, ["row", "col", "abs", "arg_rad"], rows,
              cfg.meta(command="kick", Q=Q, subset=args.subset, l_max=K.l_max,
                       residual=K.residual, interior_defect=defect, basis_key=K.basis_key))
    print(f"Q={Q:g}: L_max={K.l_max}, interior unitarity defect {defect:.2e} -> {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    ws = Workspace(cfg)
    t1 = args.t1
    t2 = args.t2
    seq = PulseSequence(ws.encode(), t1=t1, t2=t2, q1=cfg.kick.q1, q2=cfg.kick.q2, t_meas=args.t_meas)
    kicks = [ws.kick(cfg.kick.q1) if t1 is not None else None,
             ws.kick(cfg.kick.q2) if t2 is not None else None]
    psi = run_sequence(seq, ws.basis, kicks)
    meta = cfg.meta(command="run", sequence=seq.describe(), t_meas=psi.t, norm=psi.norm)
    c = psi.amplitudes
    rows = [(lv.n, lv.l, c[i].real, c[i].imag, abs(c[i]) ** 2) for i, lv in enumerate(ws.basis.levels)]
    write_csv(args.out, ["n", "l", "re", "im", "population"], rows, meta)
    print(f"norm {psi.norm:.8f} at t={psi.t:g} ps -> {args.out}")
    if args.dataset:
        ds = ws.scan(seq, kicks, cfg.seed, data=psi)
        write_dataset(args.dataset, ds, cfg.measurement.tau_grid(), cfg.meta(command="run", seed=cfg.seed))
        print(f"tau scan ({len(ds.tau)} delays) -> {args.dataset}")
    return EXIT_OK


def write_report(path: str | Path, rep, meta: dict) -> Path:
    """Pair rows, then state rows, then ``TOTAL,<bits>``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(META_PREFIX + _json(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "k", "omega_au", "amplitude", "phi_rad", "dphi_rad"])
        for f in rep.fits:
            w.writerow([f.j, f.k, fmt(f.omega), fmt(f.amplitude), fmt(f.phase), fmt(f.dphi)])
        w.writerow(["k", "dphi_k_rad", "bits"])
        for k in rep.states:
            w.writerow([k, fmt(rep.dphi[k]), fmt(rep.bits[k])])
        w.writerow(["TOTAL", fmt(rep.total)])
    return path


def cmd_analyze(args) -> int:
    ds = read_dataset(args.data)
    rep = analyze(ds, bootstrap=args.bootstrap, seed=args.seed or 0, window=args.window,
                  reference=args.reference)
    meta = {"command": "analyze", "source": str(args.data), "bootstrap": args.bootstrap,
            "seed": args.seed or 0}
    meta["dataset_config_hash"] = ds.meta.get("config_hash")
    write_report(args.out, rep, meta)
    for k in rep.states:
        print(f"{k}: dphi {math.degrees(rep.dphi[k]):.2f} deg, {rep.bits[k]:.2f} bits")
    print(f"TOTAL {rep.total:.2f} bits -> {args.out}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    cfg = _load(args)
    out = Path(args.out) / args.name if args.nest else Path(args.out)
    res = RUNNERS[args.name](cfg, out)
    sys.stdout.write(res.summary())
    return EXIT_OK if res.ok else EXIT_CHECKS


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; exit 2 is reserved for failed checks
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rydreg", description="Rydberg p-state register simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--config", help="TOML config (default: built-in reference defaults)")
        if seed:
            sp.add_argument("--seed", type=int, help="override the config seed")

    sp = sub.add_parser("basis", help="dump the level table")
    common(sp, seed=False)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_basis)

    sp = sub.add_parser("kick", help="dump |K| and arg K")
    common(sp, seed=False)
    sp.add_argument("--q", type=float, help="impulse in a.u. (default kick.q1)")
    sp.add_argument("--subset", choices=["interior", "register", "all"], default="interior")
    sp.add_argument("--cache", help="directory for the binary kick-matrix cache")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_kick)

    sp = sub.add_parser("run", help="final amplitudes of one pulse sequence")
    common(sp)
    sp.add_argument("--t1", type=float)
    sp.add_argument("--t2", type=float)
    sp.add_argument("--t-meas", type=float, dest="t_meas")
    sp.add_argument("--dataset", help="also write the tau-scan dataset CSV here")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("analyze", help="correlation fits and information from a dataset CSV")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--bootstrap", type=int, default=100)
    sp.add_argument("--window", type=float, help="correlation window, ps")
    sp.add_argument("--reference", help="register state used as phase reference")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("scenario", help="reproduce one experiment")
    sp.add_argument("name", choices=SCENARIOS)
    common(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--nest", action="store_true", help="write into <out>/<name>")
    sp.set_defaults(func=cmd_scenario)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with threadpool_limits(limits=threads()):
            return args.func(args)
    except ValueError as exc:  # ConfigurationError and invalid sequence parameters
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
