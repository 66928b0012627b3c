"""Command line front end: ``solve``, ``sweep`` and ``verify``.

All three read the same flat TOML config (``--config``) with ``--set
key=value`` overrides.  Errors are reported on stderr as a one-line JSON
object and the process exits nonzero (2 for bad configuration, 1 for
anything else, 3 when ``verify`` finds a mismatch).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import oracle
from .channel import DegenerateGeometryError
from .optimizers import Protocol, solve
from .sweeps import ConfigError, SweepResult, build_instance, emit, format_number, load_config, points, run_sweep

EXIT_CONFIG = 2
EXIT_RUNTIME = 1
EXIT_MISMATCH = 3

VERIFY_HEADER = ("x1", "x2", "protocol", "method", "solver_rate", "oracle_rate", "rel_gap", "ok")


def _common(p):
    p.add_argument("--config", metavar="PATH", help="TOML experiment config")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (value in TOML syntax); repeatable")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swiptrelay", description="Rate optimization for SWIPT rateless-coded relaying.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimize a single instance")
    _common(p)

    p = sub.add_parser("sweep", help="run an experiment sweep")
    _common(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (output is identical for any value)")

    p = sub.add_parser("verify", help="cross-check the solvers against brute-force oracles")
    _common(p)
    p.add_argument("--resolution", type=float, default=1e-3, help="oracle grid step")
    p.add_argument("--refine", action="store_true", help="polish the oracle optimum locally")
    p.add_argument("--tol", type=float, default=1e-3, help="allowed relative shortfall of the solver")
    return parser


def _load(args):
    overrides = list(args.overrides)
    cfg_keys = {o.partition("=")[0].strip() for o in overrides}
    if args.command == "solve" and args.config is None and "experiment" not in cfg_keys:
        overrides.insert(0, 'experiment="RateVsPower"')
    return load_config(args.config, overrides)


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def cmd_solve(args) -> int:
    cfg = _load(args)
    if len(points(cfg)) != 1:
        raise ConfigError(f"solve needs a single-point config, this one has {len(points(cfg))} points")
    text = emit(run_sweep(cfg), args.format, args.out)
    if args.out is None:
        _write(text, None)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    result: SweepResult = run_sweep(cfg, jobs=args.jobs)
    text = emit(result, args.format, args.out)
    if args.out is None:
        _write(text, None)
    return 0


def verify_rows(cfg, resolution=1e-3, refine=False, tol=1e-3):
    """Solver vs oracle for every point, protocol and method of ``cfg``."""
    grid = oracle.GridSpec(resolution, refine)
    rows = []
    for pt in points(cfg):
        try:
            channel, sys_ = build_instance(cfg, pt)
        except DegenerateGeometryError:
            continue
        for proto in cfg.protocols:
            for method in cfg.methods:
                got = solve(proto, method, channel, sys_).rate
                ref = oracle.grid_max(proto, method, channel, sys_, grid).rate if proto is not Protocol.DIRECT else got
                gap = (ref - got) / max(abs(ref), 1e-300) if ref else 0.0
                rows.append({"x1": pt[0], "x2": pt[1], "protocol": proto.value, "method": method.value,
                             "solver_rate": got, "oracle_rate": ref, "rel_gap": gap, "ok": gap <= tol})
    return rows


def cmd_verify(args) -> int:
    cfg = _load(args)
    rows = verify_rows(cfg, args.resolution, args.refine, args.tol)
    if args.format == "json":
        text = json.dumps({"config": cfg.to_dict(), "tolerance": args.tol, "resolution": args.resolution, "rows": rows},
                          indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(VERIFY_HEADER)
        for r in rows:
            w.writerow([format_number(r[k]) if k != "ok" else str(r[k]).lower() for k in VERIFY_HEADER])
        text = buf.getvalue()
    _write(text, args.out)
    failed = [r for r in rows if not r["ok"]]
    if failed:
        _error("VerificationMismatch", f"{len(failed)} of {len(rows)} checks exceed tolerance {args.tol}")
        return EXIT_MISMATCH
    return 0


def _error(kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        _error("ConfigError", str(exc))
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report anything as machine-readable JSON
        _error(type(exc).__name__, str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
