"""``tacgap`` command line: F2 values, tacnode gaps, sweeps and the check suite.

Exit codes: 0 success, 2 parameter error, 3 accuracy error, 4 failed checks.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .checks import run_checks
from .errors import AccuracyError, ParameterError
from .kernels import TacnodeParams
from .probes import (
    SweepConfig,
    f2,
    hastings_p,
    sweep,
    tacnode_gap_block,
    tacnode_gap_direct,
)
from .quad import IntervalUnion

__all__ = ["RunMetadata", "format_value", "build_parser", "run", "main"]

EXIT_OK, EXIT_PARAM, EXIT_ACCURACY, EXIT_CHECKS = 0, 2, 3, 4


@dataclass
class RunMetadata:
    command: str
    params: dict
    nodes: dict
    version: str
    wall_seconds: float


def format_value(v) -> str:
    """17 significant digits for floats, lowercase booleans."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _grid(lo: float, hi: float, steps: int) -> tuple[float, ...]:
    if steps < 1:
        raise ParameterError("--steps must be positive")
    if steps == 1:
        if lo != hi:
            raise ParameterError("--steps 1 needs min == max")
        return (float(lo),)
    if not lo < hi:
        raise ParameterError("grid minimum must be below its maximum")
    return tuple(float(v) for v in np.linspace(lo, hi, steps))


# --- subcommands -------------------------------------------------------------


def _cmd_f2(args):
    r = f2(args.s, args.nodes)
    return ("s", "value", "err_estimate"), [(float(args.s), r.value, r.err_estimate)]


def _cmd_gap(args):
    params = TacnodeParams(args.sigma, args.tau)
    domain = IntervalUnion.parse(args.intervals)
    if args.route == "both":
        d = tacnode_gap_direct(params, domain, args.nodes, args.aux_nodes)
        b = tacnode_gap_block(params, domain, args.nodes, args.aux_nodes)
        rel = abs(d.value - b.value) / max(abs(d.value), 1e-300)
        header = ("direct", "direct_err", "block", "block_err", "rel_diff")
        return header, [(d.value, d.err_estimate, b.value, b.err_estimate, rel)]
    route = tacnode_gap_direct if args.route == "direct" else tacnode_gap_block
    r = route(params, domain, args.nodes, args.aux_nodes)
    return ("route", "value", "err_estimate"), [(args.route, r.value, r.err_estimate)]


def _run_sweep(cfg: SweepConfig, jobs: int):
    table = sweep(cfg, workers=jobs)
    return table.columns, table.records()


def _cmd_sweep_sigma(args):
    cfg = SweepConfig(
        "sigma", _grid(args.sigma_min, args.sigma_max, args.steps),
        tau=args.tau, s=args.b, t=args.a, n_dom=args.nodes, n_aux=args.aux_nodes,
    )
    return _run_sweep(cfg, args.jobs)


def _cmd_sweep_tau(args):
    cfg = SweepConfig(
        "tau", _grid(args.tau_min, args.tau_max, args.steps),
        sigma=args.sigma, s=args.b, t=args.a, n_dom=args.nodes, n_aux=args.aux_nodes,
    )
    return _run_sweep(cfg, args.jobs)


def _cmd_sweep_edge(args):
    offsets = IntervalUnion.parse(args.offsets)
    tau_grid = args.tau_min is not None or args.tau_max is not None
    sigma_grid = args.sigma_min is not None or args.sigma_max is not None
    if tau_grid == sigma_grid:
        raise ParameterError("sweep-edge sweeps exactly one of tau (--tau-min/--tau-max) or sigma")
    if tau_grid:
        if args.sigma is None or args.tau_min is None or args.tau_max is None:
            raise ParameterError("tau sweep needs --sigma, --tau-min and --tau-max")
        grid, fixed = _grid(args.tau_min, args.tau_max, args.steps), {"sigma": args.sigma}
    else:
        if args.tau is None or args.sigma_min is None or args.sigma_max is None:
            raise ParameterError("sigma sweep needs --tau, --sigma-min and --sigma-max")
        grid, fixed = _grid(args.sigma_min, args.sigma_max, args.steps), {"tau": args.tau}
    cfg = SweepConfig("edge", grid, offsets=offsets, n_dom=args.nodes, n_aux=args.aux_nodes, **fixed)
    return _run_sweep(cfg, args.jobs)


def _cmd_p2(args):
    methods = ("resolvent", "finite_diff") if args.method == "both" else (args.method,)
    rows = [(float(args.s), m, hastings_p(args.s, args.nodes, m)) for m in methods]
    return ("s", "method", "p"), rows


def _cmd_check(args):
    results = run_checks()
    rows = [(r.name, r.ok, r.value, r.threshold) for r in results]
    return ("check", "ok", "value", "threshold"), rows


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nodes", type=int, default=48, help="quadrature nodes per interval piece")
    common.add_argument("--aux-nodes", type=int, default=64, help="nodes on the auxiliary half line")
    common.add_argument("--out", help="CSV output path (default: standard output)")
    common.add_argument("--json-meta", help="write run metadata as JSON to this path")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for sweep rows")

    parser = argparse.ArgumentParser(prog="tacgap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tacgap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("f2", parents=[common], help="Tracy-Widom F2(s)")
    p.add_argument("--s", type=float, required=True)
    p.set_defaults(func=_cmd_f2)

    p = sub.add_parser("gap", parents=[common], help="tacnode gap probability on a union of intervals")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--intervals", required=True, help='e.g. "-3:-1,0:2"')
    p.add_argument("--route", choices=("direct", "block", "both"), default="direct")
    p.set_defaults(func=_cmd_gap)

    p = sub.add_parser("sweep-sigma", parents=[common], help="gap vs F2(b) F2(a) as sigma grows")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--a", type=float, default=-0.3)
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--sigma-min", type=float, required=True)
    p.add_argument("--sigma-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=5)
    p.set_defaults(func=_cmd_sweep_sigma)

    p = sub.add_parser("sweep-tau", parents=[common], help="gap vs F2(b) F2(a) as tau grows")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--a", type=float, default=-0.3)
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--tau-min", type=float, required=True)
    p.add_argument("--tau-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=5)
    p.set_defaults(func=_cmd_sweep_tau)

    p = sub.add_parser("sweep-edge", parents=[common], help="left-edge gap vs the Airy determinant")
    p.add_argument("--offsets", required=True, help='e.g. "-1:1"')
    p.add_argument("--sigma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--tau-min", type=float)
    p.add_argument("--tau-max", type=float)
    p.add_argument("--sigma-min", type=float)
    p.add_argument("--sigma-max", type=float)
    p.add_argument("--steps", type=int, default=3)
    p.set_defaults(func=_cmd_sweep_edge)

    p = sub.add_parser("p2", parents=[common], help="p(s) = d/ds ln F2(s)")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--method", choices=("resolvent", "finite_diff", "both"), default="resolvent")
    p.set_defaults(func=_cmd_p2)

    p = sub.add_parser("check", parents=[common], help="run the invariant suite")
    p.set_defaults(func=_cmd_check)
    return parser


_INTERVAL_FLAGS = ("--intervals", "--offsets")


def _attach_interval_values(argv: list[str]) -> list[str]:
    """Rewrite ``--intervals -2:2`` as ``--intervals=-2:2``.

    argparse would otherwise read a leading ``-`` in the value as an option.
    """
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _INTERVAL_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _metadata(argv: Sequence[str], args, wall: float) -> RunMetadata:
    skip = {"func", "command", "nodes", "aux_nodes", "out", "json_meta", "jobs"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return RunMetadata(
        command=" ".join(["tacgap", *argv]),
        params=params,
        nodes={"n_dom": args.nodes, "n_aux": args.aux_nodes},
        version=__version__,
        wall_seconds=wall,
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_attach_interval_values(argv))
    except SystemExit as exc:  # argparse already printed usage to stderr
        return EXIT_OK if exc.code == 0 else EXIT_PARAM
    if args.jobs < 1:
        print("tacgap: error: --jobs must be positive", file=sys.stderr)
        return EXIT_PARAM

    start = time.perf_counter()
    try:
        header, rows = args.func(args)
    except ParameterError as exc:
        print(f"tacgap: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except AccuracyError as exc:
        print(f"tacgap: accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    wall = time.perf_counter() - start

    text = _csv_text(header, rows)
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if args.json_meta:
            with open(args.json_meta, "w", encoding="utf-8") as fh:
                json.dump(asdict(_metadata(argv, args, wall)), fh, indent=2, sort_keys=True)
                fh.write("\n")
    except OSError as exc:
        print(f"tacgap: cannot write output: {exc}", file=sys.stderr)
        return EXIT_PARAM

    if args.command == "check" and not all(row[1] for row in rows):
        return EXIT_CHECKS
    return EXIT_OK


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    sys.exit(run())
