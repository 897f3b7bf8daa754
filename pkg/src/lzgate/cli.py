"""``lzgate`` command-line harness.

Usage::

    lzgate <mode> [--config file.json] [--set key=value ...] [--out path]
                  [--format json|csv|table] [--workers n] [--tol x]

Modes are ``simulate``, ``calibrate``, ``lz-verify``, ``design-check``,
``measure-phase`` and ``sweep``.  Exit status is 0 on success, 2 for
configuration or argument errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import lzgate
from lzgate.config import MODES, RunConfig, build_config, parse_set
from lzgate.errors import ConfigError, InvalidArgument, LzGateError, NumericalFailure
from lzgate.runners import MODE_COLUMNS, run_mode
from lzgate.sweep import default_workers, format_cell, sweep, write_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
REPORT_ID = "lzgate/report/v1"


def jsonable(obj: Any) -> Any:
    """Replace non-finite floats (not representable in JSON) by strings or null."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def envelope(cfg: RunConfig, result: dict) -> dict:
    return {
        "schema": REPORT_ID,
        "mode": cfg.mode,
        "version": lzgate.__version__,
        "config": jsonable(cfg.data),
        "result": jsonable(result),
    }


def _table(columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    def cell(v):
        return f"{v:.6g}" if isinstance(v, float) else format_cell(v)

    body = [list(columns)] + [[cell(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in body) for i in range(len(columns))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in body)


def render(cfg: RunConfig, outcome) -> str:
    """Serialise a mode result (or a sweep result) in the configured format."""
    fmt = cfg.output_format
    if cfg.mode == "sweep":
        columns, rows = outcome.columns, outcome.rows
        detail = outcome.to_dict()
    else:
        columns = MODE_COLUMNS[cfg.mode]
        rows = [[r[c] for c in columns] for r in outcome.rows]
        detail = outcome.detail
    if fmt == "json":
        return json.dumps(envelope(cfg, detail), indent=2) + "\n"
    if fmt == "csv":
        return write_csv(columns, rows)
    if cfg.mode == "design-check":
        return outcome.detail["table"] + "\n"
    return _table(columns, rows) + "\n"


def execute(cfg: RunConfig, workers: int | None = None):
    if cfg.mode == "sweep":
        return sweep(cfg, workers)
    return run_mode(cfg)


def run(cfg: RunConfig, workers: int | None = None, stream=None) -> int:
    """Run a validated configuration and write its output; returns the exit code."""
    stream = sys.stdout if stream is None else stream
    try:
        outcome = execute(cfg, workers)
        text = render(cfg, outcome)
    except (ConfigError, InvalidArgument) as exc:
        return _fail(exc, EXIT_CONFIG)
    except NumericalFailure as exc:
        return _fail(exc, EXIT_NUMERICAL)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text, encoding="utf-8", newline="")
    else:
        stream.write(text)
    if cfg.mode == "sweep" and outcome.error_count():
        print(f"lzgate: warning: {outcome.error_count()} of {len(outcome.rows)} sweep points failed", file=sys.stderr)
    return EXIT_OK


def _fail(exc: BaseException, code: int) -> int:
    print(f"lzgate: error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def _number_or_list(values: list[float]):
    return values[0] if len(values) == 1 else values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lzgate", description="Adiabatic level-crossing CNOT simulation and design checks.")
    parser.add_argument("--version", action="version", version=f"lzgate {lzgate.__version__}")
    sub = parser.add_subparsers(dest="mode", required=True, metavar="mode")
    helps = {
        "simulate": "propagate the CNOT schedule and report gate errors",
        "calibrate": "tune the phase knobs until the gate is a CNOT",
        "lz-verify": "compare the numerical crossing probability with the closed form",
        "design-check": "evaluate device design rules and derived energies",
        "measure-phase": "check the quarter-rotation phase readout",
        "sweep": "repeat one mode over a parameter grid (CSV by default)",
    }
    for mode in MODES:
        p = sub.add_parser(mode, help=helps[mode])
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a dotted config path (repeatable)")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("json", "csv", "table"), help="output format")
        p.add_argument("--workers", type=int, help="worker processes for sweeps (default: $LZGATE_WORKERS or 1)")
        p.add_argument("--tol", type=float, help="propagator convergence tolerance")
        p.add_argument("--seed", type=int, help="seed of the counter-based random generator")
        if mode == "lz-verify":
            p.add_argument("--tau", type=float, nargs="+", help="sweep time constant(s)")
            p.add_argument("--exponent", type=float, nargs="+", help="pi tau omega^2 / u value(s) instead of --tau")
            p.add_argument("--omega", type=float, nargs="+", help="tunneling amplitude(s)")
            p.add_argument("--u", type=float, nargs="+", help="sweep amplitude(s)")
            p.add_argument("--eps-offset", type=float, help="constant bias offset of the sweep")
        if mode == "measure-phase":
            p.add_argument("--p1", type=float, help="occupation of |0>")
            p.add_argument("--phi", type=float, help="relative phase")
            p.add_argument("--qubit", type=int, choices=(0, 1), help="qubit to read out")
            p.add_argument("--cases", type=int, help="number of random cross-check cases")
        if mode == "design-check":
            p.add_argument("--e-ref", type=float, help="energy unit in kelvin for the gate-parameter mapping")
        if mode == "sweep":
            p.add_argument("--sweep-mode", choices=[m for m in MODES if m != "sweep"], help="mode evaluated at each point")
            p.add_argument("--param", help="dotted config path to sweep")
            g = p.add_mutually_exclusive_group()
            g.add_argument("--values", help="JSON list of values for --param")
            g.add_argument("--grid", type=float, nargs=3, metavar=("START", "STOP", "COUNT"), help="evenly spaced values for --param")
    return parser


def overrides_from_args(args: argparse.Namespace) -> list[tuple[str, Any]]:
    out = [parse_set(expr) for expr in args.set]
    direct = {"tol": args.tol, "seed": args.seed, "output.path": args.out, "output.format": args.format, "workers": args.workers}
    if args.mode == "lz-verify":
        for flag, path in (("tau", "lz.tau"), ("exponent", "lz.exponent"), ("omega", "lz.omega"), ("u", "lz.u")):
            v = getattr(args, flag)
            direct[path] = None if v is None else _number_or_list(v)
        direct["lz.eps_offset"] = args.eps_offset
    if args.mode == "measure-phase":
        direct.update({"phase.p1": args.p1, "phase.phi": args.phi, "phase.qubit": args.qubit, "phase.random_cases": args.cases})
    if args.mode == "design-check":
        direct["e_ref"] = args.e_ref
    if args.mode == "sweep":
        direct["sweep.mode"] = args.sweep_mode
        direct["sweep.parameter"] = args.param
        if args.values is not None:
            try:
                values = json.loads(args.values)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--values must be a JSON list: {exc.msg}") from exc
            direct["sweep.values"] = values
        if args.grid is not None:
            start, stop, count = args.grid
            if count != int(count):
                raise ConfigError(f"--grid COUNT must be an integer, got {count!r}")
            direct["sweep.grid"] = {"start": start, "stop": stop, "count": int(count)}
    out.extend((k, v) for k, v in direct.items() if v is not None)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args.mode, args.config, overrides_from_args(args))
        # precedence: --workers, then the config file, then $LZGATE_WORKERS
        workers = cfg.data["workers"] if "workers" in cfg.data else default_workers()
    except LzGateError as exc:
        return _fail(exc, EXIT_CONFIG)
    return run(cfg, workers)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
