"""Command-line interface: ``sovsim run | verify | sweep | threshold``.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime abort,
3 no bracket (threshold only); ``verify`` also exits 1 when any verdict
fails.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import __version__
from .dynamics import NonFiniteError
from .io import (
    dumps_json,
    render_sweep_csv,
    svg_line_chart,
    write_manifest,
    write_trajectory,
)
from .model import ConfigError, ParamRanges, parse_config, state_from_dict
from .scenarios import scenario_path
from .sweeps import (
    NoBracketError,
    NonMonotoneError,
    SweepSpec,
    bisect_threshold,
    grid_sweep,
    run_trajectory,
)
from .verification import PROPERTY_IDS, PreconditionError, run_checks

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_NO_BRACKET = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _read_config(path: str) -> tuple[bytes, dict]:
    p = Path(path)
    if not p.exists():
        try:
            p = scenario_path(path)
        except FileNotFoundError:
            raise CliError(f"cannot read config '{path}': no such file") from None
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read config '{path}': {exc.strerror}") from None
    return data, parse_config(data.decode())


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory '{path}': {exc.strerror}") from None
    return out


def cmd_run(args, argv) -> int:
    raw, doc = _read_config(args.config)
    if args.steps < 0:
        raise CliError("--steps must be >= 0")
    state = state_from_dict(doc, seed=args.seed, lenient=args.lenient)
    frames = run_trajectory(state, args.steps)
    out = _out_dir(args.out)
    name = f"trajectory.{args.format}"
    write_trajectory(frames, args.format, out / name)
    outputs = [name]
    if args.plot:
        steps = [f.step for f in frames]
        svg = svg_line_chart(
            steps,
            {"P_irr": [f.p_irr for f in frames], "traceability bound": [f.traceability for f in frames],
             "concentration": [f.concentration for f in frames]},
            "step", "value", "trajectory",
        )
        (out / "trajectory.svg").write_text(svg)
        outputs.append("trajectory.svg")
    write_manifest(out, raw, state.seed, argv, outputs + ["manifest.json"], __version__)
    return EXIT_OK


def _scenario_kwargs(doc: dict, lenient: bool) -> dict:
    state = state_from_dict(doc, lenient=lenient)
    ranges = doc.get("generate", {}).get("ranges")
    kw = {"economy": state.economy, "boundaries": state.boundaries}
    if ranges is not None:
        kw["ranges"] = ParamRanges.from_mapping(ranges, lenient)
    return kw


def cmd_verify(args, argv) -> int:
    props = PROPERTY_IDS if args.props.lower() == "all" else tuple(p.strip().upper() for p in args.props.split(","))
    unknown = [p for p in props if p not in PROPERTY_IDS]
    if unknown:
        raise CliError(f"unknown property id(s): {', '.join(unknown)}")
    raw, scenario = None, {}
    if args.config:
        raw, doc = _read_config(args.config)
        scenario = _scenario_kwargs(doc, args.lenient)
    try:
        reports = run_checks(props, trials=args.trials, base_seed=args.seed, **scenario)
    except PreconditionError as exc:
        raise CliError(f"precondition not met: {exc}") from None
    out = _out_dir(args.out)
    (out / "report.json").write_text(dumps_json({"reports": [r.to_dict() for r in reports]}))
    write_manifest(out, raw, args.seed, argv, ["report.json", "manifest.json"], __version__)
    for r in reports:
        print(f"{r.property_id}: {r.verdict} ({r.passes}/{r.trials}, witness {r.witness:.6g})")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CONFIG


def parse_grid(text: str) -> tuple[float, float, int, bool]:
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
        raise CliError("--grid must be lo:hi:count[:log]")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise CliError("--grid must be lo:hi:count[:log]") from None
    if not lo < hi:
        raise CliError("lo < hi required")
    if count < 1:
        raise CliError("count must be >= 1")
    return lo, hi, count, len(parts) == 4


def cmd_sweep(args, argv) -> int:
    raw, doc = _read_config(args.config)
    lo, hi, count, log = parse_grid(args.grid)
    if args.runs < 1:
        raise CliError("--runs must be >= 1")
    state_from_dict(doc, lenient=args.lenient)
    spec = SweepSpec(args.param, lo=lo, hi=hi, count=count, log=log, runs_per_point=args.runs,
                     horizon=args.steps, base_seed=args.seed)
    rows = grid_sweep(spec, doc)
    out = _out_dir(args.out)
    (out / "sweep.csv").write_text(render_sweep_csv(rows))
    svg = svg_line_chart([r.param_value for r in rows], {"transfer rate": [r.transfer_rate for r in rows]},
                         args.param, "transfer rate", "sovereignty transfer rate")
    (out / "sweep.svg").write_text(svg)
    write_manifest(out, raw, args.seed, argv, ["sweep.csv", "sweep.svg", "manifest.json"], __version__)
    return EXIT_OK


def cmd_threshold(args, argv) -> int:
    raw, doc = _read_config(args.config)
    if not args.tol > 0:
        raise CliError("tol must be > 0")
    if not args.lo < args.hi:
        raise CliError("lo < hi required")
    if args.runs < 1:
        raise CliError("--runs must be >= 1")
    state_from_dict(doc, lenient=args.lenient)
    try:
        result = bisect_threshold(args.param, args.lo, args.hi, doc, runs_per_point=args.runs,
                                  target=args.target, tol=args.tol, horizon=args.steps, base_seed=args.seed)
    except NoBracketError as exc:
        raise CliError(str(exc), EXIT_NO_BRACKET) from None
    except NonMonotoneError as exc:
        raise CliError(f"{exc}; measurements: {exc.measurements}", EXIT_RUNTIME) from None
    out = _out_dir(args.out)
    (out / "threshold.json").write_text(dumps_json(result.to_dict()))
    write_manifest(out, raw, args.seed, argv, ["threshold.json", "manifest.json"], __version__)
    print(f"{result.critical_value:.9g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sovsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sovsim {__version__}")
    parser.add_argument("--lenient", action="store_true", help="unknown config keys warn instead of failing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one trajectory")
    p.add_argument("config", help="config file or shipped scenario name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out", default="out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--plot", action="store_true", help="also write trajectory.svg")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run proposition checks")
    p.add_argument("--props", default="all", help="comma list of P1..P5,T1 or 'all'")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="scenario supplying economy/boundaries for P5 and T1")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="grid sweep of one parameter")
    p.add_argument("config")
    p.add_argument("--param", required=True, help="dotted key, e.g. economy.friction_decay")
    p.add_argument("--grid", required=True, help="lo:hi:count[:log]")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("threshold", help="bisect the transfer-rate crossing")
    p.add_argument("config")
    p.add_argument("--param", required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--target", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_threshold)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args, ["sovsim", *argv])
    except CliError as exc:
        print(f"sovsim: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"sovsim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteError, OverflowError) as exc:
        print(f"sovsim: run aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
