"""``lsc`` command line: compile, verify, estimate and render.

Exit codes:

    0  success
    1  unreadable input: circuit or placement syntax, bad JSON, bad usage
    2  a circuit or schedule that parses but breaks a structural rule
    3  a placement that cannot realise the program
    4  verification FAIL
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .canonicalize import RewriteLimitExceeded
from .circuit import CircuitSyntaxError, parse_circuit
from .icm import UnsupportedFragment
from .pipeline import CircuitInvalid, ScheduleInvalid, compile_circuit, verify
from .render import FORMATS, UnknownFormat, render
from .resources import BASELINES, compare_table, estimate
from .schedule import (
    PlacementError,
    PlacementInfeasible,
    schedule_from_json,
    schedule_json_text,
    validate_schedule,
)

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_FAIL = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_PARSE, message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc.strerror}") from exc


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _schedule_json(s) -> str:
    return schedule_json_text(s)


def _compile(args):
    try:
        circuit = parse_circuit(_read(args.input))
    except CircuitSyntaxError as exc:
        raise CliError(EXIT_PARSE, f"parse error: {exc}") from exc
    placement = _read(args.placement) if args.placement else None
    try:
        return compile_circuit(circuit, placement)
    except PlacementInfeasible as exc:
        raise CliError(EXIT_INFEASIBLE, f"placement infeasible: {exc}") from exc
    except PlacementError as exc:
        raise CliError(EXIT_PARSE, f"placement error: {exc}") from exc
    except (CircuitInvalid, UnsupportedFragment, ScheduleInvalid, RewriteLimitExceeded) as exc:
        raise CliError(EXIT_INVALID, f"invalid: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_INVALID, f"invalid: {exc}") from exc


def _schedule(args):
    """The schedule named by the input: a JSON schedule file or a circuit to compile."""
    text = _read(args.input)
    if text.lstrip().startswith("{"):
        if args.placement:
            raise CliError(EXIT_PARSE, "--placement applies to circuit inputs only")
        try:
            s = schedule_from_json(json.loads(text))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CliError(EXIT_PARSE, f"bad schedule JSON: {exc}") from exc
        problems = validate_schedule(s)
        if problems:
            raise CliError(EXIT_INVALID, "invalid schedule: " + "; ".join(problems))
        return s
    return _compile(args).schedule


def cmd_compile(args) -> int:
    _write(_schedule_json(_compile(args).schedule), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    compiled = _compile(args)
    s = compiled.schedule
    if args.schedule:
        try:
            s = schedule_from_json(json.loads(_read(args.schedule)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CliError(EXIT_PARSE, f"bad schedule JSON: {exc}") from exc
        problems = validate_schedule(s)
        if problems:
            print("FAIL: schedule is invalid", file=sys.stderr)
            for p in problems:
                print(f"  {p}", file=sys.stderr)
            return EXIT_FAIL
    result = verify(compiled.circuit, s, seed=args.seed)
    lines = ["schedule state (canonical form):"]
    if result.actual is not None:
        lines += [f"  {row}" for row in result.actual.to_strings()]
    else:
        lines.append("  (replay failed)")
    if not result.passed:
        lines.append("expected (canonical form):")
        lines += [f"  {row}" for row in result.expected.to_strings()]
        lines += [f"  {f}" for f in result.failures]
    lines.append(f"{'PASS' if result.passed else 'FAIL'} ({result.branches_checked} merge-outcome branches)")
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_estimate(args) -> int:
    s = _schedule(args)
    est = estimate(s)
    report = est.to_json(args.distance)
    lines = [
        f"patches P = {est.patches} (grid {est.grid[0]}x{est.grid[1]}, footprint {est.footprint})",
        f"timesteps T = {est.timesteps} ({est.cycles} cycles)",
        f"volume = 2*P*T d^3 = {est.volume_coefficient}d^3",
    ]
    if args.distance is not None:
        at = report["at_distance"]
        lines.append(
            f"at d={args.distance}: {at['cycles']} cycles, {at['phys_qubits']} physical qubits, volume {at['volume']}"
        )
    if args.baseline:
        try:
            cmp = compare_table(est, args.baseline)
        except KeyError as exc:
            raise CliError(EXIT_PARSE, str(exc.args[0])) from exc
        report["comparison"] = cmp.to_json()
        lines.append(str(cmp))
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_render(args) -> int:
    s = _schedule(args)
    try:
        _write(render(s, args.format), args.out)
    except UnknownFormat as exc:
        raise CliError(EXIT_PARSE, str(exc)) from exc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lsc", description="Lattice-surgery compiler for inverted-ICM circuits.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, circuit_only=False):
        what = "circuit file" if circuit_only else "circuit file or schedule JSON"
        p.add_argument("input", help=what)
        mode = p.add_mutually_exclusive_group()
        # no default: argparse only flags the conflict for non-default values
        mode.add_argument("--layout", choices=["naive"], help="built-in layout (the default)")
        mode.add_argument("--placement", metavar="FILE", help="hand-made placement file")
        p.add_argument("--seed", type=int, default=0, help="seed for sampled checks (default 0)")
        p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")

    p = sub.add_parser("compile", help="write the schedule as JSON")
    common(p, circuit_only=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("verify", help="replay the schedule and compare with the circuit")
    common(p, circuit_only=True)
    p.add_argument("--schedule", metavar="FILE", help="check this schedule JSON instead of compiling")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("estimate", help="space-time cost of the schedule")
    common(p)
    p.add_argument("--distance", type=int, help="also evaluate at this code distance")
    p.add_argument("--baseline", help=f"compare with a braiding baseline: {', '.join(BASELINES)}")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("render", help="draw one frame per timestep")
    common(p)
    p.add_argument("--format", default="ascii", help=f"one of {', '.join(FORMATS)}")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "distance", None) is not None and args.distance < 1:
            raise CliError(EXIT_PARSE, "--distance must be positive")
        return args.func(args)
    except CliError as exc:
        print(f"lsc: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
