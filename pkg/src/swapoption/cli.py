"""Command-line front end. Exit codes: 0 success, 1 property violation or mismatch, 2 configuration error."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import (BUILTIN_SCENARIOS, GOLDEN_SCENARIO, ConfigError, compare_traces, emit_trace, golden_path,
                      load_scenario, read_trace, run_reports, run_scenario, trace_text)

OK, VIOLATION, CONFIG_ERROR = 0, 1, 2


def _override(cfg, args):
    policy = {"kind": args.policy, "seed": args.seed if args.seed is not None else cfg.seed} if args.policy else None
    return cfg.with_overrides(seed=args.seed, horizon=args.horizon, ca_timeout=args.ca_timeout, policy=policy)


def _scenario_name(args) -> str:
    name = args.scenario or args.name
    if not name:
        raise ConfigError("a scenario name or path is required")
    return name


def cmd_list(args) -> int:
    from .explorer import EXPLORATIONS
    print("scenarios:")
    for name, data in BUILTIN_SCENARIOS.items():
        print(f"  {name:34} {data.get('description', '')}")
    print("explorations:")
    for name, preset in EXPLORATIONS.items():
        print(f"  {name:34} {preset['description']}")
    return OK


def cmd_run(args) -> int:
    cfg = _override(load_scenario(_scenario_name(args)), args)
    result = run_scenario(cfg)
    if args.out:
        try:
            emit_trace(result.trace, args.out)
        except OSError as exc:
            raise ConfigError(f"cannot write trace: {exc}") from None
    else:
        sys.stdout.write(trace_text(result.trace))
    reports = run_reports(result)
    for r in reports:
        print(r.line(), file=sys.stderr if not args.out else sys.stdout)
    return OK if all(r.holds for r in reports) else VIOLATION


def cmd_explore(args) -> int:
    from .explorer import EXPLORATIONS, preset_scenario, run_exploration
    name = _scenario_name(args)
    if name not in EXPLORATIONS:
        raise ConfigError(f"unknown exploration {name!r}; see `swapoption list`")
    cfg = _override(preset_scenario(name), args)
    overrides = {"horizon": args.horizon} if args.horizon is not None else {}
    report = run_exploration(name, cfg, **overrides)
    text = report.text()
    if args.out:
        try:
            Path(args.out).write_text(text + "\n")
        except OSError as exc:
            raise ConfigError(f"cannot write report: {exc}") from None
    else:
        print(text)
    print(f"{name}: states visited {report.states_visited}, violations {len(report.violations)}, "
          f"truncations {len(report.truncations)}", file=sys.stderr)
    return OK if report.holds else VIOLATION


def cmd_check(args) -> int:
    name = args.scenario or args.name or GOLDEN_SCENARIO
    golden = Path(args.golden) if args.golden else golden_path(name)
    if not golden.exists():
        raise ConfigError(f"no golden trace at {golden}")
    expected = read_trace(golden)
    if args.trace:
        actual = read_trace(args.trace)
    else:
        actual = list(run_scenario(_override(load_scenario(name), args)).trace)
    diff = compare_traces(actual, expected)
    print(diff or f"trace matches {golden.name} ({len(expected)} records)")
    return VIOLATION if diff else OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swapoption", description="Transferable swap option simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list built-in scenarios and explorations")
    for cmd, help_text in (("run", "run a scenario and report properties"),
                           ("explore", "run a bounded exhaustive exploration"),
                           ("check", "compare a trace against the golden trace")):
        p = sub.add_parser(cmd, help=help_text)
        p.add_argument("name", nargs="?", help="built-in name or scenario file")
        p.add_argument("--scenario")
        p.add_argument("--seed", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--policy", choices=("submission", "reverse", "seeded"))
        p.add_argument("--ca-timeout", type=int, choices=(9, 10), dest="ca_timeout")
        p.add_argument("--out")
        if cmd == "check":
            p.add_argument("--golden")
            p.add_argument("--trace")
    return parser


COMMANDS = {"list": cmd_list, "run": cmd_run, "explore": cmd_explore, "check": cmd_check}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return CONFIG_ERROR if exc.code else OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
