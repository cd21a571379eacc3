"""Command-line scenario runner.

Exit codes: 0 success, 1 property violation (trace mismatch or broken
run invariant), 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .config import Scenario, load_config
from .errors import ConfigError
from .runner import DirnetSim, replay_figure


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomnet",
        description="Run DIR-net scenarios on the deterministic simulated network.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario and write its trace")
    run_p.add_argument("config")
    run_p.add_argument("--trace", help="trace output path (default: stdout)")
    run_p.add_argument("--seed", type=int, help="override the link seed")
    run_p.add_argument("--duration", type=int, help="override the run duration")

    fig_p = sub.add_parser("replay-figure",
                           help="replay the four-time-out operating scenario")
    fig_p.add_argument("--trace", help="write the step log to this path")

    chk_p = sub.add_parser("check", help="run a scenario and compare to a golden trace")
    chk_p.add_argument("config")
    chk_p.add_argument("golden")
    chk_p.add_argument("--seed", type=int)
    chk_p.add_argument("--duration", type=int)
    return parser


def _load(path: str, seed: int | None, duration: int | None) -> Scenario:
    return load_config(path).with_overrides(seed=seed, duration=duration)


def _run_trace(scenario: Scenario) -> tuple[str, str | None]:
    sim = DirnetSim(scenario)
    trace = sim.run()
    return trace.to_jsonl(), sim.net.conservation_violation()


def _cmd_run(args) -> int:
    scenario = _load(args.config, args.seed, args.duration)
    text, violation = _run_trace(scenario)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if violation:
        print(f"property violation: {violation}", file=sys.stderr)
        return 1
    return 0


def _cmd_replay_figure(args) -> int:
    result = replay_figure()
    lines = result.steps + [f"status: {'ok' if result.ok else 'MISMATCH'}"]
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if result.ok else 1


def _cmd_check(args) -> int:
    scenario = _load(args.config, args.seed, args.duration)
    text, violation = _run_trace(scenario)
    if violation:
        print(f"property violation: {violation}", file=sys.stderr)
        return 1
    with open(args.golden, "r", encoding="utf-8") as fh:
        golden = fh.read()
    if text != golden:
        got, want = text.splitlines(), golden.splitlines()
        first = next((i for i, (a, b) in enumerate(zip(got, want)) if a != b),
                     min(len(got), len(want)))
        print(f"trace mismatch at line {first + 1} "
              f"(got {len(got)} lines, golden {len(want)})", file=sys.stderr)
        return 1
    print("trace matches golden")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "replay-figure":
            return _cmd_replay_figure(args)
        return _cmd_check(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
