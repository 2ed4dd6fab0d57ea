"""Command-line entry points: run a scenario headless, compare policies, or
serve the live operator console."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .scenario import ScenarioInvalid, load_scenario
from .simulator import RunReport, run_scenario, write_artifacts

POLICIES = ("hybrid", "vfh-only", "astar-only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridnav",
        description="Hybrid global/local robot navigation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario headless")
    run_p.add_argument("scenario", help="scenario JSON file")
    run_p.add_argument("--out", default="out", help="artifact directory")
    run_p.add_argument("--mode", choices=POLICIES, default="hybrid")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True,
                       help="write the SVG overview figure (default on)")
    run_p.add_argument("--law-as-printed", action="store_true",
                       help="use the steering law without the lateral-error factor")
    run_p.add_argument("--single-quintic", action="store_true",
                       help="fit one quintic over the whole path instead of windows")

    cmp_p = sub.add_parser("compare", help="run all policies and print a table")
    cmp_p.add_argument("scenario")
    cmp_p.add_argument("--seed", type=int, default=None)
    cmp_p.add_argument("--out", default=None, help="also write per-policy artifacts")

    serve_p = sub.add_parser("serve", help="serve the live operator console")
    serve_p.add_argument("scenario")
    serve_p.add_argument("--port", type=int, default=8765)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--speed", type=float, default=1.0,
                         help="wall-clock speed multiplier")
    serve_p.add_argument("--static", default=None,
                         help="directory of built console assets")
    serve_p.add_argument("--out", default=None,
                         help="directory for the session trace and command log")
    return parser


def _overrides(args) -> dict:
    overrides = {"nav.policy": args.mode}
    if args.seed is not None:
        overrides["sim.seed"] = args.seed
    if getattr(args, "law_as_printed", False):
        overrides["nav.law_as_printed"] = True
    if getattr(args, "single_quintic", False):
        overrides["nav.single_quintic"] = True
    return overrides


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario, overrides=_overrides(args))
    except ScenarioInvalid as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    trace, report = run_scenario(scenario)
    paths = write_artifacts(trace, report, args.out)
    if args.plot:
        from .plots import render_run

        plot_path = Path(args.out) / "run.svg"
        render_run(trace, scenario.grid, plot_path,
                   title=f"{scenario.name} [{scenario.nav.policy}]")
        paths["plot"] = plot_path
    summary = report.metrics
    print(f"{scenario.name}: {summary.outcome}"
          f" run_time={summary.run_time:.2f}s"
          f" path={summary.path_length:.2f}m"
          f" replans={summary.replan_count}")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return 0 if summary.outcome == "ARRIVED" else 3


def render_compare_table(reports: list[RunReport]) -> str:
    """Fixed-format comparison table (stable across runs for golden tests)."""
    header = f"{'mode':<12}{'outcome':<10}{'run_time_s':>12}{'path_len_m':>12}{'replans':>9}"
    lines = [header, "-" * len(header)]
    for report in reports:
        m = report.metrics
        lines.append(
            f"{report.policy:<12}{m.outcome:<10}{m.run_time:>12.2f}"
            f"{m.path_length:>12.2f}{m.replan_count:>9d}"
        )
    return "\n".join(lines)


def cmd_compare(args) -> int:
    reports = []
    worst = 0
    for policy in POLICIES:
        overrides = {"nav.policy": policy}
        if args.seed is not None:
            overrides["sim.seed"] = args.seed
        try:
            scenario = load_scenario(args.scenario, overrides=overrides)
        except ScenarioInvalid as exc:
            for problem in exc.problems:
                print(f"error: {problem}", file=sys.stderr)
            return 2
        trace, report = run_scenario(scenario)
        reports.append(report)
        if args.out:
            write_artifacts(trace, report, Path(args.out) / policy)
        if report.metrics.outcome != "ARRIVED":
            worst = 3
    print(render_compare_table(reports))
    return worst


def cmd_serve(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioInvalid as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    from .server import serve

    serve(scenario, host=args.host, port=args.port, speed=args.speed,
          static_dir=args.static, out_dir=args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "compare":
        return cmd_compare(args)
    return cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
