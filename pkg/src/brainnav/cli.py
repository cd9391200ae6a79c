"""Command-line interface.

Exit codes: 0 success, 1 validation error, 2 episode abort (remote decision
or perception unavailable), 3 replay divergence / fingerprint mismatch.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .decision import DecisionUnavailable
from .episode import EpisodeAborted, EpisodeLimits, ReplayError, UnsupportedInstruction, replay, run_episode
from .llm import EndpointNotConfigured
from .memory import NoPathError, TrajectoryStore, plan_backtrack
from .metrics import build_report, emit_report, render_table
from .perception import PerceptionUnavailable, PerceptorConfig
from .scenario import UNSUPPORTED_CATEGORIES, ScenarioError, load_scenario
from .spatial import CoordinateMap, GraphError, TopoGraph
from .suites import maze_suite, open_suite, write_suite

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ABORT = 2
EXIT_REPLAY = 3


def _parse_ablations(text: str | None) -> frozenset[str]:
    if not text:
        return frozenset()
    return frozenset(part.strip() for part in text.split(",") if part.strip())


def _limits(args) -> EpisodeLimits:
    return EpisodeLimits(max_steps=args.max_steps, success_radius_m=args.success_radius)


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    store = TrajectoryStore(args.experience) if args.experience else None
    try:
        result = run_episode(
            scenario,
            instruction=args.instruction,
            policy=args.policy,
            seed=args.seed,
            ablations=_parse_ablations(args.ablate),
            limits=_limits(args),
            perceptor=PerceptorConfig(view_range=args.range),
            trace_path=args.trace,
            store=store,
        )
    except EpisodeAborted as exc:
        print(f"episode aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    status = "success" if result.success else "failure"
    print(
        f"{result.scenario}: {status}  steps={result.steps}  "
        f"error={result.final_error_m:.2f} m  revisited={'yes' if result.revisited else 'no'}"
        f"{'  (reused experience)' if result.reused else ''}"
    )
    if args.trace:
        print(f"trace written to {args.trace}")
    return EXIT_OK


def _bench_one(job) -> "object":
    path, index, policy, seed, ablations, max_steps, radius, view_range, experience = job
    scenario = load_scenario(path)
    store = TrajectoryStore(experience) if experience else None
    return run_episode(
        scenario,
        instruction=index,
        policy=policy,
        seed=seed,
        ablations=ablations,
        limits=EpisodeLimits(max_steps=max_steps, success_radius_m=radius),
        perceptor=PerceptorConfig(view_range=view_range),
        store=store,
    )


def cmd_bench(args) -> int:
    suite_dir = Path(args.suite)
    files = sorted(suite_dir.glob("*.json"))
    if not files:
        print(f"no scenario files in {suite_dir}", file=sys.stderr)
        return EXIT_VALIDATION
    ablations = _parse_ablations(args.ablate)
    jobs = []
    skipped = 0
    for path in files:
        scenario = load_scenario(path)
        for index, ins in enumerate(scenario.instructions):
            if ins.category in UNSUPPORTED_CATEGORIES:
                skipped += 1
                continue
            for rep in range(args.episodes_per_instruction):
                seed = args.seed + 8191 * len(jobs) + rep
                jobs.append(
                    (
                        str(path),
                        index,
                        args.policy,
                        seed,
                        ablations,
                        args.max_steps,
                        args.success_radius,
                        args.range,
                        args.experience,
                    )
                )
    try:
        if args.parallel > 1:
            with ProcessPoolExecutor(max_workers=args.parallel) as pool:
                results = list(pool.map(_bench_one, jobs))
        else:
            results = [_bench_one(job) for job in jobs]
    except EpisodeAborted as exc:
        print(f"episode aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    report = build_report(results)
    if args.report:
        emit_report(report, args.report, fmt=args.format)
        print(f"report written to {args.report}")
    else:
        print(render_table(report), end="")
    if skipped:
        print(f"({skipped} unsupported instruction(s) skipped)")
    return EXIT_OK


def cmd_replay(args) -> int:
    result = replay(args.trace, scenario_path=args.scenario)
    status = "success" if result.success else "failure"
    print(
        f"replay ok: {result.scenario}  {status}  steps={result.steps}  "
        f"error={result.final_error_m:.2f} m"
    )
    return EXIT_OK


def cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario)
    world = scenario.world
    cmap = CoordinateMap()
    graph = TopoGraph()
    # whole-world roadgraph: open cells in row-major order, 4-connected
    for y in range(world.height):
        for x in range(world.width):
            if world.is_open(x, y):
                cmap.node_id_for((x, y))
    for (x, y), node in sorted(cmap.items(), key=lambda kv: kv[1]):
        for dx, dy in ((0, 1), (1, 0), (0, -1), (-1, 0)):
            if world.is_open(x + dx, y + dy):
                graph.connect(node, cmap.node_id_for((x + dx, y + dy)))
    path = plan_backtrack(graph, args.src, args.dst)
    print(" -> ".join(f"Place {n} {cmap.coord_of(n)}" for n in path))
    return EXIT_OK


def cmd_make_suite(args) -> int:
    if args.kind == "open":
        scenarios = open_suite(count=args.count) if args.seed is None else open_suite(
            count=args.count, seed=args.seed
        )
    else:
        scenarios = maze_suite(count=args.count) if args.seed is None else maze_suite(
            count=args.count, seed=args.seed
        )
    paths = write_suite(scenarios, args.out)
    print(f"wrote {len(paths)} scenarios to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brainnav",
        description="Dual-map grid navigation simulator and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one episode")
    run.add_argument("--scenario", required=True)
    run.add_argument("--instruction", type=int, default=0, help="instruction index (0-based)")
    run.add_argument("--policy", choices=("oracle", "llm"), default="oracle")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--ablate", default="", help="comma list: memory,spatial,perception,decision,executor")
    run.add_argument("--max-steps", type=int, default=200)
    run.add_argument("--success-radius", type=float, default=1.0)
    run.add_argument("--range", type=int, default=6, help="perception range in cells")
    run.add_argument("--trace", default=None, help="write a trace file")
    run.add_argument("--experience", default=None, help="experience store file")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run a scenario suite and report metrics")
    bench.add_argument("--suite", required=True, help="directory of scenario files")
    bench.add_argument("--policy", choices=("oracle", "llm"), default="oracle")
    bench.add_argument("--episodes-per-instruction", type=int, default=1)
    bench.add_argument("--report", default=None, help="output file (.csv or table)")
    bench.add_argument("--format", choices=("csv", "table"), default=None)
    bench.add_argument("--parallel", type=int, default=1)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--ablate", default="")
    bench.add_argument("--max-steps", type=int, default=200)
    bench.add_argument("--success-radius", type=float, default=1.0)
    bench.add_argument("--range", type=int, default=6)
    bench.add_argument("--experience", default=None)
    bench.set_defaults(func=cmd_bench)

    rep = sub.add_parser("replay", help="verify a recorded trace")
    rep.add_argument("--trace", required=True)
    rep.add_argument("--scenario", default=None, help="override the embedded scenario")
    rep.set_defaults(func=cmd_replay)

    plan = sub.add_parser("plan", help="shortest backtrack path on a scenario's roadgraph")
    plan.add_argument("--scenario", required=True)
    plan.add_argument("--from", dest="src", type=int, required=True)
    plan.add_argument("--to", dest="dst", type=int, required=True)
    plan.set_defaults(func=cmd_plan)

    make = sub.add_parser("make-suite", help="materialize a bundled suite")
    make.add_argument("--kind", choices=("open", "maze"), required=True)
    make.add_argument("--out", required=True)
    make.add_argument("--count", type=int, default=100)
    make.add_argument("--seed", type=int, default=None)
    make.set_defaults(func=cmd_make_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, UnsupportedInstruction, GraphError, NoPathError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DecisionUnavailable, PerceptionUnavailable, EndpointNotConfigured) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except ReplayError as exc:
        print(f"replay error: {exc}", file=sys.stderr)
        return EXIT_REPLAY


if __name__ == "__main__":
    sys.exit(main())
