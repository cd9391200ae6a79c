"""Closed-loop episode runner: perceive -> update dual maps -> decide ->
execute -> record, plus deterministic trace files and trace replay.

Ablation switches emulate removing a module: ``memory`` drops history,
frontier tracking and experience reuse; ``spatial`` drops both maps (nodes
become unidentified); ``perception`` feeds empty observations; ``decision``
replaces the policy with a seeded uniform choice over traversable views;
``executor`` turns every motion into Halt so the agent never moves.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .actions import MacroAction, STOP, action_from_name
from .decision import (
    ActionPlan,
    DecisionInput,
    DecisionUnavailable,
    GoalTarget,
    decide_llm,
    decide_memoryless,
    decide_oracle,
    decide_random,
)
from .executor import HALT, execute_backtrack, to_motion
from .memory import ActionHistory, ExperienceKey, StepRecord, TrajectoryStore, plan_backtrack
from .metrics import EpisodeResult
from .perception import PerceptorConfig, empty_observation, perceive
from .scenario import Instruction, Scenario, UNSUPPORTED_CATEGORIES, parse_scenario
from .spatial import CoordinateMap, TopoGraph, gen_candidates
from .world import AgentPose, apply_macro, goal_distance_m, shortest_path_cells

TRACE_VERSION = 1

ABLATABLE = frozenset({"memory", "spatial", "perception", "decision", "executor"})


class UnsupportedInstruction(ValueError):
    """Instruction category the harness declares out of scope."""


class ReplayError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message)


@dataclass(frozen=True)
class EpisodeLimits:
    max_steps: int = 200          # macro-action budget; also caps decision cycles
    success_radius_m: float = 1.0


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class _Trace:
    def __init__(self):
        self.lines: list[str] = []

    def add(self, record: dict) -> None:
        self.lines.append(_dump(record))

    def write(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.lines) + "\n", encoding="utf-8")


def _resolve_instruction(scenario: Scenario, instruction) -> tuple[Instruction, int]:
    if isinstance(instruction, Instruction):
        try:
            return instruction, scenario.instructions.index(instruction)
        except ValueError:
            return instruction, -1
    try:
        return scenario.instructions[instruction], instruction
    except IndexError:
        raise ValueError(
            f"scenario {scenario.name!r} has no instruction {instruction}"
        ) from None


def run_episode(
    scenario: Scenario,
    instruction=0,
    policy: str = "oracle",
    seed: int = 0,
    ablations=(),
    limits: EpisodeLimits | None = None,
    perceptor: PerceptorConfig | None = None,
    trace_path: str | Path | None = None,
    store: TrajectoryStore | None = None,
    client=None,
) -> EpisodeResult:
    """Run one navigation episode and return its result.

    With a :class:`TrajectoryStore` attached, a previously succeeded
    (scenario, instruction) pair replays its stored trajectory without any
    policy calls; fresh successes are saved back (replay-verified).
    """
    limits = limits or EpisodeLimits()
    perceptor = perceptor or PerceptorConfig()
    ablations = frozenset(ablations)
    unknown = ablations - ABLATABLE
    if unknown:
        raise ValueError(f"unknown ablations: {sorted(unknown)}")
    if policy not in ("oracle", "llm"):
        raise ValueError(f"unknown policy {policy!r}")

    ins, ins_index = _resolve_instruction(scenario, instruction)
    if ins.category in UNSUPPORTED_CATEGORIES:
        raise UnsupportedInstruction(f"category {ins.category!r} is not supported")

    world = scenario.world
    fingerprint = scenario.fingerprint()
    goal_cells = ins.goal_cells(world)
    if not goal_cells:
        raise ValueError(f"goal of {ins.text!r} resolves to no cell")

    if policy == "llm" and "decision" not in ablations and client is None:
        from .llm import client_for

        client = client_for()

    trace = _Trace()
    trace.add(
        {
            "type": "header",
            "version": TRACE_VERSION,
            "scenario": scenario.to_json(),
            "scenario_path": scenario.path,
            "fingerprint": fingerprint,
            "instruction": ins.text,
            "instruction_index": ins_index,
            "category": ins.category,
            "goal": ins.goal.to_json(),
            "policy": policy,
            "seed": seed,
            "ablations": sorted(ablations),
            "max_steps": limits.max_steps,
            "success_radius_m": limits.success_radius_m,
            "view_range": perceptor.view_range,
            "start": [world.start.x, world.start.y, world.start.heading],
        }
    )

    key = ExperienceKey.make(fingerprint, ins.text)
    memory_on = "memory" not in ablations
    if store is not None and memory_on:
        stored = store.lookup(key)
        if stored is not None:
            return _run_stored(
                scenario, ins, stored, seed, limits, trace, trace_path, ablations
            )

    spatial_on = "spatial" not in ablations
    executor_on = "executor" not in ablations
    cmap = CoordinateMap() if spatial_on else None
    graph = TopoGraph()
    history = ActionHistory()
    rng = random.Random(seed)
    pose = world.start

    def node_of(cell) -> int:
        return cmap.node_id_for(cell) if spatial_on else -1

    current = node_of(pose.cell)
    goal = GoalTarget(label=ins.goal.label, cell=ins.goal.cell)
    if ins.goal.cell is not None and spatial_on:
        goal = GoalTarget(cell=ins.goal.cell, node_id=cmap.node_id_for(ins.goal.cell))

    visited = {current}
    macro_count = 0
    stopped = False
    truncated = False
    collided_last = False
    revisited = False
    decision_calls = 0
    decisions = 0
    aborted_reason = None

    for t in range(1, limits.max_steps + 1):
        if "perception" in ablations:
            obs = empty_observation(pose)
        else:
            obs = perceive(world, pose, cmap, perceptor)
        if spatial_on:
            current = cmap.node_id_for(pose.cell)
            for cand in gen_candidates(pose):
                cmap.node_id_for(cand.coord)
            for view in obs.views:
                prev = current
                for node in view.path_nodes:
                    graph.connect(prev, node)
                    prev = node

        if memory_on and spatial_on:
            unvisited = frozenset(n for n in graph.nodes if n not in visited and n != current)
            digest = history.digest()
        else:
            unvisited = frozenset()
            digest = ""
        inp = DecisionInput(
            instruction_text=ins.text,
            category=ins.category,
            observation=obs,
            topo_snapshot=graph.snapshot_text() if spatial_on else "",
            current_node=current,
            unvisited=unvisited,
            history_digest=digest,
            collided_last=collided_last,
        )

        llm_meta = None
        try:
            if "decision" in ablations:
                plan = decide_random(inp, rng)
                source = "random"
            elif policy == "llm":
                plan, llm_meta = decide_llm(inp, graph, goal, client)
                source = "llm-fallback" if llm_meta.fallback else "llm"
            elif not memory_on:
                plan = decide_memoryless(inp, goal, rng)
                source = "memoryless"
            else:
                plan = decide_oracle(inp, graph, goal)
                source = "oracle"
        except DecisionUnavailable as exc:
            aborted_reason = f"decision-unavailable: {exc}"
            break
        decision_calls += 1
        decisions = t

        prims = _expand(plan, graph, pose, cmap, current)
        if not prims:
            prims = [STOP]

        node_before_step = current
        collided_this = False
        executed: list[MacroAction] = []
        for k, macro in enumerate(prims):
            pose_before = pose
            if executor_on:
                outcome = apply_macro(world, pose, macro)
                pose = outcome.pose_after
                moved, collided = outcome.moved, outcome.collided
                motions = [str(m) for m in to_motion(macro)]
                applied = True
            else:
                moved = collided = False
                motions = [str(HALT)]
                applied = False
            executed.append(macro)
            if applied and macro.name != "Stop":
                macro_count += 1
            node_now = node_of(pose.cell)
            if spatial_on and moved:
                graph.connect(node_of(pose_before.cell), node_now)
                visited.add(node_now)
            record = {
                "type": "step",
                "t": t,
                "k": k,
                "source": source,
                "action": str(macro),
                "motions": motions,
                "pose_before": [pose_before.x, pose_before.y, pose_before.heading],
                "pose_after": [pose.x, pose.y, pose.heading],
                "node_before": node_of(pose_before.cell),
                "node_after": node_now,
                "moved": moved,
                "collided": collided,
                "applied": applied,
            }
            if k == 0:
                record["digest"] = obs.digest()
                if llm_meta is not None:
                    record["exchanges"] = [list(x) for x in llm_meta.exchanges]
                    record["fallback"] = llm_meta.fallback
            trace.add(record)
            if collided:
                collided_this = True
                break
            if applied and macro.name == "Stop":
                stopped = True
                break
            if macro_count >= limits.max_steps:
                truncated = True
                break

        node_after_step = node_of(pose.cell)
        if (
            spatial_on
            and node_after_step != node_before_step
            and history.detect_revisit(node_after_step)
        ):
            revisited = True
        history.record_step(
            StepRecord(
                t=t,
                actions=tuple(executed),
                node_before=node_before_step,
                node_after=node_after_step,
                observation_digest=obs.digest(),
                collided=collided_this,
            )
        )
        visited.add(node_after_step)
        collided_last = collided_this
        if stopped or truncated:
            break

    final_error = min(goal_distance_m(world, pose, cell) for cell in goal_cells)
    success = int(stopped and final_error <= limits.success_radius_m and aborted_reason is None)
    shortest = _shortest_cells(ins, world, goal_cells)
    result = EpisodeResult(
        scenario=scenario.name,
        instruction=ins.text,
        category=ins.category,
        success=success,
        steps=macro_count,
        shortest=shortest,
        final_error_m=final_error,
        revisited=revisited,
        backtracked_then_succeeded=revisited and bool(success),
        seed=seed,
        stopped=stopped,
        decisions=decisions,
        decision_calls=decision_calls,
        reused=False,
        aborted_reason=aborted_reason,
    )
    trace.add(_result_record(result))
    if trace_path is not None:
        trace.write(trace_path)
    if aborted_reason is not None:
        raise EpisodeAborted(result)
    if store is not None and memory_on and success:
        store.save(key, history.flat_actions(), scenario, ins, limits.success_radius_m)
    return result


class EpisodeAborted(RuntimeError):
    """Raised when a remote decision became unavailable mid-episode.

    Carries the failure-marked result so harnesses can still aggregate it.
    """

    def __init__(self, result: EpisodeResult):
        self.result = result
        super().__init__(result.aborted_reason or "episode aborted")


def _expand(plan: ActionPlan, graph: TopoGraph, pose: AgentPose, cmap, current: int):
    prims: list[MacroAction] = []
    for macro in plan.motion_commands:
        if macro.name == "BacktrackTo":
            if cmap is None:
                continue  # spatial ablation: nothing to expand against
            path = plan_backtrack(graph, current, macro.target)
            prims.extend(execute_backtrack(path, pose, cmap))
        else:
            prims.append(macro)
    return prims


def _shortest_cells(ins: Instruction, world, goal_cells) -> int:
    if ins.optimal_path_cells is not None:
        return ins.optimal_path_cells
    lengths = [
        d
        for d in (shortest_path_cells(world, world.start.cell, cell) for cell in goal_cells)
        if d is not None
    ]
    return min(lengths) if lengths else 0


def _result_record(result: EpisodeResult) -> dict:
    return {
        "type": "result",
        "success": result.success,
        "steps": result.steps,
        "shortest": result.shortest,
        "final_error_m": result.final_error_m,
        "revisited": result.revisited,
        "backtracked_then_succeeded": result.backtracked_then_succeeded,
        "stopped": result.stopped,
        "decisions": result.decisions,
        "decision_calls": result.decision_calls,
        "reused": result.reused,
        "aborted_reason": result.aborted_reason,
    }


def _run_stored(
    scenario: Scenario,
    ins: Instruction,
    actions: list[MacroAction],
    seed: int,
    limits: EpisodeLimits,
    trace: _Trace,
    trace_path,
    ablations: frozenset,
) -> EpisodeResult:
    """Experience fast path: execute the stored trajectory with zero policy calls."""
    world = scenario.world
    spatial_on = "spatial" not in ablations
    executor_on = "executor" not in ablations
    cmap = CoordinateMap() if spatial_on else None
    history = ActionHistory()
    graph = TopoGraph()
    pose = world.start

    def node_of(cell) -> int:
        return cmap.node_id_for(cell) if spatial_on else -1

    node_of(pose.cell)
    goal_cells = ins.goal_cells(world)
    macro_count = 0
    stopped = False
    revisited = False
    for t, macro in enumerate(actions, start=1):
        pose_before = pose
        if executor_on:
            outcome = apply_macro(world, pose, macro)
            pose = outcome.pose_after
            moved, collided = outcome.moved, outcome.collided
            motions = [str(m) for m in to_motion(macro)]
            applied = True
        else:
            moved = collided = False
            motions = [str(HALT)]
            applied = False
        if applied and macro.name != "Stop":
            macro_count += 1
        node_before = node_of(pose_before.cell)
        node_after = node_of(pose.cell)
        if spatial_on and moved:
            graph.connect(node_before, node_after)
        if spatial_on and node_after != node_before and history.detect_revisit(node_after):
            revisited = True
        trace.add(
            {
                "type": "step",
                "t": t,
                "k": 0,
                "source": "reuse",
                "action": str(macro),
                "motions": motions,
                "pose_before": [pose_before.x, pose_before.y, pose_before.heading],
                "pose_after": [pose.x, pose.y, pose.heading],
                "node_before": node_before,
                "node_after": node_after,
                "moved": moved,
                "collided": collided,
                "applied": applied,
                "digest": "reuse",
            }
        )
        history.record_step(
            StepRecord(t, (macro,), node_before, node_after, "reuse", collided)
        )
        if applied and macro.name == "Stop":
            stopped = True
            break

    final_error = min(goal_distance_m(world, pose, cell) for cell in goal_cells)
    result = EpisodeResult(
        scenario=scenario.name,
        instruction=ins.text,
        category=ins.category,
        success=int(stopped and final_error <= limits.success_radius_m),
        steps=macro_count,
        shortest=_shortest_cells(ins, world, goal_cells),
        final_error_m=final_error,
        revisited=revisited,
        backtracked_then_succeeded=revisited and stopped
        and final_error <= limits.success_radius_m,
        seed=seed,
        stopped=stopped,
        decisions=0,
        decision_calls=0,
        reused=True,
        aborted_reason=None,
    )
    trace.add(_result_record(result))
    if trace_path is not None:
        trace.write(trace_path)
    return result


# --- trace replay ---------------------------------------------------------


def read_trace(path: str | Path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def replay(trace_file: str | Path, scenario_path: str | Path | None = None) -> EpisodeResult:
    """Re-execute a trace's macro actions and verify every recorded pose.

    Returns the recomputed result. Raises :class:`ReplayError` on version
    mismatch, scenario fingerprint mismatch, or pose divergence.
    """
    records = read_trace(trace_file)
    if not records or records[0].get("type") != "header":
        raise ReplayError("trace has no header record")
    header = records[0]
    if header.get("version") != TRACE_VERSION:
        raise ReplayError(f"trace version {header.get('version')} not supported")

    if scenario_path is not None:
        from .scenario import load_scenario

        scenario = load_scenario(scenario_path)
    else:
        scenario = parse_scenario(header["scenario"])
    if scenario.fingerprint() != header["fingerprint"]:
        raise ReplayError("scenario fingerprint mismatch")

    world = scenario.world
    ins = scenario.instructions[header["instruction_index"]] if (
        0 <= header["instruction_index"] < len(scenario.instructions)
    ) else None
    sx, sy, sh = header["start"]
    pose = AgentPose(sx, sy, sh)
    macro_count = 0
    stopped = False
    steps = [r for r in records if r.get("type") == "step"]
    for rec in steps:
        t = rec["t"]
        if tuple(rec["pose_before"]) != (pose.x, pose.y, pose.heading):
            raise ReplayError(f"pose divergence entering step t={t}", step=t)
        macro = action_from_name(rec["action"])
        if rec["applied"]:
            outcome = apply_macro(world, pose, macro)
            pose = outcome.pose_after
            if macro.name != "Stop":
                macro_count += 1
            if macro.name == "Stop":
                stopped = True
        if tuple(rec["pose_after"]) != (pose.x, pose.y, pose.heading):
            raise ReplayError(f"pose divergence at step t={t}", step=t)

    goal_cells = (
        ins.goal_cells(world)
        if ins is not None
        else _goal_cells_from_header(header, world)
    )
    final_error = min(goal_distance_m(world, pose, cell) for cell in goal_cells)
    recorded = next((r for r in records if r.get("type") == "result"), None)
    return EpisodeResult(
        scenario=scenario.name,
        instruction=header["instruction"],
        category=header["category"],
        success=int(stopped and final_error <= header["success_radius_m"]),
        steps=macro_count,
        shortest=recorded["shortest"] if recorded else 0,
        final_error_m=final_error,
        revisited=recorded["revisited"] if recorded else False,
        backtracked_then_succeeded=recorded["backtracked_then_succeeded"] if recorded else False,
        seed=header["seed"],
        stopped=stopped,
        decisions=recorded["decisions"] if recorded else 0,
        decision_calls=recorded["decision_calls"] if recorded else 0,
        reused=recorded["reused"] if recorded else False,
        aborted_reason=recorded["aborted_reason"] if recorded else None,
    )


def _goal_cells_from_header(header: dict, world) -> list[tuple[int, int]]:
    goal = header["goal"]
    if "label" in goal:
        return [o.cell for o in world.objects_labelled(goal["label"])]
    return [(goal["x"], goal["y"])]
