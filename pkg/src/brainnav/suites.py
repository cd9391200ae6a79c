"""Bundled benchmark suites, generated deterministically from a seed.

``open_suite``: obstacle-free target-search worlds. ``maze_suite``: scattered
obstacles with a guaranteed route to the goal. Both can be materialized to a
directory of scenario files for the ``bench`` command.
"""

from __future__ import annotations

import math
import random
from pathlib import Path

from .scenario import GoalSpec, Instruction, Scenario, write_scenario
from .world import AgentPose, GridWorld, SimObject, shortest_path_cells

OPEN_SUITE_SEED = 7021
MAZE_SUITE_SEED = 9173

LABELS = (
    "blue trash can",
    "red chair",
    "green plant",
    "white backpack",
    "cardboard box",
)


def _pick_cell(rng: random.Random, size: int) -> tuple[int, int]:
    return (rng.randrange(size), rng.randrange(size))


def open_suite(count: int = 100, seed: int = OPEN_SUITE_SEED, size: int = 10) -> list[Scenario]:
    """Obstacle-free target-search scenarios: find one object on an open floor."""
    rng = random.Random(seed)
    scenarios = []
    for k in range(count):
        while True:
            start = _pick_cell(rng, size)
            goal = _pick_cell(rng, size)
            dist = math.hypot(goal[0] - start[0], goal[1] - start[1])
            if 3.0 <= dist <= 7.5:
                break
        heading = rng.choice((0, 90, 180, 270))
        label = LABELS[k % len(LABELS)]
        world = GridWorld(
            name=f"open-{k:03d}",
            width=size,
            height=size,
            objects=(SimObject(label, *goal),),
            start=AgentPose(start[0], start[1], heading),
        )
        instruction = Instruction(
            text=f"Find the {label}.",
            category="Targeted Search Navigation",
            goal=GoalSpec(label=label),
            optimal_path_cells=abs(goal[0] - start[0]) + abs(goal[1] - start[1]),
        )
        scenarios.append(Scenario(world=world, instructions=(instruction,)))
    return scenarios


def maze_suite(
    count: int = 100,
    seed: int = MAZE_SUITE_SEED,
    size: int = 11,
    density: float = 0.18,
) -> list[Scenario]:
    """Target search through scattered obstacles; goal always reachable."""
    rng = random.Random(seed)
    scenarios = []
    for k in range(count):
        label = LABELS[k % len(LABELS)]
        while True:
            start = _pick_cell(rng, size)
            goal = _pick_cell(rng, size)
            if not (4.0 <= math.hypot(goal[0] - start[0], goal[1] - start[1]) <= 9.0):
                continue
            obstacles = {
                (x, y)
                for x in range(size)
                for y in range(size)
                if (x, y) not in (start, goal) and rng.random() < density
            }
            world = GridWorld(
                name=f"maze-{k:03d}",
                width=size,
                height=size,
                obstacles=frozenset(obstacles),
                objects=(SimObject(label, *goal),),
                start=AgentPose(start[0], start[1], rng.choice((0, 90, 180, 270))),
            )
            route = shortest_path_cells(world, start, goal)
            if route is None or not (4 <= route <= 14):
                continue
            instruction = Instruction(
                text=f"Avoid the obstacles and find the {label}.",
                category="Barrier Avoidance Navigation",
                goal=GoalSpec(label=label),
                optimal_path_cells=route,
            )
            scenarios.append(Scenario(world=world, instructions=(instruction,)))
            break
    return scenarios


def write_suite(scenarios, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for scenario in scenarios:
        path = out_dir / f"{scenario.name}.json"
        write_scenario(scenario, path)
        paths.append(path)
    return paths
