"""Scenario files: schema validation, canonical serialization, fingerprints.

A scenario is a JSON document with the world layout plus its instruction
list. Canonical form (sorted keys, 2-space indent, trailing newline) is what
``write_scenario`` emits and what the content fingerprint hashes, so a file
written by this module fingerprints identically whether hashed from disk or
from memory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .actions import HEADINGS
from .world import AgentPose, GridWorld, SimObject, WorldError

CATEGORIES = (
    "Targeted Search Navigation",
    "Path Navigation",
    "Multi-target Navigation",
    "Multi-step Navigation",
    "Barrier Avoidance Navigation",
    "Interactive Navigation",
)

UNSUPPORTED_CATEGORIES = ("Interactive Navigation",)


class ScenarioError(ValueError):
    """Schema violation, reported with the offending field path."""

    def __init__(self, path: str, message: str):
        self.field_path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class GoalSpec:
    """Either an object label to find or an explicit target cell."""

    label: str | None = None
    cell: tuple[int, int] | None = None

    def __post_init__(self):
        if (self.label is None) == (self.cell is None):
            raise ScenarioError("goal", "exactly one of label / cell required")

    def to_json(self) -> dict:
        if self.label is not None:
            return {"label": self.label}
        return {"x": self.cell[0], "y": self.cell[1]}


@dataclass(frozen=True)
class Instruction:
    text: str
    category: str
    goal: GoalSpec
    optimal_path_cells: int | None = None

    def goal_cells(self, world: GridWorld) -> list[tuple[int, int]]:
        """Cells that satisfy the goal (all instances for label goals)."""
        if self.goal.cell is not None:
            return [self.goal.cell]
        return [o.cell for o in world.objects_labelled(self.goal.label)]


@dataclass(frozen=True)
class Scenario:
    world: GridWorld
    instructions: tuple[Instruction, ...]
    path: str | None = None

    @property
    def name(self) -> str:
        return self.world.name

    def to_json(self) -> dict:
        w = self.world
        return {
            "name": w.name,
            "width": w.width,
            "height": w.height,
            "cell_size_m": w.cell_size_m,
            "obstacles": sorted([x, y] for x, y in w.obstacles),
            "objects": [{"label": o.label, "x": o.x, "y": o.y} for o in w.objects],
            "start": {"x": w.start.x, "y": w.start.y, "heading": w.start.heading},
            "instructions": [
                {
                    "text": ins.text,
                    "category": ins.category,
                    "goal": ins.goal.to_json(),
                    **(
                        {"optimal_path_cells": ins.optimal_path_cells}
                        if ins.optimal_path_cells is not None
                        else {}
                    ),
                }
                for ins in self.instructions
            ],
        }

    def canonical_text(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()


def _require(data: dict, key: str, kind, path: str):
    if key not in data:
        raise ScenarioError(f"{path}.{key}", "missing required field")
    value = data[key]
    if kind is int and isinstance(value, bool):
        raise ScenarioError(f"{path}.{key}", "expected an integer")
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScenarioError(f"{path}.{key}", "expected a number")
        return float(value)
    if not isinstance(value, kind):
        raise ScenarioError(f"{path}.{key}", f"expected {kind.__name__}")
    return value


def _parse_cell(item, path: str) -> tuple[int, int]:
    if (
        not isinstance(item, (list, tuple))
        or len(item) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in item)
    ):
        raise ScenarioError(path, "expected [x, y] integer pair")
    return (item[0], item[1])


def parse_scenario(data: dict, path: str | None = None) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("$", "scenario must be a JSON object")
    name = _require(data, "name", str, "$")
    width = _require(data, "width", int, "$")
    height = _require(data, "height", int, "$")
    cell_size = float(data.get("cell_size_m", 0.5))

    obstacles = []
    raw_obstacles = data.get("obstacles", [])
    if not isinstance(raw_obstacles, list):
        raise ScenarioError("$.obstacles", "expected a list")
    for i, item in enumerate(raw_obstacles):
        obstacles.append(_parse_cell(item, f"$.obstacles[{i}]"))

    objects = []
    raw_objects = data.get("objects", [])
    if not isinstance(raw_objects, list):
        raise ScenarioError("$.objects", "expected a list")
    for i, item in enumerate(raw_objects):
        if not isinstance(item, dict):
            raise ScenarioError(f"$.objects[{i}]", "expected an object")
        label = _require(item, "label", str, f"$.objects[{i}]")
        ox = _require(item, "x", int, f"$.objects[{i}]")
        oy = _require(item, "y", int, f"$.objects[{i}]")
        objects.append(SimObject(label, ox, oy))

    raw_start = _require(data, "start", dict, "$")
    sx = _require(raw_start, "x", int, "$.start")
    sy = _require(raw_start, "y", int, "$.start")
    sh = _require(raw_start, "heading", int, "$.start")
    if sh not in HEADINGS:
        raise ScenarioError("$.start.heading", f"must be one of {list(HEADINGS)}")

    try:
        world = GridWorld(
            name=name,
            width=width,
            height=height,
            cell_size_m=cell_size,
            obstacles=frozenset(obstacles),
            objects=tuple(objects),
            start=AgentPose(sx, sy, sh),
        )
    except WorldError as exc:
        raise ScenarioError("$", str(exc)) from exc

    instructions = []
    raw_instructions = data.get("instructions", [])
    if not isinstance(raw_instructions, list):
        raise ScenarioError("$.instructions", "expected a list")
    for i, item in enumerate(raw_instructions):
        ipath = f"$.instructions[{i}]"
        if not isinstance(item, dict):
            raise ScenarioError(ipath, "expected an object")
        text = _require(item, "text", str, ipath)
        category = _require(item, "category", str, ipath)
        if category not in CATEGORIES:
            raise ScenarioError(f"{ipath}.category", f"unknown category {category!r}")
        raw_goal = _require(item, "goal", dict, ipath)
        if "label" in raw_goal:
            goal = GoalSpec(label=_require(raw_goal, "label", str, f"{ipath}.goal"))
            if not world.objects_labelled(goal.label):
                raise ScenarioError(f"{ipath}.goal.label", f"no object labelled {goal.label!r}")
        elif "x" in raw_goal or "y" in raw_goal:
            gx = _require(raw_goal, "x", int, f"{ipath}.goal")
            gy = _require(raw_goal, "y", int, f"{ipath}.goal")
            if not world.in_bounds(gx, gy):
                raise ScenarioError(f"{ipath}.goal", f"cell ({gx}, {gy}) out of bounds")
            goal = GoalSpec(cell=(gx, gy))
        else:
            raise ScenarioError(f"{ipath}.goal", "need either label or x/y")
        optimal = item.get("optimal_path_cells")
        if optimal is not None and (not isinstance(optimal, int) or isinstance(optimal, bool) or optimal < 0):
            raise ScenarioError(f"{ipath}.optimal_path_cells", "expected a non-negative integer")
        instructions.append(Instruction(text, category, goal, optimal))

    return Scenario(world=world, instructions=tuple(instructions), path=path)


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"not valid JSON: {exc}") from exc
    return parse_scenario(data, path=str(path))


def loads_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"not valid JSON: {exc}") from exc
    return parse_scenario(data)


def write_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(scenario.canonical_text(), encoding="utf-8")
