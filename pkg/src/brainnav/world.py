"""Deterministic grid world: occupancy, objects, pose dynamics, visibility.

The world is immutable after construction; agent state is a plain value
(:class:`AgentPose`), so any number of episodes can share one world.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from . import _kernels
from .actions import ACTION_CODES, HEADING_OFFSETS, HEADINGS, MacroAction


class WorldError(ValueError):
    """Invalid world definition (out-of-bounds cell, start on obstacle, ...)."""


@dataclass(frozen=True)
class AgentPose:
    x: int
    y: int
    heading: int  # compass degrees, multiple of 90 in [0, 360)

    def __post_init__(self):
        if self.heading not in HEADINGS:
            raise WorldError(f"heading must be one of {HEADINGS}, got {self.heading}")

    @property
    def cell(self) -> tuple[int, int]:
        return (self.x, self.y)


@dataclass(frozen=True)
class SimObject:
    label: str
    x: int
    y: int

    def __post_init__(self):
        if not self.label:
            raise WorldError("object label must be non-empty")

    @property
    def cell(self) -> tuple[int, int]:
        return (self.x, self.y)


@dataclass(frozen=True)
class StepOutcome:
    pose_after: AgentPose
    moved: bool
    collided: bool


@dataclass(frozen=True)
class GridWorld:
    name: str
    width: int
    height: int
    cell_size_m: float = 0.5
    obstacles: frozenset[tuple[int, int]] = frozenset()
    objects: tuple[SimObject, ...] = ()
    start: AgentPose = AgentPose(0, 0, 0)
    # flat occupancy mask (y * width + x), consumed by the kernel layer
    _mask: bytes = field(default=b"", repr=False, compare=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise WorldError("width and height must be positive")
        if self.cell_size_m <= 0:
            raise WorldError("cell_size_m must be positive")
        for cell in self.obstacles:
            if not self.in_bounds(*cell):
                raise WorldError(f"obstacle {cell} outside {self.width}x{self.height} grid")
        seen = set()
        for obj in self.objects:
            if not self.in_bounds(obj.x, obj.y):
                raise WorldError(f"object {obj.label!r} at {obj.cell} out of bounds")
            key = (obj.label, obj.cell)
            if key in seen:
                raise WorldError(f"duplicate object {obj.label!r} at {obj.cell}")
            seen.add(key)
        if not self.in_bounds(self.start.x, self.start.y):
            raise WorldError(f"start {self.start.cell} out of bounds")
        if self.start.cell in self.obstacles:
            raise WorldError(f"start {self.start.cell} is an obstacle cell")
        mask = bytearray(self.width * self.height)
        for (ox, oy) in self.obstacles:
            mask[oy * self.width + ox] = 1
        object.__setattr__(self, "_mask", bytes(mask))

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_open(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and (x, y) not in self.obstacles

    def objects_labelled(self, label: str) -> list[SimObject]:
        return [o for o in self.objects if o.label == label]


def apply_macro(world: GridWorld, pose: AgentPose, action: MacroAction) -> StepOutcome:
    """Advance the pose by one macro action. Collisions are outcomes, not errors.

    Forward advances one cell along the heading unless the target cell is
    blocked or out of bounds. Backward rotates 180 degrees and then advances
    under the same rule (the rotation sticks even when the advance collides).
    Turns rotate in place; Stop is a no-op.
    """
    code = ACTION_CODES.get(action.name)
    if code is None:
        raise ValueError(f"apply_macro cannot execute {action}; expand it first")
    x, y, heading, moved, collided = _kernels.step_pose(
        world.width, world.height, world._mask, pose.x, pose.y, pose.heading, code
    )
    return StepOutcome(AgentPose(x, y, heading), moved, collided)


def _occluded(world: GridWorld, ax: int, ay: int, ox: int, oy: int) -> bool:
    # only straight grid lines occlude: obstacle strictly between on a shared row/column
    if ax == ox:
        step = 1 if oy > ay else -1
        for y in range(ay + step, oy, step):
            if (ax, y) in world.obstacles:
                return True
    elif ay == oy:
        step = 1 if ox > ax else -1
        for x in range(ax + step, ox, step):
            if (x, ay) in world.obstacles:
                return True
    return False


def visible_objects(
    world: GridWorld, pose: AgentPose, view_heading: int, view_range: int
) -> list[tuple[str, float]]:
    """Objects inside the 90-degree sector ahead of ``view_heading``.

    Returns (label, straight-line cell distance) pairs, nearest first. An
    object on the agent's row or column is hidden by any obstacle strictly
    between agent and object on that line.
    """
    if view_heading not in HEADINGS:
        raise ValueError(f"view_heading must be one of {HEADINGS}")
    if view_range < 1:
        raise ValueError("range must be >= 1")
    fx, fy = HEADING_OFFSETS[view_heading]
    rx, ry = HEADING_OFFSETS[(view_heading + 90) % 360]
    hits = []
    for obj in world.objects:
        dx = obj.x - pose.x
        dy = obj.y - pose.y
        forward = dx * fx + dy * fy
        lateral = dx * rx + dy * ry
        if forward < 1 or abs(lateral) > forward:
            continue
        dist = math.hypot(dx, dy)
        if dist > view_range:
            continue
        if _occluded(world, pose.x, pose.y, obj.x, obj.y):
            continue
        hits.append((dist, obj.label, obj.x, obj.y))
    hits.sort()
    return [(label, dist) for dist, label, _x, _y in hits]


def goal_distance_m(world: GridWorld, pose: AgentPose, goal_cell: tuple[int, int]) -> float:
    """Euclidean distance from pose to goal cell in meters."""
    gx, gy = goal_cell
    if not world.in_bounds(gx, gy):
        raise WorldError(f"goal cell {goal_cell} out of bounds")
    return math.hypot(gx - pose.x, gy - pose.y) * world.cell_size_m


def shortest_path_cells(
    world: GridWorld, start: tuple[int, int], goal: tuple[int, int]
) -> int | None:
    """4-connected BFS distance in cells, or None if unreachable.

    The goal cell itself is allowed to be an obstacle (objects may sit on
    furniture cells); only intermediate cells must be open.
    """
    if start == goal:
        return 0
    dist = {start: 0}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        d = dist[(x, y)]
        for dx, dy in ((0, 1), (1, 0), (0, -1), (-1, 0)):
            nxt = (x + dx, y + dy)
            if nxt in dist or not world.in_bounds(*nxt):
                continue
            if nxt == goal:
                return d + 1
            if nxt in world.obstacles:
                continue
            dist[nxt] = d + 1
            queue.append(nxt)
    return None
