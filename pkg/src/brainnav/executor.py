"""Motion execution: macro-to-motion conversion and orientation handling.

Relative orientation (turns from the current heading) drives normal motion;
absolute compass orientation is engaged while following a backtrack path,
where each hop's target heading comes from the coordinate difference.
"""

from __future__ import annotations

from dataclasses import dataclass

from .actions import (
    BACKWARD,
    FORWARD,
    HEADING_OFFSETS,
    MacroAction,
    STOP,
    TURN_LEFT,
    TURN_RIGHT,
)
from .spatial import CoordinateMap
from .world import AgentPose


class ExecutionError(ValueError):
    pass


@dataclass(frozen=True)
class MotionCommand:
    """Low-level command: Advance (one cell), Rotate (+/-90 or 180), Halt."""

    verb: str
    degrees: int = 0

    def __post_init__(self):
        if self.verb == "Rotate" and abs(self.degrees) not in (90, 180):
            raise ExecutionError(f"rotate magnitude must be 90 or 180, got {self.degrees}")
        if self.verb not in ("Advance", "Rotate", "Halt"):
            raise ExecutionError(f"unknown motion verb {self.verb!r}")

    def __str__(self) -> str:
        if self.verb == "Rotate":
            return f"Rotate({self.degrees:+d})"
        return self.verb


ADVANCE = MotionCommand("Advance")
HALT = MotionCommand("Halt")

_MOTION_TABLE = {
    "Forward": (ADVANCE,),
    "TurnLeft": (MotionCommand("Rotate", -90),),
    "TurnRight": (MotionCommand("Rotate", 90),),
    "Backward": (MotionCommand("Rotate", 180), ADVANCE),
    "Stop": (HALT,),
}

_DELTA_TO_HEADING = {offset: heading for heading, offset in HEADING_OFFSETS.items()}


def to_motion(action: MacroAction) -> list[MotionCommand]:
    """Primitive macro action -> ordered motion commands."""
    if action.name == "BacktrackTo":
        raise ExecutionError("BacktrackTo must be expanded via execute_backtrack")
    return list(_MOTION_TABLE[action.name])


def delta_to_heading(dx: int, dy: int) -> int:
    """Compass heading for a one-cell step; only unit axis deltas are legal."""
    try:
        return _DELTA_TO_HEADING[(dx, dy)]
    except KeyError:
        raise ExecutionError(f"({dx}, {dy}) is not a unit axis step") from None


def heading_after(current: int, delta: int) -> int:
    """New heading after rotating by delta degrees (any multiple of 90)."""
    if delta % 90 != 0:
        raise ExecutionError(f"rotation must be a multiple of 90, got {delta}")
    return (current + delta) % 360


def rotation_actions(current: int, target: int) -> list[MacroAction]:
    """Minimal turn sequence from one compass heading to another.

    A 180-degree reorientation is two clockwise quarter turns; the macro set
    has no standalone 180 rotation outside Backward.
    """
    delta = (target - current) % 360
    if delta == 0:
        return []
    if delta == 90:
        return [TURN_RIGHT]
    if delta == 270:
        return [TURN_LEFT]
    return [TURN_RIGHT, TURN_RIGHT]


def execute_backtrack(
    path: list[int], pose: AgentPose, cmap: CoordinateMap
) -> list[MacroAction]:
    """Expand a node path into turn/Forward macros using absolute orientation.

    Consecutive path nodes must map to adjacent cells; the path must start at
    the agent's current cell. A single-node path expands to nothing.
    """
    if not path:
        raise ExecutionError("empty backtrack path")
    if cmap.coord_of(path[0]) != pose.cell:
        raise ExecutionError(
            f"path starts at node {path[0]} {cmap.coord_of(path[0])}, agent is at {pose.cell}"
        )
    actions: list[MacroAction] = []
    heading = pose.heading
    x, y = pose.cell
    for node in path[1:]:
        tx, ty = cmap.coord_of(node)
        target_heading = delta_to_heading(tx - x, ty - y)  # raises on non-adjacent hop
        actions.extend(rotation_actions(heading, target_heading))
        actions.append(FORWARD)
        heading = target_heading
        x, y = tx, ty
    return actions


__all__ = [
    "ADVANCE",
    "BACKWARD",
    "ExecutionError",
    "FORWARD",
    "HALT",
    "MacroAction",
    "MotionCommand",
    "STOP",
    "TURN_LEFT",
    "TURN_RIGHT",
    "delta_to_heading",
    "execute_backtrack",
    "heading_after",
    "rotation_actions",
    "to_motion",
]
