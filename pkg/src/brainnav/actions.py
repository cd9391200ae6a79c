"""Macro action vocabulary shared by the world simulator, planner and executor.

The compass convention used everywhere: 0 deg = North = +y, clockwise
positive, so 90 = East (+x), 180 = South (-y), 270 = West (-x).
"""

from __future__ import annotations

from dataclasses import dataclass

HEADINGS = (0, 90, 180, 270)

# heading -> one-cell offset straight ahead
HEADING_OFFSETS = {0: (0, 1), 90: (1, 0), 180: (0, -1), 270: (-1, 0)}

# integer codes used by the kernel layer
CODE_FORWARD = 0
CODE_BACKWARD = 1
CODE_TURN_LEFT = 2
CODE_TURN_RIGHT = 3
CODE_STOP = 4


@dataclass(frozen=True)
class MacroAction:
    """One discrete high-level command.

    ``target`` is only meaningful for the BacktrackTo variant, which names a
    node of the topological map and is expanded into primitive actions by the
    episode runner before execution.
    """

    name: str
    target: int | None = None

    def __str__(self) -> str:
        if self.target is not None:
            return f"{self.name}:{self.target}"
        return self.name


FORWARD = MacroAction("Forward")
BACKWARD = MacroAction("Backward")
TURN_LEFT = MacroAction("TurnLeft")
TURN_RIGHT = MacroAction("TurnRight")
STOP = MacroAction("Stop")

PRIMITIVES = {a.name: a for a in (FORWARD, BACKWARD, TURN_LEFT, TURN_RIGHT, STOP)}

ACTION_CODES = {
    "Forward": CODE_FORWARD,
    "Backward": CODE_BACKWARD,
    "TurnLeft": CODE_TURN_LEFT,
    "TurnRight": CODE_TURN_RIGHT,
    "Stop": CODE_STOP,
}


def backtrack_to(node_id: int) -> MacroAction:
    return MacroAction("BacktrackTo", node_id)


def action_from_name(text: str) -> MacroAction:
    """Parse the serialized form used in traces and experience files."""
    if text in PRIMITIVES:
        return PRIMITIVES[text]
    if text.startswith("BacktrackTo:"):
        return backtrack_to(int(text.split(":", 1)[1]))
    raise ValueError(f"unknown macro action {text!r}")
