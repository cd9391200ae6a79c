"""Episode memory: action history, fewest-step backtrack planning over the
topological graph, and a cross-episode experience store.

Experience matching is exact: same scenario fingerprint, same normalized
instruction text. Stored action lists are replay-verified at save time so a
lookup hit is always safe to execute blindly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import _kernels
from .actions import MacroAction, STOP, action_from_name
from .spatial import GraphError, TopoGraph
from .world import apply_macro, goal_distance_m


class HistoryError(ValueError):
    pass


class NoPathError(GraphError):
    """Source and target are in different graph components."""


class ExperienceError(ValueError):
    """Replay verification failed; the entry was rejected."""


@dataclass(frozen=True)
class StepRecord:
    t: int
    actions: tuple[MacroAction, ...]
    node_before: int
    node_after: int
    observation_digest: str
    collided: bool = False

    def __post_init__(self):
        if not self.actions:
            raise HistoryError("a step record needs at least one action")


@dataclass
class ActionHistory:
    steps: list[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def record_step(self, record: StepRecord) -> None:
        """Append a record; step indices must be 1, 2, 3, ... with no gaps."""
        expected = self.steps[-1].t + 1 if self.steps else 1
        if record.t != expected:
            raise HistoryError(f"step index {record.t} out of order, expected {expected}")
        self.steps.append(record)

    def detect_revisit(self, node: int) -> bool:
        """True iff the node was already reached (node_after) by a recorded step."""
        return any(rec.node_after == node for rec in self.steps)

    def flat_actions(self) -> list[MacroAction]:
        return [a for rec in self.steps for a in rec.actions]

    def digest(self, last_k: int = 10) -> str:
        """Short text of the last K steps, for prompts and traces."""
        lines = []
        for rec in self.steps[-last_k:]:
            acts = ", ".join(str(a) for a in rec.actions)
            suffix = " (collided)" if rec.collided else ""
            lines.append(f"t={rec.t}: {acts} -> Place {rec.node_after}{suffix}")
        return "\n".join(lines)


def plan_backtrack(graph: TopoGraph, src: int, dst: int) -> list[int]:
    """Minimum-hop node path from src to dst, both inclusive.

    Among equal-length paths the one whose successive node ids compare
    lexicographically smallest wins, which makes plans deterministic.
    """
    if src not in graph:
        raise GraphError(f"unknown node {src}")
    if dst not in graph:
        raise GraphError(f"unknown node {dst}")
    if src == dst:
        return [src]
    ids, index_of, indptr, indices = graph.csr()
    dense = _kernels.bfs_path(indptr, indices, index_of[src], index_of[dst])
    if dense is None:
        raise NoPathError(f"no path from {src} to {dst}")
    return [ids[i] for i in dense]


def normalize_instruction(text: str) -> str:
    return " ".join(text.casefold().split())


@dataclass(frozen=True)
class ExperienceKey:
    scenario_fingerprint: str
    instruction_norm: str

    @classmethod
    def make(cls, fingerprint: str, instruction_text: str) -> "ExperienceKey":
        return cls(fingerprint, normalize_instruction(instruction_text))


class TrajectoryStore:
    """Exact-match store of successful macro-action sequences.

    Persists to a single JSON file (rewritten atomically on every save) when
    a path is given; purely in-memory otherwise.
    """

    VERSION = 1

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[ExperienceKey, list[MacroAction]] = {}
        if self.path is not None and self.path.exists():
            self._load()

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, key: ExperienceKey) -> list[MacroAction] | None:
        actions = self._entries.get(key)
        return list(actions) if actions is not None else None

    def save(self, key: ExperienceKey, actions, scenario, instruction,
             success_radius_m: float = 1.0) -> None:
        """Insert/overwrite an entry after verifying the actions by replay.

        The sequence must end with Stop and leave the agent within the
        success radius of the instruction's goal when replayed from the
        scenario start; otherwise the entry is rejected.
        """
        actions = list(actions)
        if not actions or actions[-1] != STOP:
            raise ExperienceError("stored trajectories must end with Stop")
        world = scenario.world
        pose = world.start
        for action in actions:
            if action.name == "BacktrackTo":
                raise ExperienceError("store primitive actions only")
            pose = apply_macro(world, pose, action).pose_after
        goal_cells = instruction.goal_cells(world)
        if not goal_cells:
            raise ExperienceError("instruction has no goal cell in this scenario")
        error = min(goal_distance_m(world, pose, cell) for cell in goal_cells)
        if error > success_radius_m:
            raise ExperienceError(
                f"replay ends {error:.2f} m from goal (> {success_radius_m} m)"
            )
        self._entries[key] = actions
        if self.path is not None:
            self._write()

    def _load(self) -> None:
        data = json.loads(self.path.read_text(encoding="utf-8"))
        if data.get("version") != self.VERSION:
            raise ExperienceError(f"unsupported experience file version {data.get('version')}")
        for item in data.get("entries", []):
            key = ExperienceKey(item["fingerprint"], item["instruction"])
            self._entries[key] = [action_from_name(n) for n in item["actions"]]

    def _write(self) -> None:
        entries = [
            {
                "fingerprint": key.scenario_fingerprint,
                "instruction": key.instruction_norm,
                "actions": [str(a) for a in actions],
            }
            for key, actions in sorted(
                self._entries.items(),
                key=lambda kv: (kv[0].scenario_fingerprint, kv[0].instruction_norm),
            )
        ]
        payload = json.dumps({"version": self.VERSION, "entries": entries},
                             sort_keys=True, indent=2) + "\n"
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(payload, encoding="utf-8")
        os.replace(tmp, self.path)
