"""Decision policies: a deterministic oracle, degraded variants used by the
ablation switches, and the language-model adapter (prompt builder + parser).

All policies consume the same :class:`DecisionInput` and return an
:class:`ActionPlan` with the three outputs: a rationale, a high-level action
sequence, and the concrete motion command list.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

from .actions import BACKWARD, FORWARD, MacroAction, STOP, TURN_LEFT, TURN_RIGHT, backtrack_to
from .memory import NoPathError, plan_backtrack
from .perception import SemanticObservation, VIEW_NAMES
from .spatial import GraphError, TopoGraph

# observed distance at which a goal object counts as adjacent (diagonal = sqrt(2))
ADJACENT_CELLS = 1.5

VIEW_MOVES: dict[int, tuple[MacroAction, ...]] = {
    0: (FORWARD,),
    1: (TURN_RIGHT, FORWARD),
    2: (BACKWARD,),
    3: (TURN_LEFT, FORWARD),
}


class DecisionUnavailable(RuntimeError):
    """Remote decision transport failed; the episode aborts as a failure."""


class ParseError(ValueError):
    def __init__(self, message: str, raw: str):
        self.raw = raw
        super().__init__(message)


@dataclass(frozen=True)
class GoalTarget:
    """Episode goal as the policies see it.

    Label goals are matched against observed objects; cell goals carry the
    coordinate-map node the runner registered for the target cell.
    """

    label: str | None = None
    cell: tuple[int, int] | None = None
    node_id: int | None = None

    def describe(self) -> str:
        if self.label is not None:
            return f"the {self.label}"
        return f"cell {self.cell}"


@dataclass(frozen=True)
class DecisionInput:
    instruction_text: str
    category: str
    observation: SemanticObservation
    topo_snapshot: str
    current_node: int
    unvisited: frozenset[int]
    history_digest: str
    collided_last: bool = False

    def __post_init__(self):
        if self.current_node in self.unvisited:
            raise ValueError("current node cannot be in the unvisited set")


@dataclass(frozen=True)
class ActionPlan:
    decision: str
    action_sequence: tuple[str, ...]
    motion_commands: tuple[MacroAction, ...]
    declared_done: bool = False

    def __post_init__(self):
        if not self.motion_commands:
            raise ValueError("a plan must carry at least one motion command")
        if self.declared_done and self.motion_commands[-1] != STOP:
            raise ValueError("a done plan must end with Stop")


def _stop_plan(reason: str, done: bool) -> ActionPlan:
    return ActionPlan(
        decision=reason,
        action_sequence=("stop",),
        motion_commands=(STOP,),
        declared_done=done,
    )


def _move_plan(reason: str, view_index: int, target_node: int | None) -> ActionPlan:
    where = f"Place {target_node}" if target_node is not None else "the open cell"
    return ActionPlan(
        decision=reason,
        action_sequence=(f"move {VIEW_NAMES[view_index]} to {where}",),
        motion_commands=VIEW_MOVES[view_index],
    )


def _best_goal_view(obs: SemanticObservation, label: str):
    """(distance, view index) of the nearest goal-labelled observation, or None."""
    best = None
    for view in obs.views:
        for obj_label, dist in view.objects:
            if obj_label == label and (best is None or (dist, view.index) < best):
                best = (dist, view.index)
    return best


def decide_oracle(inp: DecisionInput, graph: TopoGraph, goal: GoalTarget) -> ActionPlan:
    """Deterministic reference policy: goal-greedy pursuit with smallest-id
    frontier exploration through the backtrack planner.

    Pure in its inputs: identical (input, graph, goal) yield identical plans.
    """
    obs = inp.observation

    if goal.label is not None:
        hit = _best_goal_view(obs, goal.label)
        if hit is not None:
            dist, vi = hit
            if dist <= ADJACENT_CELLS:
                return _stop_plan(f"{goal.describe()} is within reach", done=True)
            view = obs.view(vi)
            blocked_front = inp.collided_last and vi == 0
            if view.path_nodes and not blocked_front:
                return _move_plan(
                    f"{goal.describe()} seen {dist:.1f} cells away in view {vi}",
                    vi,
                    view.path_nodes[0],
                )
            # goal view not walkable: fall through to exploration

    if goal.node_id is not None and goal.node_id in graph:
        if goal.node_id == inp.current_node:
            return _stop_plan("standing on the goal cell", done=True)
        if inp.current_node in graph and goal.node_id in graph.neighbors(inp.current_node):
            return _stop_plan("goal cell is adjacent", done=True)
        try:
            plan_backtrack(graph, inp.current_node, goal.node_id)
        except (GraphError, NoPathError):
            pass
        else:
            return ActionPlan(
                decision=f"routing to goal Place {goal.node_id}",
                action_sequence=(f"go to Place {goal.node_id}",),
                motion_commands=(backtrack_to(goal.node_id),),
            )

    front = obs.view(0)
    banned_first_hop = front.path_nodes[0] if (inp.collided_last and front.path_nodes) else None
    for node in sorted(inp.unvisited):
        if node not in graph:
            continue
        try:
            path = plan_backtrack(graph, inp.current_node, node)
        except (GraphError, NoPathError):
            continue
        if banned_first_hop is not None and len(path) > 1 and path[1] == banned_first_hop:
            continue
        return ActionPlan(
            decision=f"exploring unvisited Place {node}",
            action_sequence=(f"backtrack to Place {node}",),
            motion_commands=(backtrack_to(node),),
        )

    return _stop_plan("exploration exhausted", done=False)


def decide_memoryless(inp: DecisionInput, goal: GoalTarget, rng: random.Random) -> ActionPlan:
    """Oracle without memory: keeps goal pursuit but explores by picking a
    random traversable view (no visited tracking, no backtracking)."""
    obs = inp.observation

    if goal.label is not None:
        hit = _best_goal_view(obs, goal.label)
        if hit is not None:
            dist, vi = hit
            if dist <= ADJACENT_CELLS:
                return _stop_plan(f"{goal.describe()} is within reach", done=True)
            view = obs.view(vi)
            if view.traversable and not (inp.collided_last and vi == 0):
                target = view.path_nodes[0] if view.path_nodes else None
                return _move_plan(f"{goal.describe()} seen in view {vi}", vi, target)

    if goal.node_id is not None:
        if goal.node_id == inp.current_node:
            return _stop_plan("standing on the goal cell", done=True)
        for view in obs.views:
            if view.path_nodes and view.path_nodes[0] == goal.node_id:
                return _move_plan("goal cell is one step away", view.index, goal.node_id)

    open_views = [v.index for v in obs.views if v.traversable]
    if inp.collided_last and len(open_views) > 1 and 0 in open_views:
        open_views.remove(0)
    if not open_views:
        return _stop_plan("nowhere to go", done=False)
    vi = rng.choice(open_views)
    view = obs.view(vi)
    target = view.path_nodes[0] if view.path_nodes else None
    return _move_plan("wandering", vi, target)


def decide_random(inp: DecisionInput, rng: random.Random) -> ActionPlan:
    """Decision ablation: uniformly random traversable view, never declares done."""
    open_views = [v.index for v in inp.observation.views if v.traversable]
    if not open_views:
        return _stop_plan("nowhere to go", done=False)
    vi = rng.choice(open_views)
    view = inp.observation.view(vi)
    target = view.path_nodes[0] if view.path_nodes else None
    return _move_plan("random choice", vi, target)


# --- language-model adapter ------------------------------------------------


@dataclass(frozen=True)
class Option:
    letter: str
    kind: str  # "move" | "backtrack" | "stop"
    description: str
    motions: tuple[MacroAction, ...]
    view_index: int | None = None
    node_id: int | None = None


def _letter(i: int) -> str:
    # A..Z, then AA, AB, ... for pathological option counts
    out = ""
    i += 1
    while i > 0:
        i, rem = divmod(i - 1, 26)
        out = chr(ord("A") + rem) + out
    return out


def build_options(inp: DecisionInput) -> list[Option]:
    """Deterministic option table: moves by view index, then backtracks by
    node id, then Stop."""
    options: list[Option] = []
    move_targets: set[int] = set()
    for view in inp.observation.views:
        if not view.traversable or not view.path_nodes:
            continue
        node = view.path_nodes[0]
        move_targets.add(node)
        options.append(
            Option(
                letter="",
                kind="move",
                description=f"Move {VIEW_NAMES[view.index]} to Place {node} (view {view.index})",
                motions=VIEW_MOVES[view.index],
                view_index=view.index,
                node_id=node,
            )
        )
    for node in sorted(inp.unvisited - move_targets):
        options.append(
            Option(
                letter="",
                kind="backtrack",
                description=f"Backtrack to Place {node}",
                motions=(backtrack_to(node),),
                node_id=node,
            )
        )
    options.append(Option(letter="", kind="stop", description="Stop", motions=(STOP,)))
    return [
        Option(_letter(i), o.kind, o.description, o.motions, o.view_index, o.node_id)
        for i, o in enumerate(options)
    ]


def build_prompt(inp: DecisionInput, options: list[Option] | None = None) -> str:
    """Render the decision prompt; byte-identical for identical inputs."""
    if options is None:
        options = build_options(inp)
    lines = [
        "You are a navigation robot in a grid world. Choose the next action.",
        "",
        f"Instruction: {inp.instruction_text}",
        f"Category: {inp.category}",
        "",
        "Perception (view 0 = front, then clockwise):",
    ]
    for view in inp.observation.views:
        objs = ", ".join(f"{label} ({dist:.1f} cells)" for label, dist in view.objects) or "none"
        ahead = ", ".join(str(n) for n in view.path_nodes) or "none"
        state = "open" if view.traversable else "blocked"
        lines.append(
            f"- View {view.index} ({VIEW_NAMES[view.index]}, heading {view.heading}): "
            f"{state}; objects: {objs}; places ahead: {ahead}"
        )
    lines.append("")
    lines.append("Topological map:")
    lines.append(inp.topo_snapshot if inp.topo_snapshot else "(no places mapped yet)")
    lines.append(f"Current place: {inp.current_node}")
    unvisited = ", ".join(str(n) for n in sorted(inp.unvisited)) or "none"
    lines.append(f"Unvisited places: {unvisited}")
    lines.append("")
    lines.append("Recent steps:")
    lines.append(inp.history_digest if inp.history_digest else "(none)")
    if inp.collided_last:
        lines.append("")
        lines.append("Warning: the last move collided with an obstacle.")
    lines.append("")
    lines.append("Options:")
    for option in options:
        lines.append(f"{option.letter}. {option.description}")
    lines.append("")
    lines.append(
        "Explain your reasoning briefly, then finish with a single line of the "
        "form: Action: <letter>"
    )
    return "\n".join(lines)


_ACTION_RE = re.compile(r"action\s*:\s*([A-Za-z]+)", re.IGNORECASE)


def parse_response(text: str, options: list[Option]) -> ActionPlan:
    """Extract the first ``Action: <letter>`` token and map it to a plan."""
    if not options:
        raise ValueError("options table must be non-empty")
    match = _ACTION_RE.search(text)
    if match is None:
        raise ParseError("no 'Action: <letter>' token found", raw=text)
    letter = match.group(1).upper()
    table = {o.letter: o for o in options}
    option = table.get(letter)
    if option is None:
        raise ParseError(f"action letter {letter!r} not in option table", raw=text)
    rationale = text[: match.start()].strip()
    return ActionPlan(
        decision=rationale,
        action_sequence=(option.description,),
        motion_commands=option.motions,
        declared_done=option.kind == "stop",
    )


def render_response(rationale: str, letter: str) -> str:
    """Inverse of parse_response for a chosen option (used in round-trip tests)."""
    return f"{rationale}\nAction: {letter}"


CORRECTIVE_SUFFIX = (
    "\n\nYour previous reply could not be parsed. Answer again and end with "
    "exactly one line of the form: Action: <letter>"
)

# total remote attempts per decision before falling back to the oracle
LLM_ATTEMPTS = 2


@dataclass
class LlmCallMeta:
    attempts: int = 0
    parse_failures: int = 0
    fallback: bool = False
    exchanges: list[tuple[str, str]] = field(default_factory=list)


def decide_llm(
    inp: DecisionInput,
    graph: TopoGraph,
    goal: GoalTarget,
    client,
) -> tuple[ActionPlan, LlmCallMeta]:
    """Prompt -> remote call -> parse, with one corrective retry.

    After two malformed responses the oracle policy answers instead (flagged
    in the meta); transport failures raise :class:`DecisionUnavailable`.
    """
    from .llm import TransportError

    options = build_options(inp)
    prompt = build_prompt(inp, options)
    meta = LlmCallMeta()
    for attempt in range(LLM_ATTEMPTS):
        try:
            reply = client.complete(prompt)
        except TransportError as exc:
            raise DecisionUnavailable(str(exc)) from exc
        meta.attempts += 1
        meta.exchanges.append((prompt, reply))
        try:
            return parse_response(reply, options), meta
        except ParseError:
            meta.parse_failures += 1
            if attempt == 0:
                prompt = prompt + CORRECTIVE_SUFFIX
    meta.fallback = True
    return decide_oracle(inp, graph, goal), meta
