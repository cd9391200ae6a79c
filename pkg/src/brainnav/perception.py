"""Per-direction structured observations.

Views are indexed 0..3 clockwise from the agent's front, matching candidate
point indices, so perception, mapping and decision share one direction
vocabulary. The simulated perceptor reads ground truth from the world; the
remote perceptor drives a vision model through a three-stage prompt sequence
and degrades conservatively when responses don't parse.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from . import _kernels
from .actions import HEADING_OFFSETS
from .llm import ChatClient, TransportError
from .spatial import CoordinateMap
from .world import AgentPose, GridWorld, visible_objects

VIEW_NAMES = ("front", "right", "back", "left")


class PerceptionUnavailable(RuntimeError):
    """Remote perception failed at the transport level; distinct from an
    empty observation."""


@dataclass(frozen=True)
class ViewObservation:
    index: int
    heading: int
    objects: tuple[tuple[str, float], ...]
    traversable: bool
    path_nodes: tuple[int, ...]
    caption: str
    warning: bool = False

    def __post_init__(self):
        if not self.traversable and self.path_nodes:
            raise ValueError("non-traversable view cannot have path nodes")


@dataclass(frozen=True)
class SemanticObservation:
    views: tuple[ViewObservation, ...]

    def __post_init__(self):
        if len(self.views) != 4:
            raise ValueError("an observation carries exactly four views")

    def view(self, i: int) -> ViewObservation:
        return self.views[i]

    def digest(self) -> str:
        parts = []
        for v in self.views:
            flag = "T" if v.traversable else "x"
            objs = ",".join(f"{label}@{dist:g}" for label, dist in v.objects) or "-"
            parts.append(f"{v.index}{flag}:{objs}")
        return "|".join(parts)


@dataclass(frozen=True)
class PerceptorConfig:
    view_range: int = 6
    distance_noise: str = "none"  # "none" | "uniform1" (+/- 1 cell, seeded)
    noise_seed: int = 0

    def __post_init__(self):
        if self.view_range < 1:
            raise ValueError("range must be >= 1")
        if self.distance_noise not in ("none", "uniform1"):
            raise ValueError(f"unknown noise mode {self.distance_noise!r}")


def _noisy_distance(cfg: PerceptorConfig, pose: AgentPose, view: int,
                    label: str, dist: float) -> float:
    # deterministic per (seed, pose, view, object): repeated perceives agree
    rng = random.Random((cfg.noise_seed, pose.x, pose.y, pose.heading, view, label, round(dist, 6)))
    noisy = dist + rng.choice((-1.0, 0.0, 1.0))
    return min(max(noisy, 1.0), float(cfg.view_range))


def _caption(objects, traversable: bool, open_run: int) -> str:
    if objects:
        listed = ", ".join(f"{label} ({dist:.1f} cells)" for label, dist in objects)
    else:
        listed = "no objects"
    way = f"open for {open_run} cells" if traversable else "blocked"
    return f"{listed}; {way}"


def perceive(
    world: GridWorld,
    pose: AgentPose,
    cmap: CoordinateMap | None,
    cfg: PerceptorConfig = PerceptorConfig(),
) -> SemanticObservation:
    """Ground-truth observation of the four views around the pose.

    Path nodes are the consecutive open cells straight ahead (up to the
    perception range), registered in the coordinate map on demand. With
    ``cmap=None`` (spatial ablation) the cells are still seen but stay
    unidentified, so path_nodes is empty for every view.
    """
    views = []
    for i in range(4):
        heading = (pose.heading + 90 * i) % 360
        objects = visible_objects(world, pose, heading, cfg.view_range)
        if cfg.distance_noise == "uniform1":
            objects = [(label, _noisy_distance(cfg, pose, i, label, dist))
                       for label, dist in objects]
        open_run = _kernels.ray_run(
            world.width, world.height, world._mask, pose.x, pose.y, heading, cfg.view_range
        )
        traversable = open_run >= 1
        path_nodes: tuple[int, ...] = ()
        if traversable and cmap is not None:
            dx, dy = HEADING_OFFSETS[heading]
            path_nodes = tuple(
                cmap.node_id_for((pose.x + dx * k, pose.y + dy * k))
                for k in range(1, open_run + 1)
            )
        views.append(
            ViewObservation(
                index=i,
                heading=heading,
                objects=tuple(objects),
                traversable=traversable,
                path_nodes=path_nodes,
                caption=_caption(objects, traversable, open_run),
            )
        )
    return SemanticObservation(views=tuple(views))


def empty_observation(pose: AgentPose) -> SemanticObservation:
    """The observation used when the perception module is ablated."""
    views = tuple(
        ViewObservation(
            index=i,
            heading=(pose.heading + 90 * i) % 360,
            objects=(),
            traversable=False,
            path_nodes=(),
            caption="perception unavailable",
            warning=True,
        )
        for i in range(4)
    )
    return SemanticObservation(views=views)


# --- remote (vision-model) perceptor -------------------------------------

_STAGE_NAMES = ("objects", "traversability", "distances")


def _frame_digest(payload: bytes | str) -> str:
    raw = payload.encode("utf-8") if isinstance(payload, str) else payload
    return hashlib.sha1(raw).hexdigest()[:12]


def _stage_prompt(stage: str, frames) -> str:
    ids = ", ".join(
        f"view {i} ({VIEW_NAMES[i]}, frame {_frame_digest(p)})" for i, p in enumerate(frames)
    )
    header = f"Four camera frames were captured around the robot: {ids}.\n"
    if stage == "objects":
        task = (
            "Stage 1: list the objects you can identify in each view.\n"
            'Reply with JSON only: {"views": [{"objects": ["label", ...]}, ... 4 items]}'
        )
    elif stage == "traversability":
        task = (
            "Stage 2: label each view as traversable (open floor ahead) or not.\n"
            'Reply with JSON only: {"views": [{"traversable": true|false}, ... 4 items]}'
        )
    else:
        task = (
            "Stage 3: estimate the distance in cells to each object listed per view.\n"
            'Reply with JSON only: {"views": [{"distances": [number, ...]}, ... 4 items]}'
        )
    return header + task


def _parse_stage(stage: str, text: str):
    data = json.loads(text)
    views = data["views"]
    if not isinstance(views, list) or len(views) != 4:
        raise ValueError("need exactly four views")
    out = []
    for item in views:
        if stage == "objects":
            labels = item["objects"]
            if not all(isinstance(s, str) and s for s in labels):
                raise ValueError("labels must be non-empty strings")
            out.append(list(labels))
        elif stage == "traversability":
            flag = item["traversable"]
            if not isinstance(flag, bool):
                raise ValueError("traversable must be a boolean")
            out.append(flag)
        else:
            dists = [float(d) for d in item["distances"]]
            out.append(dists)
    return out


def perceive_remote(
    frames,
    client: ChatClient,
    cfg: PerceptorConfig = PerceptorConfig(),
) -> SemanticObservation:
    """Observation assembled from a remote vision model.

    Runs the three-stage sequence (object list -> traversability ->
    distances). A stage whose response stays malformed after one corrective
    retry falls back to conservative defaults (no objects, not traversable)
    with the warning flag set; transport failures surface as
    :class:`PerceptionUnavailable`.
    """
    if len(frames) != 4 or any(not f for f in frames):
        raise ValueError("need four non-empty frame payloads")

    results: dict[str, object] = {}
    warnings: set[str] = set()
    for stage in _STAGE_NAMES:
        prompt = _stage_prompt(stage, frames)
        parsed = None
        for attempt in range(2):
            try:
                reply = client.complete(prompt)
            except TransportError as exc:
                raise PerceptionUnavailable(f"stage {stage}: {exc}") from exc
            try:
                parsed = _parse_stage(stage, reply)
                break
            except (ValueError, KeyError, TypeError):
                if attempt == 0:
                    prompt += "\nYour previous reply was not valid; answer with the exact JSON shape requested."
        if parsed is None:
            warnings.add(stage)
        results[stage] = parsed

    labels = results["objects"] or [[], [], [], []]
    traversable = results["traversability"] or [False, False, False, False]
    distances = results["distances"]

    views = []
    for i in range(4):
        objs: list[tuple[str, float]] = []
        view_warn = "objects" in warnings or "traversability" in warnings
        if labels[i]:
            if distances is not None and len(distances[i]) == len(labels[i]):
                dists = distances[i]
            else:
                dists = [float(cfg.view_range)] * len(labels[i])
                if "distances" not in warnings and distances is not None:
                    view_warn = True
            if "distances" in warnings:
                view_warn = True
            objs = [
                (label, min(max(float(d), 1.0), float(cfg.view_range)))
                for label, d in zip(labels[i], dists)
            ]
        views.append(
            ViewObservation(
                index=i,
                heading=90 * i,
                objects=tuple(objs),
                traversable=bool(traversable[i]),
                path_nodes=(),
                caption=_caption(objs, bool(traversable[i]), 0),
                warning=view_warn,
            )
        )
    return SemanticObservation(views=tuple(views))
