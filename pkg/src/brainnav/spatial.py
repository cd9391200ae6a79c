"""Dual spatial maps: coordinate registry with monotone node IDs plus an
undirected topological graph with a roadgraph adjacency view.

Both are updated after every step by the episode runner; candidate points
for all four directions are generated unconditionally (traversability is
perception's job).
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass

from .actions import HEADING_OFFSETS, HEADINGS
from .world import AgentPose


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class CandidatePoint:
    index: int  # 0 front, 1 right, 2 back, 3 left
    coord: tuple[int, int]
    heading: int
    node_id: int | None = None


def gen_candidates(pose: AgentPose) -> list[CandidatePoint]:
    """The four neighbour cells of the pose, indexed clockwise from front.

    Candidate i sits one cell away along heading (pose.heading + 90*i) mod 360.
    """
    if pose.heading not in HEADINGS:
        raise ValueError(f"heading must be one of {HEADINGS}")
    out = []
    for i in range(4):
        heading_i = (pose.heading + i * 90) % 360
        dx, dy = HEADING_OFFSETS[heading_i]
        out.append(CandidatePoint(i, (pose.x + dx, pose.y + dy), heading_i))
    return out


class CoordinateMap:
    """Registry mapping visited/candidate cells to unique, monotone node IDs."""

    def __init__(self):
        self._by_coord: dict[tuple[int, int], int] = {}
        self._by_id: dict[int, tuple[int, int]] = {}
        self.next_id = 0

    def __len__(self) -> int:
        return len(self._by_coord)

    def __contains__(self, coord: tuple[int, int]) -> bool:
        return coord in self._by_coord

    def node_id_for(self, coord: tuple[int, int]) -> int:
        """Existing ID for a registered cell, or register it with the next ID."""
        coord = (int(coord[0]), int(coord[1]))
        node = self._by_coord.get(coord)
        if node is None:
            node = self.next_id
            self.next_id += 1
            self._by_coord[coord] = node
            self._by_id[node] = coord
        return node

    def lookup(self, coord: tuple[int, int]) -> int | None:
        return self._by_coord.get(coord)

    def coord_of(self, node_id: int) -> tuple[int, int]:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise GraphError(f"node {node_id} has no registered coordinate") from None

    def items(self):
        return self._by_coord.items()


class TopoGraph:
    """Undirected graph of place nodes; ``roadgraph`` is the adjacency view."""

    def __init__(self):
        self.nodes: set[int] = set()
        self.edges: set[frozenset[int]] = set()
        self.roadgraph: dict[int, set[int]] = {}
        self._version = 0
        self._csr_cache = None

    def connect(self, v_c: int, v_i: int) -> None:
        """Add both nodes and the undirected edge between them (idempotent)."""
        if v_c == v_i:
            raise GraphError(f"self-loop on node {v_c} rejected")
        edge = frozenset((v_c, v_i))
        if edge in self.edges:
            return
        self.nodes.add(v_c)
        self.nodes.add(v_i)
        self.edges.add(edge)
        self.roadgraph.setdefault(v_c, set()).add(v_i)
        self.roadgraph.setdefault(v_i, set()).add(v_c)
        self._version += 1

    def neighbors(self, v: int) -> set[int]:
        if v not in self.nodes:
            raise GraphError(f"unknown node {v}")
        return set(self.roadgraph.get(v, set()))

    def __contains__(self, v: int) -> bool:
        return v in self.nodes

    def snapshot_text(self) -> str:
        """Textual node -> neighbour-list form, as embedded in decision prompts."""
        lines = []
        for v in sorted(self.nodes):
            adj = sorted(self.roadgraph.get(v, set()))
            if adj:
                linked = ", ".join(f"Place {u}" for u in adj)
                lines.append(f"Place {v} connects to {linked}")
            else:
                lines.append(f"Place {v} connects to nothing")
        return "\n".join(lines)

    def csr(self):
        """(sorted node ids, index-of map, indptr, indices) for the BFS kernel.

        Cached until the next mutation. Neighbor runs are sorted so the kernel
        returns the lexicographically smallest shortest path.
        """
        cache = self._csr_cache
        if cache is not None and cache[0] == self._version:
            return cache[1]
        ids = sorted(self.nodes)
        index_of = {v: i for i, v in enumerate(ids)}
        indptr = array("i", [0])
        indices = array("i")
        for v in ids:
            for u in sorted(self.roadgraph.get(v, set())):
                indices.append(index_of[u])
            indptr.append(len(indices))
        result = (ids, index_of, indptr, indices)
        self._csr_cache = (self._version, result)
        return result
