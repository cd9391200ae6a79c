"""Pure-Python kernels: pose stepping, path integration, ray casting, BFS.

Reference implementation for the compiled extension in ``_core.pyx``; both
must stay behaviourally identical (enforced by the parity tests).

Grid cells are addressed as ``mask[y * width + x]`` where a non-zero byte
marks an obstacle. Headings are compass degrees in {0, 90, 180, 270} with
0 = North = +y and clockwise positive.
"""

from __future__ import annotations

BACKEND = "pure"

_DX = {0: 0, 90: 1, 180: 0, 270: -1}
_DY = {0: 1, 90: 0, 180: -1, 270: 0}


def step_pose(width, height, mask, x, y, heading, code):
    """Apply one primitive action code; returns (x, y, heading, moved, collided)."""
    if code == 2:  # TurnLeft
        return x, y, (heading + 270) % 360, False, False
    if code == 3:  # TurnRight
        return x, y, (heading + 90) % 360, False, False
    if code == 4:  # Stop
        return x, y, heading, False, False
    if code == 1:  # Backward: rotate 180 then advance; the turn happens regardless
        heading = (heading + 180) % 360
    elif code != 0:
        raise ValueError(f"unknown action code {code}")
    nx = x + _DX[heading]
    ny = y + _DY[heading]
    if nx < 0 or nx >= width or ny < 0 or ny >= height or mask[ny * width + nx]:
        return x, y, heading, False, True
    return nx, ny, heading, True, False


def integrate_path(width, height, mask, x, y, heading, codes):
    """Replay a whole action-code sequence; returns (x, y, heading, collisions)."""
    collisions = 0
    for code in codes:
        x, y, heading, _moved, collided = step_pose(
            width, height, mask, x, y, heading, code
        )
        if collided:
            collisions += 1
    return x, y, heading, collisions


def ray_run(width, height, mask, x, y, heading, max_range):
    """Number of consecutive open in-bounds cells straight ahead (<= max_range)."""
    dx = _DX[heading]
    dy = _DY[heading]
    n = 0
    while n < max_range:
        x += dx
        y += dy
        if x < 0 or x >= width or y < 0 or y >= height or mask[y * width + x]:
            break
        n += 1
    return n


def bfs_path(indptr, indices, src, dst):
    """Minimum-hop path on a CSR graph, or None if unreachable.

    Neighbor lists must be sorted ascending; expanding them in order makes
    the parent chain the lexicographically smallest shortest path.
    """
    n = len(indptr) - 1
    if src == dst:
        return [src]
    parent = [-1] * n
    parent[src] = src
    queue = [src]
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if parent[v] < 0:
                parent[v] = u
                if v == dst:
                    path = [dst]
                    while path[-1] != src:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return path
                queue.append(v)
    return None
