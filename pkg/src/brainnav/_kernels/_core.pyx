# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirrors ``_pure.py`` exactly (see the parity tests)."""

from libc.stdlib cimport malloc, free

BACKEND = "compiled"


cdef inline int _dx(int heading) nogil:
    if heading == 90:
        return 1
    if heading == 270:
        return -1
    return 0


cdef inline int _dy(int heading) nogil:
    if heading == 0:
        return 1
    if heading == 180:
        return -1
    return 0


def step_pose(int width, int height, const unsigned char[:] mask,
              int x, int y, int heading, int code):
    """Apply one primitive action code; returns (x, y, heading, moved, collided)."""
    cdef int nx, ny
    if code == 2:
        return x, y, (heading + 270) % 360, False, False
    if code == 3:
        return x, y, (heading + 90) % 360, False, False
    if code == 4:
        return x, y, heading, False, False
    if code == 1:
        heading = (heading + 180) % 360
    elif code != 0:
        raise ValueError(f"unknown action code {code}")
    nx = x + _dx(heading)
    ny = y + _dy(heading)
    if nx < 0 or nx >= width or ny < 0 or ny >= height or mask[ny * width + nx]:
        return x, y, heading, False, True
    return nx, ny, heading, True, False


def integrate_path(int width, int height, const unsigned char[:] mask,
                   int x, int y, int heading, const unsigned char[:] codes):
    """Replay a whole action-code sequence; returns (x, y, heading, collisions)."""
    cdef int collisions = 0
    cdef int nx, ny
    cdef int code
    cdef Py_ssize_t i, n = codes.shape[0]
    with nogil:
        for i in range(n):
            code = codes[i]
            if code == 2:
                heading = (heading + 270) % 360
                continue
            if code == 3:
                heading = (heading + 90) % 360
                continue
            if code == 4:
                continue
            if code == 1:
                heading = (heading + 180) % 360
            nx = x + _dx(heading)
            ny = y + _dy(heading)
            if nx < 0 or nx >= width or ny < 0 or ny >= height or mask[ny * width + nx]:
                collisions += 1
            else:
                x = nx
                y = ny
    return x, y, heading, collisions


def ray_run(int width, int height, const unsigned char[:] mask,
            int x, int y, int heading, int max_range):
    """Number of consecutive open in-bounds cells straight ahead (<= max_range)."""
    cdef int dx = _dx(heading)
    cdef int dy = _dy(heading)
    cdef int n = 0
    while n < max_range:
        x += dx
        y += dy
        if x < 0 or x >= width or y < 0 or y >= height or mask[y * width + x]:
            break
        n += 1
    return n


def bfs_path(const int[:] indptr, const int[:] indices, int src, int dst):
    """Minimum-hop path on a CSR graph (sorted neighbors), or None."""
    cdef int n = indptr.shape[0] - 1
    if src == dst:
        return [src]
    cdef int *parent = <int *> malloc(n * sizeof(int))
    cdef int *queue = <int *> malloc(n * sizeof(int))
    if parent == NULL or queue == NULL:
        free(parent)
        free(queue)
        raise MemoryError()
    cdef int i, u, v, k, head, tail
    cdef bint found = False
    try:
        for i in range(n):
            parent[i] = -1
        parent[src] = src
        queue[0] = src
        head = 0
        tail = 1
        while head < tail and not found:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if parent[v] < 0:
                    parent[v] = u
                    if v == dst:
                        found = True
                        break
                    queue[tail] = v
                    tail += 1
        if not found:
            return None
        path = [dst]
        u = dst
        while u != src:
            u = parent[u]
            path.append(u)
        path.reverse()
        return path
    finally:
        free(parent)
        free(queue)
