"""Kernel backend selection.

Prefers the compiled extension when it was built; falls back to the pure
Python implementation otherwise. Set ``BRAINNAV_PURE_KERNELS=1`` to force
the fallback (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _pure

if os.environ.get("BRAINNAV_PURE_KERNELS") == "1":
    _impl = _pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND
step_pose = _impl.step_pose
integrate_path = _impl.integrate_path
ray_run = _impl.ray_run
bfs_path = _impl.bfs_path

__all__ = ["BACKEND", "step_pose", "integrate_path", "ray_run", "bfs_path"]
