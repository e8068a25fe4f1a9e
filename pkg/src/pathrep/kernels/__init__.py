"""Kernel backend selection.

The hot inner loops (Dijkstra, BFS, CART tree growth) exist twice: a Cython
extension (``_ckernels``) and a pure-Python mirror (``_pykernels``).  The
compiled backend is used when importable; set ``PATHREP_PURE_PYTHON=1`` to
force the fallback.  Both produce bit-identical outputs, so the choice only
affects speed (see benchmarks/bench_kernels.py).
"""

from __future__ import annotations

import os

if os.environ.get("PATHREP_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _pykernels as _impl  # type: ignore[no-redef]

BACKEND = _impl.BACKEND
dijkstra = _impl.dijkstra
bfs_mask = _impl.bfs_mask
build_tree = _impl.build_tree
predict_tree = _impl.predict_tree


def get_backend(name: str):
    """Return a specific backend module ("compiled" or "python"); for tests
    and benchmarks that compare the two."""
    if name == "python":
        from . import _pykernels
        return _pykernels
    if name == "compiled":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend: {name!r}")
