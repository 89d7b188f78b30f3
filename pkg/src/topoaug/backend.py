"""Kernel backend selection.

The hot voxel kernels exist twice: a numba-compiled version (default) and
a pure NumPy/Python fallback. Set ``TOPOAUG_BACKEND`` to ``numba``,
``numpy`` or ``auto`` (default) before import to choose. ``auto`` prefers
numba and silently falls back to NumPy if numba is unavailable; ``numba``
raises instead of falling back.

Both implementations are bitwise-equivalent; ``benchmarks/bench_backends.py``
compares their speed.
"""

from __future__ import annotations

import os

_choice = os.environ.get("TOPOAUG_BACKEND", "auto").strip().lower()
if _choice not in {"auto", "numba", "numpy"}:
    raise RuntimeError(
        f"TOPOAUG_BACKEND must be one of auto|numba|numpy, got {_choice!r}"
    )

if _choice == "numpy":
    from . import _kernels_numpy as kernels

    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as kernels  # type: ignore[no-redef]

        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        from . import _kernels_numpy as kernels  # type: ignore[no-redef]

        BACKEND = "numpy"

euler_counts = kernels.euler_counts
is_simple = kernels.is_simple
wc_ok_after = kernels.wc_ok_after
erode_pass = kernels.erode_pass
dilate_pass = kernels.dilate_pass
fm_grow = kernels.fm_grow
fm_shrink = kernels.fm_shrink
