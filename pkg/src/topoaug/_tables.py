"""Constant lookup tables for the 3x3x3 neighborhood, shared by both backends.

Positions in the neighborhood are indexed 0..26 with
``p = (dx+1)*9 + (dy+1)*3 + (dz+1)``; the center voxel is index 13.
"""

from __future__ import annotations

import numpy as np

CENTER = 13

_offsets = []
for dx in (-1, 0, 1):
    for dy in (-1, 0, 1):
        for dz in (-1, 0, 1):
            _offsets.append((dx, dy, dz))
OFFSETS = np.asarray(_offsets, dtype=np.int64)  # (27, 3)

_manh = np.abs(OFFSETS).sum(axis=1)
IS_N6 = (_manh == 1)
IS_N18 = (_manh >= 1) & (_manh <= 2)
IS_N26 = (_manh >= 1)

OFFS26 = OFFSETS[IS_N26]  # (26, 3)
OFFS6 = OFFSETS[IS_N6]  # (6, 3)


def _adjacency(metric: str) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor lists among the 27 positions under 26- or 6-adjacency."""
    nbrs = np.full((27, 26), -1, dtype=np.int64)
    counts = np.zeros(27, dtype=np.int64)
    for i in range(27):
        for j in range(27):
            if i == j:
                continue
            d = OFFSETS[j] - OFFSETS[i]
            if metric == "26":
                ok = np.abs(d).max() == 1
            else:
                ok = np.abs(d).sum() == 1
            if ok:
                nbrs[i, counts[i]] = j
                counts[i] += 1
    return nbrs, counts


ADJ26, ADJ26_N = _adjacency("26")
ADJ6, ADJ6_N = _adjacency("6")

# Corner offsets of a 2x2x2 block relative to its origin, and the four
# antipodal index pairs within that corner list.
BLOCK_CORNERS = np.asarray(
    [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)], dtype=np.int64
)
ANTIPODAL_PAIRS = np.asarray([(0, 7), (1, 6), (2, 5), (3, 4)], dtype=np.int64)

# The three axis-plane square orientations as pairs of in-plane axes.
SQUARE_AXES = np.asarray([(0, 1), (0, 2), (1, 2)], dtype=np.int64)
