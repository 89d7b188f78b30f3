"""Independent brute-force oracles used to pin expected values.

These deliberately avoid the library's code paths (and scipy.ndimage):
components by BFS flood fill over explicit neighbor offsets, Euler
characteristic by enumerating the cubical complex's cells as Python sets.
"""

from collections import deque
from itertools import product

import numpy as np


def neighbor_offsets(connectivity: int):
    offs = []
    for d in product((-1, 0, 1), repeat=3):
        if d == (0, 0, 0):
            continue
        if connectivity == 6 and sum(abs(v) for v in d) != 1:
            continue
        offs.append(d)
    return offs


def bfs_components(arr: np.ndarray, connectivity: int) -> int:
    """Number of connected components of set voxels, by flood fill."""
    arr = np.asarray(arr, dtype=bool)
    offs = neighbor_offsets(connectivity)
    seen = np.zeros_like(arr)
    count = 0
    dims = arr.shape
    for start in zip(*np.nonzero(arr)):
        if seen[start]:
            continue
        count += 1
        seen[start] = True
        queue = deque([start])
        while queue:
            x, y, z = queue.popleft()
            for dx, dy, dz in offs:
                n = (x + dx, y + dy, z + dz)
                if all(0 <= n[i] < dims[i] for i in range(3)):
                    if arr[n] and not seen[n]:
                        seen[n] = True
                        queue.append(n)
    return count


def euler_by_cell_sets(arr: np.ndarray) -> int:
    """V - E + F - C via explicit cell sets of the closed cubical complex."""
    arr = np.asarray(arr, dtype=bool)
    vertices = set()
    edges = set()
    faces = set()
    cubes = 0
    for x, y, z in zip(*np.nonzero(arr)):
        cubes += 1
        corners = [(x + a, y + b, z + c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]
        vertices.update(corners)
        for axis in range(3):
            for b in (0, 1):
                for c in (0, 1):
                    base = [x, y, z]
                    base[(axis + 1) % 3] += b
                    base[(axis + 2) % 3] += c
                    edges.add((axis, tuple(base)))
        for axis in range(3):
            for side in (0, 1):
                base = [x, y, z]
                base[axis] += side
                faces.add((axis, tuple(base)))
    return len(vertices) - len(edges) + len(faces) - cubes


def dice_by_counting(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    na = int(a.sum())
    nb = int(b.sum())
    if na + nb == 0:
        return 1.0
    inter = 0
    for v in zip(*np.nonzero(a)):
        if b[v]:
            inter += 1
    return 2.0 * inter / (na + nb)


def random_mask(rng: np.random.Generator, max_dim: int = 16, min_dim: int = 4) -> np.ndarray:
    dims = tuple(int(v) for v in rng.integers(min_dim, max_dim + 1, size=3))
    density = rng.uniform(0.1, 0.9)
    return rng.random(dims) < density
