"""Pure NumPy/Python reference kernels.

Semantically identical to :mod:`topoaug._kernels_numba`; selected with
``TOPOAUG_BACKEND=numpy``. Hot loops run in the interpreter, so this
backend is slow on large volumes but handy for debugging and as the
equivalence baseline in tests and benchmarks.

All voxel kernels operate on arrays padded by one background voxel per
side; coordinates and flat indices refer to the padded array (C-order
flat index == lexicographic (x, y, z) order).
"""

from __future__ import annotations

import heapq

import numpy as np

from ._tables import ADJ6, ADJ6_N, ADJ26, ADJ26_N, CENTER, IS_N6, IS_N18, OFFS6, OFFS26


def euler_counts(mask: np.ndarray) -> tuple[int, int, int, int]:
    """(V, E, F, C) of the cubical complex of set voxels (closed unit cubes)."""
    p = np.pad(np.asarray(mask, dtype=bool), 1)
    c = int(p.sum())
    f = 0
    f += int((p[:-1, :, :] | p[1:, :, :]).sum())
    f += int((p[:, :-1, :] | p[:, 1:, :]).sum())
    f += int((p[:, :, :-1] | p[:, :, 1:]).sum())
    e = 0
    e += int((p[:, :-1, :-1] | p[:, 1:, :-1] | p[:, :-1, 1:] | p[:, 1:, 1:]).sum())
    e += int((p[:-1, :, :-1] | p[1:, :, :-1] | p[:-1, :, 1:] | p[1:, :, 1:]).sum())
    e += int((p[:-1, :-1, :] | p[1:, :-1, :] | p[:-1, 1:, :] | p[1:, 1:, :]).sum())
    v = p[:-1, :-1, :-1]
    for sx in (0, 1):
        for sy in (0, 1):
            for sz in (0, 1):
                if sx or sy or sz:
                    v = v | p[sx : sx + v.shape[0], sy : sy + v.shape[1], sz : sz + v.shape[2]]
    return int(v.sum()), e, f, c


def _gather(mask: np.ndarray, x: int, y: int, z: int) -> np.ndarray:
    return np.ascontiguousarray(mask[x - 1 : x + 2, y - 1 : y + 2, z - 1 : z + 2]).reshape(27)


def _count26(occ: np.ndarray, want: int) -> int:
    """Number of 26-components among punctured-neighborhood positions with value ``want``."""
    seen = np.zeros(27, dtype=bool)
    comps = 0
    for s in range(27):
        if s == CENTER or occ[s] != want or seen[s]:
            continue
        comps += 1
        stack = [s]
        seen[s] = True
        while stack:
            cur = stack.pop()
            for k in range(ADJ26_N[cur]):
                nxt = ADJ26[cur, k]
                if nxt != CENTER and occ[nxt] == want and not seen[nxt]:
                    seen[nxt] = True
                    stack.append(nxt)
    return comps


def _count_geo6(occ: np.ndarray, want: int) -> int:
    """6-components within the geodesic 18-neighborhood that touch a face neighbor."""
    seen = np.zeros(27, dtype=bool)
    comps = 0
    for s in range(27):
        if not IS_N6[s] or occ[s] != want or seen[s]:
            continue
        comps += 1
        stack = [s]
        seen[s] = True
        while stack:
            cur = stack.pop()
            for k in range(ADJ6_N[cur]):
                nxt = ADJ6[cur, k]
                if IS_N18[nxt] and occ[nxt] == want and not seen[nxt]:
                    seen[nxt] = True
                    stack.append(nxt)
    return comps


def is_simple(mask: np.ndarray, x: int, y: int, z: int, fg26: bool) -> bool:
    """Both topological numbers equal one at (x, y, z); center value is irrelevant."""
    occ = _gather(mask, x, y, z)
    if fg26:
        return _count26(occ, 1) == 1 and _count_geo6(occ, 0) == 1
    return _count_geo6(occ, 1) == 1 and _count26(occ, 0) == 1


def _square_critical(v00, v01, v10, v11) -> bool:
    return (v00 and v11 and not v01 and not v10) or (v01 and v10 and not v00 and not v11)


def _block_critical(bits) -> bool:
    s = sum(bits)
    if s == 2:
        return (
            (bits[0] and bits[7])
            or (bits[1] and bits[6])
            or (bits[2] and bits[5])
            or (bits[3] and bits[4])
        )
    if s == 6:
        return (
            (not bits[0] and not bits[7])
            or (not bits[1] and not bits[6])
            or (not bits[2] and not bits[5])
            or (not bits[3] and not bits[4])
        )
    return False


def wc_ok_after(mask: np.ndarray, x: int, y: int, z: int, newval: int) -> bool:
    """Would setting (x, y, z) to ``newval`` leave every local 2x2 square and
    2x2x2 block free of critical configurations?

    Only configurations containing the voxel can change, so the check is local.
    """

    def val(cx, cy, cz):
        if cx == x and cy == y and cz == z:
            return int(newval)
        return int(mask[cx, cy, cz])

    for a1, a2 in ((0, 1), (0, 2), (1, 2)):
        c = [x, y, z]
        for d1 in (-1, 0):
            for d2 in (-1, 0):
                o = [x, y, z]
                o[a1] += d1
                o[a2] += d2
                p = [o[:], o[:], o[:], o[:]]
                p[1][a2] += 1
                p[2][a1] += 1
                p[3][a1] += 1
                p[3][a2] += 1
                if _square_critical(*(val(*q) for q in p)):
                    return False
    for dx in (-1, 0):
        for dy in (-1, 0):
            for dz in (-1, 0):
                bits = [
                    val(x + dx + a, y + dy + b, z + dz + c)
                    for a in (0, 1)
                    for b in (0, 1)
                    for c in (0, 1)
                ]
                if _block_critical(bits):
                    return False
    return True


def erode_pass(mask: np.ndarray, order: np.ndarray, fg26: bool, wc: bool) -> int:
    """Remove simple voxels in the given order, re-testing against the live mask."""
    _, ny, nz = mask.shape
    removed = 0
    for flat in order.tolist():
        x = flat // (ny * nz)
        r = flat % (ny * nz)
        y = r // nz
        z = r % nz
        if not mask[x, y, z]:
            continue
        if not is_simple(mask, x, y, z, fg26):
            continue
        if wc and not wc_ok_after(mask, x, y, z, 0):
            continue
        mask[x, y, z] = 0
        removed += 1
    return removed


def dilate_pass(mask: np.ndarray, order: np.ndarray, fg26: bool, wc: bool) -> int:
    """Add simple voxels in the given order, re-testing against the live mask."""
    _, ny, nz = mask.shape
    added = 0
    for flat in order.tolist():
        x = flat // (ny * nz)
        r = flat % (ny * nz)
        y = r // nz
        z = r % nz
        if mask[x, y, z]:
            continue
        if not is_simple(mask, x, y, z, fg26):
            continue
        if wc and not wc_ok_after(mask, x, y, z, 1):
            continue
        mask[x, y, z] = 1
        added += 1
    return added


def fm_grow(scalar: np.ndarray, region: np.ndarray, threshold: float, fg26: bool) -> None:
    """Priority growth from the template region; mutates ``region`` in place.

    Highest scalar first, ties by lexicographic coordinate; non-simple
    candidates are deferred and retried once per epoch; growth stops when
    no candidate at or above the threshold can be added.
    """
    nx, ny, nz = region.shape
    offs = (OFFS26 if fg26 else OFFS6).tolist()
    in_heap = np.zeros(region.shape, dtype=np.uint8)
    heap: list[tuple[float, int]] = []

    def push(cx, cy, cz):
        in_heap[cx, cy, cz] = 1
        heapq.heappush(heap, (-float(scalar[cx, cy, cz]), (cx * ny + cy) * nz + cz))

    # Candidates below the threshold can never be added (pops stop at the
    # threshold), so they are not enqueued at all.
    xs, ys, zs = np.nonzero(region)
    for x, y, z in zip(xs.tolist(), ys.tolist(), zs.tolist()):
        for dx, dy, dz in offs:
            cx, cy, cz = x + dx, y + dy, z + dz
            if 1 <= cx <= nx - 2 and 1 <= cy <= ny - 2 and 1 <= cz <= nz - 2:
                if (
                    not region[cx, cy, cz]
                    and not in_heap[cx, cy, cz]
                    and scalar[cx, cy, cz] >= threshold
                ):
                    push(cx, cy, cz)

    deferred: list[int] = []
    deferred_flag = np.zeros(region.shape, dtype=np.uint8)
    added_this_epoch = False
    while True:
        if heap and -heap[0][0] >= threshold:
            _, flat = heapq.heappop(heap)
            x = flat // (ny * nz)
            r = flat % (ny * nz)
            y = r // nz
            z = r % nz
            in_heap[x, y, z] = 0
            if region[x, y, z]:
                continue
            if is_simple(region, x, y, z, fg26):
                region[x, y, z] = 1
                added_this_epoch = True
                for dx, dy, dz in offs:
                    cx, cy, cz = x + dx, y + dy, z + dz
                    if 1 <= cx <= nx - 2 and 1 <= cy <= ny - 2 and 1 <= cz <= nz - 2:
                        if (
                            not region[cx, cy, cz]
                            and not in_heap[cx, cy, cz]
                            and scalar[cx, cy, cz] >= threshold
                        ):
                            push(cx, cy, cz)
            elif not deferred_flag[x, y, z]:
                deferred_flag[x, y, z] = 1
                deferred.append(flat)
        else:
            if deferred and added_this_epoch:
                retry = deferred
                deferred = []
                deferred_flag[:] = 0
                added_this_epoch = False
                for flat in retry:
                    x = flat // (ny * nz)
                    r = flat % (ny * nz)
                    y = r // nz
                    z = r % nz
                    if not region[x, y, z] and not in_heap[x, y, z]:
                        push(x, y, z)
            else:
                break


def fm_shrink(
    scalar: np.ndarray,
    region: np.ndarray,
    protected: np.ndarray,
    threshold: float,
    fg26: bool,
) -> None:
    """Priority removal of sub-threshold simple voxels; mutates ``region``.

    Lowest scalar first, ties lexicographic; protected voxels are kept.
    """
    nx, ny, nz = region.shape
    in_heap = np.zeros(region.shape, dtype=np.uint8)
    heap: list[tuple[float, int]] = []

    def push(cx, cy, cz):
        in_heap[cx, cy, cz] = 1
        heapq.heappush(heap, (float(scalar[cx, cy, cz]), (cx * ny + cy) * nz + cz))

    xs, ys, zs = np.nonzero(region)
    for x, y, z in zip(xs.tolist(), ys.tolist(), zs.tolist()):
        if protected[x, y, z] or scalar[x, y, z] >= threshold:
            continue
        for dx, dy, dz in OFFS6.tolist():
            if not region[x + dx, y + dy, z + dz]:
                push(x, y, z)
                break

    deferred: list[int] = []
    deferred_flag = np.zeros(region.shape, dtype=np.uint8)
    removed_this_epoch = False
    while True:
        if heap and heap[0][0] < threshold:
            _, flat = heapq.heappop(heap)
            x = flat // (ny * nz)
            r = flat % (ny * nz)
            y = r // nz
            z = r % nz
            in_heap[x, y, z] = 0
            if not region[x, y, z] or protected[x, y, z]:
                continue
            if is_simple(region, x, y, z, fg26):
                region[x, y, z] = 0
                removed_this_epoch = True
                for dx, dy, dz in OFFS26.tolist():
                    cx, cy, cz = x + dx, y + dy, z + dz
                    if 1 <= cx <= nx - 2 and 1 <= cy <= ny - 2 and 1 <= cz <= nz - 2:
                        if (
                            region[cx, cy, cz]
                            and not protected[cx, cy, cz]
                            and not in_heap[cx, cy, cz]
                            and scalar[cx, cy, cz] < threshold
                        ):
                            push(cx, cy, cz)
            elif not deferred_flag[x, y, z]:
                deferred_flag[x, y, z] = 1
                deferred.append(flat)
        else:
            if deferred and removed_this_epoch:
                retry = deferred
                deferred = []
                deferred_flag[:] = 0
                removed_this_epoch = False
                for flat in retry:
                    x = flat // (ny * nz)
                    r = flat % (ny * nz)
                    y = r // nz
                    z = r % nz
                    if region[x, y, z] and not in_heap[x, y, z]:
                        push(x, y, z)
            else:
                break
