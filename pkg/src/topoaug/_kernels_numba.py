"""Numba-compiled voxel kernels (the default backend).

Mirrors :mod:`topoaug._kernels_numpy` bit for bit; the test suite checks
the two backends agree on random inputs. All functions take arrays padded
by one background voxel per side; flat indices are C-order indices into
the padded array.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._tables import ADJ6, ADJ6_N, ADJ26, ADJ26_N, CENTER, IS_N6, IS_N18, OFFS6, OFFS26

_IS_N6 = IS_N6.astype(np.uint8)
_IS_N18 = IS_N18.astype(np.uint8)
_OFFS26 = np.ascontiguousarray(OFFS26)
_OFFS6 = np.ascontiguousarray(OFFS6)
_ADJ26 = np.ascontiguousarray(ADJ26)
_ADJ26_N = np.ascontiguousarray(ADJ26_N)
_ADJ6 = np.ascontiguousarray(ADJ6)
_ADJ6_N = np.ascontiguousarray(ADJ6_N)


@njit(cache=True)
def _any_voxel(mask, x0, x1, y0, y1, z0, z1):
    nx, ny, nz = mask.shape
    for a in range(max(0, x0), min(nx - 1, x1) + 1):
        for b in range(max(0, y0), min(ny - 1, y1) + 1):
            for c in range(max(0, z0), min(nz - 1, z1) + 1):
                if mask[a, b, c]:
                    return True
    return False


@njit(cache=True)
def _euler_counts(mask):
    nx, ny, nz = mask.shape
    v = 0
    e = 0
    f = 0
    c = 0
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if mask[x, y, z]:
                    c += 1
    for x in range(nx + 1):
        for y in range(ny + 1):
            for z in range(nz + 1):
                if _any_voxel(mask, x - 1, x, y - 1, y, z - 1, z):
                    v += 1
    for x in range(nx):  # edges along x
        for y in range(ny + 1):
            for z in range(nz + 1):
                if _any_voxel(mask, x, x, y - 1, y, z - 1, z):
                    e += 1
    for y in range(ny):  # edges along y
        for x in range(nx + 1):
            for z in range(nz + 1):
                if _any_voxel(mask, x - 1, x, y, y, z - 1, z):
                    e += 1
    for z in range(nz):  # edges along z
        for x in range(nx + 1):
            for y in range(ny + 1):
                if _any_voxel(mask, x - 1, x, y - 1, y, z, z):
                    e += 1
    for x in range(nx + 1):  # faces normal to x
        for y in range(ny):
            for z in range(nz):
                if _any_voxel(mask, x - 1, x, y, y, z, z):
                    f += 1
    for y in range(ny + 1):  # faces normal to y
        for x in range(nx):
            for z in range(nz):
                if _any_voxel(mask, x, x, y - 1, y, z, z):
                    f += 1
    for z in range(nz + 1):  # faces normal to z
        for x in range(nx):
            for y in range(ny):
                if _any_voxel(mask, x, x, y, y, z - 1, z):
                    f += 1
    return v, e, f, c


def euler_counts(mask: np.ndarray) -> tuple[int, int, int, int]:
    v, e, f, c = _euler_counts(np.ascontiguousarray(mask, dtype=np.uint8))
    return int(v), int(e), int(f), int(c)


@njit(cache=True)
def _gather(mask, x, y, z, occ):
    i = 0
    for dx in range(-1, 2):
        for dy in range(-1, 2):
            for dz in range(-1, 2):
                occ[i] = mask[x + dx, y + dy, z + dz]
                i += 1


@njit(cache=True)
def _count26(occ, want, seen, stack):
    for i in range(27):
        seen[i] = 0
    comps = 0
    for s in range(27):
        if s == CENTER or occ[s] != want or seen[s]:
            continue
        comps += 1
        seen[s] = 1
        top = 0
        stack[top] = s
        top = 1
        while top > 0:
            top -= 1
            cur = stack[top]
            for k in range(_ADJ26_N[cur]):
                nxt = _ADJ26[cur, k]
                if nxt != CENTER and occ[nxt] == want and not seen[nxt]:
                    seen[nxt] = 1
                    stack[top] = nxt
                    top += 1
    return comps


@njit(cache=True)
def _count_geo6(occ, want, seen, stack):
    for i in range(27):
        seen[i] = 0
    comps = 0
    for s in range(27):
        if not _IS_N6[s] or occ[s] != want or seen[s]:
            continue
        comps += 1
        seen[s] = 1
        top = 0
        stack[top] = s
        top = 1
        while top > 0:
            top -= 1
            cur = stack[top]
            for k in range(_ADJ6_N[cur]):
                nxt = _ADJ6[cur, k]
                if _IS_N18[nxt] and occ[nxt] == want and not seen[nxt]:
                    seen[nxt] = 1
                    stack[top] = nxt
                    top += 1
    return comps


@njit(cache=True)
def _is_simple_at(mask, x, y, z, fg26, occ, seen, stack):
    _gather(mask, x, y, z, occ)
    if fg26:
        if _count26(occ, 1, seen, stack) != 1:
            return False
        return _count_geo6(occ, 0, seen, stack) == 1
    if _count_geo6(occ, 1, seen, stack) != 1:
        return False
    return _count26(occ, 0, seen, stack) == 1


@njit(cache=True)
def _simple_entry(mask, x, y, z, fg26):
    occ = np.empty(27, dtype=np.uint8)
    seen = np.empty(27, dtype=np.uint8)
    stack = np.empty(27, dtype=np.int64)
    return _is_simple_at(mask, x, y, z, fg26, occ, seen, stack)


def is_simple(mask: np.ndarray, x: int, y: int, z: int, fg26: bool) -> bool:
    return bool(_simple_entry(mask, x, y, z, bool(fg26)))


@njit(cache=True)
def _val(mask, cx, cy, cz, x, y, z, newval):
    if cx == x and cy == y and cz == z:
        return newval
    return mask[cx, cy, cz]


@njit(cache=True)
def _wc_ok_after(mask, x, y, z, newval):
    # squares in the three axis planes containing the voxel
    for d1 in range(-1, 1):
        for d2 in range(-1, 1):
            # xy plane
            v00 = _val(mask, x + d1, y + d2, z, x, y, z, newval)
            v01 = _val(mask, x + d1, y + d2 + 1, z, x, y, z, newval)
            v10 = _val(mask, x + d1 + 1, y + d2, z, x, y, z, newval)
            v11 = _val(mask, x + d1 + 1, y + d2 + 1, z, x, y, z, newval)
            if (v00 and v11 and not v01 and not v10) or (v01 and v10 and not v00 and not v11):
                return False
            # xz plane
            v00 = _val(mask, x + d1, y, z + d2, x, y, z, newval)
            v01 = _val(mask, x + d1, y, z + d2 + 1, x, y, z, newval)
            v10 = _val(mask, x + d1 + 1, y, z + d2, x, y, z, newval)
            v11 = _val(mask, x + d1 + 1, y, z + d2 + 1, x, y, z, newval)
            if (v00 and v11 and not v01 and not v10) or (v01 and v10 and not v00 and not v11):
                return False
            # yz plane
            v00 = _val(mask, x, y + d1, z + d2, x, y, z, newval)
            v01 = _val(mask, x, y + d1, z + d2 + 1, x, y, z, newval)
            v10 = _val(mask, x, y + d1 + 1, z + d2, x, y, z, newval)
            v11 = _val(mask, x, y + d1 + 1, z + d2 + 1, x, y, z, newval)
            if (v00 and v11 and not v01 and not v10) or (v01 and v10 and not v00 and not v11):
                return False
    # 2x2x2 blocks containing the voxel
    for dx in range(-1, 1):
        for dy in range(-1, 1):
            for dz in range(-1, 1):
                b0 = _val(mask, x + dx, y + dy, z + dz, x, y, z, newval)
                b1 = _val(mask, x + dx, y + dy, z + dz + 1, x, y, z, newval)
                b2 = _val(mask, x + dx, y + dy + 1, z + dz, x, y, z, newval)
                b3 = _val(mask, x + dx, y + dy + 1, z + dz + 1, x, y, z, newval)
                b4 = _val(mask, x + dx + 1, y + dy, z + dz, x, y, z, newval)
                b5 = _val(mask, x + dx + 1, y + dy, z + dz + 1, x, y, z, newval)
                b6 = _val(mask, x + dx + 1, y + dy + 1, z + dz, x, y, z, newval)
                b7 = _val(mask, x + dx + 1, y + dy + 1, z + dz + 1, x, y, z, newval)
                s = int(b0) + int(b1) + int(b2) + int(b3) + int(b4) + int(b5) + int(b6) + int(b7)
                if s == 2:
                    if (b0 and b7) or (b1 and b6) or (b2 and b5) or (b3 and b4):
                        return False
                elif s == 6:
                    if (
                        (not b0 and not b7)
                        or (not b1 and not b6)
                        or (not b2 and not b5)
                        or (not b3 and not b4)
                    ):
                        return False
    return True


@njit(cache=True)
def _wc_entry(mask, x, y, z, newval):
    return _wc_ok_after(mask, x, y, z, newval)


def wc_ok_after(mask: np.ndarray, x: int, y: int, z: int, newval: int) -> bool:
    return bool(_wc_entry(mask, x, y, z, np.uint8(newval)))


@njit(cache=True)
def _erode_pass(mask, order, fg26, wc):
    ny = mask.shape[1]
    nz = mask.shape[2]
    occ = np.empty(27, dtype=np.uint8)
    seen = np.empty(27, dtype=np.uint8)
    stack = np.empty(27, dtype=np.int64)
    removed = 0
    for t in range(order.size):
        flat = order[t]
        x = flat // (ny * nz)
        r = flat % (ny * nz)
        y = r // nz
        z = r % nz
        if not mask[x, y, z]:
            continue
        if not _is_simple_at(mask, x, y, z, fg26, occ, seen, stack):
            continue
        if wc and not _wc_ok_after(mask, x, y, z, np.uint8(0)):
            continue
        mask[x, y, z] = 0
        removed += 1
    return removed


def erode_pass(mask: np.ndarray, order: np.ndarray, fg26: bool, wc: bool) -> int:
    return int(_erode_pass(mask, order, bool(fg26), bool(wc)))


@njit(cache=True)
def _dilate_pass(mask, order, fg26, wc):
    ny = mask.shape[1]
    nz = mask.shape[2]
    occ = np.empty(27, dtype=np.uint8)
    seen = np.empty(27, dtype=np.uint8)
    stack = np.empty(27, dtype=np.int64)
    added = 0
    for t in range(order.size):
        flat = order[t]
        x = flat // (ny * nz)
        r = flat % (ny * nz)
        y = r // nz
        z = r % nz
        if mask[x, y, z]:
            continue
        if not _is_simple_at(mask, x, y, z, fg26, occ, seen, stack):
            continue
        if wc and not _wc_ok_after(mask, x, y, z, np.uint8(1)):
            continue
        mask[x, y, z] = 1
        added += 1
    return added


def dilate_pass(mask: np.ndarray, order: np.ndarray, fg26: bool, wc: bool) -> int:
    return int(_dilate_pass(mask, order, bool(fg26), bool(wc)))


# Binary max-heap on (key desc, flat asc) stored in parallel arrays.


@njit(cache=True)
def _prio_gt(k1, i1, k2, i2):
    if k1 > k2:
        return True
    if k1 < k2:
        return False
    return i1 < i2


@njit(cache=True)
def _heap_push(hkey, hidx, n, key, idx):
    i = n
    hkey[i] = key
    hidx[i] = idx
    while i > 0:
        p = (i - 1) // 2
        if _prio_gt(hkey[i], hidx[i], hkey[p], hidx[p]):
            hkey[i], hkey[p] = hkey[p], hkey[i]
            hidx[i], hidx[p] = hidx[p], hidx[i]
            i = p
        else:
            break
    return n + 1


@njit(cache=True)
def _heap_pop(hkey, hidx, n):
    key = hkey[0]
    idx = hidx[0]
    n -= 1
    hkey[0] = hkey[n]
    hidx[0] = hidx[n]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        b = i
        if l < n and _prio_gt(hkey[l], hidx[l], hkey[b], hidx[b]):
            b = l
        if r < n and _prio_gt(hkey[r], hidx[r], hkey[b], hidx[b]):
            b = r
        if b == i:
            break
        hkey[i], hkey[b] = hkey[b], hkey[i]
        hidx[i], hidx[b] = hidx[b], hidx[i]
        i = b
    return key, idx, n


@njit(cache=True)
def _fm_grow(scalar, region, threshold, fg26):
    nx, ny, nz = region.shape
    offs = _OFFS26 if fg26 else _OFFS6
    noffs = offs.shape[0]
    cap = nx * ny * nz + 1
    hkey = np.empty(cap, dtype=np.float64)
    hidx = np.empty(cap, dtype=np.int64)
    hn = 0
    in_heap = np.zeros((nx, ny, nz), dtype=np.uint8)
    deferred = np.empty(cap, dtype=np.int64)
    deferred_flag = np.zeros((nx, ny, nz), dtype=np.uint8)
    dn = 0
    occ = np.empty(27, dtype=np.uint8)
    seen = np.empty(27, dtype=np.uint8)
    stack = np.empty(27, dtype=np.int64)

    # Candidates below the threshold can never be added (pops stop at the
    # threshold), so they are not enqueued at all.
    for x in range(1, nx - 1):
        for y in range(1, ny - 1):
            for z in range(1, nz - 1):
                if not region[x, y, z]:
                    continue
                for k in range(noffs):
                    cx = x + offs[k, 0]
                    cy = y + offs[k, 1]
                    cz = z + offs[k, 2]
                    if 1 <= cx <= nx - 2 and 1 <= cy <= ny - 2 and 1 <= cz <= nz - 2:
                        if (
                            not region[cx, cy, cz]
                            and not in_heap[cx, cy, cz]
                            and scalar[cx, cy, cz] >= threshold
                        ):
                            in_heap[cx, cy, cz] = 1
                            hn = _heap_push(
                                hkey, hidx, hn, scalar[cx, cy, cz], (cx * ny + cy) * nz + cz
                            )

    added_this_epoch = False
    while True:
        if hn > 0 and hkey[0] >= threshold:
            key, flat, hn = _heap_pop(hkey, hidx, hn)
            x = flat // (ny * nz)
            r = flat % (ny * nz)
            y = r // nz
            z = r % nz
            in_heap[x, y, z] = 0
            if region[x, y, z]:
                continue
            if _is_simple_at(region, x, y, z, fg26, occ, seen, stack):
                region[x, y, z] = 1
                added_this_epoch = True
                for k in range(noffs):
                    cx = x + offs[k, 0]
                    cy = y + offs[k, 1]
                    cz = z + offs[k, 2]
                    if 1 <= cx <= nx - 2 and 1 <= cy <= ny - 2 and 1 <= cz <= nz - 2:
                        if (
                            not region[cx, cy, cz]
                            and not in_heap[cx, cy, cz]
                            and scalar[cx, cy, cz] >= threshold
                        ):
                            in_heap[cx, cy, cz] = 1
                            hn = _heap_push(
                                hkey, hidx, hn, scalar[cx, cy, cz], (cx * ny + cy) * nz + cz
                            )
            elif not deferred_flag[x, y, z]:
                deferred_flag[x, y, z] = 1
                deferred[dn] = flat
                dn += 1
        else:
            if dn > 0 and added_this_epoch:
                retry_n = dn
                dn = 0
                deferred_flag[:] = 0
                added_this_epoch = False
                for t in range(retry_n):
                    flat = deferred[t]
                    x = flat // (ny * nz)
                    r = flat % (ny * nz)
                    y = r // nz
                    z = r % nz
                    if not region[x, y, z] and not in_heap[x, y, z]:
                        in_heap[x, y, z] = 1
                        hn = _heap_push(hkey, hidx, hn, scalar[x, y, z], flat)
            else:
                break


def fm_grow(scalar: np.ndarray, region: np.ndarray, threshold: float, fg26: bool) -> None:
    _fm_grow(scalar, region, float(threshold), bool(fg26))


@njit(cache=True)
def _fm_shrink(scalar, region, protected, threshold, fg26):
    nx, ny, nz = region.shape
    cap = nx * ny * nz + 1
    hkey = np.empty(cap, dtype=np.float64)
    hidx = np.empty(cap, dtype=np.int64)
    hn = 0
    in_heap = np.zeros((nx, ny, nz), dtype=np.uint8)
    deferred = np.empty(cap, dtype=np.int64)
    deferred_flag = np.zeros((nx, ny, nz), dtype=np.uint8)
    dn = 0
    occ = np.empty(27, dtype=np.uint8)
    seen = np.empty(27, dtype=np.uint8)
    stack = np.empty(27, dtype=np.int64)

    # min-heap on scalar realized as max-heap on -scalar; ties flat asc
    for x in range(1, nx - 1):
        for y in range(1, ny - 1):
            for z in range(1, nz - 1):
                if not region[x, y, z] or protected[x, y, z]:
                    continue
                if scalar[x, y, z] >= threshold:
                    continue
                boundary = False
                for k in range(6):
                    if not region[x + _OFFS6[k, 0], y + _OFFS6[k, 1], z + _OFFS6[k, 2]]:
                        boundary = True
                        break
                if boundary:
                    in_heap[x, y, z] = 1
                    hn = _heap_push(hkey, hidx, hn, -scalar[x, y, z], (x * ny + y) * nz + z)

    removed_this_epoch = False
    while True:
        if hn > 0 and -hkey[0] < threshold:
            key, flat, hn = _heap_pop(hkey, hidx, hn)
            x = flat // (ny * nz)
            r = flat % (ny * nz)
            y = r // nz
            z = r % nz
            in_heap[x, y, z] = 0
            if not region[x, y, z] or protected[x, y, z]:
                continue
            if _is_simple_at(region, x, y, z, fg26, occ, seen, stack):
                region[x, y, z] = 0
                removed_this_epoch = True
                for k in range(26):
                    cx = x + _OFFS26[k, 0]
                    cy = y + _OFFS26[k, 1]
                    cz = z + _OFFS26[k, 2]
                    if 1 <= cx <= nx - 2 and 1 <= cy <= ny - 2 and 1 <= cz <= nz - 2:
                        if (
                            region[cx, cy, cz]
                            and not protected[cx, cy, cz]
                            and not in_heap[cx, cy, cz]
                            and scalar[cx, cy, cz] < threshold
                        ):
                            in_heap[cx, cy, cz] = 1
                            hn = _heap_push(
                                hkey, hidx, hn, -scalar[cx, cy, cz], (cx * ny + cy) * nz + cz
                            )
            elif not deferred_flag[x, y, z]:
                deferred_flag[x, y, z] = 1
                deferred[dn] = flat
                dn += 1
        else:
            if dn > 0 and removed_this_epoch:
                retry_n = dn
                dn = 0
                deferred_flag[:] = 0
                removed_this_epoch = False
                for t in range(retry_n):
                    flat = deferred[t]
                    x = flat // (ny * nz)
                    r = flat % (ny * nz)
                    y = r // nz
                    z = r % nz
                    if region[x, y, z] and not in_heap[x, y, z]:
                        in_heap[x, y, z] = 1
                        hn = _heap_push(hkey, hidx, hn, -scalar[x, y, z], flat)
            else:
                break


def fm_shrink(
    scalar: np.ndarray,
    region: np.ndarray,
    protected: np.ndarray,
    threshold: float,
    fg26: bool,
) -> None:
    _fm_shrink(scalar, region, protected, float(threshold), bool(fg26))
