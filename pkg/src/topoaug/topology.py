"""Digital-topology primitives on binary masks.

Connectivity follows the standard dual-pair convention: foreground 26 with
background 6 (the default) or foreground 6 with background 26. A voxel is
*simple* when flipping it changes neither the foreground's nor the
background's topology; the test uses the two local topological numbers
(foreground components in the punctured 26-neighborhood, dual background
components in the geodesic 18-neighborhood), which is exact and O(1). The
global flip-and-recompute check survives only as a test oracle.

Betti numbers avoid a homology solver: b0 comes from foreground components,
b2 from bounded background components of the one-voxel-padded complement,
b1 from the Euler identity b1 = b0 + b2 - chi. The Euler characteristic is
counted on the cubical complex (V - E + F - C), which realizes the
26-connected foreground; for 6-connected foreground the same count is taken
on the padded complement and dualized (chi_6 = chi_26(complement) - 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import backend
from .errors import DataError, InvariantViolation
from .volume import BinaryMask, require_same_grid

_STRUCT_6 = ndimage.generate_binary_structure(3, 1)
_STRUCT_26 = ndimage.generate_binary_structure(3, 3)


@dataclass(frozen=True)
class ConnectivityPair:
    """Dual foreground/background connectivity; only (26,6) and (6,26) exist."""

    foreground: int
    background: int

    def __post_init__(self):
        if (self.foreground, self.background) not in ((26, 6), (6, 26)):
            raise DataError(
                f"connectivity pair must be (26,6) or (6,26), got "
                f"({self.foreground},{self.background})"
            )

    @property
    def fg26(self) -> bool:
        return self.foreground == 26


CONN_26_6 = ConnectivityPair(26, 6)
CONN_6_26 = ConnectivityPair(6, 26)
DEFAULT_CONNECTIVITY = CONN_26_6


@dataclass(frozen=True)
class TopologySignature:
    """(b0, b1, b2) plus the Euler characteristic b0 - b1 + b2."""

    b0: int
    b1: int
    b2: int
    euler: int

    def __post_init__(self):
        if self.b0 < 0 or self.b1 < 0 or self.b2 < 0:
            raise InvariantViolation(f"negative Betti number in {self.as_tuple()}")
        if self.euler != self.b0 - self.b1 + self.b2:
            raise InvariantViolation(
                f"euler {self.euler} != b0-b1+b2 for {self.as_tuple()}"
            )

    @classmethod
    def of(cls, b0: int, b1: int, b2: int) -> "TopologySignature":
        return cls(b0, b1, b2, b0 - b1 + b2)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.b0, self.b1, self.b2)

    def to_dict(self) -> dict:
        return {"b0": self.b0, "b1": self.b1, "b2": self.b2, "euler": self.euler}

    @classmethod
    def from_dict(cls, d) -> "TopologySignature":
        return cls(int(d["b0"]), int(d["b1"]), int(d["b2"]), int(d["euler"]))

    def __str__(self) -> str:
        return f"({self.b0},{self.b1},{self.b2})"


def _structure(conn: int) -> np.ndarray:
    return _STRUCT_26 if conn == 26 else _STRUCT_6


def connected_components(
    mask: BinaryMask, conn: ConnectivityPair = DEFAULT_CONNECTIVITY
) -> tuple[np.ndarray, int]:
    """Per-voxel component ids (dense 1..count, 0 = background) and count."""
    labels, count = ndimage.label(mask.bits, structure=_structure(conn.foreground))
    return labels, int(count)


def euler_characteristic(mask: BinaryMask | np.ndarray) -> int:
    """V - E + F - C of the cubical complex of set voxels.

    Connectivity-independent on well-composed masks; otherwise the value
    realizes the 26-connected foreground.
    """
    arr = mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    v, e, f, c = backend.euler_counts(np.ascontiguousarray(arr, dtype=np.uint8))
    return v - e + f - c


def betti_numbers(
    mask: BinaryMask | np.ndarray, conn: ConnectivityPair = DEFAULT_CONNECTIVITY
) -> TopologySignature:
    arr = mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    _, b0 = ndimage.label(arr, structure=_structure(conn.foreground))
    comp = ~np.pad(arr, 1)
    _, ncomp = ndimage.label(comp, structure=_structure(conn.background))
    b2 = int(ncomp) - 1
    if conn.fg26:
        chi = euler_characteristic(arr)
    else:
        chi = euler_characteristic(comp) - 1
    b1 = int(b0) + b2 - chi
    if b1 < 0:
        raise InvariantViolation(
            f"negative b1={b1} (b0={b0}, b2={b2}, chi={chi}); internal error"
        )
    return TopologySignature(int(b0), b1, b2, chi)


def background_signature(
    mask: BinaryMask | np.ndarray, conn: ConnectivityPair = DEFAULT_CONNECTIVITY
) -> TopologySignature:
    """Signature of the (one-voxel-padded) background under the dual connectivity.

    The padding ring models the unbounded outside, matching the local
    simple-point semantics at volume borders.
    """
    arr = mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    bg = ~np.pad(arr, 1)
    dual = CONN_6_26 if conn.fg26 else CONN_26_6
    return betti_numbers(bg, dual)


def _padded(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.pad(arr.astype(np.uint8), 1))


def is_locally_simple(
    mask: BinaryMask, voxel: tuple[int, int, int], conn: ConnectivityPair = DEFAULT_CONNECTIVITY
) -> bool:
    """Two-topological-numbers test: flipping the voxel admits a deformation
    retraction, the strongest (and O(1)) notion of a harmless flip.

    This is the gate used inside erosion and fast-marching growth. It is
    sufficient but not necessary for :func:`is_simple`: rare double-pinch
    configurations fail here yet leave every Betti number of foreground and
    background unchanged.
    """
    x, y, z = (int(v) for v in voxel)
    nx, ny, nz = mask.dims
    if not (0 <= x < nx and 0 <= y < ny and 0 <= z < nz):
        raise DataError(f"voxel {voxel} out of bounds for dims {mask.dims}")
    pad = _padded(mask.bits)
    return bool(backend.is_simple(pad, x + 1, y + 1, z + 1, conn.fg26))


def is_simple(
    mask: BinaryMask, voxel: tuple[int, int, int], conn: ConnectivityPair = DEFAULT_CONNECTIVITY
) -> bool:
    """Whether flipping ``voxel`` changes no Betti number of the mask or of
    its background.

    Fast path: the local topological-numbers test (its success implies a
    deformation retraction, hence unchanged signatures). When that fails,
    the signatures of both sides are compared exactly on the flipped mask.
    """
    if is_locally_simple(mask, voxel, conn):
        return True
    flipped = np.array(mask.bits)
    v = tuple(int(c) for c in voxel)
    flipped[v] = ~flipped[v]
    return (
        betti_numbers(flipped, conn) == betti_numbers(mask, conn)
        and background_signature(flipped, conn) == background_signature(mask, conn)
    )


@dataclass(frozen=True)
class CriticalConfiguration:
    """One well-composedness violation: a 2x2 square or a 2x2x2 block.

    ``origin`` is the lexicographically smallest voxel of the configuration;
    for squares ``axis`` names the plane normal (0=x, 1=y, 2=z).
    """

    kind: str  # "square" | "block"
    origin: tuple[int, int, int]
    axis: int | None = None


def find_critical_configurations(
    mask: BinaryMask | np.ndarray,
) -> list[CriticalConfiguration]:
    """All critical configurations, in deterministic scan order.

    Critical are: a 2x2 axis-plane square whose set voxels are exactly one
    diagonal pair, and a 2x2x2 block whose set (or unset) voxels are exactly
    one antipodal corner pair. The unset-pair block case keeps the
    definition self-dual, which is what makes topology independent of the
    connectivity convention.
    """
    m = mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    out: list[CriticalConfiguration] = []

    def squares(a, b, c, d, axis, idx_fn):
        crit = (a & d & ~b & ~c) | (b & c & ~a & ~d)
        for pos in np.argwhere(crit):
            out.append(CriticalConfiguration("square", idx_fn(pos), axis))

    # plane normal z: square spans x,y
    squares(
        m[:-1, :-1, :], m[:-1, 1:, :], m[1:, :-1, :], m[1:, 1:, :],
        2, lambda p: (int(p[0]), int(p[1]), int(p[2])),
    )
    # plane normal y: spans x,z
    squares(
        m[:-1, :, :-1], m[:-1, :, 1:], m[1:, :, :-1], m[1:, :, 1:],
        1, lambda p: (int(p[0]), int(p[1]), int(p[2])),
    )
    # plane normal x: spans y,z
    squares(
        m[:, :-1, :-1], m[:, :-1, 1:], m[:, 1:, :-1], m[:, 1:, 1:],
        0, lambda p: (int(p[0]), int(p[1]), int(p[2])),
    )

    c = [
        m[:-1, :-1, :-1], m[:-1, :-1, 1:], m[:-1, 1:, :-1], m[:-1, 1:, 1:],
        m[1:, :-1, :-1], m[1:, :-1, 1:], m[1:, 1:, :-1], m[1:, 1:, 1:],
    ]
    total = sum(x.astype(np.int8) for x in c)
    pair_set = (
        (c[0] & c[7]) | (c[1] & c[6]) | (c[2] & c[5]) | (c[3] & c[4])
    )
    pair_unset = (
        (~c[0] & ~c[7]) | (~c[1] & ~c[6]) | (~c[2] & ~c[5]) | (~c[3] & ~c[4])
    )
    crit_blocks = ((total == 2) & pair_set) | ((total == 6) & pair_unset)
    for pos in np.argwhere(crit_blocks):
        out.append(CriticalConfiguration("block", (int(pos[0]), int(pos[1]), int(pos[2]))))

    out.sort(key=lambda cc: (cc.origin, cc.kind, -1 if cc.axis is None else cc.axis))
    return out


def is_well_composed(mask: BinaryMask) -> bool:
    return not find_critical_configurations(mask)


def _resolve_candidates(mask_arr: np.ndarray, cfg: CriticalConfiguration) -> list[tuple[int, int, int]]:
    """Unset voxels whose addition clears the configuration."""
    ox, oy, oz = cfg.origin
    if cfg.kind == "square":
        ax = cfg.axis
        coords = []
        for d1 in (0, 1):
            for d2 in (0, 1):
                p = [ox, oy, oz]
                if ax == 2:
                    p[0] += d1
                    p[1] += d2
                elif ax == 1:
                    p[0] += d1
                    p[2] += d2
                else:
                    p[1] += d1
                    p[2] += d2
                coords.append(tuple(p))
        return [p for p in coords if not mask_arr[p]]
    coords = [
        (ox + a, oy + b, oz + c) for a in (0, 1) for b in (0, 1) for c in (0, 1)
    ]
    return [p for p in coords if not mask_arr[p]]


def _still_critical(mask_arr: np.ndarray, cfg: CriticalConfiguration) -> bool:
    ox, oy, oz = cfg.origin
    if cfg.kind == "square":
        ax = cfg.axis
        vals = []
        for d1 in (0, 1):
            for d2 in (0, 1):
                p = [ox, oy, oz]
                if ax == 2:
                    p[0] += d1
                    p[1] += d2
                elif ax == 1:
                    p[0] += d1
                    p[2] += d2
                else:
                    p[1] += d1
                    p[2] += d2
                vals.append(bool(mask_arr[tuple(p)]))
        a, b, c, d = vals
        return (a and d and not b and not c) or (b and c and not a and not d)
    bits = [
        bool(mask_arr[ox + a, oy + b, oz + c])
        for a in (0, 1)
        for b in (0, 1)
        for c in (0, 1)
    ]
    s = sum(bits)
    if s == 2:
        return (bits[0] and bits[7]) or (bits[1] and bits[6]) or (bits[2] and bits[5]) or (bits[3] and bits[4])
    if s == 6:
        return (
            (not bits[0] and not bits[7])
            or (not bits[1] and not bits[6])
            or (not bits[2] and not bits[5])
            or (not bits[3] and not bits[4])
        )
    return False


def make_well_composed(mask: BinaryMask) -> BinaryMask:
    """Grow the mask minimally until no critical configuration remains.

    Repair only ever adds foreground: each configuration is resolved by the
    lexicographically smallest unset voxel of the configuration, rescanning
    until clean. Termination is bounded by the voxel count.
    """
    arr = np.array(mask.bits)
    budget = arr.size + 1
    while True:
        configs = find_critical_configurations(arr)
        if not configs:
            break
        for cfg in configs:
            if not _still_critical(arr, cfg):
                continue
            cands = _resolve_candidates(arr, cfg)
            if not cands:
                continue
            arr[min(cands)] = True
            budget -= 1
            if budget <= 0:
                raise InvariantViolation("well-composedness repair failed to terminate")
    return BinaryMask(arr, mask.spacing)


def _inner_distance(arr: np.ndarray) -> np.ndarray:
    """Taxicab distance to the background, counting the outside as background."""
    return ndimage.distance_transform_cdt(np.pad(arr, 1), metric="taxicab")[
        1:-1, 1:-1, 1:-1
    ].astype(np.int64)


def _erosion_order(arr: np.ndarray) -> np.ndarray:
    """Padded flat indices of set voxels, distance-to-boundary then lex."""
    dist = _inner_distance(arr)
    xs, ys, zs = np.nonzero(arr)
    _, ny, nz = arr.shape
    flats = ((xs + 1) * (ny + 2) + (ys + 1)) * (nz + 2) + (zs + 1)
    order = np.lexsort((flats, dist[xs, ys, zs]))
    return flats[order]


def topological_erosion(
    mask: BinaryMask,
    conn: ConnectivityPair = DEFAULT_CONNECTIVITY,
    preserve_well_composedness: bool = True,
) -> BinaryMask:
    """Shrink to the fixpoint of simple-voxel removal; topology is preserved.

    Each pass visits the current voxels ordered by (distance to boundary,
    lexicographic coordinate) and re-tests simplicity at removal time.
    With ``preserve_well_composedness`` a removal that would introduce a
    critical configuration is skipped, so a well-composed input stays
    well-composed all the way down to the template.
    """
    pad = _padded(mask.bits)
    while True:
        inner = pad[1:-1, 1:-1, 1:-1].astype(bool)
        order = _erosion_order(inner)
        if order.size == 0:
            break
        removed = backend.erode_pass(pad, order, conn.fg26, preserve_well_composedness)
        if removed == 0:
            break
    return BinaryMask(pad[1:-1, 1:-1, 1:-1].astype(bool), mask.spacing)


def dilate_preserving(
    mask: BinaryMask,
    conn: ConnectivityPair = DEFAULT_CONNECTIVITY,
    passes: int = 1,
    preserve_well_composedness: bool = True,
) -> BinaryMask:
    """Add simple border voxels (lexicographic order); topology is preserved."""
    pad = _padded(mask.bits)
    struct = _structure(conn.foreground)
    for _ in range(passes):
        inner = pad[1:-1, 1:-1, 1:-1].astype(bool)
        ring = ndimage.binary_dilation(inner, structure=struct) & ~inner
        xs, ys, zs = np.nonzero(ring)
        if xs.size == 0:
            break
        _, ny, nz = inner.shape
        flats = ((xs + 1) * (ny + 2) + (ys + 1)) * (nz + 2) + (zs + 1)
        backend.dilate_pass(pad, np.sort(flats), conn.fg26, preserve_well_composedness)
    return BinaryMask(pad[1:-1, 1:-1, 1:-1].astype(bool), mask.spacing)


def correct_to_ball(
    mask: BinaryMask, conn: ConnectivityPair = DEFAULT_CONNECTIVITY
) -> BinaryMask:
    """Largest simple-growth subset with ball topology (1,0,0).

    Builds a probability-like map from the signed boundary distance and
    grows from a single seed voxel at the inner-distance maximum, so the
    deepest voxels win and cavities/handles end up cut.
    """
    from .correction import CorrectionParams, fast_marching_correct
    from .volume import ScalarVolume

    arr = mask.bits
    if not arr.any():
        raise DataError("cannot correct an empty mask to a ball")
    d_in = _inner_distance(arr).astype(np.float64)
    d_out = ndimage.distance_transform_cdt(~arr, metric="taxicab").astype(np.float64)
    scalar = np.where(
        arr,
        0.5 + 0.5 * d_in / (d_in.max() + 1.0),
        0.5 - 0.5 * d_out / (d_out.max() + 1.0),
    )
    seed = np.zeros_like(arr)
    seed[np.unravel_index(int(np.argmax(d_in)), arr.shape)] = True
    out = fast_marching_correct(
        ScalarVolume(scalar, mask.spacing, is_probability=True),
        BinaryMask(seed, mask.spacing),
        CorrectionParams(conn=conn),
    )
    sig = betti_numbers(out, conn)
    if sig.as_tuple() != (1, 0, 0):
        raise InvariantViolation(f"ball correction produced signature {sig}")
    return out
