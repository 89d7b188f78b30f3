"""Deterministic synthetic phantoms with known blood-pool topology.

Geometry is analytic on the lattice (balls, boxes, Chebyshev rings and
capsules), so the expected topology is derivable and the generator checks
it before handing anything to a caller. Blood pools are repaired to be
well-composed at build time (as the pipeline requires of its inputs);
intensity images are smoothed label maps with a little seeded noise so
they look vaguely like acquired data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import DataError, InvariantViolation
from .topology import TopologySignature, betti_numbers, make_well_composed
from .transform import _rng
from .volume import BinaryMask, LabelSchema, LabelVolume, ScalarVolume, Spacing, bloodpool_mask

KINDS = (
    "ball",
    "shell",
    "torus",
    "two-chamber-one-channel",
    "two-chamber-two-channel",
    "n-chamber-graph",
)

_CHANNEL_PHANTOM_NOISE = 3

BACKGROUND = 0
MYOCARDIUM = 1
FIRST_SUBLABEL = 2


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    dims: tuple[int, int, int] = (48, 48, 48)
    wall_thickness_vox: int = 1
    channel_radius_vox: float = 2.5
    seed: int = 0
    spacing: Spacing = (1.0, 1.0, 1.0)
    # n-chamber-graph only: chamber count and channel endpoints
    chambers: int = 4
    channel_pairs: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown phantom kind {self.kind!r}; choose from {KINDS}")
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d < 8 for d in dims):
            raise DataError("phantom dims must be 3 values, each >= 8")
        object.__setattr__(self, "dims", dims)
        if self.wall_thickness_vox < 1:
            raise DataError("wall thickness must be >= 1 voxel")
        if self.channel_radius_vox <= 0:
            raise DataError("channel radius must be positive")
        if self.chambers < 1:
            raise DataError("need at least one chamber")


class GeneratedPhantom(NamedTuple):
    image: ScalarVolume
    labels: LabelVolume
    schema: LabelSchema
    expected: TopologySignature


def _grids(dims):
    return np.meshgrid(
        np.arange(dims[0], dtype=np.float64),
        np.arange(dims[1], dtype=np.float64),
        np.arange(dims[2], dtype=np.float64),
        indexing="ij",
    )


def _ball(dims, center, radius):
    x, y, z = _grids(dims)
    return (x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2 <= radius**2


def _capsule(dims, a, b, radius):
    """Voxels within ``radius`` of segment a-b, split into the halves nearer
    each endpoint."""
    x, y, z = _grids(dims)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    denom = float(ab @ ab)
    t = ((x - a[0]) * ab[0] + (y - a[1]) * ab[1] + (z - a[2]) * ab[2]) / denom
    tc = np.clip(t, 0.0, 1.0)
    dx = x - (a[0] + tc * ab[0])
    dy = y - (a[1] + tc * ab[1])
    dz = z - (a[2] + tc * ab[2])
    inside = dx * dx + dy * dy + dz * dz <= radius**2
    return inside & (t <= 0.5), inside & (t > 0.5)


def _nearest_sublabel_fill(sublabels: np.ndarray, region: np.ndarray) -> np.ndarray:
    """Assign every set voxel of ``region`` the nearest nonzero sublabel."""
    out = np.where(region, sublabels, 0).astype(np.uint8)
    missing = region & (out == 0)
    if missing.any():
        if not (out > 0).any():
            raise InvariantViolation("no sublabel seeds available for fill")
        idx = ndimage.distance_transform_edt(out == 0, return_indices=True, return_distances=False)
        out[missing] = out[idx[0][missing], idx[1][missing], idx[2][missing]]
    return out


def _compose(dims, spacing, blood_sub: np.ndarray, myo: np.ndarray, n_subs: int):
    labels = np.zeros(dims, dtype=np.uint8)
    labels[myo] = MYOCARDIUM
    blood = blood_sub > 0
    labels[blood] = blood_sub[blood]
    schema = LabelSchema(
        background_label=BACKGROUND,
        myocardium_label=MYOCARDIUM,
        bloodpool_sublabels=tuple(range(FIRST_SUBLABEL, FIRST_SUBLABEL + n_subs)),
    )
    return LabelVolume(labels, spacing), schema


def _well_compose_blood(blood_sub: np.ndarray, spacing) -> np.ndarray:
    """Repair the blood pool to a well-composed set, labelling added voxels
    with the nearest sublabel."""
    blood = blood_sub > 0
    repaired = make_well_composed(BinaryMask(blood, spacing)).bits
    return _nearest_sublabel_fill(blood_sub, repaired)


def _image_from_labels(labels: LabelVolume, schema: LabelSchema, seed: int) -> ScalarVolume:
    lut = np.full(256, 0.08)
    lut[schema.myocardium_label] = 0.45
    for s in schema.bloodpool_sublabels:
        lut[s] = 0.9
    img = lut[labels.data]
    img = ndimage.gaussian_filter(img, sigma=0.8)
    rng = _rng(seed, 0, _CHANNEL_PHANTOM_NOISE)
    img = img + rng.normal(0.0, 0.02, size=labels.dims)
    return ScalarVolume(np.clip(img, 0.0, 1.0), labels.spacing)


def _build_two_chamber(spec: PhantomSpec, n_channels: int):
    nx, ny, nz = spec.dims
    m = 2
    wt = spec.wall_thickness_vox
    xm = (nx - wt) // 2
    if xm - m < 3 or nx - m - (xm + wt) < 3:
        raise DataError(f"dims {spec.dims} too small for two-chamber phantom")
    blood_sub = np.zeros(spec.dims, dtype=np.uint8)
    blood_sub[m:xm, m : ny - m, m : nz - m] = FIRST_SUBLABEL
    blood_sub[xm + wt : nx - m, m : ny - m, m : nz - m] = FIRST_SUBLABEL + 1
    myo = np.zeros(spec.dims, dtype=bool)
    myo[xm : xm + wt, m : ny - m, m : nz - m] = True

    cy, cz = (ny - 1) / 2.0, (nz - 1) / 2.0
    r = spec.channel_radius_vox
    if n_channels == 1:
        centers = [(cy, cz)]
    else:
        off = max(r + 2.0, (ny - 2 * m) / 4.0)
        centers = [(cy - off, cz), (cy + off, cz)]
    y, z = np.meshgrid(np.arange(ny, dtype=float), np.arange(nz, dtype=float), indexing="ij")
    for ccy, ccz in centers:
        disk = (y - ccy) ** 2 + (z - ccz) ** 2 <= r**2
        if not disk.any():
            raise DataError("channel radius too small for the grid")
        for xw in range(xm, xm + wt):
            blood_sub[xw][disk] = FIRST_SUBLABEL
            myo[xw][disk] = False
    expected = TopologySignature.of(1, n_channels - 1, 0)
    return blood_sub, myo, 2, expected


def _build_graph(spec: PhantomSpec):
    nx, ny, nz = spec.dims
    c = spec.chambers
    pairs = spec.channel_pairs
    if pairs is None:
        pairs = tuple((k, (k + 1) % c) for k in range(c)) if c > 1 else ()
    for i, j in pairs:
        if not (0 <= i < c and 0 <= j < c) or i == j:
            raise DataError(f"bad channel pair ({i},{j}) for {c} chambers")

    center = np.array([(nx - 1) / 2.0, (ny - 1) / 2.0, (nz - 1) / 2.0])
    ring_r = 0.30 * min(nx, ny)
    if c == 1:
        centers = [center]
        chamber_r = 0.30 * min(spec.dims)
    else:
        centers = [
            center
            + np.array(
                [
                    ring_r * math.cos(2 * math.pi * k / c),
                    ring_r * math.sin(2 * math.pi * k / c),
                    0.0,
                ]
            )
            for k in range(c)
        ]
        gap = 2 * ring_r * math.sin(math.pi / c)
        chamber_r = min(
            gap / 2.0 - 1.5,
            ring_r - 3.0,
            (nz - 1) / 2.0 - 3.0,
            min(nx, ny) / 2.0 - 3.0 - ring_r,
        )
    if chamber_r < 2.0:
        raise DataError(f"dims {spec.dims} too small for {c} chambers")

    blood_sub = np.zeros(spec.dims, dtype=np.uint8)
    for k, ctr in enumerate(centers):
        blood_sub[_ball(spec.dims, ctr, chamber_r)] = FIRST_SUBLABEL + k
    for i, j in pairs:
        half_i, half_j = _capsule(spec.dims, centers[i], centers[j], spec.channel_radius_vox)
        blood_sub[half_i & (blood_sub == 0)] = FIRST_SUBLABEL + i
        blood_sub[half_j & (blood_sub == 0)] = FIRST_SUBLABEL + j

    # myocardium: one-voxel hull around the blood pool
    blood = blood_sub > 0
    myo = ndimage.binary_dilation(blood, ndimage.generate_binary_structure(3, 1)) & ~blood

    # cycle rank of the contact graph
    parent = list(range(c))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in pairs:
        parent[find(i)] = find(j)
    comps = len({find(k) for k in range(c)})
    expected = TopologySignature.of(comps, len(pairs) - c + comps, 0)
    return blood_sub, myo, c, expected


def generate(spec: PhantomSpec) -> GeneratedPhantom:
    """Build (image, labels, schema, expected signature); the labels' blood
    pool is verified against the expected signature before returning."""
    dims = spec.dims
    nx, ny, nz = dims
    center = ((nx - 1) / 2.0, (ny - 1) / 2.0, (nz - 1) / 2.0)

    if spec.kind == "ball":
        r = min(dims) / 2.0 - 3.0
        blood_sub = np.where(_ball(dims, center, r), FIRST_SUBLABEL, 0).astype(np.uint8)
        myo = _ball(dims, center, r + max(1, spec.wall_thickness_vox)) & ~(blood_sub > 0)
        n_subs, expected = 1, TopologySignature.of(1, 0, 0)
    elif spec.kind == "shell":
        # two hemispherical half-shells (each ball-topology) touching along
        # the equator: the cavity topology lives in the sub-class contact.
        # Radii stay well inside the grid so the derived surface template
        # survives the whole transform envelope (rotation/scale/deformation).
        r_out = 0.25 * min(dims)
        r_in = r_out - max(2, spec.wall_thickness_vox + 1)
        if r_in < 2:
            raise DataError(f"dims {dims} too small for a shell phantom")
        x = _grids(dims)[0]
        hollow = _ball(dims, center, r_out) & ~_ball(dims, center, r_in)
        blood_sub = np.where(hollow, FIRST_SUBLABEL, 0).astype(np.uint8)
        blood_sub[hollow & (x > center[0])] = FIRST_SUBLABEL + 1
        myo = np.zeros(dims, dtype=bool)
        n_subs, expected = 2, TopologySignature.of(1, 0, 1)
    elif spec.kind == "torus":
        # two C-shaped half-rings (each ball-topology) meeting at both ends:
        # the handle lives in the sub-class contacts
        x, y, _ = _grids(dims)
        cheb = np.maximum(np.abs(x - center[0]), np.abs(y - center[1]))
        b = 0.25 * min(nx, ny)
        a = b - 2.0
        if a < 2:
            raise DataError(f"dims {dims} too small for a torus phantom")
        ring = (cheb >= a) & (cheb <= b)
        zc = int(center[2])
        slab = np.zeros(dims, dtype=bool)
        slab[:, :, max(0, zc - 1) : min(nz, zc + 2)] = True
        blood_sub = np.where(ring & slab, FIRST_SUBLABEL, 0).astype(np.uint8)
        blood_sub[(ring & slab) & (y > center[1])] = FIRST_SUBLABEL + 1
        myo = np.zeros(dims, dtype=bool)
        n_subs, expected = 2, TopologySignature.of(1, 1, 0)
    elif spec.kind == "two-chamber-one-channel":
        blood_sub, myo, n_subs, expected = _build_two_chamber(spec, 1)
    elif spec.kind == "two-chamber-two-channel":
        blood_sub, myo, n_subs, expected = _build_two_chamber(spec, 2)
    else:
        blood_sub, myo, n_subs, expected = _build_graph(spec)

    blood_sub = _well_compose_blood(blood_sub, spec.spacing)
    myo = myo & ~(blood_sub > 0)
    labels, schema = _compose(dims, spec.spacing, blood_sub, myo, n_subs)

    got = betti_numbers(bloodpool_mask(labels, schema))
    if got != expected:
        raise InvariantViolation(
            f"phantom {spec.kind} produced blood-pool signature {got}, expected {expected}"
        )
    image = _image_from_labels(labels, schema, spec.seed)
    return GeneratedPhantom(image, labels, schema, expected)
