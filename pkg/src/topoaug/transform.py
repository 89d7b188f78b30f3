"""Clinically justified spatial transforms, resampling, and intensity ops.

Transforms are stored as pull-back (output -> input) maps over physical
coordinates (voxel index times spacing), so resampling is a pure gather:
an affine composed as translate .. rotate .. scale about the volume
center, plus an optional smooth displacement field held on a coarse
control grid and interpolated trilinearly.

Randomness is counter-based (Philox keyed by (seed, sample index), one
counter channel per purpose), so any sample can be regenerated in
isolation and parallel generation is order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Mapping

import numpy as np

from .errors import DataError
from .volume import BinaryMask, LabelVolume, ScalarVolume, Spacing

_CHANNEL_TRANSFORM = 0
_CHANNEL_INTENSITY = 1
_CHANNEL_ORTHOGONAL = 2


def _rng(seed: int, index: int, channel: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)], dtype=np.uint64)
    counter = np.array([0, 0, 0, channel], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class DeformationSpec:
    grid_spacing_vox: int = 16
    max_displacement_vox: float = 3.0

    def __post_init__(self):
        if self.grid_spacing_vox < 2:
            raise DataError("deformation grid spacing must be >= 2 voxels")
        if self.max_displacement_vox < 0:
            raise DataError("max displacement must be >= 0")


@dataclass(frozen=True)
class IntensitySpec:
    noise_sigma: float = 0.01
    bias_range: tuple[float, float] = (0.95, 1.05)

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise DataError("noise sigma must be >= 0")
        lo, hi = self.bias_range
        if lo > hi:
            raise DataError("bias range must be ordered")


def _as_bounds3(value, name) -> tuple[float, float, float]:
    if np.isscalar(value):
        v = float(value)
        if v < 0:
            raise DataError(f"{name} must be >= 0")
        return (v, v, v)
    t = tuple(float(x) for x in value)
    if len(t) != 3 or any(x < 0 for x in t):
        raise DataError(f"{name} must be a scalar or 3 non-negative values")
    return t  # type: ignore[return-value]


@dataclass(frozen=True)
class AugmentationSpec:
    """Parameter ranges for sampled transforms; the seed is mandatory."""

    seed: int
    rotation_range_deg: tuple[float, float, float] = (10.0, 10.0, 10.0)
    scale_range: tuple[float, float] = (0.9, 1.1)
    translation_range_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)
    deformation: DeformationSpec = field(default_factory=DeformationSpec)
    intensity: IntensitySpec = field(default_factory=IntensitySpec)

    def __post_init__(self):
        object.__setattr__(
            self, "rotation_range_deg", _as_bounds3(self.rotation_range_deg, "rotation range")
        )
        object.__setattr__(
            self,
            "translation_range_mm",
            _as_bounds3(self.translation_range_mm, "translation range"),
        )
        lo, hi = (float(v) for v in self.scale_range)
        if not (0 < lo <= hi):
            raise DataError(f"scale range must satisfy 0 < lo <= hi, got {(lo, hi)}")
        object.__setattr__(self, "scale_range", (lo, hi))

    @classmethod
    def from_dict(cls, d: Mapping) -> "AugmentationSpec":
        if "seed" not in d:
            raise DataError("augmentation spec requires a seed")
        kwargs: dict = {"seed": int(d["seed"])}
        if "rotation_range_deg" in d:
            kwargs["rotation_range_deg"] = d["rotation_range_deg"]
        if "scale_range" in d:
            kwargs["scale_range"] = tuple(d["scale_range"])
        if "translation_range_mm" in d:
            kwargs["translation_range_mm"] = d["translation_range_mm"]
        if "deformation" in d:
            dd = d["deformation"]
            kwargs["deformation"] = DeformationSpec(
                grid_spacing_vox=int(dd.get("grid_spacing_vox", 16)),
                max_displacement_vox=float(dd.get("max_displacement_vox", 3.0)),
            )
        if "intensity" in d:
            di = d["intensity"]
            kwargs["intensity"] = IntensitySpec(
                noise_sigma=float(di.get("noise_sigma", 0.01)),
                bias_range=tuple(di.get("bias_range", (0.95, 1.05))),
            )
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "rotation_range_deg": list(self.rotation_range_deg),
            "scale_range": list(self.scale_range),
            "translation_range_mm": list(self.translation_range_mm),
            "deformation": {
                "grid_spacing_vox": self.deformation.grid_spacing_vox,
                "max_displacement_vox": self.deformation.max_displacement_vox,
            },
            "intensity": {
                "noise_sigma": self.intensity.noise_sigma,
                "bias_range": list(self.intensity.bias_range),
            },
        }


@dataclass(frozen=True)
class SpatialTransform:
    """Pull-back map q = A p + d(p) over physical coordinates.

    ``inverse_mode`` documents the convention: the stored fields map output
    points to input points, which is the only mode resampling needs.
    """

    matrix: np.ndarray  # 4x4 homogeneous
    control_vectors: np.ndarray | None = None  # (gx, gy, gz, 3), mm
    control_origin_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)
    control_step_mm: tuple[float, float, float] = (1.0, 1.0, 1.0)
    inverse_mode: bool = True
    params: Mapping | None = None  # provenance for manifests

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise DataError("transform matrix must be 4x4")
        if abs(np.linalg.det(m[:3, :3])) <= 1e-9:
            raise DataError("transform is not invertible")
        if not self.inverse_mode:
            raise DataError("transforms are stored as output->input maps only")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.control_vectors is not None:
            cv = np.asarray(self.control_vectors, dtype=np.float64).copy()
            if cv.ndim != 4 or cv.shape[3] != 3:
                raise DataError("control vectors must have shape (gx, gy, gz, 3)")
            cv.setflags(write=False)
            object.__setattr__(self, "control_vectors", cv)

    @property
    def is_identity(self) -> bool:
        return self.control_vectors is None and np.array_equal(self.matrix, np.eye(4))

    def pull_back(self, px: np.ndarray, py: np.ndarray, pz: np.ndarray):
        """Map output physical points to input physical points, elementwise."""
        m = self.matrix
        qx = m[0, 0] * px + m[0, 1] * py + m[0, 2] * pz + m[0, 3]
        qy = m[1, 0] * px + m[1, 1] * py + m[1, 2] * pz + m[1, 3]
        qz = m[2, 0] * px + m[2, 1] * py + m[2, 2] * pz + m[2, 3]
        if self.control_vectors is not None:
            dx, dy, dz = self._displacement(px, py, pz)
            qx = qx + dx
            qy = qy + dy
            qz = qz + dz
        return qx, qy, qz

    def push_forward(self, qx: np.ndarray, qy: np.ndarray, qz: np.ndarray):
        """Solve the pull-back for output points: find p with A p + d(p) = q.

        Affine-only transforms invert exactly; with a displacement field a
        fixed-point iteration is used (the fields are small and smooth, so
        the iteration is a strong contraction).
        """
        m = self.matrix
        inv = np.linalg.inv(m[:3, :3])
        bx, by, bz = m[0, 3], m[1, 3], m[2, 3]

        def solve_affine(rx, ry, rz):
            return (
                inv[0, 0] * rx + inv[0, 1] * ry + inv[0, 2] * rz,
                inv[1, 0] * rx + inv[1, 1] * ry + inv[1, 2] * rz,
                inv[2, 0] * rx + inv[2, 1] * ry + inv[2, 2] * rz,
            )

        px, py, pz = solve_affine(qx - bx, qy - by, qz - bz)
        if self.control_vectors is None:
            return px, py, pz
        for _ in range(25):
            dx, dy, dz = self._displacement(px, py, pz)
            px, py, pz = solve_affine(qx - bx - dx, qy - by - dy, qz - bz - dz)
        return px, py, pz

    def _displacement(self, px, py, pz):
        cv = self.control_vectors
        gx, gy, gz, _ = cv.shape
        ox, oy, oz = self.control_origin_mm
        sx, sy, sz = self.control_step_mm
        tx = np.clip((px - ox) / sx, 0.0, gx - 1.000001)
        ty = np.clip((py - oy) / sy, 0.0, gy - 1.000001)
        tz = np.clip((pz - oz) / sz, 0.0, gz - 1.000001)
        x0 = np.floor(tx).astype(np.int64)
        y0 = np.floor(ty).astype(np.int64)
        z0 = np.floor(tz).astype(np.int64)
        fx = tx - x0
        fy = ty - y0
        fz = tz - z0
        acc = np.zeros(np.shape(px) + (3,), dtype=np.float64)
        for cx in (0, 1):
            wx = fx if cx else 1.0 - fx
            for cy in (0, 1):
                wy = fy if cy else 1.0 - fy
                for cz in (0, 1):
                    wz = fz if cz else 1.0 - fz
                    acc += (wx * wy * wz)[..., None] * cv[x0 + cx, y0 + cy, z0 + cz]
        return acc[..., 0], acc[..., 1], acc[..., 2]


def _rotation_matrix(deg: tuple[float, float, float]) -> np.ndarray:
    ax, ay, az = (math.radians(d) for d in deg)
    rx = np.array(
        [[1, 0, 0], [0, math.cos(ax), -math.sin(ax)], [0, math.sin(ax), math.cos(ax)]]
    )
    ry = np.array(
        [[math.cos(ay), 0, math.sin(ay)], [0, 1, 0], [-math.sin(ay), 0, math.cos(ay)]]
    )
    rz = np.array(
        [[math.cos(az), -math.sin(az), 0], [math.sin(az), math.cos(az), 0], [0, 0, 1]]
    )
    return rz @ ry @ rx


def sample_transform(
    spec: AugmentationSpec,
    index: int,
    dims: tuple[int, int, int],
    spacing: Spacing = (1.0, 1.0, 1.0),
) -> SpatialTransform:
    """Deterministic transform for (seed, index) on the given grid.

    Parameters are uniform within the spec ranges; the displacement field is
    smooth by construction (coarse control grid, trilinear interpolation).
    Zero ranges yield the exact identity.
    """
    rng = _rng(spec.seed, index, _CHANNEL_TRANSFORM)
    rot = tuple(float(rng.uniform(-b, b)) for b in spec.rotation_range_deg)
    lo, hi = spec.scale_range
    scale = tuple(float(rng.uniform(lo, hi)) for _ in range(3))
    trans = tuple(float(rng.uniform(-b, b)) for b in spec.translation_range_mm)

    sp = np.asarray(spacing, dtype=np.float64)
    center = (np.asarray(dims, dtype=np.float64) - 1.0) / 2.0 * sp
    rs = _rotation_matrix(rot) @ np.diag(scale)
    matrix = np.eye(4)
    matrix[:3, :3] = rs
    matrix[:3, 3] = center - rs @ center + np.asarray(trans)

    control = None
    origin = (0.0, 0.0, 0.0)
    step = (1.0, 1.0, 1.0)
    md = spec.deformation.max_displacement_vox
    if md > 0:
        g = spec.deformation.grid_spacing_vox
        counts = tuple(int(math.ceil((d - 1) / g)) + 3 for d in dims)
        control = rng.uniform(-md, md, size=counts + (3,)) * sp
        origin = tuple(float(-g * s) for s in sp)
        step = tuple(float(g * s) for s in sp)

    return SpatialTransform(
        matrix=matrix,
        control_vectors=control,
        control_origin_mm=origin,
        control_step_mm=step,
        params={
            "seed": spec.seed,
            "index": index,
            "rotation_deg": list(rot),
            "scale": list(scale),
            "translation_mm": list(trans),
            "deformation_max_vox": md if md > 0 else 0.0,
        },
    )


class WarpedGrid:
    """The pull-back coordinate field of one transform on one grid, cached
    so that every volume of a sample reuses the same warp."""

    def __init__(self, t: SpatialTransform, dims, spacing: Spacing):
        self.t = t
        self.dims = tuple(dims)
        self.spacing = spacing
        self.identity = t.is_identity
        if not self.identity:
            sp = np.asarray(spacing, dtype=np.float64)
            ix, iy, iz = np.meshgrid(
                np.arange(dims[0], dtype=np.float64),
                np.arange(dims[1], dtype=np.float64),
                np.arange(dims[2], dtype=np.float64),
                indexing="ij",
            )
            qx, qy, qz = t.pull_back(ix * sp[0], iy * sp[1], iz * sp[2])
            self.cx = qx / sp[0]
            self.cy = qy / sp[1]
            self.cz = qz / sp[2]

    def trilinear(self, data: np.ndarray) -> np.ndarray:
        if self.identity:
            return np.array(data, dtype=np.float64)
        dims = self.dims
        x0 = np.floor(self.cx).astype(np.int64)
        y0 = np.floor(self.cy).astype(np.int64)
        z0 = np.floor(self.cz).astype(np.int64)
        fx = self.cx - x0
        fy = self.cy - y0
        fz = self.cz - z0
        out = np.zeros(dims, dtype=np.float64)
        nx, ny, nz = dims
        for dx_ in (0, 1):
            wx = fx if dx_ else 1.0 - fx
            xs = x0 + dx_
            okx = (xs >= 0) & (xs < nx)
            xc = np.clip(xs, 0, nx - 1)
            for dy_ in (0, 1):
                wy = fy if dy_ else 1.0 - fy
                ys = y0 + dy_
                oky = okx & (ys >= 0) & (ys < ny)
                yc = np.clip(ys, 0, ny - 1)
                for dz_ in (0, 1):
                    wz = fz if dz_ else 1.0 - fz
                    zs = z0 + dz_
                    ok = oky & (zs >= 0) & (zs < nz)
                    zc = np.clip(zs, 0, nz - 1)
                    vals = np.where(ok, data[xc, yc, zc], 0.0)
                    out += wx * wy * wz * vals
        return out

    def nearest(self, data: np.ndarray, background):
        if self.identity:
            return np.array(data)
        dims = self.dims
        xs = np.floor(self.cx + 0.5).astype(np.int64)
        ys = np.floor(self.cy + 0.5).astype(np.int64)
        zs = np.floor(self.cz + 0.5).astype(np.int64)
        nx, ny, nz = dims
        ok = (xs >= 0) & (xs < nx) & (ys >= 0) & (ys < ny) & (zs >= 0) & (zs < nz)
        out = np.full(dims, background, dtype=data.dtype)
        out[ok] = data[xs[ok], ys[ok], zs[ok]]
        return out


def resample_trilinear(vol: ScalarVolume, t: SpatialTransform, grid: WarpedGrid | None = None) -> ScalarVolume:
    """Trilinear pull-back resampling; outside the input grid reads as 0.

    A binary 0/1 input therefore yields values in [0, 1], usable as a
    probability map.
    """
    if grid is None:
        grid = WarpedGrid(t, vol.dims, vol.spacing)
    out = grid.trilinear(vol.data)
    prob = vol.is_probability
    if prob and not grid.identity:
        out = np.clip(out, 0.0, 1.0)  # guard float round-off at corners
    return ScalarVolume(out, vol.spacing, is_probability=prob)


def resample_nearest(vol, t: SpatialTransform, background: int = 0, grid: WarpedGrid | None = None):
    """Nearest-neighbour pull-back resampling of labels or masks.

    Fast and exact for lattice-preserving transforms, but near thin
    structures a generic transform can tear or bridge them, changing the
    label map's topology; that failure mode is what the correction pipeline
    exists to fix.
    """
    if isinstance(vol, LabelVolume):
        data = vol.data
    elif isinstance(vol, BinaryMask):
        data = vol.bits
        background = 0
    else:
        raise DataError("resample_nearest expects a LabelVolume or BinaryMask")
    if t.is_identity:
        return vol
    if grid is None:
        grid = WarpedGrid(t, vol.dims, vol.spacing)
    out = grid.nearest(data, background)
    if isinstance(vol, BinaryMask):
        return BinaryMask(out.astype(bool), vol.spacing)
    return LabelVolume(out, vol.spacing)


def normalize(vol: ScalarVolume) -> ScalarVolume:
    """Shift/scale to zero mean, unit variance."""
    data = vol.data
    mu = float(data.mean())
    sd = float(data.std())
    if sd == 0.0:
        raise DataError("cannot normalize a constant volume")
    return ScalarVolume((data - mu) / sd, vol.spacing)


def perturb_intensity(vol: ScalarVolume, spec: AugmentationSpec, index: int) -> ScalarVolume:
    """Global multiplicative bias plus additive Gaussian noise, deterministic
    in (seed, index)."""
    rng = _rng(spec.seed, index, _CHANNEL_INTENSITY)
    lo, hi = spec.intensity.bias_range
    bias = float(rng.uniform(lo, hi))
    data = vol.data * bias
    sigma = spec.intensity.noise_sigma
    if sigma > 0:
        data = data + rng.normal(0.0, sigma, size=vol.dims)
    unchanged = sigma == 0 and bias == 1.0
    return ScalarVolume(data, vol.spacing, is_probability=vol.is_probability and unchanged)


# The 48 cube symmetries as (axis permutation, per-axis flip) pairs: the
# orthogonal rotations together with their laterally inverted versions.
ALL_ORTHOGONAL_SYMMETRIES: tuple[tuple[tuple[int, int, int], tuple[bool, bool, bool]], ...] = tuple(
    (perm, flips)
    for perm in permutations((0, 1, 2))
    for flips in product((False, True), repeat=3)
)


def orthogonal_symmetries_for(dims) -> list[tuple[tuple[int, int, int], tuple[bool, bool, bool]]]:
    """Symmetries that keep the (possibly non-cubic) grid shape unchanged."""
    return [
        (perm, flips)
        for perm, flips in ALL_ORTHOGONAL_SYMMETRIES
        if tuple(dims[p] for p in perm) == tuple(dims)
    ]


def sample_orthogonal_symmetry(spec: AugmentationSpec, index: int, dims):
    rng = _rng(spec.seed, index, _CHANNEL_ORTHOGONAL)
    sym = orthogonal_symmetries_for(dims)
    return sym[int(rng.integers(0, len(sym)))]


def apply_orthogonal(arr: np.ndarray, symmetry) -> np.ndarray:
    """Exact lattice automorphism: permute axes, then flip. Topology-safe."""
    perm, flips = symmetry
    out = np.transpose(arr, perm)
    for ax, f in enumerate(flips):
        if f:
            out = np.flip(out, axis=ax)
    return np.ascontiguousarray(out)
