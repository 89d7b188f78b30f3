"""Immutable 3D voxel containers and label-role configuration.

All volumes are dense arrays indexed ``[x, y, z]`` with shape
``(nx, ny, nz)``; serialization (see :mod:`topoaug.nifti`) is x-fastest.
Labels are stored as unsigned 8-bit integers, which caps the alphabet at
255 classes. Spacing is carried in mm but topology operations treat the
grid purely combinatorially; spacing only matters to spatial transforms.

Every container freezes its array (``writeable=False``) on construction,
so instances can be shared freely across threads. Operations return new
containers and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import GridMismatchError, SchemaError, DataError

Spacing = tuple[float, float, float]


def _as_spacing(spacing) -> Spacing:
    s = tuple(float(v) for v in spacing)
    if len(s) != 3:
        raise DataError(f"spacing must have 3 components, got {len(s)}")
    if any(v <= 0 for v in s):
        raise DataError(f"spacing components must be strictly positive, got {s}")
    return s  # type: ignore[return-value]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    if arr.flags.writeable:
        arr = arr.copy()  # value semantics: never freeze or alias caller memory
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabelSchema:
    """Which label plays which anatomical role.

    ``bloodpool_sublabels`` are the cardiac sub-classes (chambers/vessels)
    whose union defines the binary blood pool. The decomposition is the
    caller's to choose.
    """

    background_label: int
    myocardium_label: int
    bloodpool_sublabels: tuple[int, ...]
    display_names: Mapping[int, str] | None = None

    def __post_init__(self):
        subs = tuple(int(v) for v in self.bloodpool_sublabels)
        object.__setattr__(self, "bloodpool_sublabels", subs)
        if not subs:
            raise SchemaError("bloodpool_sublabels must be non-empty")
        all_labels = [self.background_label, self.myocardium_label, *subs]
        if len(set(all_labels)) != len(all_labels):
            raise SchemaError(f"labels must be pairwise distinct, got {all_labels}")
        if any(not (0 <= v <= 255) for v in all_labels):
            raise SchemaError("labels must fit in uint8 (0..255)")

    @property
    def labels(self) -> frozenset[int]:
        return frozenset((self.background_label, self.myocardium_label, *self.bloodpool_sublabels))

    def to_dict(self) -> dict:
        d = {
            "background_label": self.background_label,
            "myocardium_label": self.myocardium_label,
            "bloodpool_sublabels": list(self.bloodpool_sublabels),
        }
        if self.display_names:
            d["display_names"] = {str(k): v for k, v in self.display_names.items()}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "LabelSchema":
        names = d.get("display_names")
        if names is not None:
            names = {int(k): str(v) for k, v in names.items()}
        return cls(
            background_label=int(d["background_label"]),
            myocardium_label=int(d["myocardium_label"]),
            bloodpool_sublabels=tuple(int(v) for v in d["bloodpool_sublabels"]),
            display_names=names,
        )


@dataclass(frozen=True)
class LabelVolume:
    """Dense 3D grid of class labels (uint8)."""

    data: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)
    affine: np.ndarray | None = None  # carried through I/O, never interpreted

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise DataError(f"label volume must be 3D, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise DataError(f"labels must be integers, got dtype {arr.dtype}")
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise DataError("label values must be in 0..255 (uint8 storage)")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "data", _freeze(arr))
        object.__setattr__(self, "spacing", _as_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    def validate_against(self, schema: LabelSchema) -> None:
        present = set(np.unique(self.data).tolist())
        unknown = present - schema.labels
        if unknown:
            raise SchemaError(f"labels {sorted(unknown)} not present in schema")


@dataclass(frozen=True)
class ScalarVolume:
    """Dense 3D grid of finite reals (float64).

    When ``is_probability`` is set, values are additionally required to lie
    in [0, 1], as for interpolated label maps.
    """

    data: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)
    is_probability: bool = False
    affine: np.ndarray | None = None

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise DataError(f"scalar volume must be 3D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise DataError("scalar volume contains NaN or Inf")
        if self.is_probability and arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise DataError("probability volume has values outside [0, 1]")
        object.__setattr__(self, "data", _freeze(arr))
        object.__setattr__(self, "spacing", _as_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class BinaryMask:
    """One bit per voxel, same grid conventions as label volumes."""

    bits: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 3:
            raise DataError(f"mask must be 3D, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            arr = arr.astype(bool)
        object.__setattr__(self, "bits", _freeze(arr))
        object.__setattr__(self, "spacing", _as_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.bits.shape  # type: ignore[return-value]

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def same_grid(self, other) -> bool:
        return self.dims == other.dims and self.spacing == other.spacing


def require_same_grid(*vols) -> None:
    ref = vols[0]
    for v in vols[1:]:
        if v.dims != ref.dims or v.spacing != ref.spacing:
            raise GridMismatchError(
                f"grids differ: {ref.dims}/{ref.spacing} vs {v.dims}/{v.spacing}"
            )


def extract_mask(vol: LabelVolume, labels: Iterable[int], schema: LabelSchema) -> BinaryMask:
    """Mask of voxels whose label is in ``labels``.

    ``labels`` must be known to the schema.
    """
    wanted = {int(v) for v in labels}
    unknown = wanted - schema.labels
    if unknown:
        raise SchemaError(f"labels {sorted(unknown)} not in schema")
    bits = np.isin(vol.data, sorted(wanted))
    return BinaryMask(bits, vol.spacing)


def bloodpool_mask(vol: LabelVolume, schema: LabelSchema) -> BinaryMask:
    """Union of the blood-pool sub-classes."""
    return extract_mask(vol, schema.bloodpool_sublabels, schema)


def compose_labels(
    masks: Sequence[tuple[BinaryMask, int]],
    background_label: int = 0,
) -> LabelVolume:
    """Paint masks onto a background volume; later entries win on overlap."""
    if not masks:
        raise DataError("compose_labels needs at least one mask")
    first = masks[0][0]
    out = np.full(first.dims, background_label, dtype=np.uint8)
    for mask, label in masks:
        require_same_grid(first, mask)
        if not (0 <= int(label) <= 255):
            raise DataError(f"label {label} does not fit uint8")
        out[mask.bits] = label
    return LabelVolume(out, first.spacing)
