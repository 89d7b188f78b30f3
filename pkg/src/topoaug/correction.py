"""Fast-marching topology correction.

Forces the thresholded segmentation of a probability map to carry exactly
the topology of a template mask. Growth starts from the template and adds
candidate voxels in order of decreasing probability (ties broken by
lexicographic coordinate), accepting a voxel only when its addition is
simple for the current region. Non-simple candidates are deferred and
retried once per epoch; when a full epoch passes without any addition the
remaining ones are rejected for good. Only the requested level set is
corrected, not every isosurface: the pipeline consumes a single threshold,
so correcting one level set suffices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import CorrectionError, DataError
from .topology import (
    DEFAULT_CONNECTIVITY,
    ConnectivityPair,
    TopologySignature,
    betti_numbers,
)
from .volume import BinaryMask, ScalarVolume, require_same_grid

GROW = "grow-from-template"
SHRINK = "shrink-to-template"
AUTO = "auto"


@dataclass(frozen=True)
class CorrectionParams:
    threshold: float = 0.5
    direction: str = GROW
    conn: ConnectivityPair = DEFAULT_CONNECTIVITY

    def __post_init__(self):
        if not (0.0 < self.threshold < 1.0):
            raise DataError(f"threshold must lie strictly inside (0,1), got {self.threshold}")
        if self.direction not in (GROW, SHRINK, AUTO):
            raise DataError(f"unknown correction direction {self.direction!r}")


@dataclass(frozen=True)
class CorrectionDiff:
    added: int
    removed: int
    fraction_changed: float


def fast_marching_correct(
    scalar: ScalarVolume,
    template: BinaryMask,
    params: CorrectionParams = CorrectionParams(),
) -> BinaryMask:
    """Segmentation of ``scalar`` at the threshold, with the template's topology.

    Template voxels are force-included even where the scalar is below the
    threshold. The output's signature always equals the template's; in
    shrink mode, where removal alone cannot repair a mismatched start set,
    a ``CorrectionError`` is raised instead of returning a wrong-topology
    mask.
    """
    require_same_grid(scalar, template)
    if not template.bits.any():
        raise DataError("template must be non-empty")
    if not scalar.is_probability:
        raise DataError("correction expects a probability-flagged scalar volume")

    sc = np.ascontiguousarray(np.pad(scalar.data, 1), dtype=np.float64)
    tpl = np.ascontiguousarray(np.pad(template.bits, 1), dtype=np.uint8)
    fg26 = params.conn.fg26

    if params.direction == GROW:
        region = tpl.copy()
        backend.fm_grow(sc, region, params.threshold, fg26)
    elif params.direction == SHRINK:
        region = np.ascontiguousarray(
            np.pad(scalar.data > 0.0, 1).astype(np.uint8) | tpl
        )
        backend.fm_shrink(sc, region, tpl, params.threshold, fg26)
    else:
        region = tpl.copy()
        backend.fm_grow(sc, region, params.threshold, fg26)
        backend.fm_shrink(sc, region, tpl, params.threshold, fg26)

    out = BinaryMask(region[1:-1, 1:-1, 1:-1].astype(bool), template.spacing)
    want = betti_numbers(template, params.conn)
    got = betti_numbers(out, params.conn)
    if got != want:
        raise CorrectionError(
            f"correction ended with signature {got}, template has {want} "
            f"(direction={params.direction})"
        )
    return out


def correction_diff(before: BinaryMask, after: BinaryMask) -> CorrectionDiff:
    """Voxel counts added/removed by a correction, fraction of the input size."""
    require_same_grid(before, after)
    added = int((after.bits & ~before.bits).sum())
    removed = int((before.bits & ~after.bits).sum())
    n = before.popcount
    if n == 0:
        fraction = 0.0 if (added + removed) == 0 else float("inf")
    else:
        fraction = (added + removed) / n
    return CorrectionDiff(added, removed, fraction)
