"""Segmentation scoring: overlap (DSC) plus topologically relevant errors.

High overlap can coexist with clinically meaningless topology: a few
misplaced voxels at a thin interface read as an anatomical defect. The
cluster metric extends the simple-point idea from single voxels to whole
connected components of disagreement: a false-positive or false-negative
cluster is *relevant* when toggling it wholesale on the ground truth
changes the Betti numbers of the truth or of its background. The headline
count reported by the CLI is the number of relevant false-positive
clusters on the blood pool.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import SchemaError
from .topology import (
    DEFAULT_CONNECTIVITY,
    ConnectivityPair,
    TopologySignature,
    background_signature,
    betti_numbers,
)
from .volume import (
    BinaryMask,
    LabelSchema,
    LabelVolume,
    bloodpool_mask,
    extract_mask,
    require_same_grid,
)


def dice(a: BinaryMask, b: BinaryMask) -> float:
    """2|A n B| / (|A| + |B|); two empty masks count as perfect overlap."""
    require_same_grid(a, b)
    na, nb = a.popcount, b.popcount
    if na + nb == 0:
        return 1.0
    inter = int((a.bits & b.bits).sum())
    return 2.0 * inter / (na + nb)


@dataclass(frozen=True)
class ErrorCluster:
    voxel_count: int
    centroid: tuple[float, float, float]
    relevant: bool
    fg_delta: tuple[int, int, int]
    bg_delta: tuple[int, int, int]

    def to_dict(self) -> dict:
        return {
            "voxel_count": self.voxel_count,
            "centroid": list(self.centroid),
            "relevant": self.relevant,
            "signature_delta": {"foreground": list(self.fg_delta), "background": list(self.bg_delta)},
        }


@dataclass(frozen=True)
class ErrorClusterReport:
    fp_clusters: tuple[ErrorCluster, ...]
    fn_clusters: tuple[ErrorCluster, ...]
    counts: dict
    dsc_per_class: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "dsc_per_class": dict(self.dsc_per_class),
            "fp_clusters": [c.to_dict() for c in self.fp_clusters],
            "fn_clusters": [c.to_dict() for c in self.fn_clusters],
        }


def _clusters_of(diff: np.ndarray, struct: np.ndarray):
    labels, n = ndimage.label(diff, structure=struct)
    for cid in range(1, n + 1):
        yield labels == cid


def _delta(a: TopologySignature, b: TopologySignature) -> tuple[int, int, int]:
    return (b.b0 - a.b0, b.b1 - a.b1, b.b2 - a.b2)


def topo_error_clusters(
    truth: BinaryMask,
    pred: BinaryMask,
    conn: ConnectivityPair = DEFAULT_CONNECTIVITY,
) -> ErrorClusterReport:
    """Cluster the disagreement voxels and test each cluster's relevance.

    FP clusters are prediction-only voxels (toggled ON onto the truth), FN
    clusters truth-only voxels (toggled OFF). Clustering uses the
    foreground connectivity of ``conn``.
    """
    require_same_grid(truth, pred)
    struct = ndimage.generate_binary_structure(3, 3 if conn.fg26 else 1)
    t = truth.bits
    sig_fg = betti_numbers(truth, conn)
    sig_bg = background_signature(truth, conn)

    def classify(diff: np.ndarray, toggle_on: bool):
        out = []
        for cl in _clusters_of(diff, struct):
            toggled = (t | cl) if toggle_on else (t & ~cl)
            after_fg = betti_numbers(toggled, conn)
            after_bg = background_signature(toggled, conn)
            fg_d = _delta(sig_fg, after_fg)
            bg_d = _delta(sig_bg, after_bg)
            relevant = any(fg_d) or any(bg_d)
            idx = np.argwhere(cl)
            out.append(
                ErrorCluster(
                    voxel_count=int(cl.sum()),
                    centroid=tuple(float(v) for v in idx.mean(axis=0)),
                    relevant=relevant,
                    fg_delta=fg_d,
                    bg_delta=bg_d,
                )
            )
        return tuple(out)

    fp = classify(pred.bits & ~t, toggle_on=True)
    fn = classify(t & ~pred.bits, toggle_on=False)
    counts = {
        "fp_total": len(fp),
        "fp_relevant": sum(c.relevant for c in fp),
        "fn_total": len(fn),
        "fn_relevant": sum(c.relevant for c in fn),
    }
    return ErrorClusterReport(fp, fn, counts)


def evaluate(
    truth: LabelVolume,
    pred: LabelVolume,
    schema: LabelSchema,
    conn: ConnectivityPair = DEFAULT_CONNECTIVITY,
) -> ErrorClusterReport:
    """Per-class DSC plus blood-pool error clusters for one case."""
    require_same_grid(truth, pred)
    try:
        truth.validate_against(schema)
        pred.validate_against(schema)
    except SchemaError as e:
        raise SchemaError(f"evaluate: {e}") from e

    bp_t = bloodpool_mask(truth, schema)
    bp_p = bloodpool_mask(pred, schema)
    myo_t = extract_mask(truth, {schema.myocardium_label}, schema)
    myo_p = extract_mask(pred, {schema.myocardium_label}, schema)

    report = topo_error_clusters(bp_t, bp_p, conn)
    dscs = {
        "blood_pool": dice(bp_t, bp_p),
        "myocardium": dice(myo_t, myo_p),
    }
    return ErrorClusterReport(report.fp_clusters, report.fn_clusters, report.counts, dscs)


def summary_line(report: ErrorClusterReport) -> str:
    """One line: blood-pool DSC, myocardium DSC, relevant FP cluster count."""
    bp = report.dsc_per_class.get("blood_pool", float("nan"))
    myo = report.dsc_per_class.get("myocardium", float("nan"))
    return f"{bp:.4f} {myo:.4f} {report.counts['fp_relevant']}"
