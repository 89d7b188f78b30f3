"""Topology-preserving augmentation and topological scoring for 3D voxel
label maps."""

from .backend import BACKEND
from .correction import CorrectionParams, correction_diff, fast_marching_correct
from .metric import ErrorClusterReport, dice, evaluate, topo_error_clusters
from .phantom import PhantomSpec, generate
from .pipeline import (
    AugmentedSample,
    BatchCase,
    augment_batch,
    augment_naive,
    augment_orthogonal,
    augment_preserving,
)
from .template import TopologyTemplate, derive_template, validate_template_against
from .topology import (
    CONN_6_26,
    CONN_26_6,
    ConnectivityPair,
    TopologySignature,
    betti_numbers,
    connected_components,
    correct_to_ball,
    euler_characteristic,
    is_simple,
    is_well_composed,
    make_well_composed,
    topological_erosion,
)
from .transform import (
    AugmentationSpec,
    SpatialTransform,
    normalize,
    perturb_intensity,
    resample_nearest,
    resample_trilinear,
    sample_transform,
)
from .volume import (
    BinaryMask,
    LabelSchema,
    LabelVolume,
    ScalarVolume,
    bloodpool_mask,
    compose_labels,
    extract_mask,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AugmentationSpec",
    "AugmentedSample",
    "BatchCase",
    "BinaryMask",
    "CONN_26_6",
    "CONN_6_26",
    "ConnectivityPair",
    "CorrectionParams",
    "ErrorClusterReport",
    "LabelSchema",
    "LabelVolume",
    "PhantomSpec",
    "ScalarVolume",
    "SpatialTransform",
    "TopologySignature",
    "TopologyTemplate",
    "augment_batch",
    "augment_naive",
    "augment_orthogonal",
    "augment_preserving",
    "betti_numbers",
    "bloodpool_mask",
    "compose_labels",
    "connected_components",
    "correct_to_ball",
    "correction_diff",
    "derive_template",
    "dice",
    "euler_characteristic",
    "evaluate",
    "extract_mask",
    "fast_marching_correct",
    "generate",
    "is_simple",
    "is_well_composed",
    "make_well_composed",
    "normalize",
    "perturb_intensity",
    "resample_nearest",
    "resample_trilinear",
    "sample_transform",
    "topo_error_clusters",
    "topological_erosion",
    "validate_template_against",
]
