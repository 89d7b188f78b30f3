"""Derivation of the blood pool's contiguity template.

The trabeculated blood pool is topologically noisy, but how the chambers
and vessels communicate is not: correct each sub-class to a topological
ball, recombine, and the union's topology is exactly the contact structure
of the sub-classes. Repairing the union to a well-composed set makes that
topology connectivity-independent and lets repeated topological erosion
shrink it to a one-voxel-wide template that still carries it — a
morphologically simple object that survives resampling far better than
thin-walled anatomy does.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DataError, InvariantViolation
from .topology import (
    DEFAULT_CONNECTIVITY,
    ConnectivityPair,
    TopologySignature,
    betti_numbers,
    correct_to_ball,
    is_well_composed,
    make_well_composed,
    topological_erosion,
)
from .volume import BinaryMask, LabelSchema, LabelVolume, extract_mask, require_same_grid


@dataclass(frozen=True)
class TopologyTemplate:
    """One-voxel-wide mask carrying the blood pool's topology.

    Invariants: the mask is well-composed, is a fixpoint of topological
    erosion, and its Betti numbers equal ``signature``.
    """

    mask: BinaryMask
    signature: TopologySignature
    provenance: Mapping = field(default_factory=dict)


def derive_template(
    labels: LabelVolume,
    schema: LabelSchema,
    conn: ConnectivityPair = DEFAULT_CONNECTIVITY,
) -> TopologyTemplate:
    """Sub-class balls -> union -> well-composed repair -> erode to template.

    The corrected sub-classes are consumed only here; callers keep the
    original labels for image-space resampling.
    """
    labels.validate_against(schema)
    union = np.zeros(labels.dims, dtype=bool)
    for sub in schema.bloodpool_sublabels:
        m = extract_mask(labels, {sub}, schema)
        if not m.bits.any():
            raise DataError(f"blood-pool sublabel {sub} is empty")
        union |= correct_to_ball(m, conn).bits

    pool = make_well_composed(BinaryMask(union, labels.spacing))
    signature = betti_numbers(pool, conn)
    template = topological_erosion(pool, conn, preserve_well_composedness=True)

    got = betti_numbers(template, conn)
    if got != signature:
        raise InvariantViolation(
            f"erosion changed the signature: pool {signature}, template {got}"
        )
    if not is_well_composed(template):
        raise InvariantViolation("template is not well-composed")
    return TopologyTemplate(
        mask=template,
        signature=signature,
        provenance={
            "schema": schema.to_dict(),
            "connectivity": [conn.foreground, conn.background],
            "pool_voxels": pool.popcount,
            "template_voxels": template.popcount,
        },
    )


@dataclass(frozen=True)
class TemplateValidation:
    ok: bool
    contained: bool
    signature_expected: TopologySignature
    signature_actual: TopologySignature

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "contained": self.contained,
            "signature_expected": self.signature_expected.to_dict(),
            "signature_actual": self.signature_actual.to_dict(),
        }


def validate_template_against(
    labels: LabelVolume,
    template: TopologyTemplate,
    schema: LabelSchema,
    conn: ConnectivityPair = DEFAULT_CONNECTIVITY,
) -> TemplateValidation:
    """Does the template sit inside this label map's (well-composed) blood
    pool and carry its topology?"""
    require_same_grid(labels, template.mask)
    from .volume import bloodpool_mask

    pool = make_well_composed(bloodpool_mask(labels, schema))
    contained = bool(np.all(~template.mask.bits | pool.bits))
    actual = betti_numbers(pool, conn)
    ok = contained and actual == template.signature
    return TemplateValidation(ok, contained, template.signature, actual)


def template_sidecar_path(mask_path: str | Path) -> Path:
    p = Path(mask_path)
    name = p.name
    for ext in (".nii.gz", ".nii"):
        if name.endswith(ext):
            return p.with_name(name[: -len(ext)] + ".json")
    return p.with_suffix(".json")


def write_template(template: TopologyTemplate, mask_path: str | Path) -> Path:
    """Template mask as a NIfTI volume plus a JSON sidecar."""
    from .nifti import write_nifti

    mask_path = Path(mask_path)
    vol = LabelVolume(template.mask.bits.astype(np.uint8), template.mask.spacing)
    write_nifti(vol, mask_path, datatype="uint8")
    sidecar = template_sidecar_path(mask_path)
    payload = {
        "signature": template.signature.to_dict(),
        "provenance": dict(template.provenance),
    }
    sidecar.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return sidecar


def read_template(mask_path: str | Path) -> TopologyTemplate:
    from .nifti import read_nifti

    vol = read_nifti(mask_path, kind="labels")
    sidecar = template_sidecar_path(mask_path)
    if not sidecar.exists():
        raise DataError(f"template sidecar {sidecar} not found")
    payload = json.loads(sidecar.read_text(encoding="utf-8"))
    mask = BinaryMask(vol.data > 0, vol.spacing)
    sig = TopologySignature.from_dict(payload["signature"])
    got = betti_numbers(mask)
    if got != sig:
        raise DataError(f"template mask signature {got} does not match sidecar {sig}")
    return TopologyTemplate(mask=mask, signature=sig, provenance=payload.get("provenance", {}))
