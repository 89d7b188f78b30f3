"""Command-line entry points.

Exit codes: 0 success, 2 usage error, 3 data error (bad files, bad values,
mismatched grids), 4 topology/pipeline invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .correction import CorrectionParams
from .errors import DataError, InvariantViolation, TopoaugError
from .metric import evaluate, summary_line
from .nifti import read_nifti, write_nifti
from .phantom import KINDS, PhantomSpec, generate
from .pipeline import BatchCase, augment_batch
from .template import derive_template, read_template, write_template
from .topology import betti_numbers
from .transform import AugmentationSpec
from .volume import LabelSchema, bloodpool_mask

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INVARIANT = 4


def _load_schema(path: str) -> LabelSchema:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return LabelSchema.from_dict(json.load(fh))
    except (OSError, ValueError, KeyError) as e:
        raise DataError(f"cannot load schema {path}: {e}") from e


def _cmd_derive_template(args) -> int:
    labels = read_nifti(args.labels, kind="labels")
    schema = _load_schema(args.schema)
    template = derive_template(labels, schema)
    sidecar = write_template(template, args.out)
    print(f"template {template.signature} -> {args.out} (+ {sidecar.name})")
    return EXIT_OK


def _cmd_augment(args) -> int:
    image = read_nifti(args.image, kind="scalar")
    labels = read_nifti(args.labels, kind="labels")
    schema = _load_schema(args.schema)
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec_dict = json.load(fh)
    if args.seed is not None:
        spec_dict["seed"] = args.seed
    spec = AugmentationSpec.from_dict(spec_dict)
    template = read_template(args.template) if args.template else None
    if args.mode == "preserving" and template is None:
        raise DataError("--template is required in preserving mode")
    params = CorrectionParams(threshold=args.threshold)
    case = BatchCase(image, labels, schema, template, name=Path(args.labels).name)
    rows, _ = augment_batch(
        [case],
        spec,
        args.count,
        mode=args.mode,
        params=params,
        jobs=args.jobs,
        out_dir=args.out_dir,
        normalize_image=args.normalize,
        perturb=args.perturb,
    )
    failed = [r for r in rows if r["status"] != "ok"]
    print(f"{len(rows) - len(failed)}/{len(rows)} samples ok -> {args.out_dir}")
    if failed:
        for r in failed:
            print(f"  sample {r['index']} failed: {r['error']}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    truth = read_nifti(args.truth, kind="labels")
    pred = read_nifti(args.pred, kind="labels")
    schema = _load_schema(args.schema)
    report = evaluate(truth, pred, schema)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(summary_line(report))
    return EXIT_OK


def _cmd_phantom(args) -> int:
    pairs = None
    if args.channels:
        pairs = tuple(
            tuple(int(v) for v in pair.split("-")) for pair in args.channels.split(",")
        )
    spec = PhantomSpec(
        kind=args.kind,
        dims=(args.dims, args.dims, args.dims) if isinstance(args.dims, int) else args.dims,
        wall_thickness_vox=args.wall,
        channel_radius_vox=args.channel_radius,
        seed=args.seed,
        chambers=args.chambers,
        channel_pairs=pairs,
    )
    ph = generate(spec)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_nifti(ph.image, f"{prefix}_image.nii.gz", "float32")
    write_nifti(ph.labels, f"{prefix}_labels.nii.gz", "uint8")
    with open(f"{prefix}_schema.json", "w", encoding="utf-8") as fh:
        json.dump(ph.schema.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{args.kind} {ph.expected} chi={ph.expected.euler} -> {prefix}_*.nii.gz")
    return EXIT_OK


def _cmd_check_topology(args) -> int:
    labels = read_nifti(args.labels, kind="labels")
    schema = _load_schema(args.schema)
    sig = betti_numbers(bloodpool_mask(labels, schema))
    print(f"{sig} chi={sig.euler}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topoaug",
        description="Topology-preserving augmentation and topological scoring "
        "for 3D multi-class label maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive-template", help="derive the blood-pool topology template")
    p.add_argument("--labels", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True, help="output mask path (.nii or .nii.gz)")
    p.set_defaults(func=_cmd_derive_template)

    p = sub.add_parser("augment", help="generate augmented samples")
    p.add_argument("--image", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--template", help="template mask (required for preserving mode)")
    p.add_argument("--spec", required=True, help="augmentation spec JSON")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--mode", choices=("preserving", "naive", "orthogonal"), default="preserving")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=int(os.environ.get("TOPOAUG_JOBS", "1")))
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=None, help="override the spec's seed")
    p.add_argument("--normalize", action="store_true", help="normalize images to zero mean/unit var")
    p.add_argument("--perturb", action="store_true", help="apply intensity perturbation")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("evaluate", help="score a segmentation against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", help="write the full report JSON here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("phantom", help="generate a synthetic phantom")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--dims", type=int, default=48)
    p.add_argument("--wall", type=int, default=1)
    p.add_argument("--channel-radius", type=float, default=2.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chambers", type=int, default=4)
    p.add_argument("--channels", help="channel pairs like 0-1,1-2 (n-chamber-graph)")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("check-topology", help="print the blood pool's topology signature")
    p.add_argument("--labels", required=True)
    p.add_argument("--schema", required=True)
    p.set_defaults(func=_cmd_check_topology)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DataError, TopoaugError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
