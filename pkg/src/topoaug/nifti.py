"""Minimal NIfTI-1 reader/writer.

Covers what the label-map workflows need: the 348-byte header, magic
``n+1`` (single file) and ``ni1`` (header + .img pair), datatypes
uint8/int16/float32/float64, scl_slope/scl_inter scaling on read, gzip
containers detected by magic bytes, and the srow affine carried through
untouched (voxel data is consumed in stored order; topology does not care
about orientation). Integer data round-trips bit-exactly; gzip output is
written with a fixed mtime so identical volumes produce identical files.
"""

from __future__ import annotations

import gzip
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    DataError,
    DatatypeOverflowError,
    TruncatedFileError,
    UnsupportedDatatypeError,
)
from .volume import LabelVolume, ScalarVolume

HEADER_DTYPE = np.dtype(
    [
        ("sizeof_hdr", "i4"),
        ("data_type", "S10"),
        ("db_name", "S18"),
        ("extents", "i4"),
        ("session_error", "i2"),
        ("regular", "S1"),
        ("dim_info", "u1"),
        ("dim", "i2", (8,)),
        ("intent_p1", "f4"),
        ("intent_p2", "f4"),
        ("intent_p3", "f4"),
        ("intent_code", "i2"),
        ("datatype", "i2"),
        ("bitpix", "i2"),
        ("slice_start", "i2"),
        ("pixdim", "f4", (8,)),
        ("vox_offset", "f4"),
        ("scl_slope", "f4"),
        ("scl_inter", "f4"),
        ("slice_end", "i2"),
        ("slice_code", "u1"),
        ("xyzt_units", "u1"),
        ("cal_max", "f4"),
        ("cal_min", "f4"),
        ("slice_duration", "f4"),
        ("toffset", "f4"),
        ("glmax", "i4"),
        ("glmin", "i4"),
        ("descrip", "S80"),
        ("aux_file", "S24"),
        ("qform_code", "i2"),
        ("sform_code", "i2"),
        ("quatern_b", "f4"),
        ("quatern_c", "f4"),
        ("quatern_d", "f4"),
        ("qoffset_x", "f4"),
        ("qoffset_y", "f4"),
        ("qoffset_z", "f4"),
        ("srow_x", "f4", (4,)),
        ("srow_y", "f4", (4,)),
        ("srow_z", "f4", (4,)),
        ("intent_name", "S16"),
        ("magic", "S4"),
    ]
)
assert HEADER_DTYPE.itemsize == 348

DTYPES = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    16: np.dtype(np.float32),
    64: np.dtype(np.float64),
}
CODES = {"uint8": 2, "int16": 4, "float32": 16, "float64": 64}


def _open_payload(path: Path):
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def read_nifti(path, kind: str = "auto") -> ScalarVolume | LabelVolume:
    """Read a 3D NIfTI-1 volume.

    ``kind`` selects the container: ``labels`` (integer classes, scaling
    must be trivial), ``scalar``, or ``auto`` (labels for unscaled uint8,
    scalar otherwise).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path} does not exist")
    if kind not in ("auto", "labels", "scalar"):
        raise DataError(f"kind must be auto|labels|scalar, got {kind!r}")
    blob = _open_payload(path)
    if len(blob) < 348:
        raise TruncatedFileError(f"{path}: file shorter than a NIfTI-1 header")
    hdr = np.frombuffer(blob[:348], dtype=HEADER_DTYPE)[0]
    if int(hdr["sizeof_hdr"]) != 348:
        swapped = hdr.byteswap().view(hdr.dtype.newbyteorder())
        if int(swapped["sizeof_hdr"]) != 348:
            raise BadMagicError(f"{path}: not a NIfTI-1 file (sizeof_hdr)")
        hdr = swapped
    magic = bytes(hdr["magic"])
    if magic not in (b"n+1\x00", b"ni1\x00"):
        raise BadMagicError(f"{path}: bad magic {magic!r}")

    code = int(hdr["datatype"])
    if code not in DTYPES:
        raise UnsupportedDatatypeError(f"{path}: datatype code {code} unsupported")
    dt = DTYPES[code]
    if hdr["dim"][0] < 3 or np.any(hdr["dim"][4 : hdr["dim"][0] + 1] > 1):
        raise DataError(f"{path}: only 3D volumes are supported (dim={hdr['dim'].tolist()})")
    dims = tuple(int(v) for v in hdr["dim"][1:4])
    if any(d < 1 for d in dims):
        raise DataError(f"{path}: bad dims {dims}")

    if magic == b"n+1\x00":
        offset = int(hdr["vox_offset"])
        payload = blob[offset:]
    else:
        img_path = path.with_suffix(".img")
        if str(path).endswith(".hdr.gz"):
            img_path = Path(str(path)[: -len(".hdr.gz")] + ".img.gz")
        if not img_path.exists():
            raise DataError(f"{path}: companion image file {img_path} not found")
        payload = _open_payload(img_path)

    nbytes = int(np.prod(dims)) * dt.itemsize
    if len(payload) < nbytes:
        raise TruncatedFileError(
            f"{path}: payload has {len(payload)} bytes, header promises {nbytes}"
        )
    if hdr.dtype.byteorder in (">", "<"):
        dt = dt.newbyteorder(hdr.dtype.byteorder)
    data = np.frombuffer(payload[:nbytes], dtype=dt).reshape(dims, order="F")

    spacing = tuple(float(p) if p > 0 else 1.0 for p in hdr["pixdim"][1:4])
    affine = None
    if int(hdr["sform_code"]) > 0:
        affine = np.eye(4)
        affine[0] = hdr["srow_x"]
        affine[1] = hdr["srow_y"]
        affine[2] = hdr["srow_z"]

    slope = float(hdr["scl_slope"])
    inter = float(hdr["scl_inter"])
    scaled = not (slope in (0.0, 1.0) and inter == 0.0)
    if scaled:
        if kind == "labels":
            raise DataError(f"{path}: scaled data cannot be read as labels")
        return ScalarVolume(
            data.astype(np.float64) * (slope if slope != 0.0 else 1.0) + inter,
            spacing,
            affine=affine,
        )
    if kind == "labels" or (kind == "auto" and code == 2):
        if not np.issubdtype(data.dtype, np.integer):
            raise DataError(f"{path}: non-integer data cannot be read as labels")
        if data.size and (data.min() < 0 or data.max() > 255):
            raise DataError(f"{path}: label values outside 0..255")
        return LabelVolume(data.astype(np.uint8), spacing, affine=affine)
    return ScalarVolume(data.astype(np.float64), spacing, affine=affine)


def write_nifti(vol: ScalarVolume | LabelVolume, path, datatype: str | None = None) -> None:
    """Write a volume as single-file NIfTI-1 (gzipped when the path ends in .gz).

    Integer targets require exactly representable values; anything else
    raises rather than silently quantizing.
    """
    path = Path(path)
    if datatype is None:
        datatype = "uint8" if isinstance(vol, LabelVolume) else "float32"
    if datatype not in CODES:
        raise UnsupportedDatatypeError(f"writer datatype must be one of {sorted(CODES)}")
    code = CODES[datatype]
    target = DTYPES[code]

    data = vol.data
    if np.issubdtype(target, np.integer):
        info = np.iinfo(target)
        if np.issubdtype(data.dtype, np.floating) and not np.all(data == np.round(data)):
            raise DatatypeOverflowError(f"non-integral values cannot be written as {datatype}")
        if data.size and (data.min() < info.min or data.max() > info.max):
            raise DatatypeOverflowError(
                f"values [{data.min()},{data.max()}] overflow {datatype}"
            )
    out = np.asarray(data, dtype=target)

    hdr = np.zeros((), dtype=HEADER_DTYPE)
    hdr["sizeof_hdr"] = 348
    dims = vol.dims
    hdr["dim"][0] = 3
    hdr["dim"][1:4] = dims
    hdr["dim"][4:] = 1
    hdr["datatype"] = code
    hdr["bitpix"] = target.itemsize * 8
    hdr["pixdim"][0] = 1.0
    hdr["pixdim"][1:4] = vol.spacing
    hdr["vox_offset"] = 352.0
    hdr["scl_slope"] = 1.0
    hdr["scl_inter"] = 0.0
    hdr["xyzt_units"] = 2  # mm
    affine = vol.affine if vol.affine is not None else np.diag((*vol.spacing, 1.0))
    hdr["sform_code"] = 1
    hdr["srow_x"] = affine[0]
    hdr["srow_y"] = affine[1]
    hdr["srow_z"] = affine[2]
    hdr["magic"] = b"n+1"

    blob = hdr.tobytes() + b"\x00\x00\x00\x00" + out.tobytes(order="F")
    if path.suffix == ".gz":
        with open(path, "wb") as fh:
            with gzip.GzipFile(filename="", mode="wb", fileobj=fh, mtime=0) as gz:
                gz.write(blob)
    else:
        path.write_bytes(blob)
