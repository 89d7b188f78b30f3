"""Exception hierarchy.

Exit-code mapping used by the CLI: usage errors are argparse's domain (2),
``DataError`` subclasses map to 3, ``InvariantViolation`` subclasses to 4.
"""


class TopoaugError(Exception):
    """Base class for all library errors."""


class DataError(TopoaugError):
    """Invalid or inconsistent input data (bad files, bad values, mismatched grids)."""


class SchemaError(DataError):
    """A label value or label-role assignment conflicts with the schema."""


class GridMismatchError(DataError):
    """Volumes that must share dims/spacing do not."""


class NiftiError(DataError):
    """Base for file format errors."""


class BadMagicError(NiftiError):
    """The file does not start with a NIfTI-1 magic string."""


class UnsupportedDatatypeError(NiftiError):
    """The file uses a datatype outside the supported set."""


class TruncatedFileError(NiftiError):
    """The voxel payload is shorter than the header promises."""


class DatatypeOverflowError(NiftiError):
    """A value cannot be represented in the requested on-disk datatype."""


class InvariantViolation(TopoaugError):
    """A topological or pipeline invariant failed to hold."""


class CorrectionError(InvariantViolation):
    """Topology correction could not establish the template's topology."""


class TemplateTransformError(InvariantViolation):
    """The transformed template no longer carries the source topology."""
