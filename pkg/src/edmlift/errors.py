"""Exception types shared across the package."""


class EdmLiftError(Exception):
    """Base class for all edmlift errors."""


class InvalidInputError(EdmLiftError):
    """Non-finite coordinates or otherwise malformed input values."""


class ShapeError(EdmLiftError):
    """Array shape does not match what the operation expects."""


class DegeneratePoseError(EdmLiftError):
    """Pose geometry is degenerate (e.g. zero vertical extent)."""


class TooFewObservationsError(EdmLiftError):
    """Fewer visible joints than 3D recovery can support."""


class DegenerateMatrixError(EdmLiftError):
    """Distance matrix admits no meaningful embedding."""


class DegenerateAlignmentError(EdmLiftError):
    """Point sets are collinear/coincident; rigid alignment is ill-posed."""


class NumericError(EdmLiftError):
    """NaN/Inf encountered, eigensolver failure, or undefined statistic."""


class BehindCameraError(EdmLiftError):
    """A joint has nonpositive depth in the camera frame."""


class DatasetFormatError(EdmLiftError):
    """A dataset record violates the file schema (line-precise message)."""
