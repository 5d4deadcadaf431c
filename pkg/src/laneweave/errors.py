"""Exception types shared across the package."""


class LaneweaveError(Exception):
    """Base class for all package errors."""


class InvalidSampleError(LaneweaveError):
    """A drive-log sample has unusable lane-marking distances."""

    def __init__(self, dist_left, dist_right, message=None):
        self.dist_left = dist_left
        self.dist_right = dist_right
        super().__init__(
            message
            or f"invalid marking distances: left={dist_left!r} right={dist_right!r}"
        )


class EmptySeriesError(LaneweaveError):
    """Too few usable samples to build a series."""


class SchemaError(LaneweaveError):
    """An input file does not match the expected schema."""

    def __init__(self, message, *, column=None, row=None):
        self.column = column
        self.row = row
        super().__init__(message)


class CalibrationError(LaneweaveError):
    """Calibration cannot proceed on the given data."""


class NotCalibratedError(CalibrationError):
    """An operation requires a model component that has not been fitted."""


class ModelFormatError(LaneweaveError):
    """A model file is unreadable, unsupported, or violates an invariant."""


class MetricError(LaneweaveError):
    """A snippet is too short for metric computation."""


class EvaluationError(LaneweaveError):
    """An evaluation run cannot produce a report."""


class SyntheticSpecError(LaneweaveError):
    """A synthetic model description is inconsistent."""
