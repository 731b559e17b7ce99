class PlcSynthError(Exception):
    """Base class for every error raised by plc_synth."""

    exit_code: int = 5


class ContainerFormatError(PlcSynthError):
    """Raised when a manifest, payload or config file does not follow its format."""

    exit_code = 4


class InvalidEnsembleError(PlcSynthError, ValueError):
    """Raised when an ensemble violates its invariants (shape, finiteness, zero rows)."""


class ZeroEntryError(PlcSynthError, ValueError):
    """Raised when a CFR entry is exactly zero and cannot be log-transformed."""

    def __init__(self, row: int, column: int):
        self.row = row
        self.column = column
        super().__init__(f"CFR entry is zero at row {row}, column {column}")


class NonFiniteInputError(PlcSynthError, ValueError):
    """Raised when an input contains NaN or infinite values."""


class DimensionMismatchError(PlcSynthError, ValueError):
    """Raised when array dimensions disagree with the declared ones."""


class ShapeMismatchError(PlcSynthError, ValueError):
    """Raised when two inputs that must share a shape do not."""


class TooFewRealizationsError(PlcSynthError, ValueError):
    """Raised when fewer than two realizations are available for estimation."""


class EmptySlopeSamplesError(PlcSynthError, ValueError):
    """Raised when a slope distribution carries no samples."""


class EmptyInputError(PlcSynthError, ValueError):
    """Raised when a distribution comparison receives an empty sample."""


class GridMismatchError(PlcSynthError, ValueError):
    """Raised when two frequency grids are not identical."""


class DegenerateGridError(PlcSynthError, ValueError):
    """Raised when a frequency grid has fewer than two samples."""


class NotSymmetricError(PlcSynthError, ValueError):
    """Raised when a matrix expected to be symmetric is not."""

    exit_code = 6


class IndefiniteMatrixError(PlcSynthError, ValueError):
    """Raised when a covariance has eigenvalues below the tolerated negative floor."""

    exit_code = 6


class SingularNoiseError(PlcSynthError, ValueError):
    """Raised when a noise covariance is not positive definite."""

    exit_code = 6


class MissingNoiseModelError(PlcSynthError):
    """Raised when a MIMO capacity evaluation is requested without a noise model."""

    exit_code = 2
