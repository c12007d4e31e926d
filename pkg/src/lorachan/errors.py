"""Exception hierarchy for the lorachan package."""


class LoraChanError(Exception):
    """Base class for all lorachan errors."""


class SigmfParseError(LoraChanError):
    """Raised when a SigMF metadata document cannot be parsed at all.

    Carries the byte offset at which decoding failed (0 when the document
    decoded as JSON but is structurally unusable).
    """

    def __init__(self, message: str, byte_offset: int = 0):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class UnsupportedFormatError(LoraChanError):
    """Unknown or unsupported SigMF datatype tag."""


class SampleWindowError(LoraChanError):
    """A requested sample window falls outside the available data."""


class InvalidRecordError(LoraChanError):
    """A frame record violates its field invariants."""


class UnknownReceiverError(LoraChanError):
    """A record references a receiver with no configured position."""


class InsufficientDataError(LoraChanError):
    """Too few samples to run an estimator."""


class SingularDesignError(LoraChanError):
    """The regression design matrix is rank deficient."""


class DecompositionError(LoraChanError):
    """Variance decomposition is invalid (sigma_x exceeds sigma_z)."""


class DegenerateSeriesError(LoraChanError):
    """A series has zero variance where variability is required."""


class FactorizationError(LoraChanError):
    """Covariance factorization failed; names the offending leading minor."""

    def __init__(self, leading_minor: int):
        super().__init__(
            f"covariance matrix is not positive definite: "
            f"leading minor of order {leading_minor} is not positive"
        )
        self.leading_minor = leading_minor


class TraceConfigError(LoraChanError):
    """Invalid trace generation configuration."""
