"""Exception hierarchy and diagnostic warning categories."""


class TdhaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(TdhaError):
    """Input violates a structural precondition (non-finite, empty, bad shape)."""


class DomainError(TdhaError):
    """Point lies on or outside the unit ball, or another math-domain violation."""


class DegenerateInputError(TdhaError):
    """Zero vector where a direction is required."""


class ShapeError(TdhaError):
    """Mismatched lengths or dimensions between paired arguments."""


class ConvergenceError(TdhaError):
    """Iterative solver exhausted its iteration budget."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class PromptFormatError(TdhaError):
    """Prompt template is missing the ``{class}`` placeholder."""


class BundleError(TdhaError):
    """Base class for embedding-bundle I/O and validation failures."""


class BadMagicError(BundleError):
    """Array file does not start with the EMB1 magic bytes."""


class UnsupportedVersionError(BundleError):
    """Array file declares a format version this reader does not know."""


class TruncatedPayloadError(BundleError):
    """Array file payload is shorter than its header promises."""


class TrailingDataError(BundleError):
    """Array file payload is longer than its header promises."""


class ManifestError(BundleError):
    """Bundle manifest is missing, unparseable, or structurally invalid."""


class LabelOutOfRangeError(BundleError):
    """A label refers to a class index outside [0, class_count)."""


class BundleValidationError(BundleError):
    """Cross-array consistency check failed (dims, lengths, finiteness)."""


class InsufficientSamplesError(TdhaError):
    """A class has fewer training samples than the requested shot count."""


class UsageError(TdhaError):
    """Bad command-line flags or flag combinations."""


class DegenerateDataWarning(UserWarning):
    """Diagnostic for pathological but tolerated data (e.g. coincident prototypes)."""


class ProtocolWarning(UserWarning):
    """Data is usable but too small for the full evaluation protocol."""
