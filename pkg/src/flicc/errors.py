"""Exception types shared across the workbench."""


class FliccError(Exception):
    """Base class for all workbench errors."""


class UnknownLabel(FliccError):
    """A string does not normalize to any of the 12 fallacy labels."""


class ParseError(FliccError):
    """A dataset record is malformed.

    Carries the 1-based line number when raised by a file loader.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateId(FliccError):
    """Two dataset records share the same id."""


class EmptyText(FliccError):
    """A text field is empty after trimming."""


class InsufficientSamples(FliccError):
    """A label has too few samples to place at least one in every partition."""


class UntaggedSample(FliccError):
    """A sample is missing its split tag where one is required."""


class UnknownSampleId(FliccError):
    """A referenced sample id does not exist in the dataset."""


class EncoderUnavailable(FliccError):
    """The configured text encoder could not be loaded."""


class EmptyInput(FliccError):
    """An operation received an empty collection where items are required."""


class ZeroVector(FliccError):
    """Cosine similarity is undefined for an all-zero vector."""


class DimensionMismatch(FliccError):
    """Two vectors have different dimensions."""


class MissingEmbedding(FliccError):
    """A sample has no embedding where one is required."""


class TooFewSamples(FliccError):
    """Not enough samples for the requested operation."""


class LengthMismatch(FliccError):
    """Truth and prediction sequences differ in length."""


class InvalidSimplex(FliccError):
    """A probability vector does not sum to 1 or leaves [0, 1]."""


class CheckpointUnavailable(FliccError):
    """A pretrained checkpoint could not be loaded."""


class UnsupportedCheckpoint(FliccError):
    """The checkpoint architecture exposes no adaptable projection layers."""


class DivergedLoss(FliccError):
    """Training produced a non-finite loss."""


class OutOfMemory(FliccError):
    """Training exhausted device memory; retry with a smaller batch size."""


class AuthError(FliccError):
    """A provider credential is missing or rejected."""


class RateLimited(FliccError):
    """A provider kept rate-limiting after all retries."""


class ProviderError(FliccError):
    """A provider request failed for a non-transient reason."""


class ArtifactCorrupt(FliccError):
    """A saved model artifact is incomplete or unreadable."""


class VersionMismatch(FliccError):
    """A saved artifact was produced by an incompatible schema version."""


class BindFailure(FliccError):
    """The HTTP service could not bind its address."""


class IoError(FliccError):
    """A report or archive file could not be written."""
