"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """A caller broke a documented precondition (shape, field tag, range)."""


class AllocationError(MemoryError):
    """A requested dataset or model does not fit in memory."""


class FileFormatError(IOError):
    """Base class for binary dataset/checkpoint decoding failures."""


class BadMagicError(FileFormatError):
    """The file does not start with the expected magic bytes."""


class VersionMismatchError(FileFormatError):
    """The file's format version is not supported by this build."""


class TruncatedPayloadError(FileFormatError):
    """The payload is shorter (or longer) than the header promises."""


class NonFiniteDataError(FileFormatError):
    """Decoded numeric payload contains NaN or infinity."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss.

    Carries the epoch and batch index at which the divergence was
    detected so runs can be triaged without re-running.
    """

    def __init__(self, epoch: int, batch: int, message: str = ""):
        self.epoch = epoch
        self.batch = batch
        detail = message or "non-finite training loss"
        super().__init__(f"{detail} (epoch {epoch}, batch {batch})")


class ExperimentError(RuntimeError):
    """A pipeline stage failed; wraps the original error with the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {cause}")


def ensure(condition: bool, message: str) -> None:
    """Raise :class:`ContractViolation` with *message* unless *condition* holds."""
    if not condition:
        raise ContractViolation(message)
