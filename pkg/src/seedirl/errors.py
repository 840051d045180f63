"""Exception hierarchy shared across the package."""


class SeedIrlError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SeedIrlError):
    """Invalid configuration, shape mismatch, or inconsistent inputs."""


class NumericError(SeedIrlError):
    """Non-finite values where finite ones are required."""


class GraphError(SeedIrlError):
    """Backward pass requested on a node that is not part of a recorded graph."""


class UsageError(SeedIrlError):
    """API misuse: out-of-range action, empty batch, exhausted episode."""


class GenerationError(SeedIrlError):
    """Level generation failed after exhausting rejection-sampling attempts."""


class FormatVersionError(SeedIrlError):
    """File has the wrong magic or an unsupported format version."""


class IntegrityError(SeedIrlError):
    """File content does not match its checksum or is structurally corrupt."""


class TrainingBudgetError(SeedIrlError):
    """Expert training exhausted its budget without reaching the competence gate."""


class StageError(SeedIrlError):
    """A pipeline stage failed; carries the stage tag for diagnostics."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
