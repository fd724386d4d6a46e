"""Exception hierarchy shared across the package."""


class MixbitsError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MixbitsError):
    """Invalid run configuration (parse failure or constraint violation)."""


class DimensionError(MixbitsError):
    """Tensor shapes incompatible with the network architecture."""


class InvalidBitwidthError(MixbitsError):
    """Bitwidth outside the supported range (k must be >= 2)."""


class TrainingDivergedError(MixbitsError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged (non-finite loss) at epoch {epoch}")


class DatasetError(MixbitsError):
    """Malformed or inconsistent dataset input."""


class CheckpointError(MixbitsError):
    """Unreadable, corrupt, or version-incompatible checkpoint file."""


class SpaceTooLargeError(MixbitsError):
    """Enumeration request exceeds the configured assignment-space cap."""
