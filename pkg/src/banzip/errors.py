"""Exception hierarchy shared across the package."""


class BanzipError(Exception):
    """Base class for all banzip errors."""


class ModelDefectError(BanzipError):
    """The probability model produced a value it must never produce
    (zero/negative probability, non-finite logits)."""


class ConfigError(BanzipError):
    """Invalid configuration value."""


class SnapshotError(BanzipError):
    """Model snapshot file is malformed, corrupt, or of the wrong version."""


class ContainerFormatError(BanzipError):
    """Compressed container magic/version/header is invalid."""


class ModelMismatchError(BanzipError):
    """Container was produced with a different model snapshot than the one
    supplied for decompression."""


class TruncatedStreamError(BanzipError):
    """Coded payload ended before all symbols could be decoded."""
