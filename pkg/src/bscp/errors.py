"""Exception types shared across the package."""


class BscpError(Exception):
    """Base class for all package errors."""


class MaskError(BscpError):
    """Unreadable mask file, empty foreground, or degenerate boundary."""


class SkeletonError(BscpError):
    """Foreground too thin to skeletonize, or no generating points found."""


class ConfigError(BscpError):
    """Bad configuration value or unknown configuration key."""


class DatasetError(BscpError):
    """Dataset directory missing, empty, or violating protocol preconditions."""


class CodebookError(BscpError):
    """Codebook construction or encoding failure (e.g. duplicate entries)."""


class ModelFormatError(BscpError):
    """Model file has a bad magic, version, or inconsistent dimensions."""
