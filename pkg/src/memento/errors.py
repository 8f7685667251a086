"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised when parameters cannot produce a valid structure."""


class WireFormatError(ValueError):
    """Base class for report (de)serialization failures."""


class TruncatedReport(WireFormatError):
    """Byte buffer ends before the declared payload."""


class BadMagic(WireFormatError):
    """Buffer does not start with the report magic number."""


class VersionMismatch(WireFormatError):
    """Report was serialized with an unsupported format version."""
