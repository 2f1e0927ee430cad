"""Exception hierarchy shared by all modules."""


class EtlError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(EtlError, ValueError):
    pass


class CsvFormatError(EtlError, ValueError):
    """Malformed or non-monotone CSV input; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StateCorruptionError(EtlError, RuntimeError):
    pass


class ProtocolError(EtlError):
    pass


class FrameError(ProtocolError):
    """A frame was truncated or had a payload of the wrong size."""


class DegenerateDistributionError(EtlError, RuntimeError):
    pass


class NoCycleError(EtlError):
    pass


class InsufficientDataError(EtlError):
    pass
