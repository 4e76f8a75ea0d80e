"""Exception types shared across the package."""


class MFPOError(Exception):
    """Base class for all package errors."""


class InvalidAction(MFPOError, ValueError):
    pass


class NonFiniteOutput(MFPOError, FloatingPointError):
    pass


class DimensionMismatch(MFPOError, ValueError):
    pass


class InvalidSchedule(MFPOError, ValueError):
    pass


class InvalidArchitecture(MFPOError, ValueError):
    pass


class EnumerationTooLarge(MFPOError, RuntimeError):
    pass


class ParseError(MFPOError, ValueError):
    """Configuration error carrying the offending line number and key, when known."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
