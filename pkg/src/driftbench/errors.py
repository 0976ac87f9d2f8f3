"""Exception hierarchy shared across the package."""


class DriftBenchError(Exception):
    """Base class for all package errors."""


class UsageError(DriftBenchError):
    """Bad configuration: unknown keys, missing keys, invalid combinations."""


class DataError(DriftBenchError):
    """Input data violates a precondition (missing file, bad values, empty split)."""


class MethodError(DataError):
    """A detection method cannot run on the given samples."""
