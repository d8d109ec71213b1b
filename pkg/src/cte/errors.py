"""Exception hierarchy shared across the package."""


class CteError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CteError, ValueError):
    """An argument or data structure violates a documented invariant."""


class FormatError(CteError, ValueError):
    """A file does not follow the expected binary layout (bad magic/version)."""


class TruncatedFileError(CteError, OSError):
    """A file ends before the payload its header declares."""


class ZeroDenominatorError(CteError, ZeroDivisionError):
    """Regularized scoring hit an exactly-zero denominator with lambda = 0."""


class NoOverlapError(CteError, ValueError):
    """No candidate offset leaves the two sequences with overlapping frames."""


class CorruptCodeError(CteError, ValueError):
    """A compressed code references a centroid outside the codebook."""
