"""Exception types raised by qdistill."""


class QDistillError(Exception):
    """Base class for all library errors."""


class NotHermitian(QDistillError, ValueError):
    pass


class DimensionMismatch(QDistillError, ValueError):
    pass


class BadDimension(QDistillError, ValueError):
    pass


class BadParameter(QDistillError, ValueError):
    pass


class SchmidtRankTooHigh(QDistillError, ValueError):
    pass


class CapExceeded(QDistillError, ValueError):
    pass


class NotProjector(QDistillError, ValueError):
    pass


class WrongRank(QDistillError, ValueError):
    pass


class ZeroProbability(QDistillError, ValueError):
    pass


class ParseError(QDistillError, ValueError):
    """Malformed state or map file.

    The message carries the offending field (and line, when JSON decoding
    itself failed).
    """
