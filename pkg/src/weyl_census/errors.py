"""Exception hierarchy shared by all modules."""


class WeylCensusError(Exception):
    """Base class for every error raised by this package."""


class NonFiniteResult(WeylCensusError):
    pass


class ZeroModulus(WeylCensusError):
    pass


class NotRegular(WeylCensusError):
    pass


class NotTransverse(WeylCensusError):
    pass


class PingPongFailed(WeylCensusError):
    pass


class NoPowerFound(WeylCensusError):
    pass


class DimensionMismatch(WeylCensusError):
    pass


class ZeroVector(WeylCensusError):
    pass


class NotUnimodular(WeylCensusError):
    pass


class ParseError(WeylCensusError):
    pass


class NotVeryReduced(WeylCensusError):
    pass


class EmptyCore(WeylCensusError):
    pass


class Overflow(WeylCensusError):
    pass


class BudgetExceeded(WeylCensusError):
    pass


class WindowBeyondHorizon(WeylCensusError):
    pass


class DegenerateWindow(WeylCensusError):
    pass


class RankOne(WeylCensusError):
    pass


class FingerprintMismatch(WeylCensusError):
    pass
