"""Exception hierarchy shared by all indexlab modules."""

from __future__ import annotations


class IndexLabError(Exception):
    """Base class. ``exit_code`` is what the CLI returns when this escapes."""

    exit_code = 5


class InvalidInput(IndexLabError):
    exit_code = 3


class NumericalFailure(IndexLabError):
    exit_code = 4


# matrix-core
class NotHermitian(InvalidInput):
    pass


class NoConvergence(NumericalFailure):
    pass


class SingularIterate(NumericalFailure):
    pass


class RankDeficient(NumericalFailure):
    pass


# symbols / boundary
class DimensionMismatch(InvalidInput):
    pass


class NotElliptic(NumericalFailure):
    pass


class NotInvertible(NumericalFailure):
    pass


class NotSelfAdjoint(InvalidInput):
    pass


class ZeroEigenvalue(NumericalFailure):
    pass


# topology
class RankJump(NumericalFailure):
    pass


class GridTooCoarse(NumericalFailure):
    pass


class RankTooLarge(InvalidInput):
    pass


# spectral flow
class NyquistViolation(NumericalFailure):
    pass


class NotLagrangian(NumericalFailure):
    pass


class AmbiguousCrossing(NumericalFailure):
    pass


class StepTooCoarse(NumericalFailure):
    pass


class ParamMismatch(InvalidInput):
    pass


# ktheory
class TooLarge(InvalidInput):
    pass


class IndexOutOfRange(InvalidInput):
    pass


# harness
class InvalidScenario(InvalidInput):
    pass


class MissingData(InvalidInput):
    pass
