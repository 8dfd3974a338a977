"""Exception hierarchy shared by all aepkit modules."""


class AepError(Exception):
    """Base class for every error raised by aepkit."""


class ConfigError(AepError):
    """Invalid user input (bad law, bad config file, bad parameter)."""


# model
class NegativeProbability(ConfigError):
    pass


class NotNormalized(ConfigError):
    pass


class EmptySupport(ConfigError):
    pass


class OutOfRange(ConfigError):
    pass


class DriftZeroError(ConfigError):
    """The operation needs a jump law with non-zero drift."""


# simulator
class RingTooSmall(AepError):
    pass


class ConditioningConflict(ConfigError):
    pass


class NotNearestNeighbor(ConfigError):
    pass


class WindowTooWide(ConfigError):
    pass


# estimators
class EmptyEnsemble(AepError):
    pass


class DegenerateTime(AepError):
    pass


class NotStationary(AepError):
    pass


class WindowMassLoss(AepError):
    pass


class MissingConditionedEnsemble(AepError):
    pass


# oracle
class DimensionTooLarge(ConfigError):
    pass


class TimeTooLarge(ConfigError):
    pass


class SolverFailure(AepError):
    pass


class SupportTooWide(ConfigError):
    pass


# resolvent
class NonPositiveLambda(ConfigError):
    pass


class TruncationInsufficient(AepError):
    pass


class Disagreement(AepError):
    pass


# analysis
class TailDominates(AepError):
    pass


class InsufficientSpan(AepError):
    pass


class BadOrder(ConfigError):
    pass


class GridMismatch(AepError):
    pass


# cli
class GoldenDrift(AepError):
    pass
