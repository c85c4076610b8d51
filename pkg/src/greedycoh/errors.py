"""Exception hierarchy shared by all modules."""


class GreedyError(Exception):
    """Base class for every error raised by greedycoh."""


# dictionary construction
class ZeroAtom(GreedyError, ValueError):
    pass


class NormViolation(GreedyError, ValueError):
    pass


class DuplicateAtom(GreedyError, ValueError):
    pass


class TargetUnreachable(GreedyError, RuntimeError):
    """Raised when no draw met the requested cumulative coherence."""


class IndexOutOfRange(GreedyError, IndexError):
    pass


class DimensionMismatch(GreedyError, ValueError):
    pass


class DictionaryMismatch(GreedyError, ValueError):
    """A representation was applied to a dictionary it is not bound to."""


# representations
class BadExponent(GreedyError, ValueError):
    pass


class SparsityTooLarge(GreedyError, ValueError):
    pass


class EmptyRepresentation(GreedyError, ValueError):
    pass


class HypothesisViolated(GreedyError, ValueError):
    pass


# greedy runs
class TrackingInconsistent(GreedyError, RuntimeError):
    pass


class SingularGram(GreedyError, ArithmeticError):
    pass


# analysis
class WrongAlgorithm(GreedyError, ValueError):
    pass


class InsufficientSteps(GreedyError, ValueError):
    pass


class TooLarge(GreedyError, ValueError):
    pass
