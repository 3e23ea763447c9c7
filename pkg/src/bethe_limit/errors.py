"""Exception types raised across the package."""


class BetheLimitError(Exception):
    """Base class for every error raised by this package."""


# potentials

class PotentialError(BetheLimitError, ValueError):
    pass


class TooShort(PotentialError):
    pass


class SymmetryViolation(PotentialError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"h[{index}] != h[k-{index}]")


class ConcavityViolation(PotentialError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"2*h[{index}] < h[{index - 1}] + h[{index + 1}]")


class OccupancyOutOfRange(BetheLimitError, ValueError):
    pass


class DimensionMismatch(BetheLimitError, ValueError):
    pass


# graphs

class GraphError(BetheLimitError, ValueError):
    pass


class DivisibilityError(GraphError):
    pass


class SimpleGraphTimeout(GraphError):
    def __init__(self, retries: int, message: str = ""):
        self.retries = retries
        super().__init__(message or f"no acceptable graph after {retries} retries")


class DepthTooLarge(GraphError):
    pass


class NotAForest(GraphError):
    pass


class NotBiregular(GraphError):
    pass


class ParseError(GraphError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


class DegreeMismatch(GraphError):
    def __init__(self, node: str, message: str = ""):
        self.node = node
        super().__init__(message or f"degree mismatch at {node}")


# engines

class TooManyVariables(BetheLimitError, ValueError):
    pass


class WrongArity(BetheLimitError, ValueError):
    pass


class IndexMismatch(BetheLimitError, ValueError):
    pass


class InconsistentTau(BetheLimitError, ValueError):
    pass


class BracketFailure(BetheLimitError, RuntimeError):
    pass


class NotAFixedPoint(BetheLimitError, ValueError):
    pass


class QuadratureNonConvergence(BetheLimitError, RuntimeError):
    pass


class ArityTooLarge(BetheLimitError, ValueError):
    pass


# correlation oracles

class HypothesisViolated(BetheLimitError, ValueError):
    pass


class DivisionByZeroWeight(BetheLimitError, ValueError):
    pass


class DimensionTooLarge(BetheLimitError, ValueError):
    pass


class VerificationFailure(BetheLimitError, AssertionError):
    """A proved inequality or a contract check failed numerically."""
