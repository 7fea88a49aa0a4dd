"""Exception hierarchy shared by all scenred modules."""


class ScenredError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ScenredError, ValueError):
    pass


class ParseError(ScenredError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


# linalg
class NonSymmetric(ScenredError, ValueError):
    pass


class NotPositiveDefinite(ScenredError, ValueError):
    pass


class NoConvergence(ScenredError, RuntimeError):
    pass


class DimensionMismatch(ScenredError, ValueError):
    pass


# lp
class CycleDetected(ScenredError, RuntimeError):
    pass


class TooManyBinaries(ScenredError, ValueError):
    pass


# clustering
class InvalidK(ScenredError, ValueError):
    pass


class EmptyCluster(ScenredError, ValueError):
    pass


class InvalidSplitCounts(ScenredError, ValueError):
    pass


class SearchBudgetExceeded(ScenredError, RuntimeError):
    """Raised when the exact partition search hits its node cap.

    ``incumbent`` holds the best partition found so far and ``gap`` the
    difference between its guarantee and the best proven lower bound.
    """

    def __init__(self, message, incumbent=None, lower_bound=None):
        super().__init__(message)
        self.incumbent = incumbent
        self.lower_bound = lower_bound

    @property
    def gap(self):
        if self.incumbent is None or self.lower_bound is None:
            return None
        return self.incumbent.guarantee - self.lower_bound


class SingularRepresentative(ScenredError, ValueError):
    pass


class TooManyScenarios(ScenredError, ValueError):
    pass


# ambiguity
class InvalidDelta(ScenredError, ValueError):
    pass


class RankDeficient(ScenredError, ValueError):
    pass


class InfeasibleBox(ScenredError, ValueError):
    pass


class BoundsViolated(ScenredError, RuntimeError):
    pass


# dro
class AmbiguityMismatch(ScenredError, ValueError):
    pass


class InfeasibleX(ScenredError, ValueError):
    pass


class IterationLimit(ScenredError, RuntimeError):
    def __init__(self, message, gap=None, solution=None):
        super().__init__(message)
        self.gap = gap
        self.solution = solution


class SolverFailure(ScenredError, RuntimeError):
    """An LP/MILP underlying a DRO solve did not return an optimal status."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class InvalidSpec(ScenredError, ValueError):
    pass
