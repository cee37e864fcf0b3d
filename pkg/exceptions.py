"""Error types shared by the simulator modules."""

from typing import Optional


class IrsDesignError(Exception):
    """Base class for every error raised by this project."""


class DomainError(IrsDesignError, ValueError):
    """A precondition of a math-layer operation does not hold."""


class ScenarioError(IrsDesignError):
    """
    Malformed scenario file or override.

    :param message: Human-readable diagnostic
    :param line: 1-based line number in the scenario file, if known
    :param field: Offending key, if known
    """

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.message = message
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class SolverError(IrsDesignError):
    """The SDP backend returned something other than an optimal point."""

    def __init__(self, message: str, status: str = "numerical_failure"):
        self.status = status
        super().__init__(message)


class RandomizationError(IrsDesignError):
    """No Gaussian-randomization candidate met the worst-case constraint."""

    def __init__(self, message: str, best_margin: float):
        self.best_margin = best_margin
        super().__init__(f"{message} (best margin {best_margin:.4e})")


class OptimizerError(IrsDesignError):
    """Alternating optimization failed; carries where it stopped."""

    def __init__(self, message: str, iteration: int = 0, trace=None):
        self.iteration = iteration
        self.trace = list(trace) if trace is not None else []
        super().__init__(f"iteration {iteration}: {message}")
