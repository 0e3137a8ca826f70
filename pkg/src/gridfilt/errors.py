"""Exception types shared across the package."""


class DomainError(ValueError):
    """A field does not cover the points an operation needs to read."""


class ParamError(ValueError):
    """A parameter is outside its admissible range."""


class RegularityError(ValueError):
    """A difference operator violates one of the regularity conditions.

    The violated condition is named in ``condition`` ("R.1", "R.2a" or "R.2b").
    """

    def __init__(self, condition: str, message: str):
        self.condition = condition
        super().__init__(f"{condition}: {message}")


class ConvergenceError(RuntimeError):
    """An iterative routine did not reach its tolerance within budget.

    For the min-max solver, ``result`` carries the best feasible solution
    found so far together with its certified gap.
    """

    def __init__(self, message: str, result=None):
        self.result = result
        super().__init__(message)


class ConfigError(ValueError):
    """A run configuration fails schema validation."""
