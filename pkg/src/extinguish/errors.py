"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the set where an operation is defined."""


class MemoryBudgetError(DomainError):
    """A requested grid exceeds the configured point budget."""


class ConvergenceError(RuntimeError):
    """A resolvent solve did not reach its residual target.

    Carries the best iterate found and the residual history so the caller
    can decide whether to retry with a smaller step.
    """

    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = list(history or [])


class DivergenceError(RuntimeError):
    """A time integration blew up (norm growth beyond the allowed factor)."""


class InsufficientDataError(ValueError):
    """A fit or estimate was asked for with too few usable records."""


class ConfigError(ValueError):
    """Configuration text failed to parse or validate.

    ``problems`` lists every violation found, not only the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
