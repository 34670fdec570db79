"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Matrix or vector dimensions are inconsistent with the operation."""


class NotPsdError(ValueError):
    """A matrix required to be positive semidefinite has a genuinely negative eigenvalue."""


class ConfigError(ValueError):
    """Scenario configuration is invalid.  ``diagnostics`` lists every violation."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class InfeasibleProblemError(RuntimeError):
    """No (strictly) feasible point is available for a constrained subproblem."""


class InfeasibleThetaStepError(RuntimeError):
    """The reflection-coefficient update cannot produce a feasible unit-modulus point.

    The outer loop treats this as "keep the previous reflection vector and
    continue"; only the theta block is skipped, feasibility of the iterate is
    untouched.
    """


class NumericalError(RuntimeError):
    """A solver failed to converge; the message carries diagnostics."""
