"""Exception types shared across the package.

Every numerical failure mode callers are expected to react to gets its
own class; plain ValueError is reserved for programming errors (bad
argument types, malformed config) that no caller should catch and retry.
"""


class DomainError(ValueError):
    """Argument outside the mathematical domain of the operation."""


class IndexWindowError(DomainError):
    """Moment index outside the table window [jmin, jmax]."""


class NonConvergenceError(ArithmeticError):
    """Iterative refinement failed to contract below tolerance."""


class PivotLossError(ArithmeticError):
    """Factorization hit a non-positive pivot: precision too low."""


class PrecisionExhaustedError(ArithmeticError):
    """Retry-with-doubled-bits policy ran out of attempts."""


class StepCollapseError(ArithmeticError):
    """Integrator step size collapsed (pole approach or tolerance wall).

    Carries the last certified abscissa in .last_s.
    """

    def __init__(self, message, last_s=None):
        super().__init__(message)
        self.last_s = last_s
