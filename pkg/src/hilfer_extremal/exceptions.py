"""Exception and warning types shared across the package."""


class SeriesConvergenceError(ArithmeticError):
    """A truncated series did not converge, or lost too many digits to cancellation."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature stalled."""


class BackendDisagreementError(ArithmeticError):
    """Closed-form and density-quadrature operator evaluations disagree."""


class IterationConvergenceError(RuntimeError):
    """The monotone iteration hit ``max_iter`` before reaching ``tol``.

    The report of the last iteration is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class QuadratureAccuracyWarning(RuntimeWarning):
    pass


class IllConditionedWarning(RuntimeWarning):
    pass


class OrderingWarning(RuntimeWarning):
    """The monotone chains left their expected order by more than the slack."""
