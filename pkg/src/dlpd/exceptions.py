"""Exception hierarchy shared by the estimators, solvers and the CLI."""


class DLPDError(Exception):
    """Base class for every error raised by this package."""


class EmptyWindowError(DLPDError, ValueError):
    """Total kernel weight at a covariate point is below the weight floor."""

    def __init__(self, message, label=None, point=None):
        super().__init__(message)
        self.label = label
        self.point = point


class AllWindowsEmptyError(DLPDError, ValueError):
    """Every bandwidth candidate stranded at least one leave-one-out point."""


class InfeasibleError(DLPDError, ArithmeticError):
    """The simplex solver could not find a feasible basis within its limits."""

    def __init__(self, message, iterations=0):
        super().__init__(message)
        self.iterations = iterations


class SingularCovarianceError(DLPDError, ArithmeticError):
    pass


class DegenerateDirectionError(DLPDError, ArithmeticError):
    """Discriminant direction has (numerically) zero variance under the true covariance."""


class DomainError(DLPDError, ValueError):
    pass


class DataSchemaError(DLPDError, ValueError):
    """Input file does not conform to the CSV schema."""
