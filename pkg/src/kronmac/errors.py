"""Exception hierarchy shared across the package."""


class KronmacError(Exception):
    """Base class for all errors raised by kronmac."""


class NotPositiveDefiniteError(KronmacError, ValueError):
    pass


class NotNonnegativeDefiniteError(KronmacError, ValueError):
    pass


class EigenConvergenceError(KronmacError, ArithmeticError):
    def __init__(self, sweeps, off_norm):
        self.sweeps = sweeps
        self.off_norm = off_norm
        super().__init__(
            f"Jacobi eigensolver did not converge in {sweeps} sweeps "
            f"(off-diagonal norm {off_norm:.3e})")


class QuadratureError(KronmacError, ArithmeticError):
    def __init__(self, message, estimate, abserr):
        self.estimate = estimate
        self.abserr = abserr
        super().__init__(f"{message}: estimate {estimate!r}, abserr {abserr:.3e}")


class ConvergenceError(KronmacError, ArithmeticError):
    """An iterative scheme ran out of its iteration budget.

    ``residual`` is the last step size; ``iterate`` is whatever state the
    scheme had reached, so callers can inspect how far off it was.
    """

    def __init__(self, message, residual, iterations, iterate=None):
        self.residual = residual
        self.iterations = iterations
        self.iterate = iterate
        super().__init__(
            f"{message} after {iterations} iterations (residual {residual:.3e})")
