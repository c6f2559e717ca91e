"""Exception types raised by fracdp."""


class FracDPError(Exception):
    """Base class for all package errors."""


class DomainError(FracDPError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(FracDPError, ArithmeticError):
    """A series or iteration exhausted its budget before reaching tolerance."""


class SingularStepError(FracDPError, ArithmeticError):
    """A diagonal quadrature weight underflowed; the grid step is too small."""


class CorrectorDivergenceError(ConvergenceError):
    """Fixed-point corrector hit its cap while the update was growing."""


class BudgetExceededError(FracDPError, RuntimeError):
    """A brute-force enumeration would exceed its configured budget."""


class GridMismatchError(FracDPError, ValueError):
    """Two objects live on different grids."""
