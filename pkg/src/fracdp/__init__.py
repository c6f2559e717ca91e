"""Dynamic programming for Caputo fractional-order optimal control problems."""

from ._accel import backend
from .errors import (
    BudgetExceededError,
    ConvergenceError,
    CorrectorDivergenceError,
    DomainError,
    FracDPError,
    GridMismatchError,
    SingularStepError,
)
from .fraccalc import *  # noqa: F401,F403
from .dynamics import *  # noqa: F401,F403
from .hjb import *  # noqa: F401,F403
from .value import *  # noqa: F401,F403
from .strategy import *  # noqa: F401,F403
from .problems import *  # noqa: F401,F403
from . import dynamics, fraccalc, hjb, kernels, problems, strategy, suites, value

__version__ = "0.1.0"

__all__ = (
    ["backend", "__version__"]
    + ["FracDPError", "DomainError", "ConvergenceError", "SingularStepError",
       "CorrectorDivergenceError", "BudgetExceededError", "GridMismatchError"]
    + fraccalc.__all__
    + dynamics.__all__
    + hjb.__all__
    + value.__all__
    + strategy.__all__
    + problems.__all__
)
