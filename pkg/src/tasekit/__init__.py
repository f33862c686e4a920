"""Explicit Runge-Kutta integration with TASE preconditioning of stiff terms."""

from .integrators import (
    Diagnostics,
    NewtonOptions,
    OperatorGroup,
    SemiDiscreteSystem,
    StepPlan,
    Trajectory,
    integrate,
    step,
)
from .schemes import ButcherTableau, get_tableau, scheme_info
from .tase import TaseAlphaWarning, TaseConfig, alpha_min, beta_coefficients, gamma_coefficients

__version__ = "0.1.0"

__all__ = [
    "ButcherTableau", "Diagnostics", "NewtonOptions", "OperatorGroup", "SemiDiscreteSystem",
    "StepPlan", "TaseAlphaWarning", "TaseConfig", "Trajectory", "alpha_min", "beta_coefficients",
    "gamma_coefficients", "get_tableau", "integrate", "scheme_info", "step", "__version__",
]
