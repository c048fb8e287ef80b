"""Covert two-hop relay link analysis under channel-inversion power control
with imperfect channel knowledge: closed-form link metrics, independent
quadrature oracles, a Monte Carlo validator, and covert-rate optimisation."""

from ._kernels import BACKEND
from .errors import InfeasibleBracketError, NumericalInstabilityError, \
    QuadratureError
from .model import DerivedConstants, PsiConstants, SystemConfig, bessel_j0, \
    compute_psi_constants, correlation_coefficient, dbm_to_mw, \
    derive_constants, estimation_error_variance, max_data_symbols, \
    mean_feedback_delay

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DerivedConstants",
    "InfeasibleBracketError",
    "NumericalInstabilityError",
    "PsiConstants",
    "QuadratureError",
    "SystemConfig",
    "bessel_j0",
    "compute_psi_constants",
    "correlation_coefficient",
    "dbm_to_mw",
    "derive_constants",
    "estimation_error_variance",
    "max_data_symbols",
    "mean_feedback_delay",
    "__version__",
]
