"""Moments, mass ledger, convex weights, a priori bounds and weak-form residuals."""
from .bounds import (
    BoundReport,
    c4_constant,
    check_derivative_bound,
    check_sigma1_bound,
    check_V_bound,
    mass_below_one,
    sigma2_density_sup,
    v_constant,
)
from .convex import XLOG1P, ConvexCheckReport, ConvexWeight, build_dlvp_weight, check_convex_inequalities
from .ledger import MassLedger, moment, moment_values, tail_mass
from .weak import (
    IDENTITY,
    INDICATOR_UNIT,
    ONE,
    TestFunction,
    fragmentation_weak_forms,
    test_function,
    weak_form_residual,
    weak_form_terms,
)

__all__ = [
    "BoundReport", "c4_constant", "check_derivative_bound", "check_sigma1_bound", "check_V_bound",
    "mass_below_one", "sigma2_density_sup", "v_constant",
    "XLOG1P", "ConvexCheckReport", "ConvexWeight", "build_dlvp_weight", "check_convex_inequalities",
    "MassLedger", "moment", "moment_values", "tail_mass",
    "IDENTITY", "INDICATOR_UNIT", "ONE", "TestFunction", "fragmentation_weak_forms", "test_function",
    "weak_form_residual", "weak_form_terms",
]
