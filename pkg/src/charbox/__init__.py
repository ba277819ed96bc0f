"""Exact experiments on multiplicative character sums over boxes in F_{p^n}."""

__version__ = "0.1.0"

from .boxes import Basis, BoxSpec, box_char_sum, sublattice_char_sum
from .burgess import BurgessReport, burgess_pipeline
from .chars import Character, char_eval, char_order, interval_moment, restriction_is_trivial
from .energy import EnergyReport, dyadic_census, energy_bruteforce, energy_via_ratios, kl_verdict
from .errors import BudgetExceeded, CharboxError, InputError, PreconditionError
from .field import FieldCtx, element_inv, element_mul, find_irreducible, get_field, subfield_degree
from .lattice import (
    LatticeInstance, MinimaResult, build_lambda_z, count_points, dual_first_minimum,
    lambda1_floor_check, minkowski_check, successive_minima,
)
from .verify import (
    delta_of_epsilon, katz_scan, main_report, pv_subfield_check, route_case,
    subfield_census, weil_complete, weil_moment,
)

__all__ = [
    "__version__", "Basis", "BoxSpec", "box_char_sum", "sublattice_char_sum",
    "BurgessReport", "burgess_pipeline", "Character", "char_eval", "char_order",
    "interval_moment", "restriction_is_trivial", "EnergyReport", "dyadic_census",
    "energy_bruteforce", "energy_via_ratios", "kl_verdict", "BudgetExceeded",
    "CharboxError", "InputError", "PreconditionError", "FieldCtx", "element_inv",
    "element_mul", "find_irreducible", "get_field", "subfield_degree", "LatticeInstance",
    "MinimaResult", "build_lambda_z", "count_points", "dual_first_minimum",
    "lambda1_floor_check", "minkowski_check", "successive_minima", "delta_of_epsilon",
    "katz_scan", "main_report", "pv_subfield_check", "route_case", "subfield_census",
    "weil_complete", "weil_moment",
]
