"""Clamped plate eigenvalues and universal inequalities, checked numerically."""

__version__ = "0.1.0"

from .abstractlab import OperatorInstance, fuzz, random_instance, theorem_sides
from .bounds import BoundContext, check_all, evaluate, next_bound_bisection, next_bound_quadratic
from .discretize import DomainSpec, Spectrum, richardson_order, solve_spectrum, verify_proof_identities
from .families import FGCouple, catalog_couples, check_membership, eval_couple
from .numlin import eigen_generalized_diag_mass, eigen_symmetric

__all__ = [
    "BoundContext", "DomainSpec", "FGCouple", "OperatorInstance", "Spectrum", "catalog_couples",
    "check_all", "check_membership", "eigen_generalized_diag_mass", "eigen_symmetric", "eval_couple",
    "evaluate", "fuzz", "next_bound_bisection", "next_bound_quadratic", "random_instance",
    "richardson_order", "solve_spectrum", "theorem_sides", "verify_proof_identities",
]
