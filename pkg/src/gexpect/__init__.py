"""Discrete-time dynamic programming for G-expectations under volatility uncertainty."""

from .domain import (ControlGrid, ConvexHull, DiagonalBox, IsotropicInterval, NotPSDError,
                     ScalarInterval, UncertaintyDomain, contains, matrix_sqrt, sqrt_grid)
from .noise import FiniteSupport, Rademacher, StandardNormal, validate_mgf_bound, validate_moments
from .oracle import PdeGrid, closed_form_extremal, solve_barenblatt
from .paths import DiscretePathPair, interpolate, predictable_variation
from .payoffs import PayoffFunctional, evaluate, lipschitz_bound_check
from .simulate import SimulationEstimate, simulate_continuous, simulate_discrete
from .solver import StateGridSpec, ValueAndPolicy, backstep, solve, solve_lattice, solve_tree

__version__ = "0.1.0"

__all__ = [
    "ControlGrid", "ConvexHull", "DiagonalBox", "IsotropicInterval", "NotPSDError", "ScalarInterval",
    "UncertaintyDomain", "contains", "matrix_sqrt", "sqrt_grid", "FiniteSupport", "Rademacher",
    "StandardNormal", "validate_mgf_bound", "validate_moments", "PdeGrid", "closed_form_extremal",
    "solve_barenblatt", "DiscretePathPair", "interpolate", "predictable_variation", "PayoffFunctional",
    "evaluate", "lipschitz_bound_check", "SimulationEstimate", "simulate_continuous", "simulate_discrete",
    "StateGridSpec", "ValueAndPolicy", "backstep", "solve", "solve_lattice", "solve_tree",
]
