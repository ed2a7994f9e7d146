"""Exact arithmetic kernel: rationals, sparse polynomials, rational functions."""

from .gcd import gcd, lcm
from .linalg import AffineSolution, InconsistentSystem, SparseSolver, solve_affine
from .poly import MPoly
from .ratfn import (
    AlgebraError,
    NonTriangularError,
    RatFn,
    RatFnZeroDivision,
    SubstitutionError,
    arith,
    as_ratfn,
    differentiate,
    solve_for,
    substitute,
    vanishes_on_variety,
)
from .registry import REGISTRY, UnknownSymbolError, VarRegistry

__all__ = [
    "AffineSolution",
    "AlgebraError",
    "InconsistentSystem",
    "MPoly",
    "NonTriangularError",
    "REGISTRY",
    "RatFn",
    "RatFnZeroDivision",
    "SparseSolver",
    "SubstitutionError",
    "UnknownSymbolError",
    "VarRegistry",
    "arith",
    "as_ratfn",
    "differentiate",
    "gcd",
    "lcm",
    "solve_affine",
    "solve_for",
    "substitute",
    "vanishes_on_variety",
]
