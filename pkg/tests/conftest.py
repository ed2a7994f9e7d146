"""Shared hypothesis strategies and the sympy oracle bridge."""

from fractions import Fraction

import sympy as sp
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from pain2.algebra import REGISTRY, MPoly, RatFn
from pain2.io.expr import print_expr

settings.register_profile(
    "pain2", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("pain2")

VARS = ("x", "y", "z", "w", "t", "alpha2")

coefficients = st.builds(
    Fraction, st.integers(-5, 5), st.sampled_from((1, 1, 2, 3, 4))
)


@st.composite
def polys(draw, variables=VARS[:4], max_terms=4, max_exp=2):
    terms = draw(st.lists(
        st.tuples(coefficients, st.lists(st.integers(0, max_exp), min_size=len(variables), max_size=len(variables))),
        max_size=max_terms,
    ))
    index = [REGISTRY.index(v) for v in variables]
    items = []
    for c, exps in terms:
        full = [0] * len(REGISTRY)
        for i, e in zip(index, exps):
            full[i] = e
        items.append((full, c))
    return MPoly.from_exponents(items)


@st.composite
def ratfns(draw, variables=VARS[:4], max_terms=3):
    num = draw(polys(variables, max_terms))
    den = draw(polys(variables, max_terms))
    if den.is_zero():
        den = MPoly.const(1)
    return RatFn(num, den)


def to_sympy(F) -> sp.Expr:
    return sp.sympify(print_expr(F).replace("^", "**"))


def frac(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance lines after the run (they are captured otherwise)."""
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "LINES", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.LINES):
        terminalreporter.write_line(line)
