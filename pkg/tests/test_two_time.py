import pytest
import sympy as sp

from pain2.algebra import RatFn
from pain2.io.expr import parse_expr
from pain2.systems import build_system
from pain2.two_time import (
    autonomy_residual,
    build_two_time,
    compatibility_residual,
    first_integral_matrix,
    involution_residual,
    phase_degree,
    r_chart_polynomiality,
)

from conftest import to_sympy


@pytest.fixture(scope="module")
def T():
    return build_two_time()


def test_coefficients(T):
    assert T.K1.as_poly().coeff({"q1": 2, "p1": 1}) == 1
    assert T.K2.as_poly().coeff({"p2": 4}) == 1


def test_K3_is_polynomial(T):
    assert T.K3.is_polynomial
    assert T.K3 == (4 * T.K1 ** 2 - 13 * T.K2) / 4


def test_compatibility(T):
    assert compatibility_residual(T).is_zero()
    assert not compatibility_residual(T.with_K2(parse_expr("q1"))).is_zero()
    assert compatibility_residual(T.with_K2(T.K1)).is_zero()


@pytest.mark.parametrize("a, b", [("K1", "K2"), ("K1", "K3"), ("K2", "K3")])
def test_involution(T, a, b):
    assert involution_residual(T, a, b).is_zero()


def test_involution_needs_relation(T):
    raw = involution_residual(T, "K1", "K2", eliminate=False)
    assert not raw.is_zero()
    factor = parse_expr("2*alpha1 + 2*alpha2 + alpha3")
    assert (raw / factor).is_polynomial


def test_bracket_against_sympy(T):
    """{K1, K2} recomputed by sympy in the convention sum dF/dp dG/dq - dF/dq dG/dp."""
    K1, K2 = to_sympy(T.K1), to_sympy(T.K2)
    q1, p1, q2, p2, a1, a2, a3 = sp.symbols("q1 p1 q2 p2 alpha1 alpha2 alpha3")
    pb = sum(sp.diff(K1, p) * sp.diff(K2, q) - sp.diff(K1, q) * sp.diff(K2, p) for q, p in ((q1, p1), (q2, p2)))
    assert sp.expand(pb.subs(a1, -(2 * a2 + a3) / 2)) == 0


def test_first_integrals(T):
    M = first_integral_matrix(T)
    assert all(e.is_zero() for row in M for e in row)
    bad = first_integral_matrix(T.with_K2(parse_expr("q2")))
    assert not all(e.is_zero() for row in bad for e in row)


def test_autonomy(T):
    main = build_system("main")
    assert autonomy_residual(T, main).is_zero()
    assert not autonomy_residual(T, main, scale=RatFn.const(1) / 2).is_zero()
    assert autonomy_residual(T, main, at_time=None) == parse_expr("-p1*t + p2*t/2")


def test_degrees(T):
    H = T.hamiltonians()
    assert phase_degree(H["K1"]) <= 6
    assert phase_degree(H["K2"]) == 6


def test_r_charts(T):
    reports = r_chart_polynomiality(T)
    assert len(reports) == 9
    assert all(r.passed for r in reports.values())
