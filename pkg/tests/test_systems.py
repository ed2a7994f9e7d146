import pytest
import sympy as sp
from hypothesis import given, settings

from pain2.algebra import RatFn
from pain2.io.expr import parse_expr, print_expr
from pain2.systems import (
    INVARIANT_CYCLES,
    QP_PAIRS,
    REFERENCE_RHS,
    SYSTEM_IDS,
    XYZW_PAIRS,
    FamilyConstants,
    InvariantCycle,
    ParameterPoint,
    UnknownSystemError,
    VectorField,
    build_system,
    hamiltonian_field_of,
    invariant_cycle_check,
    lie_bracket,
    poisson_bracket,
    total_time_derivative,
)

from conftest import polys, to_sympy

PHASE = ("x", "y", "z", "w")


def test_catalog_ids():
    assert set(SYSTEM_IDS) == {"generic", "hone", "a1case", "main", "sys11", "sys14", "sys16", "K1", "K2"}
    with pytest.raises(UnknownSystemError):
        build_system("nope")


def test_main_hamiltonian():
    H = build_system("main").hamiltonian
    assert H == parse_expr("-2*x^2*y + 2*y^2 - 2*t*y - 2*alpha2*x + z^2*w + w^2 + t*w + alpha3*z - 3*y*w")


def test_generic_keeps_constants_symbolic():
    H = build_system("generic").hamiltonian
    assert H.as_poly().coeff({"a": 1, "y": 1, "w": 1}) == 1


def test_hone_coupling():
    assert build_system("hone").hamiltonian.as_poly().coeff({"y": 1, "w": 1}) == sp.Rational(3, 4)


@pytest.mark.parametrize("sid", sorted(REFERENCE_RHS))
def test_vector_field_matches_reference(sid):
    S = build_system(sid)
    ref = ParameterPoint.symbolic(S.params.relation)
    for got, text in zip(S.vector_field.components, REFERENCE_RHS[sid]):
        assert got == ref.eliminate(parse_expr(text))


@pytest.mark.parametrize("sid", ["hone", "a1case", "main", "sys11", "sys14", "K1", "K2"])
def test_vector_field_against_sympy(sid):
    """Hamilton's equations derived independently with sympy."""
    S = build_system(sid).with_params(ParameterPoint(None))
    H = to_sympy(S.template)
    for (q, p) in S.pairs:
        qs, ps = sp.Symbol(q), sp.Symbol(p)
        assert sp.expand(to_sympy(S.vector_field[q]) - sp.diff(H, ps)) == 0
        assert sp.expand(to_sympy(S.vector_field[p]) + sp.diff(H, qs)) == 0


def test_zero_hamiltonian_gives_zero_field():
    V = hamiltonian_field_of(RatFn.const(0), PHASE, XYZW_PAIRS)
    assert V.is_zero()


def test_sys14_w_component():
    assert print_expr(build_system("sys14").vector_field["w"]) == print_expr(parse_expr("w^2 - 2*x*w + y"))


def test_family_constants_nonzero():
    with pytest.raises(ValueError):
        FamilyConstants(a1=0)


def test_relation_forbids_alpha1_binding():
    with pytest.raises(ValueError):
        ParameterPoint.numeric(1, alpha1=1)


def test_relation_eliminates_alpha1():
    pp = ParameterPoint.symbolic(1)
    assert pp.eliminate(parse_expr("2*alpha1 + 2*alpha2 + alpha3")) == RatFn.const(1)


def test_canonical_brackets():
    assert poisson_bracket(parse_expr("p1"), parse_expr("q1"), QP_PAIRS) == RatFn.const(1)
    assert poisson_bracket(parse_expr("p1"), parse_expr("q2"), QP_PAIRS).is_zero()
    K1 = build_system("K1").hamiltonian
    assert poisson_bracket(K1, K1, QP_PAIRS).is_zero()


@settings(max_examples=1000)
@given(polys(PHASE, 3), polys(PHASE, 3), polys(PHASE, 2))
def test_bracket_antisymmetry_and_jacobi(F, G, K):
    F, G, K = RatFn(F), RatFn(G), RatFn(K)
    pb = lambda a, b: poisson_bracket(a, b, XYZW_PAIRS)
    assert pb(F, G) == -pb(G, F)
    assert pb(F + G, K) == pb(F, K) + pb(G, K)
    jac = pb(F, pb(G, K)) + pb(G, pb(K, F)) + pb(K, pb(F, G))
    assert jac.is_zero()


@settings(max_examples=200)
@given(polys(PHASE, 3), polys(PHASE, 3))
def test_lie_bracket_of_hamiltonian_fields(F, G):
    XF = hamiltonian_field_of(F, PHASE, XYZW_PAIRS)
    XG = hamiltonian_field_of(G, PHASE, XYZW_PAIRS)
    XFG = hamiltonian_field_of(poisson_bracket(F, G, XYZW_PAIRS), PHASE, XYZW_PAIRS)
    assert lie_bracket(XF, XG).components == XFG.components


def test_lie_bracket_examples():
    one, zero, x = RatFn.const(1), RatFn.const(0), RatFn.var("x")
    V = VectorField(PHASE, (one, zero, zero, zero))
    W = VectorField(PHASE, (x, zero, zero, zero))
    assert lie_bracket(V, W).components == (one, zero, zero, zero)
    assert lie_bracket(W, W).is_zero()


def test_total_time_derivative():
    K1 = build_system("K1")
    assert total_time_derivative(K1.template, K1).is_zero()
    assert total_time_derivative(build_system("K2").template, K1).is_zero()
    assert total_time_derivative(RatFn.var("t"), build_system("main")) == RatFn.const(1)


@pytest.mark.parametrize("name", ["f1", "f2", "f3"])
def test_invariant_cycles(name):
    C = INVARIANT_CYCLES[name]
    assert invariant_cycle_check(build_system("main"), C)


def test_cycle_requires_parameter_condition():
    """Without alpha2 = 0 the line y = 0 is not invariant."""
    C = InvariantCycle((parse_expr("y"),), parse_expr("alpha3"))
    assert not invariant_cycle_check(build_system("main"), C)


def test_cycle_codimension():
    assert INVARIANT_CYCLES["f3"].codimension == 2
    with pytest.raises(ValueError):
        InvariantCycle((RatFn.const(0),), parse_expr("alpha1"))
