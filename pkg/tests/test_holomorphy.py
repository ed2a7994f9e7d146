from dataclasses import replace

import pytest
from hypothesis import given, settings

from pain2.algebra import RatFn
from pain2.holomorphy import (
    CHART_IDS,
    THEOREM2_CHARTS,
    HamAnsatz,
    NotHamiltonianError,
    TwoForm,
    UnknownChartError,
    build_chart,
    chart_pushforward,
    derive_chart_hamiltonian,
    exterior_derivative,
    polynomiality_check,
    recover_hamiltonian,
    strip_phase_constant,
    two_form_residual,
    wedge,
)
from pain2.io.expr import parse_expr
from pain2.systems import HamSystem, ParameterPoint, VectorField, build_system, XYZW_PAIRS

from conftest import ratfns

PHASE = ("x", "y", "z", "w")
FORM_COORDS = PHASE + ("t",)


@settings(max_examples=1000)
@given(ratfns(("x", "y", "z", "t")))
def test_d_squared_is_zero(F):
    assert exterior_derivative(F, FORM_COORDS).d().is_zero()


def test_two_form_antisymmetry():
    dx, dy = (exterior_derivative(RatFn.var(v), FORM_COORDS) for v in "xy")
    form = wedge(dx, dy)
    assert form.coefficient("x", "y") == RatFn.const(1)
    assert form.coefficient("y", "x") == RatFn.const(-1)
    assert form.coefficient("x", "x").is_zero()
    assert (wedge(dx, dy) + wedge(dy, dx)).is_zero()
    assert TwoForm(FORM_COORDS, {(0, 0): RatFn.const(1)}).is_zero()


@pytest.mark.parametrize("cid", CHART_IDS)
def test_round_trips(cid):
    assert build_chart(cid).round_trip_errors() == []


def test_unknown_chart():
    with pytest.raises(UnknownChartError):
        build_chart("thm2_9")


@pytest.mark.parametrize("cid", THEOREM2_CHARTS)
def test_main_pushforward_is_polynomial(cid):
    assert polynomiality_check(chart_pushforward(build_system("main"), build_chart(cid))).passed


def test_identity_chart_pushforward():
    main = build_system("main")
    assert chart_pushforward(main, build_chart("identity")).components == main.vector_field.components


def test_polynomiality_names_offender():
    V = VectorField(("x1", "y1"), (parse_expr("1/x1"), parse_expr("y1")))
    rep = polynomiality_check(V)
    assert not rep.passed
    assert [c for c, _ in rep.offending] == ["x1"]


@pytest.mark.parametrize("cid", ["gen_1", "gen_2"])
@pytest.mark.parametrize("sid", ["generic", "a1case"])
def test_family_charts(cid, sid):
    assert polynomiality_check(chart_pushforward(build_system(sid), build_chart(cid))).passed


@pytest.mark.parametrize("cid", ["thm2_1", "thm2_2"])
def test_two_form_identity_first_charts(cid):
    main = build_system("main")
    C = build_chart(cid)
    H = derive_chart_hamiltonian(main, C)
    assert H.is_polynomial
    assert two_form_residual(main, C, H).is_zero()


def test_two_form_identity_identity_chart():
    main = build_system("main")
    assert two_form_residual(main, build_chart("identity"), main.hamiltonian).is_zero()


def test_chart3_two_form_correction():
    """The chart-3 Hamiltonian pulls back to H + x, and the identity needs d(H + 2x)."""
    main = build_system("main")
    C = build_chart("thm2_3")
    H3 = derive_chart_hamiltonian(main, C)
    dxdt = wedge(exterior_derivative(RatFn.var("x"), FORM_COORDS), exterior_derivative(RatFn.var("t"), FORM_COORDS))
    assert two_form_residual(main, C, H3) == dxdt
    assert two_form_residual(main, replace(C, correction="2*x"), H3).is_zero()


def test_derived_hamiltonian_identity_chart():
    main = build_system("main")
    assert derive_chart_hamiltonian(main, build_chart("identity")) == strip_phase_constant(main.hamiltonian, PHASE)


def test_curl_failure_is_reported():
    S = HamSystem("shear", PHASE, XYZW_PAIRS, "t", ParameterPoint(None),
                  rhs_template=tuple(parse_expr(s) for s in ("y", "0", "0", "x")))
    with pytest.raises(NotHamiltonianError):
        derive_chart_hamiltonian(S, build_chart("identity"))


def test_recovery_three_charts():
    rec = recover_hamiltonian(THEOREM2_CHARTS)
    main = build_system("main")
    assert rec.dimension == 2
    assert rec.particular == main.hamiltonian
    assert sorted(str(k) for k in rec.kernel) == ["1", "t"]
    assert rec.contains(main.hamiltonian + parse_expr("7 - 3*t"))
    assert not rec.contains(main.hamiltonian + parse_expr("x"))


def test_recovery_fewer_charts_is_larger():
    two = recover_hamiltonian(THEOREM2_CHARTS[:2])
    assert two.dimension > 2
    assert recover_hamiltonian([]).dimension == len(HamAnsatz().unknowns())
