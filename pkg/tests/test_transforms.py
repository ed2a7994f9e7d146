import pytest

from pain2.algebra import RatFn
from pain2.io.expr import parse_expr
from pain2.systems import ParameterPoint, build_system
from pain2.transforms import (
    MAP_IDS,
    BirationalMap,
    RelationViolation,
    UnknownMapError,
    build_map,
    compose,
    compose_word,
    conjugacy_residual,
    group_relation_check,
    invariance_residual,
    is_symplectic,
    maps_equal,
    s3_consistency,
)

PHASE = ("x", "y", "z", "w")


def test_s1_definition():
    M = build_map("s1")
    assert M.components[0] == parse_expr("x + alpha2/y")
    pp = ParameterPoint.symbolic(1)
    assert M.param_images["alpha2"] == parse_expr("-alpha2")
    assert M.param_images["alpha1"] == pp.eliminate(parse_expr("alpha1 + 2*alpha2"))


def test_phi2_definition():
    M = build_map("phi2")
    assert M.components == tuple(parse_expr(s) for s in ("x", "-t - w - x^2 + y", "-w", "x + z"))
    assert M.param_action == ()


def test_S1_definition():
    M = build_map("S1")
    assert M.components[0] == parse_expr("x + alpha1/y")
    assert M.param_images["alpha1"] == parse_expr("-alpha1")


def test_unknown_map():
    with pytest.raises(UnknownMapError):
        build_map("s4")


@pytest.mark.parametrize("mid", MAP_IDS)
def test_every_catalog_map_is_symplectic(mid):
    assert is_symplectic(build_map(mid)).passed


def test_scaling_is_not_symplectic():
    M = BirationalMap("scale", PHASE, tuple(parse_expr(s) for s in ("x", "2*y", "z", "w")))
    assert is_symplectic(M).failing() == {"{Y1,X1}-1": RatFn.const(1)}


@pytest.mark.parametrize("mid", ["s1", "s2", "s3"])
def test_main_invariance(mid):
    assert invariance_residual(build_system("main"), build_map(mid)).passed


@pytest.mark.parametrize("mid", ["S1", "S2"])
@pytest.mark.parametrize("sid", ["generic", "a1case"])
def test_family_invariance(mid, sid):
    assert invariance_residual(build_system(sid), build_map(mid)).passed


def test_hone_scaling_breaks_S1():
    """S1 shifts x by alpha1/y, but the Hone system needs alpha1/(2y)."""
    res = invariance_residual(build_system("hone"), build_map("S1"))
    assert not res.passed


@pytest.mark.parametrize("mid", ["s1_5", "s2_5", "s3_5"])
@pytest.mark.parametrize("flow", ["K1", "K2"])
def test_two_time_invariance(mid, flow):
    assert invariance_residual(build_system(flow), build_map(mid)).passed


def test_wrong_map_is_not_a_symmetry():
    assert not invariance_residual(build_system("main"), build_map("phi2")).passed


def test_conjugacies():
    main = build_system("main")
    assert conjugacy_residual(main, build_map("phi2"), build_system("sys14")).passed
    assert conjugacy_residual(main, build_map("phi1"), build_system("sys11")).passed
    assert conjugacy_residual(main, build_map("identity", relation=1), main).passed
    assert not conjugacy_residual(main, build_map("phi2"), build_system("sys11")).passed


@pytest.mark.parametrize(
    "word", [["s1", "s1"], ["s2", "s2"], ["s3", "s3"], ["s1", "s2", "s1", "s2"], ["s3_5", "s3_5"]]
)
def test_involutions(word):
    assert group_relation_check(word)


def test_s3s1_translation():
    W = compose_word(["s3", "s1"])
    pp = ParameterPoint.symbolic(1)
    expected = {"alpha1": "alpha1 + 1", "alpha2": "alpha2 - 1", "alpha3": "alpha3"}
    for n, e in expected.items():
        assert W.param_images[n] == pp.eliminate(parse_expr(e))
    assert not group_relation_check(["s3", "s1"])


def test_s3s1_two_time_fixes_parameters():
    W = compose_word(["s3_5", "s1_5"])
    assert all(W.param_images[n] == ParameterPoint.symbolic(0).eliminate(RatFn.var(n))
               for n in ("alpha1", "alpha2", "alpha3"))


def test_composition_is_associative():
    a, b, c = (build_map(m) for m in ("s1", "s2", "s3"))
    assert maps_equal(compose(compose(a, b), c), compose(a, compose(b, c)))


def test_composition_order():
    """compose(M1, M2) applies M1 first: x -> x + alpha2/y, then w -> ..."""
    W = compose(build_map("s1"), build_map("s2"))
    assert W.components[0] == parse_expr("x + alpha2/y")
    assert W.components[2] == ParameterPoint.symbolic(1).eliminate(parse_expr("z + alpha3/w"))


def test_relation_violation():
    M = BirationalMap("bad", PHASE, tuple(RatFn.var(v) for v in PHASE),
                      (("alpha2", parse_expr("alpha2 + 1")),), 1)
    with pytest.raises(RelationViolation):
        invariance_residual(build_system("main"), M)


def test_s3_forms_agree():
    assert s3_consistency().passed
