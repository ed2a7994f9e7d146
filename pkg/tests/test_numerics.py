import math
from fractions import Fraction
from dataclasses import replace

import numpy as np
import pytest

from pain2.algebra import RatFn
from pain2.numerics import (
    NumParams,
    StepSizeUnderflow,
    continue_through_pole,
    detour_path,
    estimate_poles,
    integrate,
    numeric_conjugacy_check,
    particular_solution_check,
)
from pain2.systems import build_system
from pain2.transforms import build_map

MAIN_P = NumParams("1/2", "1/4", relation=1)
INIT = {"x": 0, "y": 1, "z": 0, "w": 1}
TWO_TIME_P = NumParams("1/2", "1/4", relation=0)
TWO_TIME_INIT = {"q1": 0.1, "p1": 0.2, "q2": -0.1, "p2": 0.1}
# real-time orbits of K1 leave through a pole before t = 5; go around it in the upper half plane
TWO_TIME_PATH = [0, 1j, 5 + 1j, 5]


def _monitors():
    return {"K1": build_system("K1").template, "K2": build_system("K2").template}


def test_relation_consistency():
    with pytest.raises(ValueError):
        NumParams("1/2", "1/4", relation=1, alpha1=3)
    assert NumParams("1/2", "1/4", relation=1).values()["alpha1"] == Fraction(-1, 8)


def test_drift_decreases_with_tolerance():
    drifts = []
    for tol in (1e-6, 1e-8, 1e-10):
        tr = integrate(build_system("K1"), TWO_TIME_P, TWO_TIME_INIT, TWO_TIME_PATH, tol=tol, monitors=_monitors())
        drifts.append(max(tr.drift("K1"), tr.drift("K2")))
    assert drifts[0] > drifts[1] > drifts[2]
    assert drifts[2] <= 1e-8


def test_time_reversal():
    main = build_system("main")
    tol = 1e-10
    fwd = integrate(main, MAIN_P, INIT, [0, 0.5], tol=tol)
    back = integrate(main, MAIN_P, dict(zip(main.coords, fwd.final.state)), [0.5, 0], tol=tol)
    assert np.max(np.abs(back.final.state - np.array([0, 1, 0, 1]))) <= 10 * tol


def test_zero_hamiltonian_is_constant():
    Z = replace(build_system("main"), template=RatFn.const(0))
    tr = integrate(Z, MAIN_P, INIT, [0, 3 + 2j])
    assert np.all(tr.states == tr.states[0])


def test_planar_line_z_zero():
    tr = integrate(build_system("sys16"), NumParams("1/2", "0", relation=1), {"x": 0.1, "z": 0}, [0, 0.5])
    assert np.max(np.abs(tr.states[:, 1])) == 0


def test_pole_stops_plain_integration():
    with pytest.raises(StepSizeUnderflow):
        integrate(build_system("main"), MAIN_P, INIT, [0, 1.6])


def test_infinite_threshold_matches_plain_integration():
    main = build_system("main")
    a = integrate(main, MAIN_P, INIT, [0, 0.5])
    b = continue_through_pole(main, MAIN_P, INIT, [0, 0.5], threshold=math.inf)
    assert np.array_equal(a.final.state, b.final.state)


def test_continuation_through_pole_matches_detour():
    main = build_system("main")
    tol = 1e-12
    tr = continue_through_pole(main, MAIN_P, INIT, [0, 1.6], tol=tol)
    assert tr.switches and tr.final.chart == "principal"
    assert all(s["roundtrip_error"] <= 1e-6 for s in tr.switches)
    plain = integrate(main, MAIN_P, INIT, [0, 0.75], tol=tol)
    poles = estimate_poles(plain) or [0.8226]
    oracle = integrate(main, MAIN_P, INIT, detour_path(0, 1.6, poles[0], 0.05), tol=tol)
    assert np.max(np.abs(tr.final.state - oracle.final.state)) <= 1e-6


def test_numeric_conjugacy():
    main = build_system("main")
    traj = integrate(main, MAIN_P, INIT, [0, 0.4], tol=1e-12, dense=True)
    assert numeric_conjugacy_check(main, build_map("phi2"), build_system("sys14"), traj, MAIN_P) <= 1e-6
    wrong = numeric_conjugacy_check(main, build_map("phi2"), build_system("sys11"), traj, MAIN_P)
    assert wrong > 1e-2


def test_particular_solution():
    rep = particular_solution_check()
    assert rep.passed
    assert rep.max_yw <= 1e-9 and rep.max_xz_mismatch <= 1e-7
    assert rep.symbolic_residuals[0] == RatFn.var("alpha1") * -2


def test_particular_solution_needs_alpha1_zero():
    rep = particular_solution_check(alpha1="1/3")
    assert not rep.symbolic_pass and not rep.numeric_pass


def test_json_lines():
    import json

    tr = integrate(build_system("main"), MAIN_P, INIT, [0, 0.1])
    rows = [json.loads(l) for l in tr.to_json_lines().splitlines()]
    assert set(rows[0]) == {"t_re", "t_im", "chart", "state", "err"}
    assert len(rows[0]["state"]) == 8
