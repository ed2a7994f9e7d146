"""Verification suites and their JSON reports.

Every check is a zero-argument function returning its residual as text; the
empty string means the check passed.  Exceptions are caught and reported with
status ``error``.
"""

from __future__ import annotations

import functools
import hashlib
import json
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

from ..algebra import RatFn, substitute
from ..holomorphy import (
    THEOREM2_CHARTS,
    R_CHARTS,
    build_chart,
    chart_expression,
    chart_pushforward,
    derive_chart_hamiltonian,
    polynomiality_check,
    recover_hamiltonian,
    two_form_residual,
)
from .expr import parse_expr
from ..systems import (
    INVARIANT_CYCLES,
    ParameterPoint,
    VectorField,
    build_system,
    invariant_cycle_residuals,
)
from ..transforms import (
    Residual,
    build_map,
    compose_word,
    conjugacy_residual,
    group_relation_check,
    invariance_residual,
    is_symplectic,
    s3_consistency,
)
from ..two_time import (
    autonomy_residual,
    build_two_time,
    compatibility_residual,
    first_integral_matrix,
    involution_residual,
    phase_degree,
)

RESIDUAL_LIMIT = 4096
SUITES = ("symmetry", "holomorphy", "structures", "two-time")


@dataclass
class CheckReport:
    id: str
    anchor: str
    status: str
    residual: str
    residual_hash: str
    ms: float

    def to_dict(self) -> dict:
        return asdict(self)


def make_report(id: str, anchor: str, status: str, residual: str, ms: float) -> CheckReport:
    """Build a report, hashing the full residual and truncating the stored text."""
    digest = hashlib.sha256(residual.encode()).hexdigest() if residual else ""
    raw = residual.encode()
    if len(raw) > RESIDUAL_LIMIT:
        residual = raw[: RESIDUAL_LIMIT - 3].decode(errors="ignore") + "..."
    return CheckReport(id, anchor, status, residual, digest, round(ms, 3))


def residual_text(obj) -> str:
    """Canonical text of the nonzero part of a residual object; empty when zero."""
    if isinstance(obj, str):
        return obj
    if isinstance(obj, bool):
        return "" if obj else "false"
    if isinstance(obj, Residual):
        return "; ".join(f"{k}: {v}" for k, v in obj.failing().items())
    if isinstance(obj, VectorField):
        return "; ".join(f"d{c}: {f}" for c, f in zip(obj.coords, obj.components) if not f.is_zero())
    if isinstance(obj, RatFn):
        return "" if obj.is_zero() else str(obj)
    if isinstance(obj, (list, tuple)):
        parts = [residual_text(o) for o in obj]
        return "; ".join(f"[{i}] {p}" for i, p in enumerate(parts) if p)
    if hasattr(obj, "is_zero"):
        return "" if obj.is_zero() else repr(obj)
    raise TypeError(f"cannot render residual of type {type(obj).__name__}")


def run_check(id: str, anchor: str, fn) -> CheckReport:
    start = time.perf_counter()
    try:
        text = residual_text(fn())
        status = "fail" if text else "pass"
    except Exception as exc:  # reported, never raised
        text = f"{type(exc).__name__}: {exc}"
        status = "error"
    return make_report(id, anchor, status, text, 1000 * (time.perf_counter() - start))


# ----- symmetry suite -----------------------------------------------------


def _param_action_residual(word, expected: dict, relation: int) -> list:
    W = compose_word(word, relation)
    pp = ParameterPoint.symbolic(relation)
    return [pp.eliminate(W.param_images[n] - parse_expr(e)) for n, e in expected.items()]


def _symmetry_checks():
    out = []
    generic = build_system("generic")
    for m in ("S1", "S2"):
        out.append((f"symmetry.{m}.generic", f"family symmetry {m}",
                    lambda m=m: invariance_residual(generic, build_map(m))))
    main = build_system("main")
    for m in ("s1", "s2", "s3"):
        out.append((f"symmetry.{m}.main", f"main symmetry {m}",
                    lambda m=m: invariance_residual(main, build_map(m))))
    for k in ("K1", "K2"):
        for m in ("s1_5", "s2_5", "s3_5"):
            out.append((f"symmetry.{m}.{k}", f"two-time symmetry {m[:2]} on the {k} flow",
                        lambda m=m, k=k: invariance_residual(build_system(k), build_map(m))))
    for m in ("S1", "S2", "s1", "s2", "s3", "s1_5", "s2_5", "s3_5", "phi1", "phi2"):
        out.append((f"symplectic.{m}", f"symplecticity of {m}", lambda m=m: is_symplectic(build_map(m))))
    for word, name in ((["s1", "s1"], "s1^2"), (["s2", "s2"], "s2^2"), (["s3", "s3"], "s3^2"),
                       (["s1", "s2", "s1", "s2"], "(s1s2)^2")):
        out.append((f"group.{name}", "involutive generators",
                    lambda word=word: group_relation_check(word)))
    for word, name in ((["s1_5", "s1_5"], "s1^2"), (["s2_5", "s2_5"], "s2^2"), (["s3_5", "s3_5"], "s3^2")):
        out.append((f"group.two-time.{name}", "two-time involutive generators",
                    lambda word=word: group_relation_check(word)))
    out.append(("group.s3s1.translation", "translation s3s1 under relation 1",
                lambda: _param_action_residual(
                    ["s3", "s1"], {"alpha1": "alpha1 + 1", "alpha2": "alpha2 - 1", "alpha3": "alpha3"}, 1)))
    out.append(("group.two-time.s3s1.identity", "s3s1 under relation 0",
                lambda: _param_action_residual(
                    ["s3_5", "s1_5"], {"alpha1": "alpha1", "alpha2": "alpha2", "alpha3": "alpha3"}, 0)))
    out.append(("symmetry.s3.forms", "the two forms of s3", s3_consistency))
    return out


# ----- holomorphy suite ---------------------------------------------------


def _two_form_check(cid):
    main = build_system("main")
    C = build_chart(cid)
    return two_form_residual(main, C, derive_chart_hamiltonian(main, C))


def _implied_correction(cid, expected):
    """``H_chart`` pulled back minus ``H`` must be ``expected`` plus a function of ``t``."""
    main = build_system("main")
    C = build_chart(cid)
    K = derive_chart_hamiltonian(main, C)
    fwd, _ = C.specialized(main.params)
    pulled = substitute(main.specialize(K), dict(zip(C.new, fwd)))
    diff = pulled - main.hamiltonian - parse_expr(expected)
    return [diff.diff(c) for c in main.coords]


def _recovery_check():
    rec = recover_hamiltonian(THEOREM2_CHARTS)
    main = build_system("main")
    problems = []
    if rec.dimension != 2:
        problems.append(f"solution space dimension {rec.dimension}, expected 2")
    if not rec.contains(main.hamiltonian):
        problems.append("main Hamiltonian violates the recovered conditions")
    for free in ("1", "t"):
        if not rec.contains(main.hamiltonian + parse_expr(free)):
            problems.append(f"main Hamiltonian + {free} is not a solution")
    return "; ".join(problems)


def _holomorphy_checks():
    out = []
    main = build_system("main")
    corrections = {"thm2_1": "0", "thm2_2": "0", "thm2_3": "x"}
    for k, cid in enumerate(THEOREM2_CHARTS, 1):
        out.append((f"holomorphy.chart{k}.round_trip", f"main chart {k}",
                    lambda cid=cid: "; ".join(f"{n}: {r}" for n, r in build_chart(cid).round_trip_errors())))
        out.append((f"holomorphy.chart{k}.polynomial", f"main chart {k}",
                    lambda cid=cid: _poly_text(chart_pushforward(main, build_chart(cid)))))
        out.append((f"holomorphy.chart{k}.two_form", f"two-form identity, chart {k}, correction {corrections[cid]}",
                    lambda cid=cid: _two_form_check(cid)))
    out.append(("holomorphy.chart3.hamiltonian_shift", "chart 3 Hamiltonian equals H + x up to t",
                lambda: _implied_correction("thm2_3", "x")))
    generic = build_system("generic")
    for k, cid in enumerate(("gen_1", "gen_2"), 1):
        out.append((f"holomorphy.family_chart{k}.polynomial", f"family chart {k}",
                    lambda cid=cid: _poly_text(chart_pushforward(generic, build_chart(cid)))))
    out.append(("holomorphy.recovery", "degree-5 recovery from the three main charts", _recovery_check))
    T = build_two_time()
    for cid in R_CHARTS:
        out.append((f"holomorphy.{cid}.polynomial", f"two-time chart {cid}",
                    lambda cid=cid: _poly_text({
                        n: chart_expression(K, build_chart(cid), T.params) for n, K in T.hamiltonians().items()
                    })))
    return out


def _poly_text(V) -> str:
    rep = polynomiality_check(V)
    return "; ".join(f"{c}: denominator {d}" for c, d in rep.offending)


# ----- structures suite ---------------------------------------------------


@functools.lru_cache(maxsize=1)
def _particular_report():
    from ..numerics import particular_solution_check

    return particular_solution_check()


def _particular(numeric: bool):
    rep = _particular_report()
    if not numeric:
        return "" if rep.symbolic_pass else residual_text(list(rep.symbolic_residuals))
    if rep.numeric_pass:
        return ""
    return f"max |y|,|w| = {rep.max_yw:.3e}; max (x, z) mismatch = {rep.max_xz_mismatch:.3e}"


def _numeric_conjugacy(tol=1e-6):
    from ..numerics import NumParams, integrate, numeric_conjugacy_check

    p = NumParams(Fraction(1, 2), Fraction(1, 4), relation=1)
    main = build_system("main")
    traj = integrate(main, p, {"x": 0, "y": 1, "z": 0, "w": 1}, [0, 0.4], tol=1e-12, dense=True)
    r = numeric_conjugacy_check(main, build_map("phi2"), build_system("sys14"), traj, p)
    return "" if r <= tol else f"max residual {r:.3e} > {tol:g}"


def _structures_checks():
    out = []
    main = build_system("main")
    for name, C in INVARIANT_CYCLES.items():
        out.append((f"cycle.{name}", C.anchor, lambda C=C: invariant_cycle_residuals(main, C)))
    out.append(("conjugacy.phi1", "phi1 sends main to sys11",
                lambda: conjugacy_residual(main, build_map("phi1"), build_system("sys11"))))
    out.append(("conjugacy.phi2", "phi2 sends main to sys14",
                lambda: conjugacy_residual(main, build_map("phi2"), build_system("sys14"))))
    out.append(("conjugacy.phi2.numeric", "phi2 conjugacy along a trajectory", _numeric_conjugacy))
    out.append(("particular.symbolic", "plane y = w = 0 of sys14 at alpha1 = 0", lambda: _particular(False)))
    out.append(("particular.numeric", "plane y = w = 0 against the planar system", lambda: _particular(True)))
    return out


# ----- two-time suite -----------------------------------------------------


def _two_time_checks():
    T = build_two_time()
    out = [
        ("two-time.compatibility", "commuting t- and s-flows", lambda: compatibility_residual(T)),
        ("two-time.involution.K1K2", "{K1, K2} = 0", lambda: involution_residual(T, "K1", "K2")),
        ("two-time.involution.K1K3", "{K1, K3} = 0", lambda: involution_residual(T, "K1", "K3")),
        ("two-time.involution.K2K3", "{K2, K3} = 0", lambda: involution_residual(T, "K2", "K3")),
        ("two-time.first_integrals", "K1 and K2 conserved by both flows",
         lambda: [e for row in first_integral_matrix(T) for e in row]),
        ("two-time.K3.polynomial", "K3 = (4 K1^2 - 13 K2)/4",
         lambda: "" if T.K3.is_polynomial else f"denominator {T.K3.den}"),
        ("two-time.degree", "phase degrees of K1, K2",
         lambda: _degree_text(T)),
        ("two-time.autonomy", "K1 + H_main(t = 0)/2 = 0",
         lambda: autonomy_residual(T, build_system("main"))),
    ]
    return out


def _degree_text(T) -> str:
    H = T.hamiltonians()
    d1, d2 = phase_degree(H["K1"]), phase_degree(H["K2"])
    problems = []
    if d1 > 6:
        problems.append(f"deg K1 = {d1} > 6")
    if d2 != 6:
        problems.append(f"deg K2 = {d2} != 6")
    return "; ".join(problems)


_SUITE_BUILDERS = {
    "symmetry": _symmetry_checks,
    "holomorphy": _holomorphy_checks,
    "structures": _structures_checks,
    "two-time": _two_time_checks,
}


def suite_checks(suite: str) -> list:
    """``(id, anchor, fn)`` triples of ``suite`` (``all`` concatenates every suite)."""
    if suite == "all":
        names = SUITES
    elif suite in _SUITE_BUILDERS:
        names = (suite,)
    else:
        raise KeyError(f"unknown suite {suite!r}")
    checks = [c for n in names for c in _SUITE_BUILDERS[n]()]
    ids = [c[0] for c in checks]
    if len(ids) != len(set(ids)):
        raise RuntimeError("duplicate check ids")
    return checks


def run_suite(suite: str, progress=None) -> list:
    reports = []
    for id, anchor, fn in suite_checks(suite):
        rep = run_check(id, anchor, fn)
        reports.append(rep)
        if progress is not None:
            progress(rep)
    return reports


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)


REPORT_SCHEMA = {
    "id": str, "anchor": str, "status": str, "residual": str, "residual_hash": str, "ms": (int, float),
}


def validate_reports(data) -> list:
    """Schema problems of a decoded report array (empty list when valid)."""
    problems = []
    if not isinstance(data, list):
        return ["top level is not an array"]
    seen = set()
    for k, item in enumerate(data):
        if not isinstance(item, dict) or set(item) != set(REPORT_SCHEMA):
            problems.append(f"[{k}] wrong keys")
            continue
        for key, typ in REPORT_SCHEMA.items():
            if not isinstance(item[key], typ):
                problems.append(f"[{k}] {key} has type {type(item[key]).__name__}")
        if item["status"] not in ("pass", "fail", "error"):
            problems.append(f"[{k}] bad status {item['status']!r}")
        if (item["status"] == "pass") != (item["residual"] == ""):
            problems.append(f"[{k}] status and residual disagree")
        if item["id"] in seen:
            problems.append(f"[{k}] duplicate id {item['id']}")
        seen.add(item["id"])
    return problems


__all__ = [
    "CheckReport",
    "RESIDUAL_LIMIT",
    "SUITES",
    "make_report",
    "reports_to_json",
    "residual_text",
    "run_check",
    "run_suite",
    "suite_checks",
    "validate_reports",
]
