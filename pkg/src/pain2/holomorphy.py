"""Charts, differential forms and holomorphy conditions.

A chart is a birational change of the phase coordinates in which a system
(or a Hamiltonian) is required to stay polynomial.  The Hamiltonian of the
main system is pinned down, up to terms in ``{1, t}``, by demanding this in
three charts; :func:`recover_hamiltonian` solves that exact linear problem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

from gmpy2 import mpq

from .algebra import MPoly, RatFn, SparseSolver, as_ratfn, substitute
from .algebra.poly import key_exp, pack
from .algebra.registry import PHASE, PHASE_QP, REGISTRY
from .io.expr import parse_expr
from .systems import HamSystem, ParameterPoint, VectorField


class ChartError(ValueError):
    """A chart's stored inverse does not invert its forward map."""


class NotHamiltonianError(ValueError):
    def __init__(self, a, b, residual):
        super().__init__(f"curl condition fails for ({a}, {b}): {residual}")
        self.pair = (a, b)
        self.residual = residual


# ----- charts -------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """``new = forward(old)`` with explicit ``old = inverse(new)``.

    ``correction`` is the function added to the Hamiltonian on the left of
    the two-form identity (zero except for the third chart of the main
    system, where it is ``x``).
    """

    id: str
    old: tuple
    new: tuple
    forward: tuple
    inverse: tuple
    relation: int | None = None
    correction: RatFn = field(default_factory=lambda: RatFn.const(0))
    anchor: str = ""

    def __post_init__(self):
        if isinstance(self.correction, str):
            object.__setattr__(self, "correction", parse_expr(self.correction))

    def specialized(self, params: ParameterPoint | None = None):
        return _specialized(self, params or ParameterPoint.symbolic(self.relation))

    def round_trip_errors(self, params: ParameterPoint | None = None) -> list:
        """Nonzero entries of ``forward(inverse) - new`` and ``inverse(forward) - old``."""
        pp = params or ParameterPoint.symbolic(self.relation)
        fwd = tuple(pp.eliminate(f) for f in self.forward)
        inv = tuple(pp.eliminate(g) for g in self.inverse)
        errs = []
        back = dict(zip(self.old, inv))
        for n, f in zip(self.new, fwd):
            r = substitute(f, back) - RatFn.var(n)
            if not r.is_zero():
                errs.append((n, r))
        there = dict(zip(self.new, fwd))
        for o, g in zip(self.old, inv):
            r = substitute(g, there) - RatFn.var(o)
            if not r.is_zero():
                errs.append((o, r))
        return errs

    @property
    def pairs(self) -> tuple:
        n = self.new
        return tuple((n[i], n[i + 1]) for i in range(0, len(n), 2))


@lru_cache(maxsize=None)
def _specialized(C: Chart, pp: ParameterPoint):
    errs = C.round_trip_errors(pp)
    if errs:
        name, r = errs[0]
        raise ChartError(f"chart {C.id}: round trip fails in {name} (residual {r})")
    fwd = tuple(pp.eliminate(f) for f in C.forward)
    inv = tuple(pp.eliminate(g) for g in C.inverse)
    return fwd, inv


def _names(k):
    return tuple(f"{v}{k}" for v in "xyzw")


# id -> (old coords, new coords, forward, inverse, relation, correction, anchor)
_CHARTS = {
    "identity": (PHASE, PHASE, PHASE, PHASE, None, "0", "identity"),
    "thm2_1": (
        PHASE, _names(1),
        ("1/x", "-x*(x*y + alpha2)", "z", "w"),
        ("1/x1", "-x1^2*y1 - alpha2*x1", "z1", "w1"),
        1, "0", "main chart 1",
    ),
    "thm2_2": (
        PHASE, _names(2),
        ("x", "y", "1/z", "-(z*w + alpha3)*z"),
        ("x2", "y2", "1/z2", "-z2^2*w2 - alpha3*z2"),
        1, "0", "main chart 2",
    ),
    "thm2_3": (
        PHASE, _names(3),
        ("1/x", "-((y - x^2 - w - t)*x - (x + z)*w + alpha1)*x", "-w/x", "x*(x + z)"),
        (
            "1/x3",
            "1/x3^2 - z3/x3 + t - x3^2*y3 - x3*w3*z3 - alpha1*x3",
            "w3*x3 - 1/x3",
            "-z3/x3",
        ),
        1, "x", "main chart 3",
    ),
    "gen_1": (
        PHASE, _names(1),
        ("1/x", "-(x*y + alpha1)*x", "z", "w"),
        ("1/x1", "-x1^2*y1 - alpha1*x1", "z1", "w1"),
        None, "0", "family chart 1",
    ),
    "gen_2": (
        PHASE, _names(2),
        ("x", "y", "1/z", "-(z*w + alpha2)*z"),
        ("x2", "y2", "1/z2", "-z2^2*w2 - alpha2*z2"),
        None, "0", "family chart 2",
    ),
    "R1": (
        PHASE_QP, _names(1),
        ("1/q1", "-(q1*p1 + alpha2)*q1", "q2", "p2"),
        ("1/x1", "-x1^2*y1 - alpha2*x1", "z1", "w1"),
        0, "0", "two-time chart R1",
    ),
    "R2": (
        PHASE_QP, _names(2),
        ("q1", "p1", "1/q2", "-(q2*p2 + alpha3)*q2"),
        ("x2", "y2", "1/z2", "-z2^2*w2 - alpha3*z2"),
        0, "0", "two-time chart R2",
    ),
    "R3": (
        PHASE_QP, _names(3),
        ("1/q1", "-((p1 - q1^2 - p2)*q1 - (q1 + q2)*p2 + alpha1)*q1", "-p2/q1", "q1*(q1 + q2)"),
        (
            "1/x3",
            "1/x3^2 - z3/x3 - x3^2*y3 - x3*w3*z3 - alpha1*x3",
            "w3*x3 - 1/x3",
            "-z3/x3",
        ),
        0, "0", "two-time chart R3",
    ),
}

CHART_IDS = tuple(_CHARTS)
THEOREM2_CHARTS = ("thm2_1", "thm2_2", "thm2_3")
R_CHARTS = ("R1", "R2", "R3")


class UnknownChartError(KeyError):
    def __str__(self):
        return f"unknown chart id {self.args[0]!r}"


def build_chart(id: str) -> Chart:
    try:
        old, new, fwd, inv, rel, corr, anchor = _CHARTS[id]
    except KeyError:
        raise UnknownChartError(id) from None
    return Chart(
        id, tuple(old), tuple(new),
        tuple(parse_expr(f) for f in fwd),
        tuple(parse_expr(g) for g in inv),
        rel, parse_expr(corr), anchor,
    )


# ----- pushforward and polynomiality --------------------------------------


def chart_pushforward(S: HamSystem, C: Chart) -> VectorField:
    """The field of ``S`` written in the coordinates of ``C``."""
    if tuple(C.old) != tuple(S.coords):
        raise ValueError(f"chart {C.id} is not defined on the coordinates of {S.id}")
    fwd, inv = C.specialized(S.params)
    fwd = tuple(S.specialize(f) for f in fwd)
    back = dict(zip(C.old, tuple(S.specialize(g) for g in inv)))
    V = S.vector_field.components
    comps = []
    for f in fwd:
        d = f.diff(S.time)
        for u, v in zip(S.coords, V):
            d = d + f.diff(u) * v
        comps.append(substitute(d, back))
    return VectorField(C.new, tuple(comps), S.time)


def chart_expression(F, C: Chart, params: ParameterPoint | None = None) -> RatFn:
    """``F`` (a function of the old coordinates) written in chart coordinates."""
    pp = params or ParameterPoint.symbolic(C.relation)
    _, inv = C.specialized(pp)
    return substitute(pp.eliminate(F), dict(zip(C.old, inv)))


@dataclass(frozen=True)
class PolynomialityReport:
    passed: bool
    offending: tuple = ()  # (coordinate, denominator) pairs

    def __bool__(self):
        return self.passed


def polynomiality_check(V) -> PolynomialityReport:
    """Pass iff every component of ``V`` (a VectorField or a mapping) is a polynomial."""
    items = zip(V.coords, V.components) if isinstance(V, VectorField) else V.items()
    bad = tuple((c, f.den) for c, f in items if not f.is_polynomial)
    return PolynomialityReport(not bad, bad)


# ----- differential forms -------------------------------------------------


@dataclass(frozen=True)
class OneForm:
    coords: tuple
    coeffs: tuple

    def __sub__(self, other):
        return OneForm(self.coords, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def d(self) -> "TwoForm":
        out = {}
        n = len(self.coords)
        for i in range(n):
            for j in range(i + 1, n):
                c = self.coeffs[j].diff(self.coords[i]) - self.coeffs[i].diff(self.coords[j])
                if not c.is_zero():
                    out[(i, j)] = c
        return TwoForm(self.coords, out)


class TwoForm:
    """``sum_{i<j} c_ij du_i ^ du_j`` with only nonzero coefficients stored."""

    def __init__(self, coords, coeffs=None):
        self.coords = tuple(coords)
        self.coeffs = {}
        for (i, j), c in (coeffs or {}).items():
            if i == j:
                continue
            if i > j:
                i, j, c = j, i, -c
            v = self.coeffs.get((i, j), RatFn.const(0)) + c
            if v.is_zero():
                self.coeffs.pop((i, j), None)
            else:
                self.coeffs[(i, j)] = v

    def coefficient(self, a: str, b: str) -> RatFn:
        i, j = self.coords.index(a), self.coords.index(b)
        if i == j:
            return RatFn.const(0)
        if i < j:
            return self.coeffs.get((i, j), RatFn.const(0))
        return -self.coeffs.get((j, i), RatFn.const(0))

    def __add__(self, other):
        merged = dict(self.coeffs)
        for k, c in other.coeffs.items():
            merged[k] = merged.get(k, RatFn.const(0)) + c
        return TwoForm(self.coords, merged)

    def __neg__(self):
        return TwoForm(self.coords, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        return isinstance(other, TwoForm) and self.coords == other.coords and (self - other).is_zero()

    def __repr__(self):
        if not self.coeffs:
            return "TwoForm(0)"
        terms = [f"({c})*d{self.coords[i]}^d{self.coords[j]}" for (i, j), c in sorted(self.coeffs.items())]
        return " + ".join(terms)


def exterior_derivative(F, coords) -> OneForm:
    F = as_ratfn(F)
    return OneForm(tuple(coords), tuple(F.diff(c) for c in coords))


def wedge(a: OneForm, b: OneForm) -> TwoForm:
    out = {}
    for i, j in itertools.combinations(range(len(a.coords)), 2):
        c = a.coeffs[i] * b.coeffs[j] - a.coeffs[j] * b.coeffs[i]
        if not c.is_zero():
            out[(i, j)] = c
    return TwoForm(a.coords, out)


def canonical_two_form(coords_q_p, H, time, coords) -> TwoForm:
    """``sum dq ^ dp - dH ^ dt`` with everything expressed in ``coords``."""
    total = TwoForm(coords)
    for q, p in coords_q_p:
        total = total + wedge(exterior_derivative(q, coords), exterior_derivative(p, coords))
    return total - wedge(exterior_derivative(H, coords), exterior_derivative(RatFn.var(time), coords))


def two_form_residual(S: HamSystem, C: Chart, H_chart) -> TwoForm:
    """Difference of the two sides of the two-form identity, over ``(old..., t)``.

    Left: ``sum dq ^ dp - d(H + correction) ^ dt`` in the original coordinates.
    Right: the chart's ``sum dQ ^ dP - dH_chart ^ dt`` pulled back through ``C``.
    """
    fwd, _ = C.specialized(S.params)
    fwd = tuple(S.specialize(f) for f in fwd)
    coords = tuple(S.coords) + (S.time,)
    old = [(RatFn.var(q), RatFn.var(p)) for q, p in S.pairs]
    lhs = canonical_two_form(old, S.hamiltonian + S.specialize(C.correction), S.time, coords)
    img = dict(zip(C.new, fwd))
    new = [(img[q], img[p]) for q, p in C.pairs]
    pulled = substitute(S.specialize(as_ratfn(H_chart)), img)
    rhs = canonical_two_form(new, pulled, S.time, coords)
    return lhs - rhs


def derive_chart_hamiltonian(S: HamSystem, C: Chart) -> RatFn:
    """Polynomial Hamiltonian of the pushed-forward field, without phase-constant part."""
    P = chart_pushforward(S, C)
    rep = polynomiality_check(P)
    if not rep.passed:
        raise NotHamiltonianError(rep.offending[0][0], "", "pushforward is not polynomial")
    grad = {}
    for q, p in C.pairs:
        grad[q] = -P[p]
        grad[p] = P[q]
    coords = C.new
    for a, b in itertools.combinations(coords, 2):
        r = grad[a].diff(b) - grad[b].diff(a)
        if not r.is_zero():
            raise NotHamiltonianError(a, b, r)
    K = RatFn.const(0)
    for c in coords:
        rest = (grad[c] - K.diff(c)).as_poly()
        K = K + RatFn(rest.integrate(c))
    return K


def strip_phase_constant(F, coords) -> RatFn:
    """Drop the terms of the polynomial ``F`` free of every symbol in ``coords``."""
    P = as_ratfn(F).as_poly()
    idx = [REGISTRY.index(c) for c in coords]
    keep = {k: c for k, c in P.terms.items() if any(key_exp(k, i) for i in idx)}
    return RatFn(MPoly._raw(keep))


# ----- Hamiltonian recovery -----------------------------------------------


@dataclass(frozen=True)
class HamAnsatz:
    """Unknown polynomial of degree ``<= degree`` in the phase coordinates.

    Each phase monomial carries one unknown rational coefficient per element
    of ``basis``; the constant monomial only gets ``constant_basis`` since a
    parameter-only additive term never affects a vector field.
    """

    degree: int = 5
    coords: tuple = PHASE
    basis: tuple = ("1", "t", "alpha2", "alpha3")
    constant_basis: tuple = ("1", "t")

    def monomials(self) -> list:
        """Exponent tuples over ``coords`` in descending graded order, constant last."""
        n = len(self.coords)
        out = []
        for d in range(self.degree, -1, -1):
            for c in itertools.combinations_with_replacement(range(n), d):
                e = [0] * n
                for i in c:
                    e[i] += 1
                out.append(tuple(e))
        return out

    def unknowns(self) -> list:
        """Canonically ordered ``(exponents, basis element)`` pairs."""
        out = []
        for e in self.monomials():
            for b in self.constant_basis if not any(e) else self.basis:
                out.append((e, b))
        return out

    def assemble(self, values) -> RatFn:
        terms = {}
        for (e, b), v in zip(self.unknowns(), values):
            if not v:
                continue
            full = [0] * len(REGISTRY)
            for name, k in zip(self.coords, e):
                full[REGISTRY.index(name)] = k
            if b != "1":
                full[REGISTRY.index(b)] += 1
            terms[pack(full)] = mpq(v)
        return RatFn(MPoly._raw(terms))

    def coordinates(self, H) -> list:
        """Coefficient vector of ``H`` in this ansatz (error if ``H`` lies outside)."""
        P = as_ratfn(H).as_poly()
        index = {}
        for k, (e, b) in enumerate(self.unknowns()):
            full = [0] * len(REGISTRY)
            for name, x in zip(self.coords, e):
                full[REGISTRY.index(name)] = x
            if b != "1":
                full[REGISTRY.index(b)] += 1
            index[pack(full)] = k
        vec = [mpq(0)] * len(index)
        for key, c in P.terms.items():
            if key not in index:
                raise ValueError("polynomial lies outside the ansatz")
            vec[index[key]] = c
        return vec


@dataclass
class Recovery:
    ansatz: HamAnsatz
    charts: tuple
    n_equations: int
    particular: RatFn
    kernel: list
    solver: SparseSolver = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.kernel)

    def contains(self, H) -> bool:
        """True iff ``H`` satisfies every recovered linear condition."""
        try:
            vec = self.ansatz.coordinates(H)
        except ValueError:
            return False
        for p, (row, rhs) in self.solver.rows.items():
            if sum((c * vec[j] for j, c in row.items()), mpq(0)) != rhs:
                return False
        return True


def _laurent(F: RatFn, chart_idx) -> dict:
    """Signed exponent vector -> coefficient, for ``F`` with a monomial denominator."""
    if not F.den.is_monomial():
        raise ValueError(f"denominator {F.den} is not a monomial; chart is not Laurent")
    (dexp, dc), = F.den.exponents()
    out = {}
    for e, c in F.num.exponents():
        out[tuple(a - b for a, b in zip(e, dexp))] = c / dc
    return out


def _polar(laurent: dict, chart_idx) -> dict:
    return {k: c for k, c in laurent.items() if any(k[i] < 0 for i in chart_idx)}


def recover_hamiltonian(charts, ansatz: HamAnsatz | None = None, relation: int = 1) -> Recovery:
    """All ansatz Hamiltonians whose field stays polynomial in every chart.

    The chart field of ``H`` is affine in ``H``: a part linear in ``H`` plus
    the contribution of the explicit time dependence of the chart.  Each
    negative-power Laurent coefficient of it gives one linear equation.
    """
    ansatz = ansatz or HamAnsatz()
    charts = [build_chart(c) if isinstance(c, str) else c for c in charts]
    pp = ParameterPoint.symbolic(relation)
    unknowns = ansatz.unknowns()
    solver = SparseSolver(len(unknowns))
    basis_shift = {b: (None if b == "1" else REGISTRY.index(b)) for b in ansatz.basis + ansatz.constant_basis}
    for C in charts:
        if tuple(C.old) != tuple(ansatz.coords):
            raise ValueError(f"chart {C.id} does not live on the ansatz coordinates")
        fwd, inv = C.specialized(pp)
        chart_idx = [REGISTRY.index(n) for n in C.new]
        back = dict(zip(C.old, inv))
        jac = [[substitute(f.diff(u), back) for u in C.old] for f in fwd]
        explicit = [substitute(f.diff("t"), back) for f in fwd]
        inv_vals = list(inv)
        powers = {}

        def mono_image(e):
            out = RatFn.const(1)
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in powers:
                        powers[key] = inv_vals[i] ** k
                    out = out * powers[key]
            return out

        mono_cache = {}
        eqs = {}
        for comp in range(4):
            for key, c in _polar(_laurent(explicit[comp], chart_idx), chart_idx).items():
                eqs.setdefault((comp, key), [{}, mpq(0)])[1] -= c
        for m in ansatz.monomials():
            if not any(m):
                continue
            # Hamiltonian field of the monomial in the old coordinates
            field_terms = []
            for (qi, pi) in ((0, 1), (2, 3)):
                if m[pi]:
                    e = list(m)
                    e[pi] -= 1
                    field_terms.append((qi, m[pi], tuple(e)))
                if m[qi]:
                    e = list(m)
                    e[qi] -= 1
                    field_terms.append((pi, -m[qi], tuple(e)))
            for comp in range(4):
                L = RatFn.const(0)
                for u, coef, e in field_terms:
                    if jac[comp][u].is_zero():
                        continue
                    if e not in mono_cache:
                        mono_cache[e] = mono_image(e)
                    L = L + jac[comp][u] * mono_cache[e] * coef
                if L.is_zero():
                    continue
                pol = _polar(_laurent(L, chart_idx), chart_idx)
                for b in ansatz.basis:
                    shift = basis_shift[b]
                    for key, c in pol.items():
                        if shift is not None:
                            key = key[:shift] + (key[shift] + 1,) + key[shift + 1:]
                        eqs.setdefault((comp, key), [{}, mpq(0)])[0][(m, b)] = c
        index = {u: k for k, u in enumerate(unknowns)}
        for (comp, key), (coeffs, rhs) in sorted(eqs.items()):
            solver.add({index[u]: c for u, c in coeffs.items()}, rhs)
    sol = solver.solution()
    return Recovery(
        ansatz,
        tuple(C.id for C in charts),
        solver.n_equations,
        ansatz.assemble(sol.particular),
        [ansatz.assemble(v) for v in sol.kernel],
        solver,
    )
