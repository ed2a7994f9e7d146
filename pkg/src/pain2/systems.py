"""Catalog of Hamiltonian systems and canonical-structure operations.

Bracket convention throughout: ``{F, G} = sum_i dF/dp_i dG/dq_i - dF/dq_i dG/dp_i``,
so that ``{p_i, q_j} = delta_ij``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

from .algebra import (
    NonTriangularError,
    RatFn,
    as_ratfn,
    solve_for,
    substitute,
    vanishes_on_variety,
)
from .algebra.registry import PARAMS, PHASE, PHASE_QP
from .io.expr import parse_expr


class UnknownSystemError(KeyError):
    def __str__(self):
        return f"unknown system id {self.args[0]!r}"


# ----- parameters ---------------------------------------------------------


@dataclass(frozen=True)
class ParameterPoint:
    """Values of alpha1..alpha3, optionally tied by ``2a1 + 2a2 + a3 = relation``.

    Under a relation alpha1 is always the eliminated parameter.  ``values``
    holds bindings for the free parameters as ``(name, RatFn)`` pairs; unbound
    parameters stay symbolic.
    """

    relation: int | None = None
    values: tuple = ()

    def __post_init__(self):
        names = [n for n, _ in self.values]
        bad = set(names) - set(PARAMS)
        if bad:
            raise ValueError(f"not a parameter: {', '.join(sorted(bad))}")
        if self.relation is not None and "alpha1" in names:
            raise ValueError("alpha1 is eliminated by the relation; bind alpha2, alpha3 instead")

    @classmethod
    def symbolic(cls, relation=None) -> "ParameterPoint":
        return cls(relation, ())

    @classmethod
    def numeric(cls, relation=None, **values) -> "ParameterPoint":
        return cls(relation, tuple(sorted((k, as_ratfn(v)) for k, v in values.items())))

    @cached_property
    def bindings(self) -> dict:
        b = {n: RatFn.var(n) for n in PARAMS}
        b.update(dict(self.values))
        if self.relation is not None:
            b["alpha1"] = (RatFn.const(self.relation) - 2 * b["alpha2"] - b["alpha3"]) / 2
        return {n: v for n, v in b.items() if v != RatFn.var(n)}

    def eliminate(self, F) -> RatFn:
        """Impose the parameter values (and relation) on ``F``."""
        b = self.bindings
        return substitute(F, b) if b else as_ratfn(F)

    def relation_defect(self, images: dict) -> RatFn:
        """``2a1' + 2a2' + a3' - relation`` for parameter images, after elimination."""
        if self.relation is None:
            return RatFn.const(0)
        a = {n: as_ratfn(images.get(n, RatFn.var(n))) for n in PARAMS}
        expr = 2 * a["alpha1"] + 2 * a["alpha2"] + a["alpha3"] - self.relation
        return self.eliminate(expr)


@dataclass(frozen=True)
class FamilyConstants:
    """Coupling ``a`` and scales ``a1, a2, a3`` of the generic family."""

    a: object = "a"
    a1: object = "a1"
    a2: object = "a2"
    a3: object = "a3"

    def __post_init__(self):
        for n in ("a1", "a2", "a3"):
            if as_ratfn(getattr(self, n)).is_zero():
                raise ValueError(f"{n} must be nonzero")

    @property
    def bindings(self) -> dict:
        out = {}
        for n in ("a", "a1", "a2", "a3"):
            v = as_ratfn(getattr(self, n))
            if v != RatFn.var(n):
                out[n] = v
        return out


# ----- vector fields ------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    coords: tuple
    components: tuple
    time: str | None = None

    def __getitem__(self, name) -> RatFn:
        return self.components[self.coords.index(name)]

    @property
    def polynomial(self) -> tuple:
        return tuple(c.is_polynomial for c in self.components)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __str__(self):
        return "\n".join(f"d{c}/d{self.time or 't'} = {f}" for c, f in zip(self.coords, self.components))


def _field_from(H: RatFn, coords, pairs) -> tuple:
    comp = {}
    for q, p in pairs:
        comp[q] = H.diff(p)
        comp[p] = -H.diff(q)
    return tuple(comp[c] for c in coords)


# ----- systems ------------------------------------------------------------


@dataclass(frozen=True)
class HamSystem:
    """A catalog system.

    ``template`` is the Hamiltonian with raw parameter symbols; ``params`` and
    ``constants`` are imposed on everything the system hands out.  Systems
    without a Hamiltonian carry ``rhs_template`` instead.
    """

    id: str
    coords: tuple
    pairs: tuple
    time: str
    params: ParameterPoint
    template: RatFn | None = None
    rhs_template: tuple | None = None
    constants: FamilyConstants | None = None
    anchor: str = ""

    def specialize(self, F) -> RatFn:
        F = self.params.eliminate(F)
        if self.constants is not None:
            b = self.constants.bindings
            if b:
                F = substitute(F, b)
        return F

    @cached_property
    def hamiltonian(self) -> RatFn | None:
        return None if self.template is None else self.specialize(self.template)

    @cached_property
    def raw_rhs(self) -> tuple:
        if self.template is None:
            return self.rhs_template
        return _field_from(self.template, self.coords, self.pairs)

    def rhs(self, alpha_images: dict | None = None) -> tuple:
        """Right-hand side, with parameters first replaced by ``alpha_images``."""
        raw = self.raw_rhs
        if alpha_images:
            raw = tuple(substitute(f, alpha_images) for f in raw)
        return tuple(self.specialize(f) for f in raw)

    @cached_property
    def vector_field(self) -> VectorField:
        return VectorField(self.coords, self.rhs(), self.time)

    def with_params(self, params: ParameterPoint) -> "HamSystem":
        return HamSystem(
            self.id, self.coords, self.pairs, self.time, params,
            self.template, self.rhs_template, self.constants, self.anchor,
        )

    def with_constants(self, constants: FamilyConstants) -> "HamSystem":
        return HamSystem(
            self.id, self.coords, self.pairs, self.time, self.params,
            self.template, self.rhs_template, constants, self.anchor,
        )


XYZW_PAIRS = (("x", "y"), ("z", "w"))
QP_PAIRS = (("q1", "p1"), ("q2", "p2"))

# id -> (hamiltonian text or None, coords, pairs, time, relation, anchor, rhs texts)
_CATALOG = {
    "generic": (
        "a1*x^2*y + a2*y^2/2 + a3*t*y + a1*alpha1*x"
        " + a1*z^2*w + a2*w^2/2 + a3*t*w + a1*alpha2*z + a*y*w",
        PHASE, XYZW_PAIRS, "t", None, "general family", None,
    ),
    "hone": (
        "2*x^2*y + y^2/8 - t*y + alpha1*x + 2*z^2*w + w^2/8 - t*w + alpha2*z + 3*y*w/4",
        PHASE, XYZW_PAIRS, "t", None, "Hone system", None,
    ),
    "a1case": (
        "-x^2*y + y^2/2 - t*y/2 - alpha1*x - z^2*w + w^2/2 - t*w/2 - alpha2*z + y*w",
        PHASE, XYZW_PAIRS, "t", None, "a1 = -1 case", None,
    ),
    "main": (
        "-2*x^2*y + 2*y^2 - 2*t*y - 2*alpha2*x + z^2*w + w^2 + t*w + alpha3*z - 3*y*w",
        PHASE, XYZW_PAIRS, "t", 1, "main system", None,
    ),
    "sys11": (
        "2*x^2*y + 2*y^2 + 2*t*y - y*z*w^2 + alpha3*y*w - 2*x*z*w - 2*alpha1*x - z",
        PHASE, XYZW_PAIRS, "t", 1, "image under phi1", None,
    ),
    "sys14": (
        "2*x^2*y + 2*y^2 - y*z + 2*t*y + 2*alpha1*x + 2*x*z*w + alpha3*w - z*w^2",
        PHASE, XYZW_PAIRS, "t", 1, "image under phi2", None,
    ),
    "sys16": (
        None, ("x", "z"), (), "t", 1, "reduced planar system", ("2*x^2 - z + 2*t", "2*x*z + alpha3"),
    ),
    "K1": (
        "q1^2*p1 - p1^2 + alpha2*q1 - q2^2*p2/2 - p2^2/2 - alpha3*q2/2 + 3*p1*p2/2",
        PHASE_QP, QP_PAIRS, "t", 0, "two-time K1", None,
    ),
    "K2": (
        "-alpha3^2*p1 + q2^4*p2^2 + 2*q2^2*p2^3 + p2^4 + 2*alpha3*q2^3*p2"
        " + 4*(alpha1 + alpha3)*q2*p2^2 + alpha3^2*q2^2 + alpha3*(2*alpha1 + alpha3)*p2"
        " - p2*(8*q1*p1*q2*p2 + 6*p1*q2^2*p2 + 4*q1^2*p1*p2 + 2*p1*p2^2 - p1^2*p2"
        " + 4*alpha2*q1*p2 + 4*alpha3*q1*p1 + 6*alpha3*p1*q2)",
        PHASE_QP, QP_PAIRS, "s", 0, "two-time K2", None,
    ),
}

SYSTEM_IDS = tuple(_CATALOG)

# Reference right-hand sides, written out independently of the Hamiltonians.
REFERENCE_RHS = {
    "hone": ("2*x^2 + y/4 + 3*w/4 - t", "-4*x*y - alpha1", "2*z^2 + w/4 + 3*y/4 - t", "-4*z*w - alpha2"),
    "a1case": ("-x^2 + y + w - t/2", "2*x*y + alpha1", "-z^2 + y + w - t/2", "2*z*w + alpha2"),
    "main": ("-2*x^2 + 4*y - 3*w - 2*t", "4*x*y + 2*alpha2", "z^2 + 2*w - 3*y + t", "-2*z*w - alpha3"),
    "sys11": (
        "2*x^2 + 4*y + 2*t - z*w^2 + alpha3*w", "-4*x*y + 2*z*w + 2*alpha1",
        "-2*x*z - 2*y*z*w + alpha3*y", "y*w^2 + 2*x*w + 1",
    ),
    "sys14": ("2*x^2 + 4*y - z + 2*t", "-4*x*y - 2*z*w - 2*alpha1", "-2*z*w + 2*x*z + alpha3", "w^2 - 2*x*w + y"),
    "sys16": ("2*x^2 - z + 2*t", "2*x*z + alpha3"),
}


def build_system(id: str, params: ParameterPoint | None = None, consts: FamilyConstants | None = None) -> HamSystem:
    """Catalog system ``id``; parameters default to symbolic under the system's relation."""
    try:
        text, coords, pairs, time, relation, anchor, rhs = _CATALOG[id]
    except KeyError:
        raise UnknownSystemError(id) from None
    if params is None:
        params = ParameterPoint.symbolic(relation)
    template = parse_expr(text) if text is not None else None
    rhs_template = tuple(parse_expr(r) for r in rhs) if rhs is not None else None
    if consts is None and id == "generic":
        consts = FamilyConstants()
    return HamSystem(id, coords, pairs, time, params, template, rhs_template, consts, anchor)


# ----- canonical operations -----------------------------------------------


def hamiltonian_vector_field(S: HamSystem) -> VectorField:
    return S.vector_field


def poisson_bracket(F, G, pairs=XYZW_PAIRS) -> RatFn:
    """``sum_i dF/dp_i dG/dq_i - dF/dq_i dG/dp_i`` over canonical ``(q, p)`` pairs."""
    F, G = as_ratfn(F), as_ratfn(G)
    out = RatFn.const(0)
    for q, p in pairs:
        out = out + F.diff(p) * G.diff(q) - F.diff(q) * G.diff(p)
    return out


def lie_bracket(V: VectorField, W: VectorField) -> VectorField:
    """``[V, W]_i = sum_j V_j dW_i/du_j - W_j dV_i/du_j``."""
    if V.coords != W.coords:
        raise ValueError("vector fields live on different coordinates")
    comps = []
    for vi, wi in zip(V.components, W.components):
        acc = RatFn.const(0)
        for u, vj, wj in zip(V.coords, V.components, W.components):
            acc = acc + vj * wi.diff(u) - wj * vi.diff(u)
        comps.append(acc)
    return VectorField(V.coords, tuple(comps), None)


def hamiltonian_field_of(F, coords, pairs) -> VectorField:
    return VectorField(tuple(coords), _field_from(as_ratfn(F), coords, pairs), None)


def total_time_derivative(F, S: HamSystem) -> RatFn:
    """``dF/dt`` along the flow of ``S`` (``t`` being the system's time symbol)."""
    F = S.specialize(F)
    out = F.diff(S.time)
    for u, f in zip(S.coords, S.vector_field.components):
        out = out + f * F.diff(u)
    return out


# ----- invariant cycles ---------------------------------------------------


@dataclass(frozen=True)
class InvariantCycle:
    generators: tuple
    relation: RatFn  # expression required to vanish, e.g. alpha2
    anchor: str = ""

    def __post_init__(self):
        if any(as_ratfn(g).is_zero() for g in self.generators):
            raise ValueError("zero generator")

    @property
    def codimension(self) -> int:
        return len(self.generators)


INVARIANT_CYCLES = {
    "f1": InvariantCycle((parse_expr("y"),), parse_expr("alpha2"), "invariant cycle f1"),
    "f2": InvariantCycle((parse_expr("w"),), parse_expr("alpha3"), "invariant cycle f2"),
    "f3": InvariantCycle(
        (parse_expr("y - x^2 - w - t"), parse_expr("x + z")),
        parse_expr("alpha1"),
        "invariant cycle f3",
    ),
}


def _triangular_constraints(generators, coords) -> list:
    cands = []
    for g in generators:
        opts = []
        for v in coords:
            sol = solve_for(g, [v])
            if sol is not None:
                opts.append(sol)
        cands.append(opts)
    for choice in itertools.product(*cands):
        names = [v for v, _ in choice]
        if len(set(names)) != len(names):
            continue
        # order so that each expression only uses symbols solved before it
        pending = list(choice)
        ordered = []
        while pending:
            solved_later = {v for v, _ in pending}
            for k, (v, g) in enumerate(pending):
                if not (set(g.variables()) & (solved_later - {v})):
                    ordered.append(pending.pop(k))
                    break
            else:
                break
        if not pending:
            return ordered
    raise NonTriangularError("generators cannot be solved triangularly for phase variables")


def cycle_constraints(S: HamSystem, C: InvariantCycle) -> list:
    """Solved-form constraints (parameter relation first) describing the cycle."""
    constraints = []
    rel = S.specialize(C.relation)
    if not rel.is_zero():
        sol = solve_for(rel, list(reversed(PARAMS)))
        if sol is None:
            raise NonTriangularError(f"cannot solve parameter relation {rel} = 0")
        constraints.append(sol)
    gens = [S.specialize(g) for g in C.generators]
    if constraints:
        v, e = constraints[0]
        gens = [substitute(g, {v: e}) for g in gens]
    constraints.extend(_triangular_constraints(gens, S.coords))
    return constraints


def invariant_cycle_residuals(S: HamSystem, C: InvariantCycle) -> list:
    """Time derivatives of the generators restricted to the cycle (all zero iff invariant)."""
    cons = cycle_constraints(S, C)
    out = []
    for g in C.generators:
        F = total_time_derivative(g, S)
        for v, e in reversed(cons):
            F = substitute(F, {v: e})
        out.append(F)
    return out


def invariant_cycle_check(S: HamSystem, C: InvariantCycle) -> bool:
    cons = cycle_constraints(S, C)
    return all(vanishes_on_variety(total_time_derivative(g, S), cons) for g in C.generators)
