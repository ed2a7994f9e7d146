"""Birational symplectic maps: catalog, composition and residual checks."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, reduce

from .algebra import RatFn, substitute
from .algebra.registry import PARAMS, PHASE, PHASE_QP
from .io.expr import parse_expr
from .systems import (
    QP_PAIRS,
    XYZW_PAIRS,
    HamSystem,
    ParameterPoint,
    poisson_bracket,
)


class UnknownMapError(KeyError):
    def __str__(self):
        return f"unknown map id {self.args[0]!r}"


class RelationViolation(ValueError):
    """A parameter action does not preserve the active parameter relation."""


@dataclass(frozen=True)
class Residual:
    """Per-slot residual expressions; ``passed`` iff every slot is zero."""

    labels: tuple
    components: tuple

    @property
    def passed(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def failing(self) -> dict:
        return {l: c for l, c in zip(self.labels, self.components) if not c.is_zero()}

    def __bool__(self):
        return self.passed


@dataclass(frozen=True)
class BirationalMap:
    """``coords -> components`` together with an affine action on the parameters.

    ``param_action`` is a tuple of ``(name, image)`` pairs; parameters not
    listed are fixed.  Time is fixed by every map.  Under a relation all
    expressions are kept with alpha1 eliminated.
    """

    id: str
    coords: tuple
    components: tuple
    param_action: tuple = ()
    relation: int | None = None
    anchor: str = ""

    def __post_init__(self):
        if len(self.coords) != len(self.components):
            raise ValueError("one component per coordinate is required")

    @cached_property
    def param_images(self) -> dict:
        """Images of all three parameters, after eliminating by the relation."""
        pp = ParameterPoint.symbolic(self.relation)
        act = dict(self.param_action)
        return {n: pp.eliminate(act.get(n, RatFn.var(n))) for n in PARAMS}

    @cached_property
    def eliminated(self) -> tuple:
        pp = ParameterPoint.symbolic(self.relation)
        return tuple(pp.eliminate(c) for c in self.components)

    def preserves_relation(self) -> bool:
        return ParameterPoint.symbolic(self.relation).relation_defect(self.param_images).is_zero()

    def image(self) -> dict:
        return dict(zip(self.coords, self.components))


# id -> (coords, component texts, parameter images, relation, anchor)
_S3_FORMS = {
    # The relation-1 and relation-0 forms differ by the constant in the third factor and by t.
    "s3": (
        "y - x^2 - w - t", "x + z", "-1 - (x + z)*w + 2*alpha1 + 2*alpha2", ("x", "y", "z", "w"),
    ),
    "s3_5": (
        "p1 - q1^2 - p2", "q1 + q2", "-(q1 + q2)*p2 + 2*alpha1 + 2*alpha2", ("q1", "p1", "q2", "p2"),
    ),
}


def _s3_texts(which):
    D, S, F, (x, y, z, w) = _S3_FORMS[which]
    D, S, F = f"({D})", f"({S})", f"({F})"
    N = f"({x}*{D} - {S}*{w} + alpha1)"
    E = f"(-{S}*{F}/{D})"
    return (
        f"{N}/{D}",
        f"{y} - {x}^2 - {w} + {N}^2/{D}^2 + {E}",
        f"-{D}/{S} - {N}/{D}",
        E,
    )


_S1_PARAMS = (("alpha1", "alpha1 + 2*alpha2"), ("alpha2", "-alpha2"))
_S2_PARAMS = (("alpha1", "alpha1 + alpha3"), ("alpha3", "-alpha3"))
_S3_PARAMS = (("alpha1", "-alpha1 - alpha3"), ("alpha2", "2*alpha1 + alpha2 + alpha3"))
_PHI1_D = "(-t - w - x^2 + y)"

_MAPS = {
    "identity": (PHASE, PHASE, (), None, "identity"),
    "identity_qp": (PHASE_QP, PHASE_QP, (), None, "identity"),
    "S1": (PHASE, ("x + alpha1/y", "y", "z", "w"), (("alpha1", "-alpha1"),), None, "family symmetry S1"),
    "S2": (PHASE, ("x", "y", "z + alpha2/w", "w"), (("alpha2", "-alpha2"),), None, "family symmetry S2"),
    "s1": (PHASE, ("x + alpha2/y", "y", "z", "w"), _S1_PARAMS, 1, "main symmetry s1"),
    "s2": (PHASE, ("x", "y", "z + alpha3/w", "w"), _S2_PARAMS, 1, "main symmetry s2"),
    "s3": (PHASE, _s3_texts("s3"), _S3_PARAMS, 1, "main symmetry s3"),
    "s1_5": (PHASE_QP, ("q1 + alpha2/p1", "p1", "q2", "p2"), _S1_PARAMS, 0, "two-time symmetries s1"),
    "s2_5": (PHASE_QP, ("q1", "p1", "q2 + alpha3/p2", "p2"), _S2_PARAMS, 0, "two-time symmetries s2"),
    "s3_5": (PHASE_QP, _s3_texts("s3_5"), _S3_PARAMS, 0, "two-time symmetries s3"),
    "phi1": (
        PHASE,
        (
            f"x - ((x + z)*w - alpha1)/{_PHI1_D}",
            _PHI1_D,
            f"-w*{_PHI1_D}",
            f"(x + z)/{_PHI1_D}",
        ),
        (),
        1,
        "transformation phi1",
    ),
    "phi2": (PHASE, ("x", "-t - w - x^2 + y", "-w", "x + z"), (), 1, "transformation phi2"),
}

MAP_IDS = tuple(_MAPS)


def build_map(id: str, relation=...) -> BirationalMap:
    """Catalog map ``id``.  ``relation`` overrides the catalog relation if given."""
    try:
        coords, comps, params, rel, anchor = _MAPS[id]
    except KeyError:
        raise UnknownMapError(id) from None
    if relation is not ...:
        rel = relation
    pp = ParameterPoint.symbolic(rel)
    components = tuple(pp.eliminate(parse_expr(c)) for c in comps)
    action = tuple((n, pp.eliminate(parse_expr(e))) for n, e in params)
    M = BirationalMap(id, tuple(coords), components, action, rel, anchor)
    if not M.preserves_relation():
        raise RelationViolation(f"{id} does not preserve the parameter relation")
    return M


def _check_relation(M: BirationalMap):
    if not M.preserves_relation():
        raise RelationViolation(f"{M.id} does not preserve 2a1 + 2a2 + a3 = {M.relation}")


def compose(M1: BirationalMap, M2: BirationalMap) -> BirationalMap:
    """The product ``M1 M2``: act with ``M1`` first, then with ``M2``.

    Components of ``M2`` get the coordinates and parameters replaced by the
    images under ``M1``; the parameter action composes the same way.
    """
    if M1.coords != M2.coords:
        raise ValueError(f"cannot compose maps on {M1.coords} and {M2.coords}")
    relation = M1.relation if M1.relation is not None else M2.relation
    if M1.relation is not None and M2.relation is not None and M1.relation != M2.relation:
        raise ValueError("maps carry different parameter relations")
    pp = ParameterPoint.symbolic(relation)
    m1 = BirationalMap(M1.id, M1.coords, M1.components, M1.param_action, relation)
    m2 = BirationalMap(M2.id, M2.coords, M2.components, M2.param_action, relation)
    _check_relation(m1)
    _check_relation(m2)
    bind = dict(zip(m1.coords, m1.eliminated))
    bind.update({n: e for n, e in m1.param_images.items() if e != RatFn.var(n)})
    if relation is not None:
        bind.pop("alpha1", None)
    comps = tuple(pp.eliminate(substitute(c, bind)) for c in m2.eliminated)
    action = tuple(
        (n, pp.eliminate(substitute(e, bind)))
        for n, e in m2.param_images.items()
    )
    action = tuple((n, e) for n, e in action if e != RatFn.var(n))
    return BirationalMap(f"{M1.id}.{M2.id}", M1.coords, comps, action, relation)


def compose_word(word, relation=...) -> BirationalMap:
    maps = [build_map(m, relation) if isinstance(m, str) else m for m in word]
    if not maps:
        raise ValueError("empty word")
    if len(maps) == 1:
        return maps[0]
    return reduce(compose, maps)


def maps_equal(A: BirationalMap, B: BirationalMap) -> bool:
    """Equality on components and parameter action modulo the active relation."""
    if A.coords != B.coords:
        return False
    rel = A.relation if A.relation is not None else B.relation
    pp = ParameterPoint.symbolic(rel)
    for a, b in zip(A.components, B.components):
        if not pp.eliminate(a - b).is_zero():
            return False
    for n in PARAMS:
        if not pp.eliminate(A.param_images[n] - B.param_images[n]).is_zero():
            return False
    return True


def group_relation_check(word, expected="identity", relation=...) -> bool:
    """Compose ``word`` left to right and compare with ``expected``."""
    W = compose_word(word, relation)
    if isinstance(expected, str):
        if expected == "identity":
            expected = "identity" if W.coords == PHASE else "identity_qp"
        E = build_map(expected, W.relation if relation is ... else relation)
    else:
        E = expected
    return maps_equal(W, E)


def _pairs_for(coords) -> tuple:
    return QP_PAIRS if coords == PHASE_QP else XYZW_PAIRS


def is_symplectic(M: BirationalMap, pairs=None) -> Residual:
    """Bracket-preservation residuals of the images in the source coordinates.

    For each canonical pair ``(q, p)`` with images ``(X, Y)`` the slot is
    ``{Y, X} - 1``; every other pair of images contributes its bracket.
    """
    pairs = pairs or _pairs_for(M.coords)
    img = dict(zip(M.coords, M.eliminated))
    labels, comps = [], []
    canon = set()
    for i, (q, p) in enumerate(pairs, 1):
        comps.append(poisson_bracket(img[p], img[q], pairs) - 1)
        labels.append(f"{{Y{i},X{i}}}-1")
        canon.add(frozenset((q, p)))
    for i, a in enumerate(M.coords):
        for b in M.coords[i + 1:]:
            if frozenset((a, b)) in canon:
                continue
            comps.append(poisson_bracket(img[a], img[b], pairs))
            labels.append(f"{{{a}',{b}'}}")
    return Residual(tuple(labels), tuple(comps))


def _flow_derivative(S: HamSystem, F: RatFn) -> RatFn:
    out = F.diff(S.time)
    for u, f in zip(S.coords, S.vector_field.components):
        out = out + f * F.diff(u)
    return out


def _pushed(S: HamSystem, M: BirationalMap) -> tuple:
    if tuple(M.coords) != tuple(S.coords):
        raise ValueError(f"map {M.id} and system {S.id} use different coordinates")
    X = tuple(S.specialize(c) for c in M.components)
    return X, tuple(_flow_derivative(S, x) for x in X)


def invariance_residual(S: HamSystem, M: BirationalMap) -> Residual:
    """``d/dt (M(u))`` along ``S`` minus ``S``'s field at ``M(alpha)``, evaluated at ``M(u)``."""
    if S.params.relation is not None:
        _check_relation(BirationalMap(M.id, M.coords, M.components, M.param_action, S.params.relation))
    X, lhs = _pushed(S, M)
    images = {n: e for n, e in dict(M.param_action).items()}
    rhs = S.rhs(images)
    at = dict(zip(S.coords, X))
    comps = tuple(S.specialize(l - substitute(r, at)) for l, r in zip(lhs, rhs))
    return Residual(tuple(f"d{c}" for c in S.coords), comps)


def conjugacy_residual(source: HamSystem, M: BirationalMap, target: HamSystem) -> Residual:
    """Pushed-forward flow of ``source`` minus ``target``'s field at the image point."""
    if source.time != target.time:
        raise ValueError("source and target use different time symbols")
    X, lhs = _pushed(source, M)
    at = dict(zip(target.coords, X))
    rhs = target.vector_field.components
    comps = tuple(source.specialize(l - substitute(r, at)) for l, r in zip(lhs, rhs))
    return Residual(tuple(f"d{c}" for c in target.coords), comps)


def s3_consistency() -> Residual:
    """Check that the two forms of s3 agree under their respective relations."""
    two = ParameterPoint.symbolic(1).eliminate(
        parse_expr("(-1 - (x + z)*w + 2*alpha1 + 2*alpha2) - (-(x + z)*w - alpha3)")
    )
    five = ParameterPoint.symbolic(0).eliminate(
        parse_expr("(-(q1 + q2)*p2 + 2*alpha1 + 2*alpha2) - (-(q1 + q2)*p2 - alpha3)")
    )
    return Residual(("relation 1 form", "relation 0 form"), (two, five))


def relation_defect(M: BirationalMap) -> RatFn:
    return ParameterPoint.symbolic(M.relation).relation_defect(M.param_images)


__all__ = [
    "BirationalMap",
    "MAP_IDS",
    "RelationViolation",
    "Residual",
    "UnknownMapError",
    "build_map",
    "compose",
    "compose_word",
    "conjugacy_residual",
    "group_relation_check",
    "invariance_residual",
    "is_symplectic",
    "maps_equal",
    "relation_defect",
    "s3_consistency",
]
