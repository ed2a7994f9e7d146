"""The commuting two-time Hamiltonian structure.

Two polynomial Hamiltonians ``K1`` (time ``t``) and ``K2`` (time ``s``) on
``(q1, p1, q2, p2)`` whose flows commute on the hyperplane
``2*alpha1 + 2*alpha2 + alpha3 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

from .algebra import RatFn, as_ratfn, substitute
from .algebra.registry import PHASE, PHASE_QP
from .holomorphy import R_CHARTS, build_chart, chart_expression, polynomiality_check
from .systems import (
    QP_PAIRS,
    HamSystem,
    ParameterPoint,
    build_system,
    hamiltonian_field_of,
    lie_bracket,
    poisson_bracket,
)


@dataclass(frozen=True)
class TwoTimeSystem:
    """``K1`` and ``K2`` with raw parameters; ``params`` is imposed on use."""

    K1: RatFn
    K2: RatFn
    params: ParameterPoint = ParameterPoint(0)
    pairs: tuple = QP_PAIRS
    coords: tuple = PHASE_QP
    times: tuple = ("t", "s")

    @cached_property
    def K3(self) -> RatFn:
        return (4 * self.K1 ** 2 - 13 * self.K2) / 4

    def hamiltonians(self, eliminate: bool = True) -> dict:
        out = {"K1": self.K1, "K2": self.K2, "K3": self.K3}
        if eliminate:
            out = {k: self.params.eliminate(v) for k, v in out.items()}
        return out

    def flow(self, which: str, eliminate: bool = True):
        return hamiltonian_field_of(self.hamiltonians(eliminate)[which], self.coords, self.pairs)

    def with_K2(self, K2) -> "TwoTimeSystem":
        return replace(self, K2=as_ratfn(K2))

    def unconstrained(self) -> "TwoTimeSystem":
        return replace(self, params=ParameterPoint(None))


def build_two_time() -> TwoTimeSystem:
    return TwoTimeSystem(build_system("K1").template, build_system("K2").template)


def compatibility_residual(T: TwoTimeSystem):
    """Lie bracket of the ``t``-flow and the ``s``-flow (zero iff they commute)."""
    return lie_bracket(T.flow("K1"), T.flow("K2"))


def involution_residual(T: TwoTimeSystem, a: str = "K1", b: str = "K2", eliminate: bool = True) -> RatFn:
    """``{a, b}`` in the bracket convention of :func:`poisson_bracket`."""
    H = T.hamiltonians(eliminate)
    return poisson_bracket(H[a], H[b], T.pairs)


def first_integral_matrix(T: TwoTimeSystem) -> list:
    """Entry ``(i, j)``: derivative of ``K_i`` along the flow of ``K_j``.

    Neither Hamiltonian depends explicitly on ``t`` or ``s``, so each entry is
    the directional derivative along the Hamiltonian field.
    """
    H = T.hamiltonians()
    names = ("K1", "K2")
    out = []
    for i in names:
        row = []
        for j in names:
            V = T.flow(j)
            d = H[i].diff(T.times[names.index(j)])
            for u, f in zip(V.coords, V.components):
                d = d + f * H[i].diff(u)
            row.append(d)
        out.append(row)
    return out


def autonomy_residual(T: TwoTimeSystem, S_main: HamSystem, scale=-RatFn.const(1) / 2, at_time=0) -> RatFn:
    """``K1 - scale * H_main(t = at_time)`` after renaming ``(x, y, z, w) -> (q1, p1, q2, p2)``.

    With the default ``scale = -1/2`` this is ``K1 + H_main|_{t=0} / 2``.
    Passing ``at_time=None`` leaves ``t`` symbolic.
    """
    rename = {a: RatFn.var(b) for a, b in zip(PHASE, PHASE_QP)}
    if at_time is not None:
        rename[S_main.time] = as_ratfn(at_time)
    H = substitute(S_main.hamiltonian, rename)
    K1 = T.hamiltonians()["K1"]
    return S_main.params.eliminate(T.params.eliminate(K1 - as_ratfn(scale) * H))


def phase_degree(F, coords=PHASE_QP) -> int:
    return as_ratfn(F).as_poly().degree_in(coords)


def r_chart_polynomiality(T: TwoTimeSystem) -> dict:
    """``(chart, K)`` -> polynomiality report of ``K`` expressed in chart ``R1..R3``."""
    H = T.hamiltonians()
    out = {}
    for c in R_CHARTS:
        C = build_chart(c)
        for name, K in H.items():
            out[(c, name)] = polynomiality_check({name: chart_expression(K, C, T.params)})
    return out
