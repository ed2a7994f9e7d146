"""Sparse exact linear algebra over Q (incremental Gauss-Jordan)."""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq

from .poly import to_q


class InconsistentSystem(ArithmeticError):
    pass


@dataclass
class AffineSolution:
    """Solution set ``particular + span(kernel)`` of a linear system."""

    ncols: int
    particular: list
    kernel: list = field(default_factory=list)
    pivots: list = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return len(self.kernel)

    @property
    def rank(self) -> int:
        return len(self.pivots)


class SparseSolver:
    """Accumulates equations ``sum coeffs[j] * u_j = rhs`` in reduced row echelon form."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.rows: dict = {}  # pivot column -> (row dict, rhs)
        self.n_equations = 0

    def add(self, coeffs: dict, rhs=0):
        self.n_equations += 1
        eq = {j: to_q(c) for j, c in coeffs.items() if c}
        rhs = to_q(rhs)
        for c in [c for c in eq if c in self.rows]:
            f = eq.get(c)
            if not f:
                continue
            row, r = self.rows[c]
            for j, v in row.items():
                nv = eq.get(j, 0) - f * v
                if nv:
                    eq[j] = nv
                else:
                    eq.pop(j, None)
            rhs -= f * r
        if not eq:
            if rhs:
                raise InconsistentSystem("linear system is inconsistent")
            return
        p = min(eq)
        inv = 1 / eq[p]
        eq = {j: v * inv for j, v in eq.items()}
        rhs *= inv
        for c, (row, r) in list(self.rows.items()):
            f = row.get(p)
            if f:
                for j, v in eq.items():
                    nv = row.get(j, 0) - f * v
                    if nv:
                        row[j] = nv
                    else:
                        row.pop(j, None)
                self.rows[c] = (row, r - f * rhs)
        self.rows[p] = (eq, rhs)

    def solution(self) -> AffineSolution:
        pivots = sorted(self.rows)
        particular = [mpq(0)] * self.ncols
        for p in pivots:
            particular[p] = self.rows[p][1]
        kernel = []
        pivot_set = set(pivots)
        for f in range(self.ncols):
            if f in pivot_set:
                continue
            v = [mpq(0)] * self.ncols
            v[f] = mpq(1)
            for p in pivots:
                c = self.rows[p][0].get(f)
                if c:
                    v[p] = -c
            kernel.append(v)
        return AffineSolution(self.ncols, particular, kernel, pivots)


def solve_affine(equations, ncols: int) -> AffineSolution:
    """Solve a list of ``(coeffs, rhs)`` equations in ``ncols`` unknowns."""
    s = SparseSolver(ncols)
    for coeffs, rhs in equations:
        s.add(coeffs, rhs)
    return s.solution()
