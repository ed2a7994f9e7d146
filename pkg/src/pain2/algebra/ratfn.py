"""Normalized rational functions and the calculus on them."""

from __future__ import annotations

from fractions import Fraction

from gmpy2 import mpq

from .gcd import gcd
from .poly import FIELD, SHIFTS, UNITS, MPoly, to_q
from .registry import REGISTRY


class AlgebraError(Exception):
    pass


class RatFnZeroDivision(AlgebraError, ZeroDivisionError):
    pass


class SubstitutionError(AlgebraError):
    def __init__(self, msg, bindings=()):
        super().__init__(msg)
        self.bindings = tuple(bindings)


class NonTriangularError(AlgebraError):
    pass


_ONE = MPoly.const(1)
_ZERO = MPoly.const(0)


def _reduce_by_factors(num: MPoly, factors):
    """Cancel ``num / prod(factors)`` factor by factor.

    Returns the reduced numerator and the list of reduced factors.  Exact
    because each reduced factor is coprime to the reduced numerator.
    """
    out = []
    for f in factors:
        if f.is_constant():
            out.append(f)
            continue
        g = gcd(num, f)
        if not g.is_constant():
            num = num.divexact(g)
            f = f.divexact(g)
        out.append(f)
    return num, out


def _product(polys) -> MPoly:
    out = _ONE
    for p in sorted(polys, key=len):
        if not p.is_one():
            out = out * p
    return out


class RatFn:
    """Quotient ``num/den`` of polynomials, kept in lowest terms.

    The denominator has leading coefficient 1 in the grlex order, so equal
    rational functions have identical representations.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den=None, *, normalized=False):
        if not isinstance(num, MPoly):
            num = MPoly.const(num)
        if den is None:
            den = _ONE
            normalized = True
        elif not isinstance(den, MPoly):
            den = MPoly.const(den)
        if not den.terms:
            raise RatFnZeroDivision("rational function with zero denominator")
        if not normalized:
            num, den = _normalize(num, den)
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def _make(cls, num: MPoly, den: MPoly) -> "RatFn":
        r = object.__new__(cls)
        r.num = num
        r.den = den
        r._hash = None
        return r

    @classmethod
    def from_factors(cls, num: MPoly, factors) -> "RatFn":
        """Build ``num / prod(factors)`` with factor-wise cancellation."""
        factors = list(factors)
        if any(not f.terms for f in factors):
            raise RatFnZeroDivision("rational function with zero denominator")
        if not num.terms:
            return cls._make(_ZERO, _ONE)
        num, factors = _reduce_by_factors(num, factors)
        return cls._make(*_monic(num, _product(factors)))

    @classmethod
    def var(cls, name) -> "RatFn":
        return cls._make(MPoly.var(name), _ONE)

    @classmethod
    def const(cls, c) -> "RatFn":
        return cls._make(MPoly.const(c), _ONE)

    # ----- inspection ---------------------------------------------------

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_one()

    def is_zero(self) -> bool:
        return not self.num.terms

    def __bool__(self):
        return bool(self.num.terms)

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_one()

    def constant_value(self) -> mpq:
        if not self.is_constant():
            raise ValueError("not a constant")
        return self.num.constant_value()

    def variables(self) -> list:
        names = set(self.num.variables()) | set(self.den.variables())
        return [n for n in REGISTRY.names if n in names]

    def as_poly(self) -> MPoly:
        if not self.den.is_one():
            raise ValueError("rational function is not a polynomial")
        return self.num

    # ----- arithmetic ---------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, RatFn):
            return self.num == other.num and self.den == other.den
        if isinstance(other, MPoly):
            return self.den.is_one() and self.num == other
        if isinstance(other, (int, Fraction)) or type(other) is mpq:
            return self.den.is_one() and self.num == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __neg__(self):
        return RatFn._make(-self.num, self.den)

    def __add__(self, other):
        other = as_ratfn(other)
        a, b = self.num, self.den
        c, d = other.num, other.den
        if not a.terms:
            return other
        if not c.terms:
            return self
        if b.is_one() and d.is_one():
            return RatFn._make(a + c, _ONE)
        if b == d:
            n = a + c
            if not n.terms:
                return RatFn._make(_ZERO, _ONE)
            g = gcd(n, b)
            if g.is_constant():
                return RatFn._make(n, b)
            return RatFn._make(*_monic(n.divexact(g), b.divexact(g)))
        if b.is_one():
            return RatFn._make(a * d + c, d)
        if d.is_one():
            return RatFn._make(a + c * b, b)
        g = gcd(b, d)
        if g.is_constant():
            return RatFn._make(*_monic(a * d + c * b, b * d))
        b1 = b.divexact(g)
        d1 = d.divexact(g)
        n = a * d1 + c * b1
        if not n.terms:
            return RatFn._make(_ZERO, _ONE)
        g2 = gcd(n, g)
        if not g2.is_constant():
            n = n.divexact(g2)
            g = g.divexact(g2)
        return RatFn._make(*_monic(n, b1 * d1 * g))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-as_ratfn(other))

    def __rsub__(self, other):
        return as_ratfn(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, RatFn):
            if isinstance(other, MPoly):
                other = RatFn._make(other, _ONE)
            else:
                q = to_q(other)
                if not q:
                    return RatFn._make(_ZERO, _ONE)
                return RatFn._make(self.num.scale(q), self.den)
        a, b = self.num, self.den
        c, d = other.num, other.den
        if not a.terms or not c.terms:
            return RatFn._make(_ZERO, _ONE)
        if b.is_one() and d.is_one():
            return RatFn._make(a * c, _ONE)
        g1 = gcd(a, d)
        g2 = gcd(c, b)
        if not g1.is_constant():
            a = a.divexact(g1)
            d = d.divexact(g1)
        if not g2.is_constant():
            c = c.divexact(g2)
            b = b.divexact(g2)
        return RatFn._make(*_monic(a * c, b * d))

    __rmul__ = __mul__

    def inverse(self) -> "RatFn":
        if not self.num.terms:
            raise RatFnZeroDivision("division by the zero rational function")
        return RatFn._make(*_monic(self.den, self.num))

    def __truediv__(self, other):
        other = as_ratfn(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return as_ratfn(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise ValueError("exponent must be an integer")
        if n < 0:
            return self.inverse() ** (-n)
        return RatFn._make(self.num ** n, self.den ** n)

    # ----- calculus -----------------------------------------------------

    def diff(self, var) -> "RatFn":
        if isinstance(var, str):
            REGISTRY.index(var)
        dn = self.num.diff(var)
        if self.den.is_one():
            return RatFn._make(dn, _ONE)
        dd = self.den.diff(var)
        if not dd.terms:
            return RatFn.from_factors(dn, [self.den])
        # d/dv (n/D) = (n' D - n D') / D^2 ; cancel against D twice
        g = gcd(self.den, dd)
        if g.is_constant():
            num = dn * self.den - self.num * dd
            return RatFn.from_factors(num, [self.den, self.den])
        d1 = self.den.divexact(g)
        num = dn * d1 - self.num * dd.divexact(g)
        return RatFn.from_factors(num, [self.den, d1])

    def subs(self, bindings) -> "RatFn":
        return substitute(self, bindings)

    def evaluate(self, values: dict):
        d = self.den.evaluate(values)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at the evaluation point")
        return self.num.evaluate(values) / d

    def __repr__(self):
        from ..io.expr import print_expr

        return f"RatFn({print_expr(self)})"

    def __str__(self):
        from ..io.expr import print_expr

        return print_expr(self)


def _monic(num: MPoly, den: MPoly):
    lc = den.leading_coeff()
    if lc != 1:
        inv = 1 / lc
        return num.scale(inv), den.scale(inv)
    return num, den


def _normalize(num: MPoly, den: MPoly):
    if not num.terms:
        return _ZERO, _ONE
    if den.is_constant():
        return num.scale(1 / den.constant_value()), _ONE
    g = gcd(num, den)
    if not g.is_constant():
        num = num.divexact(g)
        den = den.divexact(g)
    return _monic(num, den)


def as_ratfn(x) -> RatFn:
    if isinstance(x, RatFn):
        return x
    if isinstance(x, MPoly):
        return RatFn._make(x, _ONE)
    if isinstance(x, str):
        return RatFn.var(x)
    return RatFn.const(x)


# ----- module-level operations --------------------------------------------


def arith(op: str, A, B) -> RatFn:
    """Exact ``A op B`` for op in add, sub, mul, div."""
    A, B = as_ratfn(A), as_ratfn(B)
    if op == "add":
        return A + B
    if op == "sub":
        return A - B
    if op == "mul":
        return A * B
    if op == "div":
        return A / B
    raise ValueError(f"unknown operation {op!r}")


def differentiate(F, v: str) -> RatFn:
    REGISTRY.index(v)
    return as_ratfn(F).diff(v)


def coprime_base(polys):
    """Pairwise coprime, non-constant factors generating the given polynomials."""
    base = []
    work = [p.monic() for p in polys if not p.is_constant()]
    while work:
        p = work.pop()
        if p.is_constant():
            continue
        for j, b in enumerate(base):
            g = gcd(p, b)
            if g.is_constant():
                continue
            g = g.monic()
            del base[j]
            for q in (b.divexact(g), p.divexact(g), g):
                if not q.is_constant():
                    work.append(q.monic())
            break
        else:
            if p not in base:
                base.append(p)
    return base


def _exponents_over(p: MPoly, base):
    """Exponent vector of ``p`` over a coprime base (``p`` up to a constant)."""
    exps = []
    for f in base:
        e = 0
        while True:
            q = p.try_divide(f)
            if q is None:
                break
            p = q
            e += 1
        exps.append(e)
    if not p.is_constant():
        raise AlgebraError("polynomial does not factor over the base")
    return exps, p.constant_value()


class _Bindings:
    """Bound values with denominators factored over a shared coprime base."""

    def __init__(self, bound: dict):
        self.bound = bound
        self.base = coprime_base([v.den for v in bound.values()])
        self.den_exps = {}
        self.nums = {}
        for i, v in bound.items():
            exps, c = _exponents_over(v.den, self.base)
            self.den_exps[i] = exps
            # fold the constant of the factored denominator into the numerator
            self.nums[i] = v.num.scale(1 / c)
        self._pow = {}

    def power(self, kind, i, e):
        key = (kind, i, e)
        p = self._pow.get(key)
        if p is None:
            base = self.nums[i] if kind == "n" else self.base[i]
            p = base ** e
            self._pow[key] = p
        return p

    def evaluate(self, P: MPoly):
        """``P`` at the bindings as ``(numerator, exps)`` meaning num / prod base^exps."""
        idx = [i for i in P.variable_indices() if i in self.bound]
        nb = len(self.base)
        if not idx:
            return P, [0] * nb
        groups: dict = {}
        for k, c in P.terms.items():
            pat = tuple((k >> SHIFTS[i]) & FIELD for i in idx)
            rest = k - sum(e * UNITS[i] for e, i in zip(pat, idx))
            d = groups.get(pat)
            if d is None:
                groups[pat] = {rest: c}
            else:
                d[rest] = c
        needs = {}
        top = [0] * nb
        for pat in groups:
            need = [0] * nb
            for e, i in zip(pat, idx):
                if e:
                    for j, de in enumerate(self.den_exps[i]):
                        need[j] += e * de
            needs[pat] = need
            top = [max(a, b) for a, b in zip(top, need)]
        total = MPoly()
        for pat, rest in groups.items():
            term = MPoly._raw(rest)
            for e, i in zip(pat, idx):
                if e:
                    term = term * self.power("n", i, e)
            for j, (t, n) in enumerate(zip(top, needs[pat])):
                if t > n:
                    term = term * self.power("b", j, t - n)
            total = total + term
        return total, top


def substitute(F, bindings) -> RatFn:
    """Simultaneous substitution ``{symbol: expression}`` into ``F``."""
    F = as_ratfn(F)
    bound = {}
    for name, val in bindings.items():
        i = REGISTRY.index(name)
        val = as_ratfn(val)
        if val.num == MPoly.var(i) and val.den.is_one():
            continue
        bound[i] = val
    used = set(F.num.variable_indices()) | set(F.den.variable_indices())
    bound = {i: v for i, v in bound.items() if i in used}
    if not bound:
        return F
    ctx = _Bindings(bound)
    nn, en = ctx.evaluate(F.num)
    if F.den.is_one():
        dn, ed = _ONE, [0] * len(ctx.base)
    else:
        dn, ed = ctx.evaluate(F.den)
    if not dn.terms:
        names = [REGISTRY.names[i] for i in sorted(set(F.den.variable_indices()) & set(bound))]
        raise SubstitutionError(
            "substitution makes the denominator identically zero "
            f"(bindings for {', '.join(names)})",
            names,
        )
    den_factors = [dn]
    for j, f in enumerate(ctx.base):
        diff = ed[j] - en[j]
        if diff > 0:
            nn = nn * ctx.power("b", j, diff)
        elif diff < 0:
            den_factors.extend([f] * (-diff))
    return RatFn.from_factors(nn, den_factors)


def solve_for(P, candidates=None):
    """Solve ``P = 0`` for a variable occurring linearly with constant coefficient.

    Returns ``(name, expression)`` or ``None``.  Candidates are tried in order
    (default: registry order).
    """
    P = as_ratfn(P)
    num = P.num
    names = candidates if candidates is not None else REGISTRY.names
    for name in names:
        i = REGISTRY.index(name)
        if num.degree(i) != 1:
            continue
        parts = num.split(i)
        lead = parts[1]
        if not lead.is_constant():
            continue
        rest = parts.get(0, MPoly())
        return name, RatFn(-rest.scale(1 / lead.constant_value()))
    return None


def vanishes_on_variety(F, constraints) -> bool:
    """True iff ``F`` is identically zero after imposing ``v = g`` for each constraint.

    Constraints must be triangular: the i-th expression may only involve
    symbols solved by earlier constraints, never its own or a later one.
    """
    constraints = [(v, as_ratfn(g)) for v, g in constraints]
    solved = [v for v, _ in constraints]
    for i, (v, g) in enumerate(constraints):
        REGISTRY.index(v)
        bad = set(g.variables()) & set(solved[i:])
        if bad:
            raise NonTriangularError(
                f"constraint {v} = {g} involves {', '.join(sorted(bad))} solved at or after it"
            )
    if len(set(solved)) != len(solved):
        raise NonTriangularError("a symbol is constrained twice")
    F = as_ratfn(F)
    for v, g in reversed(constraints):
        F = substitute(F, {v: g})
    return F.is_zero()
