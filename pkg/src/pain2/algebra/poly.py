"""Sparse multivariate polynomials over the rationals.

A monomial is stored as a single packed integer: one 16-bit field per
registered variable plus a leading field holding the total degree.  With
variable 0 in the most significant variable field, plain integer comparison
of packed keys is the graded-lexicographic order, and multiplying monomials is
integer addition.
"""

from __future__ import annotations

import heapq
from fractions import Fraction

from gmpy2 import mpq

from .registry import REGISTRY

NVARS = len(REGISTRY)
WIDTH = 16
FIELD = (1 << WIDTH) - 1
DSHIFT = NVARS * WIDTH
MAX_DEGREE = 1 << (WIDTH - 1)
SHIFTS = tuple((NVARS - 1 - i) * WIDTH for i in range(NVARS))
UNITS = tuple((1 << s) | (1 << DSHIFT) for s in SHIFTS)
# top bit of every field; used for the borrow-free divisibility test
_HIGH = sum(1 << (s + WIDTH - 1) for s in SHIFTS + (DSHIFT,))
_ANYVAR = (1 << DSHIFT) - 1

ZERO_Q = mpq(0)
ONE_Q = mpq(1)


def to_q(c) -> mpq:
    if isinstance(c, Fraction):
        return mpq(c.numerator, c.denominator)
    return mpq(c)


def pack(exps) -> int:
    if len(exps) != NVARS:
        raise ValueError(f"exponent vector has length {len(exps)}, registry has {NVARS}")
    key = 0
    total = 0
    for e, s in zip(exps, SHIFTS):
        if e < 0:
            raise ValueError("negative exponent")
        key |= e << s
        total += e
    if total >= MAX_DEGREE:
        raise OverflowError("monomial degree too large")
    return key | (total << DSHIFT)


def unpack(key: int) -> tuple:
    return tuple((key >> s) & FIELD for s in SHIFTS)


def key_degree(key: int) -> int:
    return key >> DSHIFT


def key_exp(key: int, i: int) -> int:
    return (key >> SHIFTS[i]) & FIELD


def key_divides(d: int, k: int) -> bool:
    """True iff monomial ``d`` divides monomial ``k``."""
    return ((k | _HIGH) - d) & _HIGH == _HIGH


class MPoly:
    """Polynomial in the registered variables with exact rational coefficients.

    Instances are treated as immutable.  Zero coefficients are never stored.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms=None):
        if terms is None:
            self.terms = {}
        else:
            self.terms = {k: q for k, c in terms.items() if (q := to_q(c))}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "MPoly":
        p = object.__new__(cls)
        p.terms = terms
        p._hash = None
        return p

    # ----- constructors -------------------------------------------------

    @classmethod
    def const(cls, c) -> "MPoly":
        q = to_q(c)
        return cls._raw({0: q} if q else {})

    @classmethod
    def var(cls, name) -> "MPoly":
        i = name if isinstance(name, int) else REGISTRY.index(name)
        return cls._raw({UNITS[i]: ONE_Q})

    @classmethod
    def monomial(cls, exps, coeff=1) -> "MPoly":
        q = to_q(coeff)
        return cls._raw({pack(exps): q} if q else {})

    @classmethod
    def from_exponents(cls, items) -> "MPoly":
        out: dict = {}
        for exps, c in (items.items() if isinstance(items, dict) else items):
            k = pack(exps)
            v = out.get(k, ZERO_Q) + to_q(c)
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return cls._raw(out)

    # ----- inspection ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        t = self.terms
        return not t or (len(t) == 1 and 0 in t)

    def is_one(self) -> bool:
        t = self.terms
        return len(t) == 1 and t.get(0) == 1

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def constant_value(self) -> mpq:
        return self.terms.get(0, ZERO_Q)

    def __len__(self):
        return len(self.terms)

    def leading_key(self) -> int:
        return max(self.terms)

    def leading_coeff(self) -> mpq:
        return self.terms[max(self.terms)] if self.terms else ZERO_Q

    def total_degree(self) -> int:
        return max(self.terms) >> DSHIFT if self.terms else -1

    def degree(self, var) -> int:
        i = var if isinstance(var, int) else REGISTRY.index(var)
        if not self.terms:
            return -1
        s = SHIFTS[i]
        return max((k >> s) & FIELD for k in self.terms)

    def degree_in(self, variables) -> int:
        """Total degree counting only the given variables."""
        idx = [v if isinstance(v, int) else REGISTRY.index(v) for v in variables]
        if not self.terms:
            return -1
        return max(sum((k >> SHIFTS[i]) & FIELD for i in idx) for k in self.terms)

    def variable_indices(self) -> list:
        mask = 0
        for k in self.terms:
            mask |= k
        return [i for i, s in enumerate(SHIFTS) if (mask >> s) & FIELD]

    def variables(self) -> list:
        return [REGISTRY.names[i] for i in self.variable_indices()]

    def exponents(self):
        """Yield ``(exponent_tuple, coefficient)`` in descending grlex order."""
        for k in sorted(self.terms, reverse=True):
            yield unpack(k), self.terms[k]

    def coeff(self, exps) -> mpq:
        if isinstance(exps, dict):
            v = [0] * NVARS
            for n, e in exps.items():
                v[REGISTRY.index(n)] = e
            exps = v
        return self.terms.get(pack(exps), ZERO_Q)

    # ----- ring operations ----------------------------------------------

    def __eq__(self, other):
        if isinstance(other, MPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)) or type(other) is type(ONE_Q):
            return self.terms == ({0: to_q(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __neg__(self):
        return MPoly._raw({k: -c for k, c in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(other)
        a, b = self.terms, other.terms
        if len(a) < len(b):
            a, b = b, a
        out = dict(a)
        for k, c in b.items():
            v = out.get(k)
            if v is None:
                out[k] = c
            else:
                v = v + c
                if v:
                    out[k] = v
                else:
                    del out[k]
        return MPoly._raw(out)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k)
            if v is None:
                out[k] = -c
            else:
                v = v - c
                if v:
                    out[k] = v
                else:
                    del out[k]
        return MPoly._raw(out)

    def __rsub__(self, other):
        return MPoly.const(other) - self

    def scale(self, c) -> "MPoly":
        q = to_q(c)
        if not q:
            return MPoly._raw({})
        if q == 1:
            return self
        return MPoly._raw({k: v * q for k, v in self.terms.items()})

    def mul_term(self, key: int, c) -> "MPoly":
        if self.terms and (max(self.terms) >> DSHIFT) + (key >> DSHIFT) >= MAX_DEGREE:
            raise OverflowError("polynomial degree too large")
        return MPoly._raw({k + key: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            return self.scale(other)
        a, b = self.terms, other.terms
        if not a or not b:
            return MPoly._raw({})
        if (max(a) >> DSHIFT) + (max(b) >> DSHIFT) >= MAX_DEGREE:
            raise OverflowError("polynomial degree too large")
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            (kb, cb), = b.items()
            return MPoly._raw({k + kb: c * cb for k, c in a.items()})
        out: dict = {}
        get = out.get
        for kb, cb in b.items():
            for ka, ca in a.items():
                k = ka + kb
                v = get(k)
                out[k] = ca * cb if v is None else v + ca * cb
        return MPoly._raw({k: v for k, v in out.items() if v})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = MPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # ----- calculus -----------------------------------------------------

    def diff(self, var) -> "MPoly":
        i = var if isinstance(var, int) else REGISTRY.index(var)
        s = SHIFTS[i]
        unit = UNITS[i]
        out = {}
        for k, c in self.terms.items():
            e = (k >> s) & FIELD
            if e:
                out[k - unit] = c * e
        return MPoly._raw(out)

    def integrate(self, var) -> "MPoly":
        """Antiderivative in ``var`` with zero integration constant."""
        i = var if isinstance(var, int) else REGISTRY.index(var)
        s = SHIFTS[i]
        unit = UNITS[i]
        return MPoly._raw({k + unit: c / (((k >> s) & FIELD) + 1) for k, c in self.terms.items()})

    # ----- structure ----------------------------------------------------

    def split(self, i: int) -> dict:
        """Recursive view in variable ``i``: ``{degree: coefficient poly}``."""
        s = SHIFTS[i]
        unit = UNITS[i]
        out: dict = {}
        for k, c in self.terms.items():
            e = (k >> s) & FIELD
            rest = k - e * unit
            d = out.get(e)
            if d is None:
                out[e] = {rest: c}
            else:
                d[rest] = c
        return {e: MPoly._raw(d) for e, d in out.items()}

    @staticmethod
    def join(i: int, parts: dict) -> "MPoly":
        unit = UNITS[i]
        out = {}
        for e, p in parts.items():
            off = e * unit
            for k, c in p.terms.items():
                out[k + off] = c
        return MPoly._raw(out)

    def min_monomial(self) -> int:
        """Packed key of the gcd of all monomials (0 for the zero polynomial)."""
        if not self.terms:
            return 0
        exps = None
        for k in self.terms:
            if exps is None:
                exps = [(k >> s) & FIELD for s in SHIFTS]
            else:
                for j, s in enumerate(SHIFTS):
                    e = exps[j]
                    if e:
                        f = (k >> s) & FIELD
                        if f < e:
                            exps[j] = f
            if not any(exps):
                return 0
        return pack(exps)

    def div_monomial(self, key: int) -> "MPoly":
        return MPoly._raw({k - key: c for k, c in self.terms.items()})

    def monic(self) -> "MPoly":
        if not self.terms:
            return self
        return self.scale(1 / self.leading_coeff())

    def divmod(self, other: "MPoly"):
        """Multivariate division by a single divisor in grlex order.

        Returns ``(q, r)`` with ``self = q*other + r`` and no term of ``r``
        divisible by the leading monomial of ``other``.
        """
        if not other.terms:
            raise ZeroDivisionError("polynomial division by zero")
        lk = max(other.terms)
        lc = other.terms[lk]
        if len(other.terms) == 1:
            q, r = {}, {}
            for k, c in self.terms.items():
                if key_divides(lk, k):
                    q[k - lk] = c / lc
                else:
                    r[k] = c
            return MPoly._raw(q), MPoly._raw(r)
        rest = [(k, c) for k, c in other.terms.items() if k != lk]
        work = dict(self.terms)
        heap = [-k for k in work]
        heapq.heapify(heap)
        q, r = {}, {}
        while heap:
            k = -heapq.heappop(heap)
            c = work.pop(k, None)
            if c is None:
                continue
            while heap and heap[0] == -k:
                heapq.heappop(heap)
            if key_divides(lk, k):
                qk = k - lk
                qc = c / lc
                q[qk] = qc
                for kb, cb in rest:
                    kk = qk + kb
                    v = work.get(kk)
                    if v is None:
                        work[kk] = -qc * cb
                        heapq.heappush(heap, -kk)
                    else:
                        v = v - qc * cb
                        if v:
                            work[kk] = v
                        else:
                            del work[kk]
            else:
                r[k] = c
        return MPoly._raw(q), MPoly._raw(r)

    def divexact(self, other: "MPoly") -> "MPoly":
        q, r = self.divmod(other)
        if r.terms:
            raise ArithmeticError("inexact polynomial division")
        return q

    def try_divide(self, other: "MPoly"):
        """Quotient if ``other`` divides ``self`` exactly, else ``None``."""
        if not other.terms:
            raise ZeroDivisionError("polynomial division by zero")
        if not self.terms:
            return self
        if len(other.terms) == 1:
            (lk, lc), = other.terms.items()
            out = {}
            for k, c in self.terms.items():
                if not key_divides(lk, k):
                    return None
                out[k - lk] = c / lc
            return MPoly._raw(out)
        if (max(self.terms) >> DSHIFT) < (max(other.terms) >> DSHIFT):
            return None
        q, r = self.divmod(other)
        return None if r.terms else q

    # ----- evaluation ---------------------------------------------------

    def evaluate(self, values: dict):
        """Evaluate with ``values`` mapping names (or indices) to numbers.

        Variables without a value must not occur.
        """
        vals = {}
        for n, v in values.items():
            vals[n if isinstance(n, int) else REGISTRY.index(n)] = v
        used = self.variable_indices()
        missing = [REGISTRY.names[i] for i in used if i not in vals]
        if missing:
            raise KeyError(f"no value for {', '.join(missing)}")
        total = 0
        for k, c in self.terms.items():
            term = c
            for i in used:
                e = (k >> SHIFTS[i]) & FIELD
                if e:
                    term = term * vals[i] ** e
            total = total + term
        return total

    def __repr__(self):
        from ..io.expr import format_poly

        return f"MPoly({format_poly(self)})"


def poly_const(c) -> MPoly:
    return MPoly.const(c)


def poly_var(name) -> MPoly:
    return MPoly.var(name)
