"""Multivariate polynomial gcd over Q.

Recursive approach: strip monomial content, reduce to the content when one
operand lacks the main variable, otherwise split off contents and run the
subresultant PRS on the primitive parts.  Results are defined up to a
nonzero rational factor; callers normalize.
"""

from __future__ import annotations

import random

from gmpy2 import mpq

from .poly import MPoly, SHIFTS, FIELD, UNITS

_ONE = MPoly.const(1)
# fixed seed: evaluation points only decide which (always correct) path runs
_POINTS = random.Random(0x9A1D)


def _prem(a: dict, b: dict) -> dict:
    """Pseudo-remainder of recursive polys ``a`` by ``b`` (dicts degree -> coeff)."""
    db = max(b)
    lcb = b[db]
    r = dict(a)
    steps = max(r) - db + 1
    while r and max(r) >= db:
        dr = max(r)
        lr = r[dr]
        s = dr - db
        new = {}
        for e, c in r.items():
            if e == dr:
                continue
            new[e] = c * lcb
        for e, c in b.items():
            if e == db:
                continue
            k = e + s
            v = new.get(k)
            t = lr * c
            new[k] = -t if v is None else v - t
        r = {e: c for e, c in new.items() if c}
        steps -= 1
    if steps > 0 and r:
        f = lcb ** steps
        r = {e: c * f for e, c in r.items()}
    return r


def _rec_divexact(a: dict, d: MPoly) -> dict:
    return {e: c.divexact(d) for e, c in a.items()}


def content_in(parts: dict) -> MPoly:
    """gcd of the coefficients of a recursive polynomial."""
    g = None
    for c in sorted(parts.values(), key=len):
        g = c if g is None else gcd(g, c)
        if g.is_constant():
            return _ONE
    return g if g is not None else _ONE


def _univariate_gcd_degree(a: list, b: list) -> int:
    """Degree of gcd of two dense univariate polys over Q (coefficient lists, low first)."""
    while b:
        while a and len(a) >= len(b):
            f = a[-1] / b[-1]
            shift = len(a) - len(b)
            for k in range(len(b) - 1):
                a[k + shift] -= f * b[k]
            a.pop()
            while a and not a[-1]:
                a.pop()
        a, b = b, a
    return len(a) - 1


def _coprime_by_evaluation(ra: dict, rb: dict, attempts: int = 2) -> bool:
    """True when an evaluation image proves the primitive parts coprime.

    All variables except the main one are set to random integers.  If both
    leading coefficients survive, the image gcd has degree at least that of
    the true gcd in the main variable, so a constant image gcd is a proof.
    A False answer proves nothing.
    """
    used = sorted({i for parts in (ra, rb) for c in parts.values() for i in c.variable_indices()})
    for _ in range(attempts):
        point = {i: mpq(_POINTS.randint(-97, 97)) for i in used}
        ia = [mpq(0)] * (max(ra) + 1)
        ib = [mpq(0)] * (max(rb) + 1)
        for image, parts in ((ia, ra), (ib, rb)):
            for e, c in parts.items():
                image[e] = mpq(c.evaluate(point))
        if not ia[-1] or not ib[-1]:
            continue
        return _univariate_gcd_degree(ia, ib) == 0
    return False


def _subresultant(a: dict, b: dict) -> dict:
    """Subresultant PRS gcd (up to content) of recursive polys, deg a >= deg b."""
    g = _ONE
    h = _ONE
    while True:
        d = max(a) - max(b)
        r = _prem(a, b)
        if not r:
            return b
        if max(r) == 0:
            return {0: _ONE}
        div = g * h ** d
        a, b = b, (r if div.is_one() else _rec_divexact(r, div))
        g = a[max(a)]
        if d == 1:
            h = g
        elif d > 1:
            h = (g ** d).divexact(h ** (d - 1))


def _choose_var(common, A: MPoly, B: MPoly) -> int:
    best = None
    for i in common:
        s = SHIFTS[i]
        da = max((k >> s) & FIELD for k in A.terms)
        db = max((k >> s) & FIELD for k in B.terms)
        score = (min(da, db), max(da, db), i)
        if best is None or score < best:
            best = score
    return best[2]


def gcd(A: MPoly, B: MPoly) -> MPoly:
    """A greatest common divisor of ``A`` and ``B`` (any rational scaling)."""
    if not A.terms:
        return B
    if not B.terms:
        return A
    if A.is_constant() or B.is_constant():
        return _ONE
    if A.terms is B.terms or A == B:
        return A
    ma, mb = A.min_monomial(), B.min_monomial()
    mono = 0
    if ma or mb:
        # componentwise minimum of the two monomial contents
        for i, s in enumerate(SHIFTS):
            e = min((ma >> s) & FIELD, (mb >> s) & FIELD)
            if e:
                mono += e * UNITS[i]
        if ma:
            A = A.div_monomial(ma)
        if mb:
            B = B.div_monomial(mb)
    g = _gcd_nomono(A, B)
    return g.mul_term(mono, 1) if mono else g


def _gcd_nomono(A: MPoly, B: MPoly) -> MPoly:
    if A.is_constant() or B.is_constant():
        return _ONE
    if len(A) == 1 or len(B) == 1:
        # no monomial content is left, so a single term is a constant
        return _ONE
    va = set(A.variable_indices())
    vb = set(B.variable_indices())
    only_a = va - vb
    only_b = vb - va
    if only_a or only_b:
        # the gcd cannot involve a variable missing from one operand
        if only_a:
            src, other, i = A, B, min(only_a)
        else:
            src, other, i = B, A, min(only_b)
        g = other
        for c in sorted(src.split(i).values(), key=len):
            g = gcd(g, c)
            if g.is_constant():
                return _ONE
        return g
    i = _choose_var(va & vb, A, B)
    ra = A.split(i)
    rb = B.split(i)
    ca = content_in(ra)
    cb = content_in(rb)
    c = gcd(ca, cb)
    if not ca.is_one():
        ra = _rec_divexact(ra, ca)
    if not cb.is_one():
        rb = _rec_divexact(rb, cb)
    if max(ra) < max(rb):
        ra, rb = rb, ra
    if max(rb) == 0:
        return c
    # quick exit when the lower-degree operand divides the other
    pa, pb = MPoly.join(i, ra), MPoly.join(i, rb)
    if pa.try_divide(pb) is not None:
        return pb * c if not c.is_constant() else pb
    if _coprime_by_evaluation(ra, rb):
        return c
    rg = _subresultant(ra, rb)
    if max(rg) == 0:
        return c
    cg = content_in(rg)
    if not cg.is_one():
        rg = _rec_divexact(rg, cg)
    g = MPoly.join(i, rg)
    return g * c if not c.is_constant() else g


def lcm(A: MPoly, B: MPoly) -> MPoly:
    if not A.terms or not B.terms:
        return MPoly.const(0)
    return (A * B).divexact(gcd(A, B))
