"""Text <-> RatFn.

Grammar (no implicit multiplication)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-'|'+')* base ('^' uint)?
    base   := int | symbol | '(' expr ')'

Unary minus binds looser than ``^`` so ``-x^2`` is ``-(x^2)``.
"""

from __future__ import annotations

import re

from ..algebra.poly import MPoly
from ..algebra.ratfn import RatFn, RatFnZeroDivision
from ..algebra.registry import REGISTRY

_TOKEN = re.compile(r"(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\S)")


class ParseError(ValueError):
    def __init__(self, msg, offset):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


def _tokens(text: str):
    for m in _TOKEN.finditer(text):
        off = m.start()
        if m.group(1) is not None:
            yield ("int", m.group(1), off)
        elif m.group(2) is not None:
            yield ("sym", m.group(2), off)
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", off)
            yield ("op", ch, off)
    yield ("end", "", len(text))


class _Parser:
    # binding powers: +,- 10; *,/ 20; unary 25; ^ 30
    def __init__(self, text):
        self.toks = list(_tokens(text))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, off = self.next()
        if v != value or kind != "op":
            raise ParseError(f"expected {value!r}, found {v or 'end of input'!r}", off)

    def parse(self) -> RatFn:
        val = self.expr(0)
        kind, v, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {v!r}", off)
        return val

    def expr(self, rbp: int) -> RatFn:
        left = self.prefix()
        while True:
            kind, v, off = self.peek()
            if kind != "op":
                return left
            if v in "+-":
                lbp = 10
            elif v in "*/":
                lbp = 20
            elif v == "^":
                lbp = 30
            else:
                return left
            if lbp <= rbp:
                return left
            self.next()
            if v == "^":
                k, e, eoff = self.next()
                if k != "int":
                    raise ParseError("exponent must be an unsigned integer", eoff)
                left = left ** int(e)
                if self.peek()[1] == "^" and self.peek()[0] == "op":
                    raise ParseError("chained exponent", self.peek()[2])
                continue
            right = self.expr(lbp)
            if v == "+":
                left = left + right
            elif v == "-":
                left = left - right
            elif v == "*":
                left = left * right
            else:
                if right.is_zero():
                    raise ParseError("division by zero", off)
                left = left / right

    def prefix(self) -> RatFn:
        kind, v, off = self.next()
        if kind == "op" and v in "+-":
            operand = self.expr(25)
            return -operand if v == "-" else operand
        if kind == "int":
            return RatFn.const(int(v))
        if kind == "sym":
            if v not in REGISTRY:
                raise ParseError(f"unknown symbol {v!r}", off)
            return RatFn.var(v)
        if kind == "op" and v == "(":
            inner = self.expr(0)
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {v or 'end of input'!r}", off)


def parse_expr(text: str) -> RatFn:
    """Parse ``text`` into a normalized RatFn over the global registry."""
    try:
        return _Parser(text).parse()
    except RatFnZeroDivision as exc:  # pragma: no cover - guarded above
        raise ParseError(str(exc), 0) from exc


def _format_monomial(exps) -> str:
    parts = []
    for name, e in zip(REGISTRY.names, exps):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def format_poly(P: MPoly) -> str:
    if P.is_zero():
        return "0"
    out = []
    for exps, c in P.exponents():
        mono = _format_monomial(exps)
        neg = c < 0
        a = -c if neg else c
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


def _needs_parens(P: MPoly, as_denominator: bool) -> bool:
    if len(P) > 1:
        return True
    if not as_denominator:
        return False
    (exps, c), = P.exponents()
    return sum(1 for e in exps if e) > 1 or c != 1


def print_expr(F) -> str:
    """Canonical text for ``F``; ``parse_expr(print_expr(F)) == F``."""
    if isinstance(F, MPoly):
        return format_poly(F)
    num = format_poly(F.num)
    if F.den.is_one():
        return num
    if _needs_parens(F.num, False):
        num = f"({num})"
    den = format_poly(F.den)
    if _needs_parens(F.den, True):
        den = f"({den})"
    return f"{num}/{den}"
