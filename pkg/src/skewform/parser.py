"""Recursive-descent parser for the expression grammar.

::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?          exponent must fold to an integer
    primary := NUMBER | FUNC '(' expr ')' | IDENT | '(' expr ')'

    NUMBER  := digits ['.' digits] [('e'|'E') ['+'|'-'] digits]
    IDENT   := [a-zA-Z_][a-zA-Z0-9_]*
    FUNC    := sin | cos | exp | log | tanh | sqrt

``^`` is right-associative and binds tighter than unary minus, so
``-x^2`` is ``-(x^2)`` and ``x^-1`` is ``x^(-1)``.  Decimal literals are
read as exact rationals.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ParseError
from .expr import FUNCTIONS, Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var, simplify

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        n = len(text)
        while True:
            while pos < n and text[pos].isspace():
                pos += 1
            if pos >= n:
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(self._offset(pos), "operand or operator", text)
            start = m.start(m.lastgroup)
            self.tokens.append((m.lastgroup, m.group(m.lastgroup), start))
            pos = m.end()
        self.end = n
        self.i = 0

    def _offset(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode("utf-8"))

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _pos(self):
        tok = self._peek()
        return tok[2] if tok else self.end

    def _fail(self, expected, pos=None):
        raise ParseError(self._offset(self._pos() if pos is None else pos), expected, self.text)

    def _accept(self, op):
        tok = self._peek()
        if tok and tok[0] == "op" and tok[1] == op:
            self.i += 1
            return True
        return False

    def parse(self) -> Expr:
        if not self.tokens:
            self._fail("operand")
        e = self.expr()
        if self._peek() is not None:
            self._fail("operator or end of input")
        return e

    def expr(self):
        terms = [self.term()]
        while True:
            if self._accept("+"):
                terms.append(self.term())
            elif self._accept("-"):
                terms.append(Neg(self.term()))
            else:
                break
        return terms[0] if len(terms) == 1 else Add(terms)

    def term(self):
        e = self.unary()
        while True:
            if self._accept("*"):
                rhs = self.unary()
                e = Mul(e.factors + (rhs,)) if isinstance(e, Mul) else Mul((e, rhs))
            elif self._accept("/"):
                e = Div(e, self.unary())
            else:
                return e

    def unary(self):
        if self._accept("-"):
            return Neg(self.unary())
        if self._accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self._accept("^"):
            at = self._pos()
            exponent = simplify(self.unary())
            if not (isinstance(exponent, Const) and exponent.value.denominator == 1):
                self._fail("integer exponent", at)
            return Pow(base, int(exponent.value))
        return base

    def primary(self):
        tok = self._peek()
        if tok is None:
            self._fail("operand")
        kind, text, pos = tok
        if kind == "num":
            self.i += 1
            return Const(Fraction(text))
        if kind == "id":
            self.i += 1
            if text in FUNCTIONS:
                if not self._accept("("):
                    self._fail(f"'(' after function {text}")
                arg = self.expr()
                if not self._accept(")"):
                    self._fail("')'")
                return Func(text, arg)
            nxt = self._peek()
            if nxt is not None and nxt[:2] == ("op", "("):
                self._fail(f"known function ({', '.join(FUNCTIONS)}), got {text!r}", pos)
            return Var(text)
        if self._accept("("):
            e = self.expr()
            if not self._accept(")"):
                self._fail("')'")
            return e
        self._fail("operand")


def parse_raw(text: str) -> Expr:
    """Parse without canonicalizing; the tree mirrors the input syntax."""
    return _Parser(text).parse()


def parse_expression(text: str) -> Expr:
    """Parse ``text`` and return its canonical form."""
    return simplify(parse_raw(text))
