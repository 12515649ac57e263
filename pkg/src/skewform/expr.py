"""Expression trees with exact rational constants.

Trees are immutable and hashable.  Operator overloads build *raw* trees;
:func:`simplify` maps any tree to its canonical form, a flattened sum of
monomials over atoms (variables, function applications and inverted sums)
with rational coefficients.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, UnboundVariable

FUNCTIONS = ("sin", "cos", "exp", "log", "tanh", "sqrt")

# printing precedence: + -, * /, unary -, ^, atoms
_P_ADD, _P_MUL, _P_NEG, _P_POW, _P_ATOM = 1, 2, 3, 4, 5


class Expr:
    __slots__ = ("_hash", "_text", "_free")

    def _key(self):
        raise NotImplementedError

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__, self._key()))
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        return hash(self) == hash(other) and self._key() == other._key()

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __setattr__(self, name, value):
        raise AttributeError("expressions are immutable")

    def __str__(self):
        try:
            return self._text
        except AttributeError:
            t = _fmt(self, 0)
            object.__setattr__(self, "_text", t)
            return t

    @property
    def precedence(self):
        return _P_ATOM

    @property
    def free_variables(self) -> frozenset:
        try:
            return self._free
        except AttributeError:
            fv = self._compute_free()
            object.__setattr__(self, "_free", fv)
            return fv

    def _compute_free(self):
        out = set()
        for c in self.children():
            out |= c.free_variables
        return frozenset(out)

    def children(self) -> tuple:
        return ()

    # raw-tree builders
    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Neg(as_expr(other))))

    def __rsub__(self, other):
        return Add((as_expr(other), Neg(self)))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __pow__(self, n):
        return Pow(self, n)

    def __neg__(self):
        return Neg(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"non-finite constant {value}")
            value = Fraction(repr(value))
        object.__setattr__(self, "value", Fraction(value))

    def _key(self):
        return self.value

    def _compute_free(self):
        return frozenset()

    @property
    def precedence(self):
        v = self.value
        if v.denominator != 1:
            return _P_MUL
        return _P_NEG if v < 0 else _P_ATOM

    def __repr__(self):
        return f"Const({str(self.value)!r})"


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if not isinstance(name, str) or not name:
            raise ValueError("variable name must be a nonempty string")
        object.__setattr__(self, "name", name)

    def _key(self):
        return self.name

    def _compute_free(self):
        return frozenset((self.name,))

    def __repr__(self):
        return f"Var({self.name!r})"


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        terms = tuple(terms)
        if len(terms) < 2:
            raise ValueError("Add needs at least two terms")
        object.__setattr__(self, "terms", terms)

    def _key(self):
        return self.terms

    def children(self):
        return self.terms

    @property
    def precedence(self):
        return _P_ADD

    def __repr__(self):
        return f"Add({', '.join(map(repr, self.terms))})"


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        factors = tuple(factors)
        if len(factors) < 2:
            raise ValueError("Mul needs at least two factors")
        object.__setattr__(self, "factors", factors)

    def _key(self):
        return self.factors

    def children(self):
        return self.factors

    @property
    def precedence(self):
        return _P_MUL

    def __repr__(self):
        return f"Mul({', '.join(map(repr, self.factors))})"


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        if isinstance(exp, Const) and exp.value.denominator == 1:
            exp = int(exp.value)
        if isinstance(exp, bool) or not isinstance(exp, int):
            raise TypeError("only integer exponents are supported")
        object.__setattr__(self, "base", as_expr(base))
        object.__setattr__(self, "exp", exp)

    def _key(self):
        return (self.base, self.exp)

    def children(self):
        return (self.base,)

    @property
    def precedence(self):
        return _P_POW

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exp})"


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", as_expr(arg))

    def _key(self):
        return self.arg

    def children(self):
        return (self.arg,)

    @property
    def precedence(self):
        return _P_NEG

    def __repr__(self):
        return f"Neg({self.arg!r})"


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        object.__setattr__(self, "num", as_expr(num))
        object.__setattr__(self, "den", as_expr(den))

    def _key(self):
        return (self.num, self.den)

    def children(self):
        return (self.num, self.den)

    @property
    def precedence(self):
        return _P_MUL

    def __repr__(self):
        return f"Div({self.num!r}, {self.den!r})"


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "arg", as_expr(arg))

    def _key(self):
        return (self.name, self.arg)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


ZERO = Const(0)
ONE = Const(1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction, float)) and not isinstance(value, bool):
        return Const(value)
    if isinstance(value, str):
        from .parser import parse_expression

        return parse_expression(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def sin(e):
    return Func("sin", as_expr(e))


def cos(e):
    return Func("cos", as_expr(e))


def exp(e):
    return Func("exp", as_expr(e))


def log(e):
    return Func("log", as_expr(e))


def tanh(e):
    return Func("tanh", as_expr(e))


def sqrt(e):
    return Func("sqrt", as_expr(e))


def symbols(names: str):
    return tuple(Var(n) for n in names.replace(",", " ").split())


# ---------------------------------------------------------------- printing

def _const_text(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _negated(e: Expr):
    """Return ``m`` with ``e == -m`` if ``e`` reads as a negative term, else None."""
    if isinstance(e, Neg):
        return e.arg
    if isinstance(e, Const) and e.value < 0:
        return Const(-e.value)
    if isinstance(e, Mul) and isinstance(e.factors[0], Const) and e.factors[0].value < 0:
        c = -e.factors[0].value
        rest = e.factors[1:]
        if c == 1:
            return rest[0] if len(rest) == 1 else Mul(rest)
        return Mul((Const(c),) + rest)
    return None


def _wrap(e: Expr, min_prec: int) -> str:
    s = _fmt(e, min_prec)
    return f"({s})" if e.precedence < min_prec else s


def _fmt(e: Expr, min_prec: int = 0) -> str:
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({_fmt(e.arg)})"
    if isinstance(e, Add):
        parts = [_wrap(e.terms[0], _P_ADD)]
        for t in e.terms[1:]:
            m = _negated(t)
            if m is not None:
                parts.append(" - " + _wrap(m, _P_MUL))
            else:
                parts.append(" + " + _wrap(t, _P_ADD))
        return "".join(parts)
    if isinstance(e, Mul):
        first, rest = e.factors[0], e.factors[1:]
        if isinstance(first, Const) and first.value == -1:
            head = "-" + _wrap(rest[0], _P_NEG)
            rest = rest[1:]
        else:
            head = _wrap(first, _P_MUL)
        return "*".join([head] + [_wrap(f, _P_NEG) for f in rest])
    if isinstance(e, Div):
        return f"{_wrap(e.num, _P_MUL)}/{_wrap(e.den, _P_NEG)}"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _P_NEG)
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _P_ATOM)}^{e.exp}"
    raise TypeError(f"not an expression: {e!r}")


def to_text(e: Expr) -> str:
    return str(e)


# ---------------------------------------------------------- canonical form
#
# A polynomial is a dict {monomial: Fraction}; a monomial is a tuple of
# (atom, exponent) pairs sorted by the atom's text.  Atoms are Var, Func with
# canonical argument, or a canonical Add (only ever with negative exponent,
# normalized to leading coefficient 1).

def _atom_key(atom):
    return str(atom)


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for atom, k in b:
        exps[atom] = exps.get(atom, 0) + k
    return tuple(sorted(((t, k) for t, k in exps.items() if k), key=lambda p: _atom_key(p[0])))


def _padd(p, q):
    out = dict(p)
    for m, c in q.items():
        s = out.get(m, 0) + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def _pscale(p, c):
    if not c:
        return {}
    return {m: v * c for m, v in p.items()}


def _pmul(p, q):
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            s = out.get(m, 0) + c1 * c2
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


_PONE = {(): Fraction(1)}


def _mono_key(mono):
    return "*".join(f"{_atom_key(a)}^{k}" for a, k in mono)


def _ppow(p, n: int):
    if n == 0:
        return dict(_PONE)
    if n > 0:
        result, base = dict(_PONE), p
        while n:
            if n & 1:
                result = _pmul(result, base)
            n >>= 1
            if n:
                base = _pmul(base, base)
        return result
    if not p:
        raise DomainError("/", 0.0)
    if len(p) == 1:
        ((mono, c),) = p.items()
        out = {(): Fraction(c) ** n}
        for atom, k in mono:
            e = k * n
            if isinstance(atom, Add) and e > 0:
                out = _pmul(out, _ppow(_poly(atom), e))
            else:
                out = _pmul(out, {((atom, e),): Fraction(1)})
        return out
    lead = min(p, key=_mono_key)
    c = p[lead]
    atom = _from_poly(_pscale(p, 1 / Fraction(c)))
    return {((atom, n),): Fraction(c) ** n}


def _fold_func(name: str, v: Fraction):
    if v == 0:
        if name in ("sin", "tanh", "sqrt"):
            return Fraction(0)
        if name in ("cos", "exp"):
            return Fraction(1)
    if name == "log" and v == 1:
        return Fraction(0)
    if name == "sqrt" and v > 0:
        rn, rd = math.isqrt(v.numerator), math.isqrt(v.denominator)
        if rn * rn == v.numerator and rd * rd == v.denominator:
            return Fraction(rn, rd)
    return None


def _poly(e: Expr):
    if isinstance(e, Const):
        return {(): e.value} if e.value else {}
    if isinstance(e, Var):
        return {((e, 1),): Fraction(1)}
    if isinstance(e, Add):
        out = {}
        for t in e.terms:
            out = _padd(out, _poly(t))
        return out
    if isinstance(e, Neg):
        return _pscale(_poly(e.arg), -1)
    if isinstance(e, Mul):
        out = dict(_PONE)
        for f in e.factors:
            out = _pmul(out, _poly(f))
            if not out:
                return {}
        return out
    if isinstance(e, Div):
        return _pmul(_poly(e.num), _ppow(_poly(e.den), -1))
    if isinstance(e, Pow):
        return _ppow(_poly(e.base), e.exp)
    if isinstance(e, Func):
        arg = simplify(e.arg)
        if isinstance(arg, Const):
            folded = _fold_func(e.name, arg.value)
            if folded is not None:
                return {(): folded} if folded else {}
        return {((Func(e.name, arg), 1),): Fraction(1)}
    raise TypeError(f"not an expression: {e!r}")


def _mono_tree(mono, coeff: Fraction) -> Expr:
    factors = [a if k == 1 else Pow(a, k) for a, k in mono]
    if not factors:
        return Const(coeff)
    if coeff != 1:
        factors.insert(0, Const(coeff))
    return factors[0] if len(factors) == 1 else Mul(factors)


def _from_poly(p) -> Expr:
    if not p:
        return ZERO
    monos = sorted(p, key=_mono_key)
    terms = [_mono_tree(m, p[m]) for m in monos]
    return terms[0] if len(terms) == 1 else Add(terms)


def simplify(e: Expr) -> Expr:
    """Canonical form: expanded, like terms collected, constants folded."""
    return _from_poly(_poly(as_expr(e)))


def is_zero(e: Expr) -> bool:
    return simplify(e) == ZERO


# ------------------------------------------------------------ derivatives

def _d(e: Expr, v: str) -> Expr:
    if v not in e.free_variables:
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return Add(tuple(_d(t, v) for t in e.terms))
    if isinstance(e, Neg):
        return Neg(_d(e.arg, v))
    if isinstance(e, Mul):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            df = _d(f, v)
            if df == ZERO:
                continue
            terms.append(Mul(fs[:i] + (df,) + fs[i + 1:]))
        return terms[0] if len(terms) == 1 else Add(terms)
    if isinstance(e, Div):
        num = Add((Mul((_d(e.num, v), e.den)), Neg(Mul((e.num, _d(e.den, v))))))
        return Div(num, Pow(e.den, 2))
    if isinstance(e, Pow):
        return Mul((Const(e.exp), Pow(e.base, e.exp - 1), _d(e.base, v)))
    if isinstance(e, Func):
        a = e.arg
        da = _d(a, v)
        name = e.name
        if name == "sin":
            outer = Func("cos", a)
        elif name == "cos":
            outer = Neg(Func("sin", a))
        elif name == "exp":
            outer = e
        elif name == "log":
            outer = Pow(a, -1)
        elif name == "tanh":
            outer = Add((ONE, Neg(Pow(e, 2))))
        else:  # sqrt
            outer = Div(ONE, Mul((Const(2), e)))
        return Mul((outer, da))
    raise TypeError(f"not an expression: {e!r}")


def differentiate(e: Expr, v: str) -> Expr:
    """Partial derivative with respect to the variable named ``v``, simplified."""
    if isinstance(v, Var):
        v = v.name
    return simplify(_d(as_expr(e), v))


# -------------------------------------------------------------- evaluation

def _checked(name, fn, x):
    if name == "log" and x <= 0:
        raise DomainError(name, x)
    if name == "sqrt" and x < 0:
        raise DomainError(name, x)
    try:
        return fn(x)
    except (OverflowError, ValueError):
        raise DomainError(name, x) from None


_MATH = {n: getattr(math, n) for n in FUNCTIONS}


def _eval(e: Expr, b: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return float(b[e.name])
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Add):
        acc = _eval(e.terms[0], b)
        for t in e.terms[1:]:
            acc = acc + _eval(t, b)
        return acc
    if isinstance(e, Mul):
        acc = _eval(e.factors[0], b)
        for f in e.factors[1:]:
            acc = acc * _eval(f, b)
        return acc
    if isinstance(e, Neg):
        return -_eval(e.arg, b)
    if isinstance(e, Div):
        num, den = _eval(e.num, b), _eval(e.den, b)
        if den == 0:
            raise DomainError("/", den)
        return num / den
    if isinstance(e, Pow):
        base = _eval(e.base, b)
        try:
            return base ** e.exp
        except (ZeroDivisionError, OverflowError):
            raise DomainError("^", base) from None
    if isinstance(e, Func):
        return _checked(e.name, _MATH[e.name], _eval(e.arg, b))
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expr, binding: Mapping[str, float]) -> float:
    """Evaluate in IEEE double precision."""
    return _eval(as_expr(e), binding)


def _code(e: Expr, names: Mapping[str, str]) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        try:
            return names[e.name]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Add):
        return "(" + " + ".join(_code(t, names) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(_code(f, names) for f in e.factors) + ")"
    if isinstance(e, Neg):
        return f"(-{_code(e.arg, names)})"
    if isinstance(e, Div):
        return f"({_code(e.num, names)} / {_code(e.den, names)})"
    if isinstance(e, Pow):
        return f"({_code(e.base, names)} ** {e.exp})"
    if isinstance(e, Func):
        return f"_{e.name}({_code(e.arg, names)})"
    raise TypeError(f"not an expression: {e!r}")


def compile_expression(e: Expr, variables: Sequence[str], backend: str = "math") -> Callable:
    """Compile to a Python callable taking the variables positionally.

    ``backend="numpy"`` produces an elementwise array function (domain
    violations become nan/inf, callers check finiteness); ``"math"`` raises
    :class:`DomainError` like :func:`evaluate`.
    """
    e = as_expr(e)
    names = {v: f"_a{i}" for i, v in enumerate(variables)}
    body = _code(e, names)
    args = ", ".join(names[v] for v in variables)
    if backend == "numpy":
        ns = {f"_{n}": getattr(np, n) for n in FUNCTIONS}
        shapes = ", ".join(f"_np.shape({names[v]})" for v in variables)
        src = f"def _f({args}):\n    return {body} + _np.zeros(_np.broadcast_shapes({shapes}))\n"
        ns["_np"] = np
    elif backend == "math":
        ns = {f"_{n}": (lambda x, _n=n: _checked(_n, _MATH[_n], x)) for n in FUNCTIONS}
        ns["DomainError"] = DomainError
        src = (f"def _f({args}):\n    try:\n        return {body}\n"
               "    except ZeroDivisionError:\n        raise DomainError('/', 0.0) from None\n"
               "    except OverflowError:\n        raise DomainError('^', float('inf')) from None\n")
    else:
        raise ValueError(f"unknown backend {backend!r}")
    exec(src, ns)
    return ns["_f"]


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (raw tree; simplify afterwards)."""
    e = as_expr(e)
    if not (e.free_variables & mapping.keys()):
        return e
    if isinstance(e, Var):
        return as_expr(mapping[e.name])
    if isinstance(e, Add):
        return Add(substitute(t, mapping) for t in e.terms)
    if isinstance(e, Mul):
        return Mul(substitute(f, mapping) for f in e.factors)
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Div):
        return Div(substitute(e.num, mapping), substitute(e.den, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exp)
    if isinstance(e, Func):
        return Func(e.name, substitute(e.arg, mapping))
    raise TypeError(f"not an expression: {e!r}")
