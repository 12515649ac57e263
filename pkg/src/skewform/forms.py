"""Skew-symmetric differential forms with symbolic coefficients.

A form of degree ``p`` on a chart with coordinates ``x^1..x^n`` is stored as
a map from strictly increasing index tuples to canonical coefficients; the
orientation sign of any other ordering is absorbed into the coefficient.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

from .errors import ChartMismatch, DegreeOverflow, EvaluationError, NoMetric, WrongDegree
from .expr import ZERO, Add, Const, Expr, Mul, as_expr, differentiate, evaluate, simplify

__all__ = [
    "CoordinateChart", "DifferentialForm", "CommutatorMatrix",
    "ClosedSymbolic", "NotClosed", "Inconclusive",
    "wedge", "exterior_derivative", "commutator_components", "is_closed", "hodge_star",
    "permutation_sign",
]


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class CoordinateChart:
    names: tuple
    signature: tuple | None = None

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not 1 <= len(names) <= 8:
            raise ValueError("a chart has between 1 and 8 coordinates")
        if len(set(names)) != len(names):
            raise ValueError(f"coordinate names must be distinct: {names}")
        if self.signature is not None:
            sig = tuple(int(s) for s in self.signature)
            if len(sig) != len(names) or any(s not in (1, -1) for s in sig):
                raise ValueError("signature must list +1/-1 once per coordinate")
            object.__setattr__(self, "signature", sig)

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"{name!r} is not a coordinate of {self.names}") from None

    def with_signature(self, signature) -> "CoordinateChart":
        return CoordinateChart(self.names, tuple(signature))


def _as_index(chart, idx) -> tuple:
    if isinstance(idx, (str, int)):
        idx = (idx,)
    return tuple(chart.index(i) if isinstance(i, str) else int(i) for i in idx)


class DifferentialForm:
    """Immutable degree-``p`` form.

    ``terms`` maps index tuples (coordinate positions or names, any order)
    to coefficients; they are canonicalized on construction.  ``overflow``
    marks the empty result of differentiating a top-degree form.
    """

    __slots__ = ("chart", "degree", "terms", "overflow")

    def __init__(self, chart: CoordinateChart, degree: int, terms: Mapping = (), overflow: bool = False):
        if not 0 <= degree <= chart.dim:
            raise DegreeOverflow(f"degree {degree} outside 0..{chart.dim}")
        acc: dict[tuple, list] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for idx, coeff in items:
            idx = _as_index(chart, idx)
            if len(idx) != degree:
                raise WrongDegree(f"multi-index {idx} does not have length {degree}")
            if any(not 0 <= i < chart.dim for i in idx):
                raise ValueError(f"multi-index {idx} out of range for {chart.names}")
            s = permutation_sign(idx)
            if s == 0:
                continue
            coeff = as_expr(coeff)
            acc.setdefault(tuple(sorted(idx)), []).append(coeff if s > 0 else -coeff)
        canon = {}
        for idx in sorted(acc):
            parts = acc[idx]
            c = simplify(parts[0] if len(parts) == 1 else Add(parts))
            if c != ZERO:
                canon[idx] = c
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "terms", canon)
        object.__setattr__(self, "overflow", bool(overflow))

    def __setattr__(self, name, value):
        raise AttributeError("forms are immutable")

    # constructors
    @classmethod
    def scalar(cls, chart, f) -> "DifferentialForm":
        return cls(chart, 0, {(): f})

    @classmethod
    def basis(cls, chart, *names) -> "DifferentialForm":
        return cls(chart, len(names), {tuple(names): 1})

    @classmethod
    def one_form(cls, chart, coeffs: Sequence) -> "DifferentialForm":
        if len(coeffs) != chart.dim:
            raise ValueError("need one coefficient per coordinate")
        return cls(chart, 1, {(i,): c for i, c in enumerate(coeffs)})

    def coefficient(self, idx) -> Expr:
        idx = _as_index(self.chart, idx)
        s = permutation_sign(idx)
        c = self.terms.get(tuple(sorted(idx)), ZERO) if s else ZERO
        return c if s >= 0 else simplify(-c)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other):
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        if other.chart.names != self.chart.names:
            raise ChartMismatch(f"{self.chart.names} vs {other.chart.names}")
        if other.degree != self.degree:
            raise WrongDegree(f"cannot add degree {self.degree} and {other.degree}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        terms = list(self.terms.items()) + list(other.terms.items())
        return DifferentialForm(self.chart, self.degree, terms)

    def __neg__(self):
        return DifferentialForm(self.chart, self.degree, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self + (-other)

    def scale(self, f) -> "DifferentialForm":
        f = as_expr(f)
        return DifferentialForm(self.chart, self.degree, {k: Mul((f, v)) for k, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        return (self.chart.names == other.chart.names and self.degree == other.degree
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.chart.names, self.degree, tuple(self.terms.items())))

    def basis_text(self, idx) -> str:
        return "^".join("d" + self.chart.names[i] for i in idx)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for idx, c in self.terms.items():
            if not idx:
                parts.append(f"({c})")
            else:
                parts.append(f"({c})*{self.basis_text(idx)}")
        return " + ".join(parts)

    def __repr__(self):
        return f"DifferentialForm(degree={self.degree}, {self})"


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    if a.chart.names != b.chart.names:
        raise ChartMismatch(f"{a.chart.names} vs {b.chart.names}")
    deg = a.degree + b.degree
    if deg > a.chart.dim:
        raise DegreeOverflow(f"degree {deg} exceeds dimension {a.chart.dim}")
    terms = []
    for i, ca in a.terms.items():
        for j, cb in b.terms.items():
            if set(i) & set(j):
                continue
            terms.append((i + j, Mul((ca, cb))))
    return DifferentialForm(a.chart, deg, terms)


def exterior_derivative(w: DifferentialForm) -> DifferentialForm:
    n = w.chart.dim
    if w.degree >= n:
        return DifferentialForm(w.chart, n, {}, overflow=True)
    terms = []
    names = w.chart.names
    for idx, c in w.terms.items():
        fv = c.free_variables
        for k in range(n):
            if k in idx or names[k] not in fv:
                continue
            terms.append(((k,) + idx, differentiate(c, names[k])))
    return DifferentialForm(w.chart, w.degree + 1, terms)


@dataclass(frozen=True)
class CommutatorMatrix:
    """Antisymmetric matrix ``K[i][j] = d_i a_j - d_j a_i`` of a 1-form."""

    chart: CoordinateChart
    entries: tuple

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def is_zero(self) -> bool:
        return all(e == ZERO for row in self.entries for e in row)

    def upper(self):
        """Yield ``(i, j, K_ij)`` for ``i < j``."""
        n = self.chart.dim
        for i in range(n):
            for j in range(i + 1, n):
                yield i, j, self.entries[i][j]

    def as_form(self) -> DifferentialForm:
        if self.chart.dim < 2:
            return DifferentialForm(self.chart, 1, {}, overflow=True)
        return DifferentialForm(self.chart, 2, {(i, j): k for i, j, k in self.upper()})


def commutator_components(w: DifferentialForm) -> CommutatorMatrix:
    if w.degree != 1:
        raise WrongDegree(f"commutator needs a 1-form, got degree {w.degree}")
    n = w.chart.dim
    names = w.chart.names
    a = [w.coefficient((i,)) for i in range(n)]
    rows = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            k = simplify(differentiate(a[j], names[i]) - differentiate(a[i], names[j]))
            rows[i][j] = k
            rows[j][i] = simplify(-k)
    return CommutatorMatrix(w.chart, tuple(tuple(r) for r in rows))


# ---------------------------------------------------------------- closure

@dataclass(frozen=True)
class ClosedSymbolic:
    def __str__(self):
        return "ClosedSymbolic"


@dataclass(frozen=True)
class NotClosed:
    index: tuple
    coefficient: Expr

    def __str__(self):
        return f"NotClosed(witness {self.index}: {self.coefficient})"


@dataclass(frozen=True)
class Inconclusive:
    index: tuple
    coefficient: Expr
    max_abs: float = field(default=0.0)

    def __str__(self):
        return f"Inconclusive({self.index}: {self.coefficient} vanishes numerically)"


def _numerically_zero(c: Expr, samples: int, threshold: float, rng: random.Random):
    names = sorted(c.free_variables)
    worst = 0.0
    used = 0
    for _ in range(samples * 4):
        b = {v: rng.uniform(0.1, 2.0) for v in names}
        try:
            val = abs(evaluate(c, b))
        except EvaluationError:
            continue
        used += 1
        worst = max(worst, val)
        if worst >= threshold:
            return False, worst
        if used == samples:
            break
    return used > 0, worst


def is_closed(w: DifferentialForm, samples: int = 50, threshold: float = 1e-10, seed: int = 0):
    """Three-valued closure verdict for ``w``.

    Coefficients of ``dw`` that survive simplification are sampled at random
    points in ``[0.1, 2]^k``; if all samples fall below ``threshold`` the
    verdict is :class:`Inconclusive` rather than :class:`NotClosed`.
    """
    dw = exterior_derivative(w)
    if dw.is_zero:
        return ClosedSymbolic()
    rng = random.Random(seed)
    suspect = None
    for idx, c in dw.terms.items():
        zero, worst = _numerically_zero(c, samples, threshold, rng)
        if not zero:
            return NotClosed(idx, c)
        if suspect is None:
            suspect = Inconclusive(idx, c, worst)
    return suspect


# ------------------------------------------------------------------ hodge

def hodge_star(w: DifferentialForm, signature: Sequence[int] | None = None) -> DifferentialForm:
    """Hodge dual under a diagonal metric, orientation given by chart order.

    ``*(dx^I) = s(I) * sign(I, J) * dx^J`` with ``J`` the ordered complement
    of ``I`` and ``s(I)`` the product of signature entries over ``I``.
    """
    chart = w.chart
    sig = tuple(signature) if signature is not None else chart.signature
    if sig is None:
        raise NoMetric(f"chart {chart.names} has no metric signature")
    if len(sig) != chart.dim:
        raise ValueError("signature length does not match chart dimension")
    n = chart.dim
    terms = []
    for idx, c in w.terms.items():
        comp = tuple(k for k in range(n) if k not in idx)
        s = 1
        for i in idx:
            s *= sig[i]
        s *= permutation_sign(idx + comp)
        terms.append((comp, c if s > 0 else -c))
    return DifferentialForm(chart, n - w.degree, terms)


def basis_forms(chart: CoordinateChart, degree: int):
    for idx in combinations(range(chart.dim), degree):
        yield DifferentialForm(chart, degree, {idx: Const(1)})
