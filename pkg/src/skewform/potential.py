"""Radial-homotopy potentials of closed forms."""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

from .errors import EvaluationError, NotClosedError, QuadratureFailure, UnboundVariable, WrongDegree
from .expr import compile_expression
from .forms import ClosedSymbolic, DifferentialForm, is_closed


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-8, max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(lo, hi, fa, fm, fb, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, lo, mid)
        right = simpson(fm, frm, fb, mid, hi)
        delta = left + right - whole
        if not math.isfinite(delta):
            raise QuadratureFailure(f"non-finite integrand on [{lo}, {hi}]")
        if abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        if depth >= max_depth:
            raise QuadratureFailure(f"no convergence to {tol} within depth {max_depth}")
        return (recurse(lo, mid, fa, flm, fm, left, eps / 2, depth + 1)
                + recurse(mid, hi, fm, frm, fb, right, eps / 2, depth + 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)


def homotopy_potential(w: DifferentialForm, base: Sequence[float], x: Sequence[float],
                       params: Mapping[str, float] | None = None, tol: float = 1e-8):
    """Evaluate the radial-homotopy potential of the closed form ``w`` at ``x``.

    Returns a float for 1-forms.  For degree ``p >= 2`` returns the
    coefficients of the ``(p-1)``-form potential at ``x`` as a dict keyed by
    increasing index tuples.  The domain must be star-shaped about ``base``;
    that is the caller's responsibility.
    """
    if w.degree < 1:
        raise WrongDegree("a potential needs a form of degree >= 1")
    verdict = is_closed(w)
    if not isinstance(verdict, ClosedSymbolic):
        raise NotClosedError(f"form is not closed: {verdict}")
    chart = w.chart
    n = chart.dim
    base = [float(v) for v in base]
    x = [float(v) for v in x]
    if len(base) != n or len(x) != n:
        raise ValueError(f"points need {n} coordinates")
    params = dict(params or {})
    v = [xi - bi for xi, bi in zip(x, base)]
    p = w.degree

    # the potential coefficient on J collects ι_v over every I = J plus one slot
    integrands: dict[tuple, list] = {}
    for idx, c in w.terms.items():
        extra = sorted(c.free_variables - set(chart.names) - params.keys())
        if extra:
            raise UnboundVariable(extra[0])
        pnames = sorted(params)
        fn = compile_expression(c, list(chart.names) + pnames)
        pvals = [params[k] for k in pnames]
        for m, k in enumerate(idx):
            rest = idx[:m] + idx[m + 1:]
            weight = (-1) ** m * v[k]
            if weight:
                integrands.setdefault(rest, []).append((weight, fn, pvals))

    def make(parts):
        def g(t):
            pt = [bi + t * vi for bi, vi in zip(base, v)]
            try:
                total = sum(wt * fn(*pt, *pv) for wt, fn, pv in parts)
            except EvaluationError as exc:
                raise QuadratureFailure(f"integrand undefined at t={t}: {exc}") from exc
            return total * t ** (p - 1)
        return g

    result = {J: adaptive_simpson(make(parts), 0.0, 1.0, tol) for J, parts in sorted(integrands.items())}
    if p == 1:
        return result.get((), 0.0)
    return result
