"""Hypothesis strategies for random expressions, forms and bindings."""

from itertools import combinations

from hypothesis import strategies as st

from skewform.expr import Add, Const, Div, Func, Mul, Neg, Pow, Var
from skewform.forms import CoordinateChart, DifferentialForm

VARS = ("x", "y", "z")

consts = st.fractions(min_value=-5, max_value=5, max_denominator=4).map(Const)


def _positive(e):
    # 1 + e^2 keeps log, sqrt and division away from their singularities
    return Add((Const(1), Pow(e, 2)))


def expressions(names=VARS, max_leaves=8, functions=True):
    leaves = st.one_of(consts, st.sampled_from(names).map(Var))

    def extend(children):
        options = [
            st.lists(children, min_size=2, max_size=3).map(lambda t: Add(tuple(t))),
            st.lists(children, min_size=2, max_size=3).map(lambda t: Mul(tuple(t))),
            st.tuples(children, st.integers(0, 3)).map(lambda t: Pow(*t)),
            children.map(Neg),
            st.tuples(children, children).map(lambda t: Div(t[0], _positive(t[1]))),
        ]
        if functions:
            options += [
                st.tuples(st.sampled_from(("sin", "cos", "tanh")), children).map(lambda t: Func(t[0], t[1])),
                children.map(lambda c: Func("exp", Func("sin", c))),
                st.tuples(st.sampled_from(("log", "sqrt")), children).map(lambda t: Func(t[0], _positive(t[1]))),
            ]
        return st.one_of(*options)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def polynomials(names=VARS, max_leaves=8):
    return expressions(names, max_leaves, functions=False).filter(lambda e: "/" not in str(e))


def bindings(names=VARS, lo=-2.0, hi=2.0):
    return st.fixed_dictionaries({n: st.floats(lo, hi, allow_nan=False) for n in names})


@st.composite
def forms(draw, max_dim=4, max_degree=2, functions=True):
    n = draw(st.integers(1, max_dim))
    names = tuple("xyzw"[:n])
    chart = CoordinateChart(names)
    p = draw(st.integers(0, min(max_degree, n)))
    idxs = list(combinations(range(n), p))
    chosen = draw(st.lists(st.sampled_from(idxs), min_size=1, max_size=len(idxs), unique=True))
    terms = {i: draw(expressions(names, 5, functions)) for i in chosen}
    return DifferentialForm(chart, p, terms)

