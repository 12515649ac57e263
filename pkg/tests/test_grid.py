import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewform.errors import GridFormatError, GridTooSmall, MissingPsi
from skewform.expr import compile_expression, evaluate
from skewform.forms import CoordinateChart, DifferentialForm, commutator_components
from skewform.grid import (
    GridField,
    array_norm,
    commutator_csv,
    degeneracy_locus,
    derivative,
    discrete_commutator,
    dumps_grid,
    evolutionary_residual,
    exactness_verdict,
    loads_grid,
    nonidentity_norm,
)

NAMES = ("xi_1", "xi_2")
SQUARE = ((-1.0, -1.0), (1.0, 1.0))


def grid(A, counts=(21, 21), box=SQUARE, psi=None, det=None):
    return GridField.sample(NAMES, box[0], box[1], counts, A, psi=psi, det=det)


def rotational(counts=(21, 21)):
    return grid((lambda a, b: b, lambda a, b: -a), counts)


# --------------------------------------------------------------- commutator

def test_rotational_field():
    K = discrete_commutator(rotational())[0, 1]
    assert np.max(np.abs(K + 2.0)) <= 1e-12


def test_gradient_field():
    K = discrete_commutator(grid((lambda a, b: b, lambda a, b: a)))[0, 1]
    assert np.max(np.abs(K)) <= 1e-12


def test_quadratic_field_exact():
    f = grid((lambda a, b: b ** 2, lambda a, b: a ** 2))
    a, b = f.mesh()
    K = discrete_commutator(f)[0, 1]
    assert np.max(np.abs(K - (2 * a - 2 * b))) <= 1e-12


def test_commutator_needs_two_axes():
    f = GridField(("x",), (0.0,), (1.0,), (5,), (np.zeros(5),))
    with pytest.raises(GridTooSmall):
        discrete_commutator(f)


def test_axes_need_three_nodes():
    with pytest.raises(GridTooSmall):
        grid((lambda a, b: a, lambda a, b: b), counts=(2, 5))


def test_swapping_components_negates_exactly():
    A1 = lambda a, b: np.sin(a * b)  # noqa: E731
    A2 = lambda a, b: np.exp(a) * b  # noqa: E731
    f = grid((A1, A2))
    g = GridField(NAMES[::-1], f.mins[::-1], f.maxs[::-1], f.counts[::-1],
                  (f.A[1].T, f.A[0].T))
    assert np.array_equal(discrete_commutator(g)[0, 1].T, -discrete_commutator(f)[0, 1])


def test_antisymmetric_access():
    K = discrete_commutator(rotational())
    assert np.array_equal(K[1, 0], -K[0, 1])
    assert not np.any(K[0, 0])


def test_three_axes():
    f = GridField.sample(("x", "y", "z"), (0, 0, 0), (1, 1, 1), (5, 6, 7),
                         (lambda x, y, z: y * z, lambda x, y, z: 0 * x, lambda x, y, z: x))
    K = discrete_commutator(f)
    assert set(K.components) == {(0, 1), (0, 2), (1, 2)}
    np.testing.assert_allclose(K[0, 1], -f.mesh()[2], atol=1e-12)    # d_x 0 - d_y (y z)
    np.testing.assert_allclose(K[0, 2], 1 - f.mesh()[1], atol=1e-12)  # d_x x - d_z (y z)
    np.testing.assert_allclose(K[1, 2], 0, atol=1e-12)


@pytest.mark.parametrize("coeffs", [("a*b^2", "a^2 - b"), ("b", "-a"), ("3*a*b + b^2", "a")])
def test_matches_symbolic_commutator(coeffs):
    chart = CoordinateChart(("a", "b"))
    w = DifferentialForm.one_form(chart, coeffs)
    exact = commutator_components(w)[0, 1]
    fns = [compile_expression(w.coefficient((i,)), ("a", "b"), backend="numpy") for i in range(2)]
    f = GridField.sample(("a", "b"), (-1.0, 0.0), (1.0, 2.0), (11, 13), fns)
    K = discrete_commutator(f)[0, 1]
    a, b = f.mesh()
    ref = np.vectorize(lambda p, q: evaluate(exact, {"a": p, "b": q}))(a, b)
    assert np.max(np.abs(K - ref)) <= 1e-11


def test_convergence_order_two():
    errors = []
    for n in (11, 21, 41):
        f = grid((lambda a, b: np.sin(b), lambda a, b: 0 * a), counts=(n, n))
        _, b = f.mesh()
        errors.append(np.max(np.abs(discrete_commutator(f)[0, 1] + np.cos(b))))
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
    for p in orders:
        assert p == pytest.approx(2.0, abs=0.2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.integers(5, 15), st.integers(5, 15))
def test_gradient_fields_annihilated_in_interior(c, n1, n2):
    def psi(a, b):
        return c[0] * np.sin(a + c[1] * b) + c[2] * np.exp(c[3] * a) * b + c[4] * a ** 3 * b ** 2 + c[5]

    base = grid((lambda a, b: 0 * a, lambda a, b: 0 * a), counts=(n1, n2), psi=psi)
    h = base.spacing
    f = GridField(NAMES, base.mins, base.maxs, base.counts,
                  (derivative(base.psi, h[0], 0), derivative(base.psi, h[1], 1)))
    K = discrete_commutator(f)[0, 1]
    assert np.max(np.abs(K[1:-1, 1:-1])) <= 1e-10


# -------------------------------------------------------------------- norms

def test_zero_norms():
    (n,) = nonidentity_norm(discrete_commutator(grid((lambda a, b: b, lambda a, b: a)))).values()
    assert n.linf <= 1e-12 and n.l2 <= 1e-12


def test_constant_commutator_norms():
    (n,) = nonidentity_norm(discrete_commutator(rotational())).values()
    assert n.linf == pytest.approx(2.0, abs=1e-12)
    assert n.l2 == pytest.approx(4.0, abs=1e-12)


def test_argmax_ties_pick_smallest_index():
    f = grid((lambda a, b: b ** 2, lambda a, b: a ** 2), counts=(11, 11), box=((0.0, 0.0), (1.0, 1.0)))
    (n,) = nonidentity_norm(discrete_commutator(f)).values()
    assert n.linf == pytest.approx(2.0, abs=1e-12)
    # |2a - 2b| = 2 at both (1, 0) and (0, 1); the smaller index wins
    assert n.argmax == (0, 10)
    assert n.location in ((0.0, 1.0), (1.0, 0.0))


def test_interior_only_skips_boundary():
    arr = np.zeros((5, 5))
    arr[0, 0] = 10.0
    arr[2, 3] = 1.0
    f = grid((lambda a, b: a, lambda a, b: b), counts=(5, 5))
    assert array_norm(arr, f).linf == 10.0
    n = array_norm(arr, f, interior_only=True)
    assert n.linf == 1.0 and n.argmax == (2, 3)


# ----------------------------------------------------------------- residual

def test_exact_residual():
    f = grid((lambda a, b: b, lambda a, b: a), psi=lambda a, b: a * b)
    for n in evolutionary_residual(f).norms:
        assert n.linf <= 1e-12


def test_residual_of_zero_potential():
    f = grid((lambda a, b: b, lambda a, b: -a), psi=lambda a, b: 0 * a)
    R = evolutionary_residual(f)
    np.testing.assert_array_equal(R.arrays[0], -f.A[0])
    assert R.norms[0].linf == 1.0


def test_residual_needs_psi():
    with pytest.raises(MissingPsi):
        evolutionary_residual(rotational())


# ------------------------------------------------------------------ verdict

def test_gradient_identical():
    f = grid((lambda a, b: b, lambda a, b: a))
    assert exactness_verdict(f, 1e-8).verdict == "Identical"


def test_rotational_nonidentical():
    rep = exactness_verdict(rotational(), 1e-8)
    assert rep.verdict == "Nonidentical"
    assert rep.max_commutator == pytest.approx(2.0, abs=1e-12)


def test_noisy_gradient_identical():
    rng = np.random.default_rng(3)
    f = grid((lambda a, b: b, lambda a, b: a), counts=(21, 21))
    noisy = GridField(f.names, f.mins, f.maxs, f.counts,
                      tuple(A + 1e-10 * rng.standard_normal(A.shape) for A in f.A))
    rep = exactness_verdict(noisy, 1e-6)
    assert rep.verdict == "Identical"
    assert rep.max_commutator <= 4e-9 * 3


def test_verdict_respects_residual():
    # closed field but wrong potential
    f = grid((lambda a, b: b, lambda a, b: a), psi=lambda a, b: a * b + a)
    assert exactness_verdict(f, 1e-6).verdict == "Nonidentical"


def test_h2_scaled_tolerance():
    f = rotational(counts=(11, 11))
    rep = exactness_verdict(f, 1e-6, scale_with_h2=True)
    assert rep.effective_tol == pytest.approx(1e-6 * 0.2 ** 2)


def test_verdict_tol_positive():
    with pytest.raises(ValueError):
        exactness_verdict(rotational(), 0.0)


def test_report_marks_flat_chart():
    rep = exactness_verdict(rotational())
    assert "flat-chart" in rep.to_dict()["note"]


# --------------------------------------------------------------- degeneracy

def test_sign_change_column():
    # 20 nodes per axis so no node lands on xi_1 = 0
    f = grid((lambda a, b: a, lambda a, b: b), counts=(20, 20), det=lambda a, b: a)
    loc = degeneracy_locus(f.det)
    assert {c[0] for c in loc.cells} == {9}
    assert len(loc.cells) == 19


def test_node_on_axis_flags_two_columns():
    f = grid((lambda a, b: a, lambda a, b: b), counts=(21, 21), det=lambda a, b: a)
    loc = degeneracy_locus(f.det)
    assert {c[0] for c in loc.cells} == {9, 10}


def test_constant_det_empty():
    assert degeneracy_locus(np.ones((6, 6))).cells == ()


def test_threshold_without_sign_change():
    f = grid((lambda a, b: a, lambda a, b: b), counts=(21, 21), det=lambda a, b: a ** 2)
    loc = degeneracy_locus(f.det, 1e-3)
    assert {n[0] for n in loc.nodes} == {10}
    assert {c[0] for c in loc.cells} == {9, 10}


def test_det_field_in_report():
    f = grid((lambda a, b: a, lambda a, b: b), counts=(20, 20), det=lambda a, b: a)
    rep = exactness_verdict(f)
    assert len(rep.degeneracy.cells) == 19


# --------------------------------------------------------------------- CSV

def test_csv_round_trip():
    f = grid((lambda a, b: np.sin(a), lambda a, b: a * b), counts=(4, 5), psi=lambda a, b: a, det=lambda a, b: b)
    g = loads_grid(dumps_grid(f))
    assert g.names == f.names and g.counts == f.counts
    for u, v in zip(g.A + (g.psi, g.det), f.A + (f.psi, f.det)):
        assert np.array_equal(u, v)


def test_csv_row_count_mismatch():
    text = dumps_grid(rotational(counts=(3, 3)))
    with pytest.raises(GridFormatError) as err:
        loads_grid("\n".join(text.splitlines()[:-1]) + "\n")
    assert "8 data rows" in str(err.value)


def test_csv_header_mismatch():
    text = dumps_grid(rotational(counts=(3, 3))).replace("A_1", "B_1")
    with pytest.raises(GridFormatError) as err:
        loads_grid(text)
    assert err.value.line == 5


def test_csv_coordinate_mismatch():
    lines = dumps_grid(rotational(counts=(3, 3))).splitlines()
    lines[6] = "9.0" + lines[6][lines[6].index(","):]
    with pytest.raises(GridFormatError) as err:
        loads_grid("\n".join(lines) + "\n")
    assert err.value.line == 7


def test_csv_missing_metadata():
    with pytest.raises(GridFormatError):
        loads_grid("x,y,A_1,A_2\n0,0,0,0\n")


def test_commutator_csv_header():
    out = commutator_csv(discrete_commutator(rotational(counts=(3, 3))))
    assert out.splitlines()[0] == "xi_1,xi_2,K_1_2"
    assert len(out.splitlines()) == 10
