"""Acceptance criteria 1-8, each clause at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` and read the summary section at the
end: one PASS/FAIL line per criterion, with the measured value per clause.
"""

import hashlib
import math
import random
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

import skewform
from skewform.charpit import (
    complete_initial_strip,
    detect_degeneracy,
    integrate_characteristics,
    reconstruct_solution,
)
from skewform.cli import main
from skewform.expr import evaluate, is_zero
from skewform.forms import CoordinateChart, DifferentialForm, commutator_components, exterior_derivative
from skewform.grid import GridField, discrete_commutator, exactness_verdict, load_grid
from skewform.parser import parse_expression
from skewform.potential import homotopy_potential
from skewform.problemfile import load_problem
from skewform.verification import maxwell_plane_wave

FIXTURES = Path(skewform.__file__).parent / "fixtures"
SEED = 20240517


def acceptance(criterion, clause, title):
    return pytest.mark.acceptance(criterion, clause, title)


def measured(record_property, text):
    record_property("measured", text)
    print(f"[{text}]")


def solve(name, **overrides):
    spec = load_problem(FIXTURES / name)
    strip = complete_initial_strip(spec.problem, spec.strip)
    span = overrides.get("span", spec.span)
    step = overrides.get("step", spec.step)
    return spec, integrate_characteristics(spec.problem, strip, span, step)


# ------------------------------------------------------ random expressions

_ATOMS = ("{v}", "{v}^2", "{c}*{v}", "sin({v})", "cos({v})", "exp({c}*{v})", "{v}*{w}", "{c}")


def _random_expr(rng, names, terms=3):
    parts = []
    for _ in range(rng.randint(1, terms)):
        atom = rng.choice(_ATOMS)
        parts.append("(" + atom.format(v=rng.choice(names), w=rng.choice(names), c=rng.randint(-3, 3)) + ")")
        if rng.random() < 0.4:
            parts[-1] += "*(" + rng.choice(_ATOMS).format(v=rng.choice(names), w=rng.choice(names),
                                                         c=rng.randint(-3, 3)) + ")"
    return parse_expression(" + ".join(parts))


def _random_form(rng):
    n = rng.randint(1, 4)
    chart = CoordinateChart(tuple("xyzw"[:n]))
    p = rng.randint(0, min(2, n))
    idxs = list(combinations(range(n), p))
    chosen = rng.sample(idxs, rng.randint(1, len(idxs)))
    return DifferentialForm(chart, p, {I: _random_expr(rng, chart.names) for I in chosen})


def _random_polynomial(rng, names, terms=4, max_power=3):
    parts = []
    for _ in range(rng.randint(1, terms)):
        mono = "*".join(f"{v}^{rng.randint(0, max_power)}" for v in names)
        parts.append(f"{rng.randint(-5, 5)}*{mono}")
    return parse_expression(" + ".join(parts))


# ---------------------------------------------------------------- 1 closure

TITLE1 = "symbolic closure suite"


@acceptance("1", "1a d(d(w)) = 0 on 200 random forms", TITLE1)
def test_c1_d_squared(record_property):
    rng = random.Random(SEED)
    zeros = sum(exterior_derivative(exterior_derivative(_random_form(rng))).is_zero for _ in range(200))
    measured(record_property, f"{zeros}/200 symbolic zeros")
    assert zeros == 200


@acceptance("1", "1b exact 1-forms have zero commutator", TITLE1)
def test_c1_exact_commutator(record_property):
    rng = random.Random(SEED + 1)
    zeros = 0
    for _ in range(200):
        n = rng.randint(1, 4)
        chart = CoordinateChart(tuple("xyzw"[:n]))
        K = commutator_components(exterior_derivative(DifferentialForm.scalar(chart, _random_expr(rng, chart.names))))
        zeros += all(is_zero(K[i, j]) for i in range(n) for j in range(n))
    measured(record_property, f"{zeros}/200 commutators zero")
    assert zeros == 200


# ---------------------------------------------------------------- 2 eikonal

TITLE2 = "eikonal fixture"


@acceptance("2", "2a rays straight within 1e-9", TITLE2)
def test_c2_straight_rays(record_property):
    _, trajs = solve("eikonal.toml")
    worst = 0.0
    for t in trajs:
        normal = np.array([math.cos(t.r), math.sin(t.r)])
        rel = t.x - normal  # offset from the boundary point
        worst = max(worst, float(np.max(np.abs(rel[:, 0] * normal[1] - rel[:, 1] * normal[0]))))
    measured(record_property, f"max deviation {worst!r}")
    assert worst <= 1e-9


@acceptance("2", "2b |F| <= 1e-9 at step 1e-2 over s in [0, 5]", TITLE2)
def test_c2_residual(record_property):
    spec, trajs = solve("eikonal.toml")
    assert spec.step == 1e-2 and tuple(spec.span) == (0.0, 5.0)
    worst = max(float(np.max(t.F_residual)) for t in trajs)
    measured(record_property, f"max |F| {worst!r}")
    assert all(t.s[-1] == 5.0 for t in trajs)
    assert worst <= 1e-9


@acceptance("2", "2c inward focus s* = 0.5 +- 0.02", TITLE2)
def test_c2_inward_focus(record_property):
    _, trajs = solve("eikonal_inward.toml")
    s_star = detect_degeneracy(trajs).s_star
    measured(record_property, f"s* = {s_star!r}")
    assert s_star is not None and abs(s_star - 0.5) <= 0.02


# ---------------------------------------------------------------- 3 Burgers

TITLE3 = "Burgers fixture"


@acceptance("3", "3a p_x = -1/(1-s) within 1e-6 for s <= 0.9", TITLE3)
def test_c3_riccati(record_property):
    _, trajs = solve("burgers.toml", span=(0.0, 0.9), step=1e-3)
    worst = max(float(np.max(np.abs(t.component("p_x") + 1 / (1 - t.s)))) for t in trajs)
    measured(record_property, f"max error {worst!r}")
    assert worst <= 1e-6


@acceptance("3", "3b s* = 1.0 +- 0.05", TITLE3)
def test_c3_focus(record_property):
    _, trajs = solve("burgers.toml")
    s_star = detect_degeneracy(trajs).s_star
    measured(record_property, f"s* = {s_star!r}")
    assert s_star is not None and abs(s_star - 1.0) <= 0.05


@acceptance("3", "3c multiplicity >= 2 at t = 1.5", TITLE3)
def test_c3_multivalued_after_focus(record_property):
    # Every characteristic reaches p_x -> infinity at s = 1 and stops there,
    # and x = r(1 - t) stays injective in r for t != 1.  Expected to fail.
    _, trajs = solve("burgers.toml")
    points = [(1.5, x) for x in (-0.25, 0.0, 0.25)]
    recs = reconstruct_solution(trajs, points, allow_missing=True)
    mult = [r.multiplicity for r in recs]
    last = max(float(t.s[-1]) for t in trajs)
    measured(record_property, f"multiplicities {mult} at t = 1.5; trajectories end by s = {last:.3f}")
    assert max(mult) >= 2


# -------------------------------------------------------------- 4 transport

TITLE4 = "transport fixture"


@acceptance("4", "4a u matches sin(x - 2t) at 20 random points within 1e-6", TITLE4)
def test_c4_transport(record_property):
    spec, trajs = solve("transport.toml")
    rng = random.Random(SEED + 4)
    lo, hi = spec.strip.r_range
    pts = []
    for _ in range(20):
        t = rng.uniform(0.0, 1.0)
        pts.append((t, rng.uniform(lo + 0.01, hi - 0.01) + 2 * t))
    errs = [abs(rec.values[0] - math.sin(rec.point[1] - 2 * rec.point[0])) for rec in reconstruct_solution(trajs, pts)]
    measured(record_property, f"max error {max(errs)!r}")
    assert max(errs) <= 1e-6


# ------------------------------------------------------------------- 5 grid

TITLE5 = "grid diagnostics"


@acceptance("5", "5a rotational K_12 = -2 within 1e-12, Nonidentical", TITLE5)
def test_c5_rotational(record_property):
    f = load_grid(FIXTURES / "rotational.csv")
    err = float(np.max(np.abs(discrete_commutator(f)[0, 1] + 2)))
    verdict = exactness_verdict(f).verdict
    measured(record_property, f"max |K_12 + 2| {err!r}, verdict {verdict}")
    assert err <= 1e-12 and verdict == "Nonidentical"


@acceptance("5", "5b gradient field Identical at tol 1e-8", TITLE5)
def test_c5_gradient(record_property):
    rep = exactness_verdict(load_grid(FIXTURES / "gradient.csv"), tol=1e-8)
    measured(record_property, f"verdict {rep.verdict}, worst {rep.max_commutator!r}")
    assert rep.verdict == "Identical"


@acceptance("5", "5c convergence order 2.0 +- 0.2 over 11/21/41", TITLE5)
def test_c5_convergence(record_property):
    # A = (sin(a + 2b), exp(a) cos(b)), so K_12 = exp(a) cos(b) - 2 cos(a + 2b)
    def exact(a, b):
        return np.exp(a) * np.cos(b) - 2 * np.cos(a + 2 * b)

    errors = []
    for n in (11, 21, 41):
        f = GridField.sample(("a", "b"), (0.0, 0.0), (1.0, 1.0), (n, n),
                             (lambda a, b: np.sin(a + 2 * b), lambda a, b: np.exp(a) * np.cos(b)))
        a, b = f.mesh()
        errors.append(float(np.max(np.abs(discrete_commutator(f)[0, 1] - exact(a, b)))))
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
    measured(record_property, "orders " + ", ".join(f"{p:.4f}" for p in orders))
    assert all(abs(p - 2.0) <= 0.2 for p in orders)


# ---------------------------------------------------------------- 6 Maxwell

TITLE6 = "Maxwell plane wave"


@acceptance("6", "6a dF = 0 and d*F = 0 symbolically", TITLE6)
def test_c6_maxwell(record_property):
    check = maxwell_plane_wave()
    measured(record_property, f"dF zero {check.closed}, d*F zero {check.coclosed}, F terms {len(check.field.terms)}")
    assert not check.field.is_zero
    assert check.closed and check.coclosed


# -------------------------------------------------------------- 7 potential

TITLE7 = "potential oracle"


@acceptance("7", "7a 20 polynomial potentials within 1e-6", TITLE7)
def test_c7_potential(record_property):
    rng = random.Random(SEED + 7)
    worst = 0.0
    for _ in range(20):
        n = rng.randint(1, 3)
        chart = CoordinateChart(tuple("xyz"[:n]))
        u = _random_polynomial(rng, chart.names)
        w = exterior_derivative(DifferentialForm.scalar(chart, u))
        base = [rng.uniform(-1, 1) for _ in range(n)]
        x = [rng.uniform(-1, 1) for _ in range(n)]
        want = evaluate(u, dict(zip(chart.names, x))) - evaluate(u, dict(zip(chart.names, base)))
        got = homotopy_potential(w, base, x) if not w.is_zero else 0.0
        worst = max(worst, abs(got - want))
    measured(record_property, f"max error {worst!r}")
    assert worst <= 1e-6


# -------------------------------------------------------------------- 8 CLI

TITLE8 = "CLI determinism and exit codes"

CASES = [
    (["closure", "rotation.form"], 0),
    (["closure", "exact.form"], 0),
    (["closure", "bad_coeff.form"], 1),
    (["potential", "exact.form", "--at", "2,3"], 0),
    (["potential", "rotation.form", "--at", "1,1"], 1),
    (["diagnose", "gradient.csv"], 0),
    (["diagnose", "rotational.csv"], 0),
    (["diagnose", "badrows.csv"], 1),
    (["characteristics", "burgers.toml"], 0),
    (["characteristics", "transport.toml"], 0),
    (["characteristics", "eikonal.toml"], 0),
    (["characteristics", "eikonal_inward.toml"], 0),
    (["characteristics", "bad_seed.toml"], 2),
]


def _run(argv, prefix, capsys):
    argv = [argv[0], str(FIXTURES / argv[1]), *argv[2:], "--format", "json", "--out", str(prefix)]
    code = main(argv)
    out, err = capsys.readouterr()
    files = sorted(prefix.parent.glob(prefix.name + "*"))
    digest = hashlib.sha256(out.encode() + err.encode())
    for p in files:
        digest.update(p.name.encode() + p.read_bytes())
    return code, digest.hexdigest()


@acceptance("8", "8a byte-identical reruns", TITLE8)
def test_c8_determinism(record_property, tmp_path, capsys):
    differing = []
    for i, (argv, _) in enumerate(CASES):
        prefix = tmp_path / f"case{i}"
        first = _run(argv, prefix, capsys)
        second = _run(argv, prefix, capsys)
        if first != second:
            differing.append(argv[1])
    measured(record_property, f"{len(CASES) - len(differing)}/{len(CASES)} identical")
    assert not differing


@acceptance("8", "8b exit codes 0/1/2", TITLE8)
def test_c8_exit_codes(record_property, tmp_path, capsys):
    wrong = []
    for i, (argv, want) in enumerate(CASES):
        code, _ = _run(argv, tmp_path / f"case{i}", capsys)
        if code != want:
            wrong.append((argv[1], code, want))
    measured(record_property, f"{len(CASES) - len(wrong)}/{len(CASES)} as expected")
    assert not wrong
