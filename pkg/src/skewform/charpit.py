"""Characteristic strips of a first-order PDE ``F(x, u, p) = 0``.

The closure conditions ``dF = 0`` and ``d(p_i dx^i) = 0`` give a homogeneous
linear system in ``(dx, dp)``; its null direction is the characteristic
field

    dx^i/ds = F_{p_i},   dp_i/ds = -(F_{x^i} + p_i F_u),   du/ds = p_i F_{p_i}

along which ``p_i dx^i`` is the differential of ``u``.  Integrating it from
an initial strip yields the solution on the union of characteristics, and
the strip Jacobian ``det d(x)/d(s, r)`` vanishes where characteristics meet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EvaluationError,
    InsufficientTrajectories,
    NewtonDivergence,
    OutsideCoverage,
    OverdeterminedStrip,
    UnderdeterminedStrip,
)
from .expr import ZERO, Expr, Mul, as_expr, compile_expression, differentiate, simplify
from .forms import CoordinateChart

SPAN_END = "SpanEnd"
BLOWUP = "Blowup"
DOMAIN_EXIT = "DomainExit"

DEFAULT_STEP = 1e-2
DEFAULT_SPAN = (0.0, 10.0)
BLOWUP_LIMIT = 1e12
STRIP_TOL = 1e-10


@dataclass(frozen=True)
class PdeProblem:
    """``F(x^1..x^n, u, p_1..p_n) = 0`` with named slots for every quantity."""

    coordinates: tuple
    unknown: str
    slots: tuple
    F: Expr

    def __post_init__(self):
        coords = tuple(self.coordinates)
        slots = tuple(self.slots)
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "F", simplify(as_expr(self.F)))
        if not coords:
            raise ValueError("a PDE needs at least one coordinate")
        if len(slots) != len(coords):
            raise ValueError("need one derivative slot per coordinate")
        names = coords + (self.unknown,) + slots
        if len(set(names)) != len(names):
            raise ValueError(f"coordinate, unknown and slot names must be distinct: {names}")
        if not (self.F.free_variables & set(slots)):
            raise ValueError(f"F = {self.F} involves no derivative slot {slots}; not a PDE")
        extra = sorted(self.F.free_variables - set(names))
        if extra:
            raise ValueError(f"F uses {extra}, which are not coordinates, the unknown or slots")

    @classmethod
    def create(cls, coordinates: Sequence[str], F, unknown: str = "u", slots: Sequence[str] | None = None):
        if slots is None:
            slots = [f"p_{c}" for c in coordinates]
        return cls(tuple(coordinates), unknown, tuple(slots), as_expr(F))

    @property
    def n(self) -> int:
        return len(self.coordinates)

    @property
    def chart(self) -> CoordinateChart:
        return CoordinateChart(self.coordinates)

    @property
    def state_names(self) -> tuple:
        return self.coordinates + (self.unknown,) + self.slots

    def relabel(self, order: Sequence[int]) -> "PdeProblem":
        """Same problem with coordinates (and slots) listed in ``order``."""
        return PdeProblem(tuple(self.coordinates[i] for i in order), self.unknown,
                          tuple(self.slots[i] for i in order), self.F)


@dataclass(frozen=True)
class ClosureSystem:
    """Coefficient matrix of the homogeneous system in ``(dx^1..dx^n, dp_1..dp_n)``.

    Row 0 holds the expansion of ``dF = 0``.  Row ``1 + i`` encodes the
    ``i``-th pairing ``dp_i dx^i - dx^i dp_i`` of ``d(p_i dx^i) = 0`` as the
    symplectic pair (-1 at ``dx^i``, +1 at ``dp_i``).
    """

    problem: PdeProblem
    rows: tuple

    @property
    def dx_coefficients(self) -> tuple:
        return self.rows[0][: self.problem.n]

    @property
    def dp_coefficients(self) -> tuple:
        return self.rows[0][self.problem.n:]


def build_closure_system(prob: PdeProblem) -> ClosureSystem:
    n = prob.n
    F_u = differentiate(prob.F, prob.unknown)
    first = [simplify(differentiate(prob.F, x) + Mul((p, F_u)))
             for x, p in zip(prob.coordinates, map(as_expr, prob.slots))]
    first += [differentiate(prob.F, p) for p in prob.slots]
    rows = [tuple(first)]
    for i in range(n):
        row = [ZERO] * (2 * n)
        row[i] = as_expr(-1)
        row[n + i] = as_expr(1)
        rows.append(tuple(row))
    return ClosureSystem(prob, tuple(rows))


@dataclass(frozen=True)
class CharacteristicField:
    """Right-hand side of the characteristic system over ``state_names``."""

    problem: PdeProblem
    rates: tuple

    @property
    def state_names(self) -> tuple:
        return self.problem.state_names

    def rate(self, name: str) -> Expr:
        return self.rates[self.state_names.index(name)]

    def __iter__(self):
        return iter(zip(self.state_names, self.rates))


def characteristic_field(prob: PdeProblem) -> CharacteristicField:
    system = build_closure_system(prob)
    dx = system.dp_coefficients
    dp = tuple(simplify(-c) for c in system.dx_coefficients)
    du = simplify(sum((Mul((as_expr(p), c)) for p, c in zip(prob.slots, dx)), ZERO))
    return CharacteristicField(prob, dx + (du,) + dp)


# ------------------------------------------------------------ initial strip

@dataclass(frozen=True)
class StripData:
    """Boundary data ``x(r), u(r)`` and optionally some ``p_i(r)``.

    ``seeds`` give Newton starting values for the unspecified slots
    (default 1).
    """

    param: str
    r_range: tuple
    samples: int
    x: Mapping
    u: Expr
    p: Mapping = field(default_factory=dict)
    seeds: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("a strip needs at least one sample")
        a, b = self.r_range
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("strip range must be finite")

    def r_values(self) -> np.ndarray:
        a, b = self.r_range
        if self.samples == 1:
            return np.array([float(a)])
        return np.linspace(float(a), float(b), self.samples)


@dataclass(frozen=True)
class InitialStrip:
    problem: PdeProblem
    r: np.ndarray
    x: np.ndarray  # (m, n)
    u: np.ndarray  # (m,)
    p: np.ndarray  # (m, n)
    F_residual: np.ndarray
    strip_residual: np.ndarray
    tol: float = STRIP_TOL

    @property
    def samples(self) -> int:
        return len(self.r)

    def state(self) -> np.ndarray:
        """Initial states, shape ``(2n+1, m)`` in ``state_names`` order."""
        return np.vstack([self.x.T, self.u[None, :], self.p.T])

    def finite_difference_defect(self) -> np.ndarray:
        """``|du/dr - p . dx/dr|`` with centered differences over the samples."""
        if self.samples < 3:
            return np.zeros(self.samples)
        du = np.gradient(self.u, self.r, edge_order=2)
        dx = np.gradient(self.x, self.r, axis=0, edge_order=2)
        return np.abs(du - np.sum(self.p * dx, axis=1))


def complete_initial_strip(prob: PdeProblem, data: StripData, tol: float = STRIP_TOL,
                           damping: float = 0.5, max_iter: int = 50) -> InitialStrip:
    """Solve ``F = 0`` and the strip condition for the unspecified slots.

    Damped Newton per sample: each step is halved (``damping``) until the
    residual norm decreases.  With fewer unknowns than the two equations
    the step is a least-squares one and the result must still satisfy both.
    """
    n = prob.n
    r = data.param
    coords, slots = prob.coordinates, prob.slots
    missing = [c for c in coords if c not in data.x]
    if missing:
        raise ValueError(f"strip gives no data for coordinates {missing}")
    x_exprs = [as_expr(data.x[c]) for c in coords]
    u_expr = as_expr(data.u)
    known = {s: as_expr(e) for s, e in data.p.items()}
    for s in known:
        if s not in slots:
            raise ValueError(f"{s!r} is not a derivative slot of the problem")
    unknown = [s for s in slots if s not in known]
    if len(unknown) > 2:
        raise UnderdeterminedStrip(
            f"{len(unknown)} unspecified slots but only F = 0 and the strip condition to fix them")

    dx_dr = [differentiate(e, r) for e in x_exprs]
    du_dr = differentiate(u_expr, r)
    strip_eq = simplify(du_dr - sum((Mul((as_expr(s), d)) for s, d in zip(slots, dx_dr)), ZERO))

    state = list(coords) + [prob.unknown] + list(slots)
    F_fn = compile_expression(prob.F, state)
    strip_fn = compile_expression(strip_eq, [r] + list(slots))
    dF_fns = [compile_expression(differentiate(prob.F, s), state) for s in unknown]
    dS_fns = [compile_expression(differentiate(strip_eq, s), [r] + list(slots)) for s in unknown]
    bound = lambda e: compile_expression(e, [r])  # noqa: E731
    x_fns = [bound(e) for e in x_exprs]
    u_fn = bound(u_expr)
    known_fns = {s: bound(e) for s, e in known.items()}
    seed_fns = {s: bound(as_expr(data.seeds.get(s, 1))) for s in unknown}
    pos = {s: i for i, s in enumerate(slots)}

    rs = data.r_values()
    m = len(rs)
    X = np.empty((m, n))
    U = np.empty(m)
    P = np.empty((m, n))
    Fres = np.empty(m)
    Sres = np.empty(m)
    for j, rv in enumerate(rs):
        try:
            xv = [f(rv) for f in x_fns]
            uv = u_fn(rv)
            pv = [0.0] * n
            for s, f in known_fns.items():
                pv[pos[s]] = f(rv)
            for s in unknown:
                pv[pos[s]] = seed_fns[s](rv)
        except EvaluationError as exc:
            raise EvaluationError(f"strip data undefined at sample {j} (r = {rv}): {exc}") from exc

        def residual(pvec):
            return np.array([F_fn(*xv, uv, *pvec), strip_fn(rv, *pvec)])

        def jacobian(pvec):
            return np.array([[f(*xv, uv, *pvec) for f in dF_fns],
                             [f(rv, *pvec) for f in dS_fns]]).reshape(2, len(unknown))

        pv = _newton(residual, jacobian, pv, [pos[s] for s in unknown], tol, damping, max_iter, j)
        res = residual(pv)
        if np.max(np.abs(res)) > tol:
            if len(unknown) == 2:
                raise NewtonDivergence(j)
            raise OverdeterminedStrip(
                f"sample {j} (r = {rv}): F = {res[0]:.3g}, strip condition = {res[1]:.3g} "
                f"cannot both vanish with {len(unknown)} free slot(s)")
        X[j], U[j], P[j] = xv, uv, pv
        Fres[j], Sres[j] = abs(res[0]), abs(res[1])
    return InitialStrip(prob, rs, X, U, P, Fres, Sres, tol)


def _newton(residual, jacobian, p0, free, tol, damping, max_iter, index):
    p = list(p0)
    if not free:
        return p
    square = len(free) == 2
    try:
        g = residual(p)
        for _ in range(max_iter):
            norm = np.max(np.abs(g))
            if not np.isfinite(norm):
                raise NewtonDivergence(index, "non-finite residual in Newton iteration")
            if norm <= tol:
                return _polish(residual, jacobian, p, g, free, square)
            J = jacobian(p)
            if not np.all(np.isfinite(J)):
                raise NewtonDivergence(index, "non-finite Jacobian in Newton iteration")
            if square:
                step = np.linalg.solve(J, -g)
            else:
                step = np.linalg.lstsq(J, -g, rcond=None)[0]
            lam = 1.0
            while True:
                trial = list(p)
                for k, i in enumerate(free):
                    trial[i] = p[i] + lam * step[k]
                gt = residual(trial)
                if np.max(np.abs(gt)) < norm:
                    break
                lam *= damping
                if lam < 1e-6:
                    if square:
                        raise NewtonDivergence(index, "no descent direction in Newton iteration")
                    return p  # least-squares stationary point; caller checks the residual
            p, g = trial, gt
    except EvaluationError as exc:
        raise NewtonDivergence(index, f"evaluation failed in Newton iteration ({exc})") from exc
    except np.linalg.LinAlgError:
        raise NewtonDivergence(index, "singular Jacobian in Newton iteration") from None
    if square:
        raise NewtonDivergence(index)
    return p


def _polish(residual, jacobian, p, g, free, square, steps=3):
    # a few full Newton steps past tol, kept only while |residual| strictly drops
    norm = np.max(np.abs(g))
    for _ in range(steps):
        if norm == 0.0:
            break
        try:
            J = jacobian(p)
            step = np.linalg.solve(J, -g) if square else np.linalg.lstsq(J, -g, rcond=None)[0]
            trial = list(p)
            for k, i in enumerate(free):
                trial[i] = p[i] + step[k]
            gt = residual(trial)
        except (EvaluationError, np.linalg.LinAlgError):
            break
        nt = np.max(np.abs(gt))
        if not nt < norm:
            break
        p, g, norm = trial, gt, nt
    return p


# ------------------------------------------------------------- integration

@dataclass(frozen=True)
class CharacteristicTrajectory:
    """Samples ``(s, x, u, p, |F|)`` of one characteristic strip."""

    problem: PdeProblem
    r: float
    index: int
    s: np.ndarray
    states: np.ndarray  # (k, 2n+1)
    F_residual: np.ndarray
    termination: str

    def __len__(self):
        return len(self.s)

    def component(self, name: str) -> np.ndarray:
        return self.states[:, self.problem.state_names.index(name)]

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.problem.n]

    @property
    def u(self) -> np.ndarray:
        return self.states[:, self.problem.n]

    @property
    def p(self) -> np.ndarray:
        return self.states[:, self.problem.n + 1:]


class _Rates:
    def __init__(self, prob: PdeProblem):
        cf = characteristic_field(prob)
        names = list(prob.state_names)
        self.fns = [compile_expression(e, names, backend="numpy") for e in cf.rates]
        self.F = compile_expression(prob.F, names, backend="numpy")

    def __call__(self, Y):
        with np.errstate(all="ignore"):
            cols = Y.shape[1]
            return np.vstack([np.broadcast_to(f(*Y), (cols,)) for f in self.fns])

    def residual(self, Y):
        with np.errstate(all="ignore"):
            return np.abs(np.broadcast_to(self.F(*Y), (Y.shape[1],)))


def integrate_characteristics(prob: PdeProblem, strip: InitialStrip, s_span=DEFAULT_SPAN,
                              step: float = DEFAULT_STEP, blowup: float = BLOWUP_LIMIT,
                              bounds: Mapping[str, tuple] | None = None) -> list:
    """Classical RK4 with fixed step for every strip sample at once.

    A trajectory stops with ``Blowup`` when a state component exceeds
    ``blowup`` in magnitude (the offending step is not recorded) and with
    ``DomainExit`` when a coordinate leaves ``bounds``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    s0, s1 = (float(v) for v in s_span)
    if not (math.isfinite(s0) and math.isfinite(s1)) or s1 <= s0:
        raise ValueError("span must be a finite interval with s1 > s0")
    nsteps = max(1, math.ceil((s1 - s0) / step - 1e-9))
    grid = np.minimum(s0 + step * np.arange(nsteps + 1), s1)
    grid[-1] = s1

    rates = _Rates(prob)
    Y = strip.state().astype(float)
    m = Y.shape[1]
    dim = Y.shape[0]
    box = None
    if bounds:
        box = [(prob.coordinates.index(c), lo, hi) for c, (lo, hi) in bounds.items()]

    history = np.full((nsteps + 1, dim, m), np.nan)
    history[0] = Y
    length = np.full(m, nsteps + 1)
    reason = [SPAN_END] * m
    alive = np.ones(m, dtype=bool)

    def stage(Z, cols):
        K = rates(Z)
        bad = ~np.all(np.isfinite(K), axis=0)
        if bad.any():
            sane = np.all(np.isfinite(Z), axis=0) & (np.max(np.abs(Z), axis=0) <= blowup)
            culprit = bad & sane
            if culprit.any():
                j = int(cols[np.argmax(culprit)])
                raise EvaluationError(
                    f"characteristic field undefined on trajectory {j} (r = {strip.r[j]}) near s = {s:.6g}")
        return K

    for k in range(nsteps):
        if not alive.any():
            break
        s = grid[k]
        h = grid[k + 1] - grid[k]
        cols = np.flatnonzero(alive)
        Z = Y[:, cols]
        k1 = stage(Z, cols)
        k2 = stage(Z + 0.5 * h * k1, cols)
        k3 = stage(Z + 0.5 * h * k2, cols)
        k4 = stage(Z + h * k3, cols)
        with np.errstate(all="ignore"):
            Znew = Z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        blown = ~np.all(np.isfinite(Znew), axis=0) | (np.max(np.abs(Znew), axis=0) > blowup)
        exited = np.zeros(len(cols), dtype=bool)
        if box:
            for i, lo, hi in box:
                exited |= (Znew[i] < lo) | (Znew[i] > hi)
            exited &= ~blown
        for flag, why in ((blown, BLOWUP), (exited, DOMAIN_EXIT)):
            for c in cols[flag]:
                alive[c] = False
                length[c] = k + 1
                reason[c] = why
        keep = ~(blown | exited)
        Y[:, cols[keep]] = Znew[:, keep]
        history[k + 1][:, cols[keep]] = Znew[:, keep]

    out = []
    for j in range(m):
        L = length[j]
        states = np.ascontiguousarray(history[:L, :, j])
        sj = grid[:L].copy()
        res = rates.residual(states.T)
        for arr in (states, sj, res):
            arr.setflags(write=False)
        out.append(CharacteristicTrajectory(prob, float(strip.r[j]), j, sj, states, res, reason[j]))
    return out


def conservation_check(traj: CharacteristicTrajectory) -> float:
    """Largest ``|F|`` recorded along the trajectory."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return float(np.max(traj.F_residual))


# ---------------------------------------------------------- reconstruction

@dataclass(frozen=True)
class Reconstruction:
    point: tuple
    values: tuple
    multiplicity: int
    patches: tuple  # (trajectory index, step index) per sheet


def _patch_arrays(trajs):
    n = trajs[0].problem.n
    L = min(len(t) for t in trajs)
    X = np.stack([t.x[:L] for t in trajs])  # (m, L, n)
    U = np.stack([t.u[:L] for t in trajs])
    return X, U, L, n


def _bilinear_invert(P00, P10, P01, P11, q, iters=30):
    """Local coordinates ``(a, b)`` with ``a`` across trajectories, ``b`` along s."""
    a = b = 0.5
    for _ in range(iters):
        P = (1 - a) * (1 - b) * P00 + a * (1 - b) * P10 + (1 - a) * b * P01 + a * b * P11
        r = P - q
        Ja = (1 - b) * (P10 - P00) + b * (P11 - P01)
        Jb = (1 - a) * (P01 - P00) + a * (P11 - P10)
        det = Ja[0] * Jb[1] - Ja[1] * Jb[0]
        if det == 0 or not math.isfinite(det):
            return None
        da = (r[0] * Jb[1] - r[1] * Jb[0]) / det
        db = (Ja[0] * r[1] - Ja[1] * r[0]) / det
        a -= da
        b -= db
        if abs(da) < 1e-15 and abs(db) < 1e-15:
            break
        if abs(a) > 1e3 or abs(b) > 1e3:
            return None
    P = (1 - a) * (1 - b) * P00 + a * (1 - b) * P10 + (1 - a) * b * P01 + a * b * P11
    return a, b, float(np.max(np.abs(P - q)))


def reconstruct_solution(trajs: Sequence[CharacteristicTrajectory], points, tol: float = 1e-8,
                         allow_missing: bool = False) -> list:
    """Values of ``u`` at base points from the patches that cover them.

    Adjacent patches that agree on ``u`` (a point on a shared edge) count as
    one sheet, so ``multiplicity > 1`` means distinct characteristics carry
    the point.  Uncovered points raise :class:`OutsideCoverage` unless
    ``allow_missing`` (then multiplicity is 0).
    """
    if len(trajs) < 2:
        raise InsufficientTrajectories("reconstruction needs at least two trajectories")
    X, U, L, n = _patch_arrays(trajs)
    if n != 2:
        raise ValueError("reconstruction works on problems with two coordinates")
    if L < 2:
        raise InsufficientTrajectories("trajectories need at least two common samples")
    c00, c10 = X[:-1, :-1], X[1:, :-1]
    c01, c11 = X[:-1, 1:], X[1:, 1:]
    corners = np.stack([c00, c10, c01, c11])
    lo = np.min(corners, axis=0)
    hi = np.max(corners, axis=0)
    results = []
    for q in np.atleast_2d(np.asarray(points, dtype=float)):
        slack = tol * (1.0 + np.abs(q))
        cand = np.argwhere(np.all((lo - slack <= q) & (q <= hi + slack), axis=-1))
        hits = []
        for j, k in cand:
            inv = _bilinear_invert(c00[j, k], c10[j, k], c01[j, k], c11[j, k], q)
            if inv is None:
                continue
            a, b, err = inv
            eps = 1e-8
            if -eps <= a <= 1 + eps and -eps <= b <= 1 + eps and err <= tol * (1.0 + np.max(np.abs(q))):
                a, b = min(max(a, 0.0), 1.0), min(max(b, 0.0), 1.0)
                uval = ((1 - a) * (1 - b) * U[j, k] + a * (1 - b) * U[j + 1, k]
                        + (1 - a) * b * U[j, k + 1] + a * b * U[j + 1, k + 1])
                hits.append((int(j), int(k), float(uval)))
        if not hits:
            if allow_missing:
                results.append(Reconstruction(tuple(q), (), 0, ()))
                continue
            raise OutsideCoverage(q)
        sheets = _merge_sheets(hits)
        results.append(Reconstruction(tuple(float(v) for v in q),
                                      tuple(h[2] for h in sheets), len(sheets),
                                      tuple((h[0], h[1]) for h in sheets)))
    return results


def _merge_sheets(hits):
    parent = list(range(len(hits)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, (j1, k1, u1) in enumerate(hits):
        for t in range(i + 1, len(hits)):
            j2, k2, u2 = hits[t]
            if abs(j1 - j2) <= 1 and abs(k1 - k2) <= 1 and abs(u1 - u2) <= 1e-6 * (1 + abs(u1)):
                parent[find(t)] = find(i)
    seen = {}
    for i, h in enumerate(hits):
        seen.setdefault(find(i), h)
    return sorted(seen.values())


# ---------------------------------------------------------------- degeneracy

@dataclass(frozen=True)
class DegeneracyReport:
    s_star: float | None
    cells: tuple  # (r, s) of every cell where the strip Jacobian vanishes or changes sign
    determinants: np.ndarray  # (m-1, L) Jacobian per r-cell and s node
    s: np.ndarray
    r: np.ndarray  # cell midpoints

    @property
    def degenerate(self) -> bool:
        return self.s_star is not None


def strip_jacobian(trajs: Sequence[CharacteristicTrajectory]):
    """``det d(x)/d(s, r)`` on each r-cell at each common s node."""
    if len(trajs) < 2:
        raise InsufficientTrajectories("degeneracy detection needs at least two trajectories")
    prob = trajs[0].problem
    if prob.n != 2:
        raise ValueError("the strip Jacobian is square only for two coordinates")
    X, _, L, n = _patch_arrays(trajs)
    s = trajs[0].s[:L]
    for t in trajs[1:]:
        if not np.array_equal(t.s[:L], s):
            raise ValueError("trajectories do not share a common s grid")
    rates = _Rates(prob)
    V = np.stack([rates(t.states[:L].T)[:n].T for t in trajs])  # dx/ds, (m, L, n)
    r = np.array([t.r for t in trajs])
    dr = np.diff(r)
    if np.any(dr == 0):
        raise ValueError("repeated strip parameter values")
    Xr = (X[1:] - X[:-1]) / dr[:, None, None]
    Xs = 0.5 * (V[1:] + V[:-1])
    det = Xs[..., 0] * Xr[..., 1] - Xs[..., 1] * Xr[..., 0]
    return det, s, 0.5 * (r[1:] + r[:-1])


def detect_degeneracy(trajs: Sequence[CharacteristicTrajectory], rel_tol: float = 1e-8) -> DegeneracyReport:
    """Locate vanishing or sign-changing strip Jacobians.

    A node counts as vanishing when ``|det| <= rel_tol * |det at s0|`` for
    its r-cell; a sign change between two nodes is reported at the midpoint.
    """
    det, s, rmid = strip_jacobian(trajs)
    cells = []
    ref = np.abs(det[:, :1])
    small = np.abs(det) <= rel_tol * ref
    for j in range(det.shape[0]):
        for k in range(det.shape[1]):
            if k > 0 and small[j, k] and not small[j, k - 1]:
                cells.append((float(rmid[j]), float(s[k])))
            if k + 1 < det.shape[1] and not small[j, k] and not small[j, k + 1] \
                    and det[j, k] * det[j, k + 1] < 0:
                cells.append((float(rmid[j]), float(0.5 * (s[k] + s[k + 1]))))
    s_star = min(c[1] for c in cells) if cells else None
    det.setflags(write=False)
    return DegeneracyReport(s_star, tuple(sorted(cells, key=lambda c: (c[1], c[0]))), det, s, rmid)
