"""Commutator diagnostics for sampled 1-form coefficients on uniform grids.

Given samples of ``A_mu`` (and optionally ``psi``) on a rectangular grid,
measures how far ``d psi = A_mu dxi^mu`` is from an identity: the
commutator ``K_ab = D_a A_b - D_b A_a`` and the residual
``R_mu = D_mu psi - A_mu``.  Derivatives are second order everywhere
(central inside, one-sided on the boundary).  Only the flat-chart
commutator is computed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from .errors import GridFormatError, GridTooSmall, MissingPsi

DEFAULT_TOL = 1e-6
FLAT_CHART_NOTE = "flat-chart commutator (metric-form term omitted)"


@dataclass(frozen=True, eq=False)
class GridField:
    names: tuple
    mins: tuple
    maxs: tuple
    counts: tuple
    A: tuple  # one array of shape ``counts`` per axis
    psi: np.ndarray | None = None
    det: np.ndarray | None = None

    def __post_init__(self):
        m = len(self.names)
        for attr in ("mins", "maxs", "counts"):
            if len(getattr(self, attr)) != m:
                raise GridFormatError(f"{attr} must have one entry per axis")
        if len(set(self.names)) != m:
            raise GridFormatError("axis names must be distinct")
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if any(c < 3 for c in counts):
            raise GridTooSmall("every axis needs at least 3 nodes")
        for lo, hi in zip(self.mins, self.maxs):
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise GridFormatError(f"axis range [{lo}, {hi}] must have max > min")
        if len(self.A) != m:
            raise GridFormatError(f"expected {m} components A_1..A_{m}, got {len(self.A)}")
        arrays = []
        for a in self.A:
            a = np.asarray(a, dtype=float)
            if a.size != math.prod(counts):
                raise GridFormatError(f"component has {a.size} values, grid has {math.prod(counts)} nodes")
            arrays.append(a.reshape(counts))
        object.__setattr__(self, "A", tuple(arrays))
        for attr in ("psi", "det"):
            v = getattr(self, attr)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.size != math.prod(counts):
                    raise GridFormatError(f"{attr} has {v.size} values, grid has {math.prod(counts)} nodes")
                object.__setattr__(self, attr, v.reshape(counts))

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def spacing(self) -> tuple:
        return tuple((hi - lo) / (c - 1) for lo, hi, c in zip(self.mins, self.maxs, self.counts))

    def axes(self) -> list:
        return [np.linspace(lo, hi, c) for lo, hi, c in zip(self.mins, self.maxs, self.counts)]

    def mesh(self) -> list:
        return np.meshgrid(*self.axes(), indexing="ij")

    def node(self, index) -> tuple:
        return tuple(float(ax[i]) for ax, i in zip(self.axes(), index))

    @classmethod
    def sample(cls, names, mins, maxs, counts, A_funcs, psi=None, det=None):
        """Build a grid by evaluating callables ``f(*coords)`` at the nodes."""
        axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(mins, maxs, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")

        def ev(f):
            return np.broadcast_to(np.asarray(f(*mesh), dtype=float), mesh[0].shape).copy()

        return cls(tuple(names), tuple(mins), tuple(maxs), tuple(counts),
                   tuple(ev(f) for f in A_funcs),
                   None if psi is None else ev(psi), None if det is None else ev(det))


def derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order central differences inside, second-order one-sided at the ends."""
    return np.gradient(values, h, axis=axis, edge_order=2)


@dataclass(frozen=True, eq=False)
class CommutatorField:
    grid: GridField
    components: dict  # (a, b) with a < b -> array

    def __getitem__(self, ab):
        a, b = ab
        if a < b:
            return self.components[(a, b)]
        if a > b:
            return -self.components[(b, a)]
        return np.zeros(self.grid.counts)


def discrete_commutator(f: GridField) -> CommutatorField:
    if f.dim < 2:
        raise GridTooSmall("the commutator needs at least two axes")
    h = f.spacing
    # D_a A_b for every ordered pair, computed once
    D = {(a, b): derivative(f.A[b], h[a], a) for a in range(f.dim) for b in range(f.dim) if a != b}
    comps = {(a, b): D[(a, b)] - D[(b, a)] for a in range(f.dim) for b in range(a + 1, f.dim)}
    return CommutatorField(f, comps)


@dataclass(frozen=True)
class Norm:
    linf: float
    l2: float
    argmax: tuple  # node index
    location: tuple  # node coordinates


def _trapezoid_weights(shape):
    w = np.ones(shape)
    for axis, n in enumerate(shape):
        edge = [slice(None)] * len(shape)
        for i in (0, n - 1):
            edge[axis] = i
            w[tuple(edge)] *= 0.5
    return w


def _interior(arr):
    return arr[tuple(slice(1, -1) for _ in range(arr.ndim))]


def array_norm(arr: np.ndarray, grid: GridField, interior_only: bool = False, tie_rtol: float = 1e-12) -> Norm:
    """L-infinity, L2 and the location of the maximum of ``|arr|``.

    ``L2 = sqrt(h_1 ... h_m * sum(w * arr**2))`` with trapezoidal weights
    ``w`` (halved on each boundary face), so a constant integrates exactly.
    Values within ``tie_rtol`` of the maximum count as ties; the
    lexicographically smallest node wins.
    """
    offset = 0
    if interior_only:
        arr = _interior(arr)
        offset = 1
    a = np.abs(arr)
    linf = float(np.max(a)) if a.size else 0.0
    l2 = math.sqrt(math.prod(grid.spacing) * float(np.sum(_trapezoid_weights(arr.shape) * arr * arr)))
    if a.size == 0 or linf == 0.0:
        idx = (0,) * arr.ndim
    else:
        flat = int(np.argmax(a.ravel() >= linf * (1 - tie_rtol)))
        idx = np.unravel_index(flat, a.shape)
    idx = tuple(int(i) + offset for i in idx)
    return Norm(linf, l2, idx, grid.node(idx))


def nonidentity_norm(K: CommutatorField, interior_only: bool = False) -> dict:
    return {ab: array_norm(arr, K.grid, interior_only) for ab, arr in K.components.items()}


@dataclass(frozen=True, eq=False)
class Residual:
    arrays: tuple
    norms: tuple


def evolutionary_residual(f: GridField, interior_only: bool = False) -> Residual:
    if f.psi is None:
        raise MissingPsi("the grid carries no psi samples")
    h = f.spacing
    arrays = tuple(derivative(f.psi, h[mu], mu) - f.A[mu] for mu in range(f.dim))
    return Residual(arrays, tuple(array_norm(r, f, interior_only) for r in arrays))


@dataclass(frozen=True)
class DegeneracyLocus:
    cells: tuple  # lowest-corner node indices
    nodes: tuple  # node indices with |det| <= tol


def degeneracy_locus(det: np.ndarray, tol: float = 0.0) -> DegeneracyLocus:
    """Cells whose determinant changes sign across an edge or touches ``|det| <= tol``."""
    det = np.asarray(det, dtype=float)
    shape = det.shape
    flagged = np.zeros(tuple(c - 1 for c in shape), dtype=bool)
    for axis in range(det.ndim):
        lo = [slice(None)] * det.ndim
        hi = [slice(None)] * det.ndim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        change = det[tuple(lo)] * det[tuple(hi)] < 0  # edges along ``axis``
        # an edge along ``axis`` bounds every cell that contains it
        for offsets in product((0, 1), repeat=det.ndim - 1):
            sel = []
            it = iter(offsets)
            for ax in range(det.ndim):
                if ax == axis:
                    sel.append(slice(None))
                else:
                    sel.append(slice(0, -1) if next(it) == 0 else slice(1, None))
            flagged |= change[tuple(sel)]
    near = np.abs(det) <= tol
    for corner in product((0, 1), repeat=det.ndim):
        sel = tuple(slice(c, c + n - 1) for c, n in zip(corner, shape))
        flagged |= near[sel]
    cells = tuple(tuple(int(i) for i in idx) for idx in np.argwhere(flagged))
    nodes = tuple(tuple(int(i) for i in idx) for idx in np.argwhere(near))
    return DegeneracyLocus(cells, nodes)


@dataclass
class NonidentityReport:
    commutator: dict  # (a, b) -> Norm
    residual: tuple | None
    identical: bool
    tol: float
    effective_tol: float
    interior_only: bool
    degeneracy: DegeneracyLocus | None = None
    note: str = FLAT_CHART_NOTE
    names: tuple = field(default=())

    @property
    def verdict(self) -> str:
        return "Identical" if self.identical else "Nonidentical"

    @property
    def max_commutator(self) -> float:
        return max((n.linf for n in self.commutator.values()), default=0.0)

    def to_dict(self) -> dict:
        def norm(n):
            return {"linf": n.linf, "l2": n.l2, "argmax": list(n.argmax), "location": list(n.location)}

        out = {
            "verdict": self.verdict,
            "tol": self.tol,
            "effective_tol": self.effective_tol,
            "interior_only": self.interior_only,
            "note": self.note,
            "commutator": [
                {"pair": [self.names[a], self.names[b]], **norm(n)} for (a, b), n in sorted(self.commutator.items())
            ],
        }
        if self.residual is not None:
            out["residual"] = [{"component": self.names[mu], **norm(n)} for mu, n in enumerate(self.residual)]
        if self.degeneracy is not None:
            out["degeneracy"] = {"cells": [list(c) for c in self.degeneracy.cells],
                                 "nodes": [list(c) for c in self.degeneracy.nodes]}
        return out


def exactness_verdict(f: GridField, tol: float = DEFAULT_TOL, interior_only: bool = False,
                      scale_with_h2: bool = False, det_tol: float = 0.0) -> NonidentityReport:
    """Identical when every commutator (and residual) L-infinity norm is within ``tol``.

    ``scale_with_h2`` multiplies ``tol`` by the squared largest spacing.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    eff = tol * max(f.spacing) ** 2 if scale_with_h2 else tol
    K = nonidentity_norm(discrete_commutator(f), interior_only) if f.dim >= 2 else {}
    R = evolutionary_residual(f, interior_only).norms if f.psi is not None else None
    worst = [n.linf for n in K.values()] + ([n.linf for n in R] if R else [])
    identical = all(v <= eff for v in worst)
    degeneracy = degeneracy_locus(f.det, det_tol) if f.det is not None else None
    return NonidentityReport(K, R, identical, tol, eff, interior_only, degeneracy, names=f.names)


# ------------------------------------------------------------------ CSV io

def _parse_meta(lines):
    meta = {}
    for lineno, line in lines:
        body = line[1:].strip()
        if "=" not in body:
            continue
        key, value = (s.strip() for s in body.split("=", 1))
        meta[key] = (lineno, [v.strip() for v in value.split(",") if v.strip()])
    return meta


def loads_grid(text: str) -> GridField:
    """Parse the grid CSV format (``# key = value`` metadata, header, rows)."""
    lines = text.splitlines()
    comments = [(i + 1, ln) for i, ln in enumerate(lines) if ln.lstrip().startswith("#")]
    meta = _parse_meta(comments)
    for key in ("names", "mins", "maxs", "counts"):
        if key not in meta:
            raise GridFormatError(f"missing '# {key} = ...' metadata line", 1)
    names = tuple(meta["names"][1])
    try:
        mins = tuple(float(v) for v in meta["mins"][1])
        maxs = tuple(float(v) for v in meta["maxs"][1])
    except ValueError:
        raise GridFormatError("mins/maxs must be numbers", meta["mins"][0]) from None
    try:
        counts = tuple(int(v) for v in meta["counts"][1])
    except ValueError:
        raise GridFormatError("counts must be integers", meta["counts"][0]) from None
    m = len(names)
    for key, vals in (("mins", mins), ("maxs", maxs), ("counts", counts)):
        if len(vals) != m:
            raise GridFormatError(f"'{key}' lists {len(vals)} entries for {m} axes", meta[key][0])

    data = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip() and not ln.lstrip().startswith("#")]
    if not data:
        raise GridFormatError("no header row", len(lines))
    header_line, header = data[0]
    cols = [c.strip() for c in next(csv.reader([header]))]
    expected = list(names) + [f"A_{k + 1}" for k in range(m)]
    if cols[: 2 * m] != expected:
        raise GridFormatError(f"header must start with {','.join(expected)}, got {','.join(cols)}", header_line)
    extras = cols[2 * m:]
    for c in extras:
        if c not in ("psi", "det"):
            raise GridFormatError(f"unknown column {c!r}", header_line)
    if len(set(extras)) != len(extras):
        raise GridFormatError("duplicate column", header_line)
    rows = data[1:]
    total = math.prod(counts)
    if len(rows) != total:
        raise GridFormatError(f"{len(rows)} data rows but the axis counts give {total} nodes",
                              rows[-1][0] if rows else header_line)
    values = np.empty((total, len(cols)))
    for k, (lineno, ln) in enumerate(rows):
        fields = next(csv.reader([ln]))
        if len(fields) != len(cols):
            raise GridFormatError(f"expected {len(cols)} fields, got {len(fields)}", lineno)
        try:
            values[k] = [float(v) for v in fields]
        except ValueError:
            raise GridFormatError("non-numeric field", lineno) from None
    try:
        grid = GridField(names, mins, maxs, counts, tuple(values[:, m + k] for k in range(m)),
                         values[:, cols.index("psi")] if "psi" in extras else None,
                         values[:, cols.index("det")] if "det" in extras else None)
    except GridFormatError as exc:
        raise GridFormatError(str(exc), header_line) from None
    # coordinates must follow row-major order over the declared axes
    mesh = grid.mesh()
    for ax in range(m):
        expected_coord = mesh[ax].ravel()
        bad = np.flatnonzero(~np.isclose(values[:, ax], expected_coord, rtol=1e-9, atol=1e-12))
        if bad.size:
            raise GridFormatError(
                f"coordinate {names[ax]} = {values[bad[0], ax]} does not match node {expected_coord[bad[0]]}",
                rows[bad[0]][0])
    return grid


def load_grid(path) -> GridField:
    return loads_grid(Path(path).read_text(encoding="utf-8"))


def dumps_grid(f: GridField) -> str:
    buf = io.StringIO()
    buf.write(f"# names = {', '.join(f.names)}\n")
    buf.write(f"# mins = {', '.join(repr(float(v)) for v in f.mins)}\n")
    buf.write(f"# maxs = {', '.join(repr(float(v)) for v in f.maxs)}\n")
    buf.write(f"# counts = {', '.join(str(c) for c in f.counts)}\n")
    cols = list(f.names) + [f"A_{k + 1}" for k in range(f.dim)]
    extra = [("psi", f.psi), ("det", f.det)]
    cols += [name for name, arr in extra if arr is not None]
    buf.write(",".join(cols) + "\n")
    mesh = [m.ravel() for m in f.mesh()]
    arrays = mesh + [a.ravel() for a in f.A] + [arr.ravel() for _, arr in extra if arr is not None]
    for row in zip(*arrays):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def commutator_csv(K: CommutatorField) -> str:
    f = K.grid
    pairs = sorted(K.components)
    cols = list(f.names) + [f"K_{a + 1}_{b + 1}" for a, b in pairs]
    mesh = [m.ravel() for m in f.mesh()]
    arrays = mesh + [K.components[p].ravel() for p in pairs]
    lines = [",".join(cols)]
    for row in zip(*arrays):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


__all__ = [
    "GridField", "CommutatorField", "Norm", "Residual", "DegeneracyLocus", "NonidentityReport",
    "derivative", "discrete_commutator", "array_norm", "nonidentity_norm", "evolutionary_residual",
    "degeneracy_locus", "exactness_verdict", "loads_grid", "load_grid", "dumps_grid", "commutator_csv",
]
