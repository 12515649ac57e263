"""Command line front end: ``skewform closure|characteristics|diagnose|potential``.

Exit codes: 0 success (whatever the verdict), 1 input or usage error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .charpit import (
    DEFAULT_SPAN,
    DEFAULT_STEP,
    STRIP_TOL,
    complete_initial_strip,
    conservation_check,
    detect_degeneracy,
    integrate_characteristics,
    reconstruct_solution,
)
from .errors import (
    EvaluationError,
    InsufficientTrajectories,
    NewtonDivergence,
    NotClosedError,
    OutsideCoverage,
    QuadratureFailure,
    SkewformError,
    UnboundVariable,
)
from .formfile import load_form
from .forms import ClosedSymbolic, Inconclusive, commutator_components, exterior_derivative, is_closed
from .grid import DEFAULT_TOL, commutator_csv, discrete_commutator, exactness_verdict, load_grid
from .potential import homotopy_potential
from .problemfile import load_problem

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def fmt(x) -> str:
    """Shortest round-trip decimal for floats."""
    return repr(float(x))


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


class Run:
    """Collects the report and writes every artifact through one place."""

    def __init__(self, command: str, input_path: Path, args):
        self.command = command
        self.input_path = input_path
        self.args = args
        self.manifest: list[str] = []
        self.results: dict = {}
        self.options: dict = {}

    def digest(self) -> str:
        return hashlib.sha256(self.input_path.read_bytes()).hexdigest()

    def write(self, path: Path, text: str):
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.manifest.append(str(path))

    def report(self) -> dict:
        return {
            "tool": "skewform",
            "version": __version__,
            "subcommand": self.command,
            "input": {"path": str(self.input_path), "sha256": self.digest()},
            "options": self.options,
            "results": self.results,
            "manifest": self.manifest,
        }

    def finish(self, text_summary: str):
        out = self.args.out
        if out is not None:
            path = Path(f"{out}.report.json")
            self.manifest.append(str(path))
            body = json.dumps(self.report(), indent=2) + "\n"
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(body)
        if self.args.format == "json":
            sys.stdout.write(json.dumps(self.report(), indent=2) + "\n")
        else:
            sys.stdout.write(text_summary)


# ---------------------------------------------------------------- closure

def cmd_closure(args) -> int:
    path = Path(args.form)
    w = load_form(path)
    run = Run("closure", path, args)
    tol = args.tol if args.tol is not None else 1e-10
    if not tol > 0:
        raise UsageError("--tol must be positive")
    run.options = {"tol": tol}
    buf = io.StringIO()
    dw = exterior_derivative(w)
    verdict = is_closed(w, threshold=tol)
    buf.write(f"form: degree {w.degree} on [{', '.join(w.chart.names)}]\n")
    buf.write("d(form):\n")
    d_terms = []
    for idx, c in dw.terms.items():
        buf.write(f"  {c} * {dw.basis_text(idx)}\n")
        d_terms.append({"basis": dw.basis_text(idx), "coefficient": str(c)})
    if dw.is_zero:
        buf.write("  0\n")
    run.results["d_terms"] = d_terms
    if w.degree == 1:
        K = commutator_components(w)
        names = w.chart.names
        buf.write("commutator K_ij = d_i a_j - d_j a_i:\n")
        entries = []
        for i, j, k in K.upper():
            buf.write(f"  K[{names[i]},{names[j]}] = {k}\n")
            entries.append({"i": names[i], "j": names[j], "value": str(k)})
        run.results["commutator"] = entries
    if isinstance(verdict, ClosedSymbolic):
        run.results["verdict"] = {"kind": "ClosedSymbolic"}
    else:
        run.results["verdict"] = {"kind": type(verdict).__name__,
                                  "witness": dw.basis_text(verdict.index),
                                  "coefficient": str(verdict.coefficient)}
    buf.write(f"verdict: {verdict}\n")
    if isinstance(verdict, ClosedSymbolic) and w.degree >= 1:
        buf.write("potential available: skewform potential <form> --base ... --at ...\n")
    elif isinstance(verdict, Inconclusive):
        buf.write("note: the simplifier could not prove the coefficient zero\n")
    if args.format == "csv":
        lines = ["basis,coefficient"] + [f"{t['basis']},{t['coefficient']}" for t in d_terms]
        run.finish("\n".join(lines) + "\n")
    else:
        run.finish(buf.getvalue())
    return EXIT_OK


# ------------------------------------------------------- characteristics

def _trajectory_csv(trajs, with_r: bool) -> str:
    prob = trajs[0].problem
    header = (["r"] if with_r else []) + ["s"] + list(prob.state_names) + ["F_residual"]
    lines = [",".join(header)]
    for t in trajs:
        prefix = [fmt(t.r)] if with_r else []
        for s, row, res in zip(t.s, t.states, t.F_residual):
            lines.append(",".join(prefix + [fmt(s)] + [fmt(v) for v in row] + [fmt(res)]))
    return "\n".join(lines) + "\n"


def _trajectory_json(trajs) -> str:
    prob = trajs[0].problem
    doc = {
        "state": list(prob.state_names),
        "trajectories": [
            {"r": float(t.r), "termination": t.termination, "s": [float(v) for v in t.s],
             "states": [[float(v) for v in row] for row in t.states],
             "F_residual": [float(v) for v in t.F_residual]}
            for t in trajs
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def cmd_characteristics(args) -> int:
    path = Path(args.problem)
    spec = load_problem(path)
    run = Run("characteristics", path, args)
    step = args.step if args.step is not None else (spec.step or DEFAULT_STEP)
    span = tuple(args.span) if args.span is not None else (spec.span or DEFAULT_SPAN)
    strip_data = spec.strip
    if args.samples is not None:
        from dataclasses import replace

        strip_data = replace(strip_data, samples=args.samples)
    tol = args.tol if args.tol is not None else STRIP_TOL
    if not step > 0 or not tol > 0:
        raise UsageError("--step and --tol must be positive")
    run.options = {"step": step, "span": [float(span[0]), float(span[1])],
                   "samples": strip_data.samples, "tol": tol}

    strip = complete_initial_strip(spec.problem, strip_data, tol=tol)
    trajs = integrate_characteristics(spec.problem, strip, span, step, bounds=spec.bounds or None)

    per = []
    for t in trajs:
        per.append({"r": float(t.r), "termination": t.termination, "samples": len(t),
                    "s_end": float(t.s[-1]), "max_F_residual": conservation_check(t)})
    max_res = max(p["max_F_residual"] for p in per)
    run.results["max_F_residual"] = max_res
    run.results["strip_max_residual"] = float(max(np.max(strip.F_residual), np.max(strip.strip_residual)))
    run.results["trajectories"] = per

    degeneracy = None
    if spec.problem.n == 2 and len(trajs) >= 2:
        try:
            degeneracy = detect_degeneracy(trajs)
        except (InsufficientTrajectories, ValueError):
            degeneracy = None
    if degeneracy is not None:
        run.results["degeneracy"] = {
            "s_star": degeneracy.s_star,
            "cells": [[r, s] for r, s in degeneracy.cells],
        }
    else:
        run.results["degeneracy"] = None

    queries = []
    for q in args.query or []:
        point = _floats(q)
        if spec.problem.n != 2 or len(point) != 2:
            raise UsageError("--query needs two coordinates on a two-coordinate problem")
        (rec,) = reconstruct_solution(trajs, [point], allow_missing=True)
        queries.append({"point": [float(v) for v in rec.point], "values": [float(v) for v in rec.values],
                        "multiplicity": rec.multiplicity})
    if queries:
        run.results["queries"] = queries

    if args.out is not None:
        if args.format == "json":
            run.write(Path(f"{args.out}.trajectories.json"), _trajectory_json(trajs))
        elif args.split:
            for t in trajs:
                run.write(Path(f"{args.out}_r{t.index:04d}.csv"), _trajectory_csv([t], with_r=False))
        else:
            run.write(Path(f"{args.out}.csv"), _trajectory_csv(trajs, with_r=True))

    buf = io.StringIO()
    buf.write(f"equation: {spec.problem.F} = 0\n")
    buf.write(f"trajectories: {len(trajs)}  step: {fmt(step)}  span: [{fmt(span[0])}, {fmt(span[1])}]\n")
    counts = {}
    for p in per:
        counts[p["termination"]] = counts.get(p["termination"], 0) + 1
    buf.write("termination: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())) + "\n")
    buf.write(f"max |F| residual: {fmt(max_res)}\n")
    if degeneracy is None:
        buf.write("degeneracy: not computed (needs two coordinates and two trajectories)\n")
    elif degeneracy.s_star is None:
        buf.write("degeneracy: none\n")
    else:
        buf.write(f"degeneracy: s* = {fmt(degeneracy.s_star)} ({len(degeneracy.cells)} cells)\n")
    for q in queries:
        vals = ", ".join(fmt(v) for v in q["values"]) or "uncovered"
        buf.write(f"u({', '.join(fmt(v) for v in q['point'])}) = {vals}  multiplicity {q['multiplicity']}\n")
    run.finish(buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------- diagnose

def cmd_diagnose(args) -> int:
    path = Path(args.grid)
    g = load_grid(path)
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    if not tol > 0:
        raise UsageError("--tol must be positive")
    run = Run("diagnose", path, args)
    run.options = {"tol": tol, "interior_only": args.interior_only, "h2_scaled": args.h2_scaled,
                   "det_tol": args.det_tol}
    rep = exactness_verdict(g, tol, args.interior_only, args.h2_scaled, args.det_tol)
    run.results = rep.to_dict()
    if args.out is not None and args.format == "csv" and g.dim >= 2:
        run.write(Path(f"{args.out}.commutator.csv"), commutator_csv(discrete_commutator(g)))
    buf = io.StringIO()
    buf.write(f"grid: {' x '.join(map(str, g.counts))} over [{', '.join(g.names)}]  ({rep.note})\n")
    for (a, b), n in sorted(rep.commutator.items()):
        buf.write(f"K[{g.names[a]},{g.names[b]}]: Linf {fmt(n.linf)}  L2 {fmt(n.l2)}  "
                  f"at ({', '.join(fmt(v) for v in n.location)})\n")
    if rep.residual is not None:
        for mu, n in enumerate(rep.residual):
            buf.write(f"R[{g.names[mu]}]: Linf {fmt(n.linf)}  L2 {fmt(n.l2)}\n")
    if rep.degeneracy is not None:
        buf.write(f"degenerate cells: {len(rep.degeneracy.cells)}\n")
    buf.write(f"verdict: {rep.verdict} (tol {fmt(rep.effective_tol)})\n")
    run.finish(buf.getvalue())
    return EXIT_OK


# -------------------------------------------------------------- potential

def cmd_potential(args) -> int:
    path = Path(args.form)
    w = load_form(path)
    run = Run("potential", path, args)
    base = _floats(args.base) if args.base else [0.0] * w.chart.dim
    params = {}
    for item in args.param or []:
        name, _, value = item.partition("=")
        try:
            params[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--param expects name=value, got {item!r}") from None
    tol = args.tol if args.tol is not None else 1e-8
    if not tol > 0:
        raise UsageError("--tol must be positive")
    run.options = {"base": base, "tol": tol, "params": params}
    values = []
    lines = []
    for at in args.at:
        x = _floats(at)
        if len(x) != w.chart.dim or len(base) != w.chart.dim:
            raise UsageError(f"points need {w.chart.dim} coordinates")
        v = homotopy_potential(w, base, x, params, tol)
        if isinstance(v, dict):
            entry = {"at": x, "coefficients": {w.basis_text(k) or "1": c for k, c in v.items()}}
            lines.append(f"h(w)({', '.join(fmt(c) for c in x)}) = "
                         + " + ".join(f"{fmt(c)}*{w.basis_text(k)}" for k, c in v.items()))
        else:
            entry = {"at": x, "value": v}
            lines.append(f"h(w)({', '.join(fmt(c) for c in x)}) = {fmt(v)}")
        values.append(entry)
    run.results["potential"] = values
    if args.format == "csv":
        header = ",".join(list(w.chart.names) + ["value"])
        rows = [",".join([fmt(c) for c in e["at"]] + [fmt(e["value"])]) for e in values if "value" in e]
        run.finish("\n".join([header] + rows) + "\n")
    else:
        run.finish("\n".join(lines) + "\n")
    return EXIT_OK


# ------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PREFIX",
                        help="write PREFIX.report.json (and data files) next to PREFIX")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="json: print the report as JSON; csv: tabular output")
    common.add_argument("--tol", type=float, default=None,
                        help="closure: sampling threshold; characteristics: strip tol; "
                             "diagnose: verdict tol; potential: quadrature tol")

    p = _Parser(prog="skewform", description="Integrability diagnostics with skew-symmetric forms.")
    p.add_argument("--version", action="version", version=f"skewform {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("closure", parents=[common], help="d(form), commutator and closure verdict")
    c.add_argument("form")
    c.set_defaults(func=cmd_closure)

    ch = sub.add_parser("characteristics", parents=[common], help="integrate characteristic strips")
    ch.add_argument("problem")
    ch.add_argument("--step", type=float)
    ch.add_argument("--span", type=float, nargs=2, metavar=("S0", "S1"))
    ch.add_argument("--samples", type=int)
    ch.add_argument("--split", action="store_true", help="one CSV per strip sample")
    ch.add_argument("--query", action="append", metavar="X1,X2",
                    help="reconstruct u at a base point (repeatable)")
    ch.set_defaults(func=cmd_characteristics)

    d = sub.add_parser("diagnose", parents=[common], help="commutator of sampled grid data")
    d.add_argument("grid")
    d.add_argument("--interior-only", action="store_true")
    d.add_argument("--h2-scaled", action="store_true", help="multiply tol by the squared largest spacing")
    d.add_argument("--det-tol", type=float, default=0.0)
    d.set_defaults(func=cmd_diagnose)

    pt = sub.add_parser("potential", parents=[common], help="homotopy potential of a closed form")
    pt.add_argument("form")
    pt.add_argument("--base", metavar="X1,X2,...")
    pt.add_argument("--at", action="append", required=True, metavar="X1,X2,...")
    pt.add_argument("--param", action="append", metavar="NAME=VALUE")
    pt.set_defaults(func=cmd_potential)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UnboundVariable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NewtonDivergence, QuadratureFailure, EvaluationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NotClosedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OutsideCoverage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SkewformError, UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
