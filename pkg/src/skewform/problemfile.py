"""TOML problem files for the characteristics pipeline.

::

    [coordinates]
    names = ["t", "x"]          # optional: slots = ["p_t", "p_x"]

    [unknown]
    name = "u"

    [equation]
    F = "p_t + u*p_x"

    [strip]
    param = "r"
    range = [-1.0, 1.0]
    samples = 41
    t = "0"
    x = "r"
    u = "-r"
    # p_x = "-1"                # optional known slots

    [strip.seed]                # optional Newton seeds for unknown slots
    p_t = "0"

    [integration]               # optional defaults, overridden by CLI flags
    step = 0.001
    span = [0.0, 2.0]
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .charpit import PdeProblem, StripData
from .errors import ParseError, SkewformError
from .parser import parse_expression


class ProblemFileError(SkewformError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class ProblemSpec:
    problem: PdeProblem
    strip: StripData
    step: float | None = None
    span: tuple | None = None
    bounds: dict = field(default_factory=dict)


def _line_of(text, section, key=None):
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]", stripped)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return i
    return None


def loads_problem(text: str) -> ProblemSpec:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ProblemFileError(f"invalid TOML: {exc}", int(m.group(1)) if m else None) from None

    def need(section, key, kind=None):
        sec = doc.get(section)
        if not isinstance(sec, dict):
            raise ProblemFileError(f"missing [{section}] section", None)
        if key not in sec:
            raise ProblemFileError(f"[{section}] needs '{key}'", _line_of(text, section))
        value = sec[key]
        if kind is not None and not isinstance(value, kind):
            raise ProblemFileError(f"[{section}] '{key}' has the wrong type", _line_of(text, section, key))
        return value

    def expr(section, key, value):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = repr(value)
        if not isinstance(value, str):
            raise ProblemFileError(f"[{section}] '{key}' must be an expression string",
                                   _line_of(text, section, key))
        try:
            return parse_expression(value)
        except ParseError as exc:
            raise ProblemFileError(f"[{section}] '{key}': {exc}", _line_of(text, section, key)) from None

    coords = need("coordinates", "names", list)
    if not coords or not all(isinstance(c, str) for c in coords):
        raise ProblemFileError("[coordinates] names must be a list of strings", _line_of(text, "coordinates", "names"))
    slots = doc["coordinates"].get("slots")
    unknown = need("unknown", "name", str)
    F = expr("equation", "F", need("equation", "F"))
    try:
        problem = PdeProblem.create(coords, F, unknown, slots)
    except ValueError as exc:
        raise ProblemFileError(str(exc), _line_of(text, "equation", "F")) from None

    sec = doc.get("strip")
    if not isinstance(sec, dict):
        raise ProblemFileError("missing [strip] section")
    param = sec.get("param", "r")
    rng = need("strip", "range", list)
    samples = need("strip", "samples", int)
    if len(rng) != 2:
        raise ProblemFileError("[strip] range must be [a, b]", _line_of(text, "strip", "range"))
    xs = {c: expr("strip", c, need("strip", c)) for c in problem.coordinates}
    u = expr("strip", unknown, need("strip", unknown))
    p = {s: expr("strip", s, sec[s]) for s in problem.slots if s in sec}
    seeds_sec = sec.get("seed", {})
    seeds = {s: expr("strip.seed", s, v) for s, v in seeds_sec.items()}
    known_keys = {"param", "range", "samples", "seed", unknown} | set(problem.coordinates) | set(problem.slots)
    for k in sec:
        if k not in known_keys:
            raise ProblemFileError(f"[strip] unknown key '{k}'", _line_of(text, "strip", k))
    try:
        strip = StripData(param, (float(rng[0]), float(rng[1])), samples, xs, u, p, seeds)
    except (ValueError, TypeError) as exc:
        raise ProblemFileError(str(exc), _line_of(text, "strip")) from None

    integ = doc.get("integration", {})
    step = integ.get("step")
    span = integ.get("span")
    bounds = {k: tuple(v) for k, v in integ.get("bounds", {}).items()}
    return ProblemSpec(problem, strip, step, tuple(span) if span else None, bounds)


def load_problem(path) -> ProblemSpec:
    return loads_problem(Path(path).read_text(encoding="utf-8"))
