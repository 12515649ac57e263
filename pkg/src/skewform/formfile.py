"""Reader and writer for the line-oriented form file format.

Example::

    # rotation 1-form
    degree = 1
    coordinates = [x, y]
    signature = [+1, +1]
    y * dx
    -x * dy

See ``docs/formats.md`` for the exact grammar.
"""

from __future__ import annotations

import re
from pathlib import Path

from .errors import FormError, ParseError
from .expr import ONE, Const
from .forms import CoordinateChart, DifferentialForm
from .parser import parse_expression

_HEADER = re.compile(r"^(degree|coordinates|signature)\s*=\s*(.*)$")
_BASIS = re.compile(r"d([A-Za-z_][A-Za-z0-9_]*)(?:\s*\^\s*d([A-Za-z_][A-Za-z0-9_]*))*\s*$")
_LIST = re.compile(r"^\[(.*)\]$")


class FormFileError(FormError):
    def __init__(self, message, line):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _parse_list(text, line):
    m = _LIST.match(text.strip())
    if not m:
        raise FormFileError(f"expected a bracketed list, got {text!r}", line)
    body = m.group(1).strip()
    return [item.strip() for item in body.split(",")] if body else []


def _split_basis(text, chart, degree, line):
    """Split ``coeff * dA^dB`` into (coefficient text, index tuple)."""
    if degree == 0:
        return text, ()
    for m in re.finditer(r"d[A-Za-z_]", text):
        tail = text[m.start():]
        bm = _BASIS.match(tail)
        if not bm:
            continue
        names = re.findall(r"d([A-Za-z_][A-Za-z0-9_]*)", tail)
        if not all(n in chart.names for n in names):
            continue
        prefix = text[:m.start()].rstrip()
        if m.start() > 0 and (text[m.start() - 1].isalnum() or text[m.start() - 1] == "_"):
            continue
        if prefix in ("", "+"):
            coeff = "1"
        elif prefix == "-":
            coeff = "-1"
        elif prefix.endswith("*"):
            coeff = prefix[:-1]
        else:
            continue
        if len(names) != degree:
            raise FormFileError(f"basis {tail.strip()!r} has degree {len(names)}, expected {degree}", line)
        return coeff, tuple(chart.index(n) for n in names)
    raise FormFileError(f"term needs a trailing basis like 'dx^dy' over {list(chart.names)}", line)


def loads_form(text: str) -> DifferentialForm:
    degree = None
    coords = None
    signature = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        hm = _HEADER.match(line)
        if hm:
            key, value = hm.groups()
            if terms:
                raise FormFileError(f"header {key!r} after term lines", lineno)
            if key == "degree":
                try:
                    degree = int(value)
                except ValueError:
                    raise FormFileError(f"degree must be an integer, got {value!r}", lineno) from None
            elif key == "coordinates":
                coords = _parse_list(value, lineno)
                try:
                    CoordinateChart(tuple(coords))
                except ValueError as exc:
                    raise FormFileError(str(exc), lineno) from None
            else:
                try:
                    signature = [int(s) for s in _parse_list(value, lineno)]
                except ValueError:
                    raise FormFileError(f"signature entries must be +1 or -1, got {value!r}", lineno) from None
            continue
        if degree is None or coords is None:
            raise FormFileError("'degree' and 'coordinates' must precede term lines", lineno)
        chart = CoordinateChart(tuple(coords))
        coeff_text, idx = _split_basis(line, chart, degree, lineno)
        start = len(raw) - len(raw.lstrip())
        try:
            coeff = parse_expression(coeff_text)
        except ParseError as exc:
            raise FormFileError(
                f"parse error at offset {exc.offset + len(raw[:start].encode('utf-8'))}: expected {exc.expected}",
                lineno,
            ) from exc
        terms.append((idx, coeff))
    if degree is None or coords is None:
        raise FormFileError("missing 'degree' or 'coordinates' header", max(1, len(text.splitlines())))
    try:
        chart = CoordinateChart(tuple(coords), tuple(signature) if signature is not None else None)
        return DifferentialForm(chart, degree, terms)
    except (ValueError, FormError) as exc:
        raise FormFileError(str(exc), 1) from exc


def load_form(path) -> DifferentialForm:
    return loads_form(Path(path).read_text(encoding="utf-8"))


def dumps_form(w: DifferentialForm) -> str:
    lines = [f"degree = {w.degree}", f"coordinates = [{', '.join(w.chart.names)}]"]
    if w.chart.signature is not None:
        lines.append("signature = [" + ", ".join(f"{s:+d}" for s in w.chart.signature) + "]")
    for idx, c in w.terms.items():
        if not idx:
            lines.append(str(c))
        elif c == ONE:
            lines.append(w.basis_text(idx))
        else:
            lines.append(f"{_coeff_text(c)} * {w.basis_text(idx)}")
    return "\n".join(lines) + "\n"


def _coeff_text(c):
    # sums need parentheses so the trailing '*' binds the whole coefficient
    s = str(c)
    if isinstance(c, Const) or c.precedence > 1:
        return s
    return f"({s})"
