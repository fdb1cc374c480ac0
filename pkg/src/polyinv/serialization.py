"""JSON set descriptions, a compact inline set syntax for the command line,
and a lossless JSON writer."""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError
from .geometry import Box, HalfSpace, Polyhedron, PolyUnion


def _number(v) -> float:
    if isinstance(v, str):
        table = {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf}
        if v.strip().lower() not in table:
            raise FormatError(f"unknown numeric sentinel {v!r}")
        return table[v.strip().lower()]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"expected a number, got {v!r}")
    return float(v)


def _vector(values) -> np.ndarray:
    if not isinstance(values, list):
        raise FormatError(f"expected a list of numbers, got {values!r}")
    return np.array([_number(v) for v in values], dtype=float)


def box_from_json(obj) -> Box:
    if isinstance(obj, dict) and "box" in obj:
        obj = obj["box"]
    if not isinstance(obj, dict) or not {"lo", "hi"} <= set(obj):
        raise FormatError('a box needs "lo" and "hi"')
    return Box(_vector(obj["lo"]), _vector(obj["hi"]))


def set_from_json(obj) -> PolyUnion:
    """Decode a set description into a union of polyhedra."""
    kinds = [k for k in obj if k != "dim"] if isinstance(obj, dict) else []
    if len(kinds) != 1:
        raise FormatError("a set must be an object with exactly one of box/polyhedron/halfspace/union")
    kind = kinds[0]
    body = obj[kind]
    if kind == "box":
        P = box_from_json(body).to_polyhedron()
        return PolyUnion.of(P)
    if kind == "polyhedron":
        if not isinstance(body, dict) or not {"C", "d"} <= set(body):
            raise FormatError('a polyhedron needs "C" and "d"')
        rows = body["C"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise FormatError('"C" must be a list of rows')
        d = _vector(body["d"])
        dim = body.get("dim")
        if not rows:
            if dim is None:
                raise FormatError('an unconstrained polyhedron needs "dim"')
            return PolyUnion.of(Polyhedron.universe(int(dim)))
        C = np.array([_vector(r) for r in rows]) if len({len(r) for r in rows}) == 1 else None
        if C is None:
            raise DimensionError("rows of C have different lengths")
        return PolyUnion.of(Polyhedron(C, d, -1 if dim is None else int(dim)))
    if kind == "halfspace":
        if not isinstance(body, dict) or not {"c", "d"} <= set(body):
            raise FormatError('a halfspace needs "c" and "d"')
        return PolyUnion.of(HalfSpace(_vector(body["c"]), _number(body["d"])).to_polyhedron())
    if kind == "union":
        if not isinstance(body, list):
            raise FormatError('"union" must be a list of sets')
        members = [set_from_json(s) for s in body]
        dims = {m.dim for m in members}
        if "dim" in obj:
            dims.add(int(obj["dim"]))
        if not dims:
            raise FormatError('an empty union needs "dim"')
        if len(dims) != 1:
            raise DimensionError("union members have different dimensions")
        return PolyUnion([p for m in members for p in m], dims.pop())
    raise FormatError(f"unknown set kind {kind!r}")


def polyhedron_to_json(P: Polyhedron) -> dict:
    return {"polyhedron": {"C": P.C.tolist(), "d": P.d.tolist(), "dim": P.dim}}


def union_to_json(U: PolyUnion) -> dict:
    return {"union": [polyhedron_to_json(p) for p in U], "dim": U.dim}


def box_to_json(B: Box) -> dict:
    return {"box": {"lo": B.lo.tolist(), "hi": B.hi.tolist()}}


def _fmt(v: float) -> str:
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    if math.isnan(v):
        raise ValueError("cannot serialize NaN")
    if v == 0.0:
        return "0.0"
    text = format(v, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def dumps(obj, indent: int | None = None) -> str:
    """JSON text with every float written to 17 significant digits.

    Infinities become the strings ``"inf"``/``"-inf"``, matching the set schema.
    """

    def enc(o, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        sep = ", " if indent is None else ","
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{" + sep.join(items) + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(isinstance(x, (int, float, np.floating, np.integer)) and not isinstance(x, bool) for x in o):
                return "[" + ", ".join(enc(x, level + 1) for x in o) + "]"
            return "[" + sep.join(pad + enc(x, level + 1) for x in o) + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt(float(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, np.ndarray):
            return enc(o.tolist(), level)
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0)


_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?inf"
_INTERVAL = re.compile(rf"\[\s*({_NUM})\s*,\s*({_NUM})\s*\]")
_TERM = re.compile(r"([+-]?)\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*([a-zA-Z]\d*)?")


def parse_box(text: str) -> Box:
    """``"[0,0.2]x[0.8,1]"`` style box; ``inf``/``-inf`` allowed as endpoints."""
    text = text.strip()
    pieces = re.split(r"\s*[x×]\s*(?=\[)", text)
    lo, hi = [], []
    for piece in pieces:
        m = _INTERVAL.fullmatch(piece.strip())
        if not m:
            raise FormatError(f"cannot parse interval {piece!r}")
        lo.append(float(m.group(1)))
        hi.append(float(m.group(2)))
    return Box(lo, hi)


def _linear(expr: str, dim: int) -> tuple[np.ndarray, float]:
    """Coefficients and constant of a linear expression in ``y``/``y1..yn`` (or ``x``)."""
    coef = np.zeros(dim)
    const = 0.0
    expr = expr.replace(" ", "")
    if not expr:
        raise FormatError("empty linear expression")
    pos = 0
    while pos < len(expr):
        m = _TERM.match(expr, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise FormatError(f"cannot parse linear expression {expr!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        value = float(m.group(2)) if m.group(2) else 1.0
        var = m.group(3)
        if var is None:
            const += sign * value
        else:
            index = int(var[1:]) - 1 if len(var) > 1 else 0
            if len(var) == 1 and dim != 1:
                raise FormatError(f"variable {var!r} is ambiguous in dimension {dim}; use {var}1..{var}{dim}")
            if not 0 <= index < dim:
                raise DimensionError(f"variable {var!r} out of range for dimension {dim}")
            coef[index] += sign * value
        pos = m.end()
        if pos < len(expr) and expr[pos] not in "+-":
            raise FormatError(f"cannot parse linear expression {expr!r}")
    return coef, const


def parse_constraints(text: str, dim: int) -> Polyhedron:
    """``"{y1 <= y2, y2 >= -1}"``: a conjunction of linear inequalities."""
    body = text.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise FormatError(f"constraint set must be wrapped in braces: {text!r}")
    rows, offs = [], []
    for clause in re.split(r"[,;&]", body[1:-1]):
        clause = clause.strip()
        if not clause:
            continue
        m = re.fullmatch(r"(.+?)(<=|>=|=<|=>)(.+)", clause)
        if not m:
            raise FormatError(f"expected an inequality, got {clause!r}")
        left, op, right = m.groups()
        a, ca = _linear(left, dim)
        b, cb = _linear(right, dim)
        if op in ("<=", "=<"):
            rows.append(a - b)
            offs.append(cb - ca)
        else:
            rows.append(b - a)
            offs.append(ca - cb)
    if not rows:
        return Polyhedron.universe(dim)
    return Polyhedron(np.array(rows), offs, dim)


def parse_set_arg(text: str, dim: int | None = None) -> PolyUnion:
    """Read a set given on the command line.

    Accepts a path to a JSON file, inline JSON, a box such as ``[0,1]x[0,1]``
    or a brace-wrapped list of inequalities such as ``{y1 <= y2}``.
    """
    stripped = text.strip()
    path = Path(stripped)
    if not stripped.startswith(("{", "[")) and path.exists():
        try:
            return set_from_json(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: malformed JSON: {exc}") from None
    if stripped.startswith('{"') or stripped.startswith("{ \""):
        try:
            return set_from_json(json.loads(stripped))
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed JSON set: {exc}") from None
    if stripped.startswith("["):
        return PolyUnion.of(parse_box(stripped).to_polyhedron())
    if stripped.startswith("{"):
        if dim is None:
            raise FormatError("inline constraints need a known dimension")
        return PolyUnion.of(parse_constraints(stripped, dim))
    raise FormatError(f"cannot interpret set {text!r} (not a file, JSON, box or constraint list)")


def parse_box_arg(text: str) -> Box:
    stripped = text.strip()
    path = Path(stripped)
    if not stripped.startswith(("{", "[")) and path.exists():
        return box_from_json(json.loads(path.read_text()))
    if stripped.startswith("{"):
        return box_from_json(json.loads(stripped))
    return parse_box(stripped)
