"""H-representation polyhedra, unions of them, boxes, and the LP-backed
operations the propagation code is built on."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import lp
from .errors import DimensionError, EmptySetError, LPError, UnboundedSetError
from .lp import EPS_FEAS

_ZERO_COEF = 1e-12
# relative size below which a computed coefficient is rounding noise of a true zero
CANCEL_TOL = 1e-12


def snap_cancelled(values: np.ndarray, magnitude: np.ndarray) -> np.ndarray:
    """Zero the entries of ``values`` that are negligible next to ``magnitude``.

    ``magnitude`` bounds the absolute size of the terms summed into each
    entry. Leaving cancellation noise in place would let row normalization
    blow a true ``0 x <= d`` row up into a spurious constraint.
    """
    return np.where(np.abs(values) <= CANCEL_TOL * magnitude, 0.0, values)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HalfSpace:
    """The set ``{x : normal @ x <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", _frozen(self.normal).reshape(-1))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def to_polyhedron(self) -> "Polyhedron":
        return Polyhedron(self.normal[None, :], [self.offset])


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """Closed polyhedron ``{x : C x <= d}``.

    A polyhedron without constraints is the whole space; emptiness is only
    known after asking the LP oracle (see :func:`poly_is_empty`).
    """

    C: np.ndarray
    d: np.ndarray
    dim: int = field(default=-1)

    def __post_init__(self):
        d = _frozen(self.d).reshape(-1)
        C = np.array(self.C, dtype=float)
        dim = self.dim
        if C.size == 0:
            if dim < 0:
                dim = C.shape[1] if C.ndim == 2 else -1
            if dim < 1:
                raise DimensionError("dimension of an unconstrained polyhedron must be given")
            C = np.zeros((0, dim))
        if C.ndim != 2 or C.shape[0] != d.shape[0]:
            raise DimensionError(f"constraint matrix {C.shape} does not match offsets {d.shape}")
        if dim >= 0 and C.shape[1] != dim:
            raise DimensionError(f"constraints have {C.shape[1]} columns, expected {dim}")
        if C.shape[1] < 1:
            raise DimensionError("polyhedron dimension must be positive")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "dim", C.shape[1])

    @classmethod
    def universe(cls, dim: int) -> "Polyhedron":
        return cls(np.zeros((0, dim)), np.zeros(0), dim)

    @classmethod
    def empty(cls, dim: int) -> "Polyhedron":
        """A syntactically empty polyhedron, ``0 @ x <= -1``."""
        return cls(np.zeros((1, dim)), [-1.0], dim)

    @classmethod
    def from_halfspaces(cls, halfspaces: Sequence[HalfSpace], dim: int | None = None) -> "Polyhedron":
        if not halfspaces:
            if dim is None:
                raise DimensionError("dimension required for an empty constraint list")
            return cls.universe(dim)
        return cls(np.vstack([h.normal for h in halfspaces]), [h.offset for h in halfspaces], dim or -1)

    @property
    def constraints(self) -> list[HalfSpace]:
        return [HalfSpace(c, o) for c, o in zip(self.C, self.d)]

    @property
    def n_constraints(self) -> int:
        return self.C.shape[0]

    def __contains__(self, x) -> bool:
        return poly_contains(self, x, EPS_FEAS)

    def __and__(self, other: "Polyhedron") -> "Polyhedron":
        return poly_intersect(self, other)

    def __repr__(self) -> str:
        return f"Polyhedron(dim={self.dim}, constraints={self.n_constraints})"


@dataclass(frozen=True, eq=False)
class PolyUnion:
    """Finite union of polyhedra of a common dimension. No parts means the empty set."""

    parts: tuple[Polyhedron, ...]
    dim: int

    def __init__(self, parts: Iterable[Polyhedron], dim: int | None = None):
        parts = tuple(parts)
        if dim is None:
            if not parts:
                raise DimensionError("dimension required for an empty union")
            dim = parts[0].dim
        for p in parts:
            if p.dim != dim:
                raise DimensionError(f"union part has dimension {p.dim}, expected {dim}")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "dim", int(dim))

    @classmethod
    def of(cls, P: Polyhedron) -> "PolyUnion":
        return cls((P,), P.dim)

    def __iter__(self) -> Iterator[Polyhedron]:
        return iter(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __or__(self, other: "PolyUnion") -> "PolyUnion":
        if self.dim != other.dim:
            raise DimensionError("cannot unite sets of different dimension")
        return PolyUnion(self.parts + other.parts, self.dim)

    def contains(self, x, tol: float = EPS_FEAS) -> bool:
        return any(poly_contains(p, x, tol) for p in self.parts)

    __contains__ = contains

    def is_empty(self) -> bool:
        return all(poly_is_empty(p) for p in self.parts)

    def canonical(self) -> "PolyUnion":
        """Drop parts that are empty as sets."""
        return PolyUnion([p for p in self.parts if not poly_is_empty(p)], self.dim)

    def __repr__(self) -> str:
        return f"PolyUnion(dim={self.dim}, parts={len(self.parts)})"


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box with extended-real endpoints; empty iff some ``lo > hi``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lo).reshape(-1)
        hi = _frozen(self.hi).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionError("box bounds differ in length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds must not be NaN")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def universe(cls, dim: int) -> "Box":
        return cls(np.full(dim, -math.inf), np.full(dim, math.inf))

    @classmethod
    def empty(cls, dim: int) -> "Box":
        return cls(np.full(dim, math.inf), np.full(dim, -math.inf))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def is_empty(self) -> bool:
        return bool(np.any(self.lo > self.hi))

    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def intersect(self, other: "Box") -> "Box":
        if self.dim != other.dim:
            raise DimensionError("box dimensions differ")
        return Box(np.maximum(self.lo, other.lo), np.minimum(self.hi, other.hi))

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def to_polyhedron(self) -> Polyhedron:
        n = self.dim
        if self.is_empty():
            return Polyhedron.empty(n)
        eye = np.eye(n)
        rows, offsets = [], []
        for i in range(n):
            if math.isfinite(self.hi[i]):
                rows.append(eye[i])
                offsets.append(self.hi[i])
            if math.isfinite(self.lo[i]):
                rows.append(-eye[i])
                offsets.append(-self.lo[i])
        if not rows:
            return Polyhedron.universe(n)
        return Polyhedron(np.array(rows), offsets, n)

    def __repr__(self) -> str:
        pairs = ", ".join(f"[{a:g}, {b:g}]" for a, b in zip(self.lo, self.hi))
        return f"Box({pairs})"


def _check_dims(P: Polyhedron, Q: Polyhedron) -> None:
    if P.dim != Q.dim:
        raise DimensionError(f"dimension mismatch: {P.dim} vs {Q.dim}")


def poly_intersect(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    _check_dims(P, Q)
    return Polyhedron(np.vstack([P.C, Q.C]), np.concatenate([P.d, Q.d]), P.dim)


def feasible_point(P: Polyhedron) -> np.ndarray | None:
    """A point of ``P`` (within ``EPS_FEAS``), or ``None`` if ``P`` is empty."""
    res = lp.solve(None, P.C, P.d)
    if res.status == lp.INFEASIBLE:
        return None
    return res.x


def poly_is_empty(P: Polyhedron, strict: Polyhedron | None = None) -> bool:
    """Whether ``P`` is empty.

    With ``strict``, the question is whether some point of ``P`` satisfies
    every constraint of ``strict`` with strict inequality; this is decided by
    maximizing a common slack ``t <= 1`` and comparing it against
    ``EPS_FEAS``.
    """
    if strict is None or strict.n_constraints == 0:
        return feasible_point(P) is None
    _check_dims(P, strict)
    norms = np.abs(strict.C).max(axis=1)
    if np.any(norms == 0.0):
        # 0 < offset is a constant condition
        if np.any(strict.d[norms == 0.0] <= 0.0):
            return True
        keep = norms > 0.0
        if not np.any(keep):
            return feasible_point(P) is None
        strict = Polyhedron(strict.C[keep], strict.d[keep], strict.dim)
        norms = norms[keep]
    S, s = strict.C / norms[:, None], strict.d / norms
    n = P.dim
    A = np.vstack(
        [
            np.hstack([P.C, np.zeros((P.n_constraints, 1))]),
            np.hstack([S, np.ones((S.shape[0], 1))]),
            np.eye(1, n + 1, n),
        ]
    )
    b = np.concatenate([P.d, s, [1.0]])
    res = lp.solve(np.eye(1, n + 1, n)[0], A, b)
    return res.status == lp.INFEASIBLE or res.value <= EPS_FEAS


def support(P: Polyhedron, direction) -> float:
    """``sup {direction @ x : x in P}``; ``+inf`` if unbounded in that direction."""
    direction = np.asarray(direction, dtype=float).reshape(-1)
    if direction.shape[0] != P.dim:
        raise DimensionError(f"direction has length {direction.shape[0]}, expected {P.dim}")
    res = lp.solve(direction, P.C, P.d)
    if res.status == lp.INFEASIBLE:
        raise EmptySetError("support function of an empty polyhedron")
    return res.value


def box_hull(P: Polyhedron) -> Box:
    n = P.dim
    if poly_is_empty(P):
        return Box.empty(n)
    lo, hi = np.empty(n), np.empty(n)
    eye = np.eye(n)
    for i in range(n):
        hi[i] = support(P, eye[i])
        lo[i] = -support(P, -eye[i])
    # avoid -0.0 endpoints
    return Box(lo + 0.0, hi + 0.0)


def remove_redundant(P: Polyhedron) -> Polyhedron:
    """Drop every constraint implied by the ones that remain.

    ``P`` must be nonempty; check with :func:`poly_is_empty` first.
    """
    keep = list(range(P.n_constraints))
    for i in range(P.n_constraints):
        others = [j for j in keep if j != i]
        res = lp.solve(P.C[i], P.C[others], P.d[others])
        if res.status == lp.INFEASIBLE:
            raise EmptySetError("remove_redundant called on an empty polyhedron")
        if res.value <= P.d[i] + EPS_FEAS:
            keep = others
    return Polyhedron(P.C[keep], P.d[keep], P.dim)


def poly_contains(P: Polyhedron, x, tol: float = EPS_FEAS) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != P.dim:
        raise DimensionError(f"point has length {x.shape[0]}, expected {P.dim}")
    if P.n_constraints == 0:
        return True
    return bool(np.all(P.C @ x <= P.d + tol))


def _find_equality(C: np.ndarray, d: np.ndarray, var: int):
    """Index pair of two opposite rows forming an equality that involves ``var``."""
    rows = np.flatnonzero(np.abs(C[:, var]) > _ZERO_COEF)
    for a in rows:
        for b in rows:
            if b <= a:
                continue
            if np.allclose(C[a], -C[b], rtol=0, atol=1e-13) and abs(d[a] + d[b]) <= 1e-13:
                return a, b
    return None


def _eliminate(C: np.ndarray, d: np.ndarray, var: int):
    eq = _find_equality(C, d, var)
    if eq is not None:
        # exact substitution through the equality row
        a, b = eq
        pivot_row, pivot_rhs = C[a] / C[a, var], d[a] / C[a, var]
        rest = [i for i in range(C.shape[0]) if i not in (a, b)]
        Cr, dr = C[rest], d[rest]
        factor = Cr[:, var]
        Cn = snap_cancelled(Cr - np.outer(factor, pivot_row), np.abs(Cr) + np.abs(np.outer(factor, pivot_row)))
        dn = dr - factor * pivot_rhs
        Cn[:, var] = 0.0
        return Cn, dn
    coef = C[:, var]
    zero = np.flatnonzero(np.abs(coef) <= _ZERO_COEF)
    pos = np.flatnonzero(coef > _ZERO_COEF)
    neg = np.flatnonzero(coef < -_ZERO_COEF)
    rows = [C[zero]]
    offs = [d[zero]]
    for p in pos:
        for q in neg:
            wp, wq = 1.0 / coef[p], -1.0 / coef[q]
            rows.append(snap_cancelled(wp * C[p] + wq * C[q], np.abs(wp * C[p]) + np.abs(wq * C[q]))[None, :])
            offs.append(np.array([wp * d[p] + wq * d[q]]))
    Cn = np.vstack(rows)
    dn = np.concatenate(offs)
    Cn[:, var] = 0.0
    return Cn, dn


def fm_project(P: Polyhedron, keep: Sequence[int]) -> Polyhedron:
    """Exact projection of ``P`` onto the coordinates in ``keep`` (0-based, in that order).

    Fourier-Motzkin elimination; equalities are used for direct substitution
    when available and redundant constraints are pruned after every step.
    """
    keep = [int(k) for k in keep]
    if len(set(keep)) != len(keep) or any(k < 0 or k >= P.dim for k in keep):
        raise DimensionError(f"invalid coordinate selection {keep} for dimension {P.dim}")
    if not keep:
        raise DimensionError("must keep at least one coordinate")
    out_dim = len(keep)
    if poly_is_empty(P):
        return Polyhedron.empty(out_dim)
    C, d = np.array(P.C), np.array(P.d)
    for var in range(P.dim):
        if var in keep:
            continue
        C, d = _eliminate(C, d, var)
        if C.shape[0] == 0:
            break
        Q = Polyhedron(C, d, P.dim)
        if poly_is_empty(Q):
            return Polyhedron.empty(out_dim)
        Q = remove_redundant(Q)
        C, d = np.array(Q.C), np.array(Q.d)
    return Polyhedron(C[:, keep], d, out_dim)


def vertices_2d(P: Polyhedron) -> list[np.ndarray]:
    """Vertices of a bounded nonempty polygon in counterclockwise order.

    Lower-dimensional polygons come out as one or two points.
    """
    if P.dim != 2:
        raise DimensionError("vertices_2d needs a 2-dimensional polyhedron")
    hull = box_hull(P)
    if hull.is_empty():
        raise EmptySetError("polygon is empty")
    if not hull.is_bounded():
        raise UnboundedSetError("polygon is unbounded")
    C, d = P.C, P.d
    scale = max(1.0, float(np.abs(hull.lo).max()), float(np.abs(hull.hi).max()))
    points = []
    for i in range(C.shape[0]):
        for j in range(i + 1, C.shape[0]):
            M = C[[i, j]]
            if abs(np.linalg.det(M)) < 1e-12 * max(1.0, np.abs(M).max() ** 2):
                continue
            v = np.linalg.solve(M, d[[i, j]])
            if poly_contains(P, v, EPS_FEAS * scale * 10):
                points.append(v)
    if not points:
        # every constraint pair is parallel: only possible for a single point/segment
        # described redundantly; fall back on the box hull corners that lie in P
        corners = [np.array([x, y]) for x in (hull.lo[0], hull.hi[0]) for y in (hull.lo[1], hull.hi[1])]
        points = [c for c in corners if poly_contains(P, c, EPS_FEAS * scale * 10)]
    if not points:
        raise LPError("could not enumerate polygon vertices")
    unique: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= EPS_FEAS * scale * 10 for q in unique):
            unique.append(p)
    center = np.mean(unique, axis=0)
    unique.sort(key=lambda p: math.atan2(p[1] - center[1], p[0] - center[0]))
    if len(unique) > 2:
        unique = _drop_collinear(unique, EPS_FEAS * scale * 10)
    # start at the lowest-then-leftmost vertex for a stable order
    start = min(range(len(unique)), key=lambda k: (round(unique[k][1], 12), round(unique[k][0], 12)))
    return unique[start:] + unique[:start]


def _drop_collinear(points: list[np.ndarray], tol: float) -> list[np.ndarray]:
    out = []
    n = len(points)
    for k in range(n):
        a, b, c = points[k - 1], points[k], points[(k + 1) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if abs(cross) > tol:
            out.append(b)
    return out if len(out) >= 3 else points


def union_box_hull(U: PolyUnion) -> Box:
    """Smallest box containing every part of ``U``."""
    hull = Box.empty(U.dim)
    for part in U:
        b = box_hull(part)
        if b.is_empty():
            continue
        if hull.is_empty():
            hull = b
        else:
            hull = Box(np.minimum(hull.lo, b.lo), np.maximum(hull.hi, b.hi))
    return hull
