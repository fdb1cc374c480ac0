"""Exact forward images of polyhedra under affine maps, piecewise-affine
activations and whole networks."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.linalg

from .errors import DimensionError, UnsupportedActivationError
from .geometry import Polyhedron, PolyUnion, fm_project, poly_contains, poly_is_empty, remove_redundant
from .network import Activation, AffineMap, Network

LU_PIVOT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PWAPiece:
    """One affine piece of a componentwise activation: ``map`` is valid on ``region``.

    ``pattern[i]`` is True when coordinate ``i`` is on its nonnegative side.
    """

    region: Polyhedron
    map: AffineMap
    pattern: tuple[bool, ...]


def _require_pwa(alpha: Activation) -> None:
    if not alpha.piecewise_affine:
        raise UnsupportedActivationError(f"{alpha!r} is not piecewise affine")


def _slope(alpha: Activation) -> float:
    return getattr(alpha, "slope", 1.0)


def _region(pattern: tuple[bool, ...]) -> Polyhedron:
    n = len(pattern)
    C = np.diag([-1.0 if pos else 1.0 for pos in pattern])
    return Polyhedron(C, np.zeros(n), n)


def _piece_map(alpha: Activation, pattern: tuple[bool, ...]) -> AffineMap:
    slope = _slope(alpha)
    return AffineMap(np.diag([1.0 if pos else slope for pos in pattern]), np.zeros(len(pattern)))


def _patterns(n: int) -> Iterator[tuple[bool, ...]]:
    # coordinate 0 varies fastest, positive side first
    for bits in itertools.product((True, False), repeat=n):
        yield tuple(reversed(bits))


def pwa_partitioning(alpha: Activation, n: int) -> list[PWAPiece]:
    """All affine pieces of ``alpha`` on R^n with closed sign regions.

    For (leaky) ReLU the ``2**n`` pieces are ordered with coordinate 0
    varying fastest, so for ``n = 2`` the order is ``++, -+, +-, --``.
    """
    _require_pwa(alpha)
    if n < 1:
        raise DimensionError("dimension must be positive")
    if alpha.n_pieces == 1:
        return [PWAPiece(Polyhedron.universe(n), AffineMap(np.eye(n), np.zeros(n)), (True,) * n)]
    return [PWAPiece(_region(p), _piece_map(alpha, p), p) for p in _patterns(n)]


def _sign_rows(alpha: Activation, i: int, n: int, positive: bool, output_side: bool):
    e = np.zeros(n)
    e[i] = 1.0
    if positive:
        return [-e], [0.0]
    if output_side and _slope(alpha) == 0.0:
        # a constant coordinate pins the activation output to zero
        return [e, -e], [0.0, 0.0]
    return [e], [0.0]


def sign_branches(
    P: Polyhedron, alpha: Activation, output_side: bool = False
) -> Iterator[tuple[tuple[bool, ...], Polyhedron]]:
    """Lazily split ``P`` by the sign pattern of ``alpha``'s pieces, pruning empty branches.

    With ``output_side=False`` the split is by the sign of the activation
    input (regions ``P_j``); with ``output_side=True`` it is by the range of
    each piece's map, i.e. ``P`` is read as a set of activation outputs.
    Coordinates are decided from the last to the first so the leaves come out
    in :func:`pwa_partitioning` order.

    Pruning uses the half-open partition (positive side ``> 0``) so that a
    branch touching the kink only on its boundary is dropped; the pieces
    agree there, so nothing is lost. The yielded sets are the closures.
    """
    n = P.dim

    def rec(i: int, C, d, strict_rows, pattern):
        if i < 0:
            yield tuple(pattern), Polyhedron(C, d, n)
            return
        for positive in (True, False):
            rows, offs = _sign_rows(alpha, i, n, positive, output_side)
            Cn = np.vstack([C, rows])
            dn = np.concatenate([d, offs])
            strict = strict_rows + [rows[0]] if positive else strict_rows
            pattern[i] = positive
            if output_side and not positive and _slope(alpha) == 0.0 and i == 0 and not any(pattern):
                # every coordinate is pinned: membership of the origin decides
                if not poly_contains(P, np.zeros(n)):
                    continue
            elif strict:
                S = Polyhedron(np.array(strict), np.zeros(len(strict)), n)
                if poly_is_empty(Polyhedron(Cn, dn, n), strict=S):
                    continue
            elif poly_is_empty(Polyhedron(Cn, dn, n)):
                continue
            yield from rec(i - 1, Cn, dn, strict, pattern)

    yield from rec(n - 1, P.C, P.d, [], [True] * n)


def _is_invertible(W: np.ndarray):
    if W.shape[0] != W.shape[1]:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(W, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.min() <= LU_PIVOT_TOL * max(1.0, diag.max()):
        return None
    return lu, piv


def affine_image(X: Polyhedron, f: AffineMap) -> Polyhedron:
    """Exact image ``{W x + b : x in X}``.

    Invertible square maps substitute ``x = W^-1 (y - b)`` into the
    constraints; anything else projects the graph polyhedron onto ``y``.
    """
    if X.dim != f.n_in:
        raise DimensionError(f"set has dimension {X.dim}, map expects {f.n_in}")
    factor = _is_invertible(f.W)
    if factor is not None:
        if X.n_constraints == 0:
            return Polyhedron.universe(f.n_out)
        # C W^-1 computed as the solution of W^T M^T = C^T
        M = scipy.linalg.lu_solve(factor, X.C.T, trans=1).T
        return Polyhedron(M, X.d + M @ f.b, f.n_out)
    n, m = f.n_in, f.n_out
    eye = np.eye(m)
    C = np.vstack(
        [
            np.hstack([X.C, np.zeros((X.n_constraints, m))]),
            np.hstack([-f.W, eye]),
            np.hstack([f.W, -eye]),
        ]
    )
    d = np.concatenate([X.d, f.b, -f.b])
    return fm_project(Polyhedron(C, d, n + m), list(range(n, n + m)))


def activation_image(X: Polyhedron, alpha: Activation) -> PolyUnion:
    """``alpha(X)`` as the union of each piece map applied to ``X`` restricted to its region."""
    _require_pwa(alpha)
    if alpha.n_pieces == 1:
        return PolyUnion([] if poly_is_empty(X) else [X], X.dim)
    parts = []
    for pattern, Q in sign_branches(X, alpha):
        parts.append(affine_image(Q, _piece_map(alpha, pattern)))
    return PolyUnion(parts, X.dim)


def _as_union(X) -> PolyUnion:
    return X if isinstance(X, PolyUnion) else PolyUnion.of(X)


def network_image(N: Network, X) -> PolyUnion:
    """Exact image of a polyhedron (or union of polyhedra) under ``N``."""
    for layer in N.layers:
        _require_pwa(layer.activation)
    X = _as_union(X)
    if X.dim != N.input_dim:
        raise DimensionError(f"set has dimension {X.dim}, network expects {N.input_dim}")
    parts = [p for p in X if not poly_is_empty(p)]
    for layer in N.layers:
        mapped = [affine_image(p, layer.affine) for p in parts]
        parts = []
        for p in mapped:
            parts.extend(activation_image(p, layer.activation))
    return PolyUnion([remove_redundant(p) for p in parts], N.output_dim)
