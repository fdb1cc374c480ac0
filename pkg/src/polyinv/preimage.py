"""Exact preimages of unions of polyhedra under piecewise-affine networks,
plus a single-branch under-approximation."""

from __future__ import annotations

import math
from collections import deque
from typing import Iterator

import numpy as np

from .errors import DimensionError, UnsupportedActivationError
from .geometry import Polyhedron, PolyUnion, poly_is_empty, remove_redundant, snap_cancelled
from .network import Activation, AffineMap, Network
from .propagate import _piece_map, _region, sign_branches

DEPTH_FIRST = "depth-first"
BREADTH_FIRST = "breadth-first"


def preimage_affine(Y: Polyhedron, f: AffineMap) -> Polyhedron:
    """``{x : C (W x + b) <= d}``, without any emptiness or redundancy processing.

    Coefficients that cancel to rounding noise are set to exactly zero.
    """
    if Y.dim != f.n_out:
        raise DimensionError(f"set has dimension {Y.dim}, map produces {f.n_out}")
    C = snap_cancelled(Y.C @ f.W, np.abs(Y.C) @ np.abs(f.W))
    return Polyhedron(C, Y.d - Y.C @ f.b, f.n_in)


def _as_union(Z) -> PolyUnion:
    return Z if isinstance(Z, PolyUnion) else PolyUnion.of(Z)


def _activation_preimage_parts(Z: Polyhedron, alpha: Activation) -> Iterator[Polyhedron]:
    """Nonempty parts of ``alpha^-1(Z)``, one per feasible piece, in piece order.

    Feasibility of a piece is decided on the output side (``Z`` restricted
    to the piece's range), which lets whole subtrees of sign patterns be
    pruned before they are built. Each surviving piece contributes
    ``P_j ∩ alpha_j^-1(Z)``; for a zero diagonal entry the pinned output
    coordinate turns into a ``0 x <= ...`` row that the range check has
    already shown to be satisfiable. The all-zero piece reduces to ``P_j``.
    """
    if not alpha.piecewise_affine:
        raise UnsupportedActivationError(f"{alpha!r} is not piecewise affine")
    if alpha.n_pieces == 1:
        yield Z
        return
    for pattern, _ in sign_branches(Z, alpha, output_side=True):
        region = _region(pattern)
        if not any(pattern) and getattr(alpha, "slope", 1.0) == 0.0:
            yield region
            continue
        Q = preimage_affine(Z, _piece_map(alpha, pattern))
        yield Polyhedron(np.vstack([region.C, Q.C]), np.concatenate([region.d, Q.d]), Z.dim)


def preimage_activation(Z, alpha: Activation) -> PolyUnion:
    Z = _as_union(Z)
    parts = []
    for part in Z:
        if poly_is_empty(part):
            continue
        parts.extend(_activation_preimage_parts(part, alpha))
    return PolyUnion(parts, Z.dim)


def _check_network(Z: PolyUnion, N: Network) -> None:
    for layer in N.layers:
        if not layer.activation.piecewise_affine:
            raise UnsupportedActivationError(f"{layer.activation!r} is not piecewise affine")
    if Z.dim != N.output_dim:
        raise DimensionError(f"set has dimension {Z.dim}, network outputs {N.output_dim}")


def _layer_step(P: Polyhedron, layer) -> Iterator[Polyhedron]:
    for Q in _activation_preimage_parts(P, layer.activation):
        X = preimage_affine(Q, layer.affine)
        if not poly_is_empty(X):
            yield X


def preimage_network(Z, N: Network, simplify: bool = True) -> PolyUnion:
    """Exact preimage ``N^-1(Z)`` as a union of nonempty polyhedra.

    Parts are ordered by the sign-pattern path that produced them. With
    ``simplify`` the redundant constraints of each output part are removed.
    """
    Z = _as_union(Z)
    _check_network(Z, N)
    parts = [p for p in Z if not poly_is_empty(p)]
    for layer in reversed(N.layers):
        parts = [X for P in parts for X in _layer_step(P, layer)]
    if simplify:
        parts = [remove_redundant(p) for p in parts]
    return PolyUnion(parts, N.input_dim)


def preimage_underapprox(Z, N: Network, strategy: str = DEPTH_FIRST) -> Polyhedron:
    """One nonempty polyhedron inside ``N^-1(Z)``, found by searching the piece tree.

    Returns an (syntactically) empty polyhedron only when every branch dies,
    i.e. when the exact preimage is empty.
    """
    Z = _as_union(Z)
    _check_network(Z, N)
    layers = N.layers
    roots = [(len(layers) - 1, p) for p in Z if not poly_is_empty(p)]
    if strategy == DEPTH_FIRST:
        found = _depth_first(roots, layers)
    elif strategy == BREADTH_FIRST:
        found = _breadth_first(roots, layers)
    else:
        raise ValueError(f"unknown search strategy {strategy!r}")
    if found is None:
        return Polyhedron.empty(N.input_dim)
    return remove_redundant(found)


def _depth_first(roots, layers):
    def search(k, P):
        if k < 0:
            return P
        for X in _layer_step(P, layers[k]):
            hit = search(k - 1, X)
            if hit is not None:
                return hit
        return None

    for k, P in roots:
        hit = search(k, P)
        if hit is not None:
            return hit
    return None


def _breadth_first(roots, layers):
    queue = deque(roots)
    while queue:
        k, P = queue.popleft()
        if k < 0:
            return P
        queue.extend((k - 1, X) for X in _layer_step(P, layers[k]))
    return None


def branch_count_bound(N: Network) -> int:
    """Upper bound on the parts produced per input part by exact propagation.

    The product over layers of ``pieces ** width``.
    """
    bound = 1
    for layer in N.layers:
        pieces = layer.activation.n_pieces
        if not math.isfinite(pieces):
            raise UnsupportedActivationError(f"{layer.activation!r} is not piecewise affine")
        bound *= int(pieces) ** layer.affine.n_out
    return bound
