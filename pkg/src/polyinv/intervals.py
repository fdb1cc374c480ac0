"""Box-domain propagation: interval images, monotone inverses, a box
over-approximation of preimages and the forward-backward contractor."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, UnsupportedActivationError
from .geometry import Box, Polyhedron, PolyUnion, box_hull, poly_intersect, poly_is_empty
from .network import Activation, AffineMap, Network
from .preimage import preimage_affine

FIXPOINT_TOL = 1e-9
DEFAULT_MAX_ITER = 20


def interval_affine(B: Box, f: AffineMap) -> Box:
    if B.dim != f.n_in:
        raise DimensionError(f"box has dimension {B.dim}, map expects {f.n_in}")
    if B.is_empty():
        return Box.empty(f.n_out)
    W = f.W
    pos, neg = W > 0, W < 0
    with np.errstate(invalid="ignore"):
        lo_terms = np.where(pos, W * B.lo, 0.0) + np.where(neg, W * B.hi, 0.0)
        hi_terms = np.where(pos, W * B.hi, 0.0) + np.where(neg, W * B.lo, 0.0)
    # W * inf with W == 0 gives nan before masking; the where() above discards it
    return Box(lo_terms.sum(axis=1) + f.b, hi_terms.sum(axis=1) + f.b)


def interval_activation(B: Box, alpha: Activation) -> Box:
    """Componentwise ``[alpha(lo), alpha(hi)]``; every supported activation is nondecreasing."""
    if B.is_empty():
        return B
    lo = np.array([alpha(float(v)) for v in B.lo])
    hi = np.array([alpha(float(v)) for v in B.hi])
    return Box(lo, hi)


def activation_inverse_interval(alpha: Activation, lo: float, hi: float) -> tuple[float, float]:
    return alpha.inverse_interval(float(lo), float(hi))


def activation_inverse_box(B: Box, alpha: Activation) -> Box:
    if B.is_empty():
        return B
    pairs = [alpha.inverse_interval(float(a), float(b)) for a, b in zip(B.lo, B.hi)]
    box = Box([p[0] for p in pairs], [p[1] for p in pairs])
    return Box.empty(B.dim) if box.is_empty() else box


def affine_preimage_box(Y: Box, f: AffineMap, X: Box) -> Box:
    """Box hull of ``{x in X : W x + b in Y}`` via support LPs."""
    if Y.dim != f.n_out or X.dim != f.n_in:
        raise DimensionError("box dimensions do not match the affine map")
    if Y.is_empty() or X.is_empty():
        return Box.empty(f.n_in)
    P = poly_intersect(X.to_polyhedron(), preimage_affine(Y.to_polyhedron(), f))
    hull = box_hull(P)
    if hull.is_empty():
        return hull
    return hull.intersect(X)


def preimage_overapprox_box(Z, N: Network) -> PolyUnion:
    """Superset of ``N^-1(Z)`` that replaces each activation inverse by a box.

    Each part is boxed before inverting the activation coordinatewise, so the
    part count never grows. Needs injective activations; identity layers are
    handled exactly.
    """
    Z = Z if isinstance(Z, PolyUnion) else PolyUnion.of(Z)
    if Z.dim != N.output_dim:
        raise DimensionError(f"set has dimension {Z.dim}, network outputs {N.output_dim}")
    for layer in N.layers:
        if not layer.activation.injective:
            raise UnsupportedActivationError(
                f"{layer.activation!r} is not injective; the box inverse would be unbounded"
            )
    parts = [p for p in Z if not poly_is_empty(p)]
    for layer in reversed(N.layers):
        alpha = layer.activation
        stepped = []
        for P in parts:
            if alpha.n_pieces != 1:
                inv = activation_inverse_box(box_hull(P), alpha)
                if inv.is_empty():
                    continue
                P = inv.to_polyhedron()
            X = preimage_affine(P, layer.affine)
            if not poly_is_empty(X):
                stepped.append(X)
        parts = stepped
    return PolyUnion(parts, N.input_dim)


@dataclass
class NeuronTrace:
    """Per-iteration neuron intervals: ``iterations[t][g]`` is the box of group ``g``.

    Group 0 holds the input neurons, the last group the output neurons and
    the groups in between the post-activation hidden neurons.
    """

    iterations: list[list[Box]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.iterations)

    def final(self) -> list[Box]:
        return self.iterations[-1]

    def is_empty(self) -> bool:
        return bool(self.iterations) and any(b.is_empty() for b in self.iterations[-1])

    def to_json_obj(self):
        def num(v):
            v = float(v)
            if math.isinf(v):
                return "inf" if v > 0 else "-inf"
            return v

        return [
            [{"lo": [num(v) for v in b.lo], "hi": [num(v) for v in b.hi]} for b in groups]
            for groups in self.iterations
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())


def _movement(old: list[Box], new: list[Box]) -> float:
    worst = 0.0
    for a, b in zip(old, new):
        for u, v in ((a.lo, b.lo), (a.hi, b.hi)):
            same = u == v
            if not np.all(same | (np.isfinite(u) & np.isfinite(v))):
                return math.inf
            diff = np.where(same, 0.0, np.abs(u - v))
            worst = max(worst, float(diff.max(initial=0.0)))
    return worst


def forward_backward_contract(
    N: Network, X: Box, Y: Box, max_iter: int = DEFAULT_MAX_ITER
) -> tuple[Box, Box, NeuronTrace]:
    """Alternate forward interval propagation and backward inversion until nothing moves.

    Every iteration pushes the boxes forward through the layers (intersecting
    with the stored boxes) and then pulls the output box back, inverting the
    activations coordinatewise and the affine maps by support LPs. Iteration 0
    of the trace is the starting configuration. An empty box anywhere means
    the constraints are incompatible; then every box is reported empty.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if X.dim != N.input_dim or Y.dim != N.output_dim:
        raise DimensionError("input/output boxes do not match the network")

    boxes = [X]
    for layer in N.layers:
        boxes.append(interval_activation(Box.universe(layer.affine.n_out), layer.activation))
    boxes[-1] = boxes[-1].intersect(Y)
    trace = NeuronTrace([list(boxes)])

    def emptied(current):
        return [Box.empty(b.dim) for b in current]

    if any(b.is_empty() for b in boxes):
        boxes = emptied(boxes)
        trace.iterations[0] = list(boxes)
        return boxes[0], boxes[-1], trace

    for _ in range(max_iter):
        previous = list(boxes)
        new = list(boxes)
        empty = False
        for i, layer in enumerate(N.layers):
            image = interval_activation(interval_affine(new[i], layer.affine), layer.activation)
            new[i + 1] = new[i + 1].intersect(image)
            if new[i + 1].is_empty():
                empty = True
                break
        if not empty:
            for i in range(len(N.layers) - 1, -1, -1):
                layer = N.layers[i]
                pre = activation_inverse_box(new[i + 1], layer.activation)
                new[i] = new[i].intersect(affine_preimage_box(pre, layer.affine, new[i]))
                if new[i].is_empty():
                    empty = True
                    break
        if empty:
            boxes = emptied(boxes)
            trace.iterations.append(list(boxes))
            break
        boxes = new
        trace.iterations.append(list(boxes))
        if _movement(previous, boxes) <= FIXPOINT_TOL:
            break
    return boxes[0], boxes[-1], trace
