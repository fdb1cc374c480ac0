"""Feed-forward networks of affine layers with componentwise activations."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionError, FormatError


class Activation:
    """Scalar activation, applied componentwise.

    Subclasses say whether they are piecewise affine (and with how many
    pieces) and whether they are injective; the set-propagation code uses
    these flags to pick a code path.
    """

    name = "activation"
    piecewise_affine = True
    injective = True
    n_pieces = 1

    def __call__(self, x):
        raise NotImplementedError

    def inverse_interval(self, lo: float, hi: float) -> tuple[float, float]:
        """Exact preimage of ``[lo, hi]``; an empty interval comes back with ``lo > hi``."""
        raise NotImplementedError

    def to_json(self):
        return self.name

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self), tuple(sorted(self.__dict__.items()))))

    def __repr__(self):
        return f"{type(self).__name__}()"


EMPTY_INTERVAL = (math.inf, -math.inf)


class Identity(Activation):
    name = "identity"

    def __call__(self, x):
        return x

    def inverse_interval(self, lo, hi):
        return (lo, hi) if lo <= hi else EMPTY_INTERVAL


class LeakyReLU(Activation):
    """``x`` for ``x > 0`` and ``slope * x`` otherwise; ``slope = 0`` is the plain ReLU."""

    name = "leaky_relu"
    n_pieces = 2

    def __init__(self, slope: float = 0.0):
        slope = float(slope)
        if not slope >= 0.0:
            raise ValueError(f"leaky ReLU slope must be nonnegative, got {slope}")
        self.slope = slope

    @property
    def injective(self) -> bool:
        return self.slope > 0.0

    def __call__(self, x):
        if np.ndim(x) == 0:
            return x if x > 0 else self.slope * x
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, x, self.slope * x)

    def inverse_interval(self, lo, hi):
        if lo > hi:
            return EMPTY_INTERVAL
        if self.slope == 0.0:
            if hi < 0:
                return EMPTY_INTERVAL
            return (lo, hi) if lo > 0 else (-math.inf, hi)
        inv = lambda y: y if y > 0 else y / self.slope
        return inv(lo), inv(hi)

    def to_json(self):
        return {"leaky_relu": self.slope}

    def __repr__(self):
        return f"LeakyReLU({self.slope})"


class ReLU(LeakyReLU):
    name = "relu"

    def __init__(self):
        super().__init__(0.0)

    def to_json(self):
        return "relu"

    def __repr__(self):
        return "ReLU()"


class Sigmoid(Activation):
    name = "sigmoid"
    piecewise_affine = False
    n_pieces = math.inf

    def __call__(self, x):
        if np.ndim(x) == 0:
            if x >= 0:
                return 1.0 / (1.0 + math.exp(-x))
            e = math.exp(x)
            return e / (1.0 + e)
        x = np.asarray(x, dtype=float)
        return 0.5 * (1.0 + np.tanh(0.5 * x))

    def inverse_interval(self, lo, hi):
        if lo > hi or hi <= 0.0 or lo >= 1.0:
            return EMPTY_INTERVAL
        a = -math.inf if lo <= 0.0 else math.log(lo / (1.0 - lo))
        b = math.inf if hi >= 1.0 else math.log(hi / (1.0 - hi))
        return a, b


def activation_apply(alpha: Activation, x: float) -> float:
    return alpha(x)


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> W @ x + b``."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        if W.ndim == 1:
            W = W.reshape(b.shape[0], -1) if b.shape[0] else W[None, :]
        if W.ndim != 2 or W.shape[0] != b.shape[0]:
            raise DimensionError(f"weight matrix {W.shape} does not match bias {b.shape}")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]

    def __call__(self, x):
        return self.W @ np.asarray(x, dtype=float) + self.b


@dataclass(frozen=True, eq=False)
class Layer:
    affine: AffineMap
    activation: Activation

    def __call__(self, x):
        return self.activation(self.affine(x))


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple[Layer, ...]

    def __init__(self, layers: Sequence[Layer]):
        layers = tuple(layers)
        if not layers:
            raise DimensionError("a network needs at least one layer")
        for i in range(1, len(layers)):
            if layers[i].affine.n_in != layers[i - 1].affine.n_out:
                raise DimensionError(
                    f"layer {i} expects {layers[i].affine.n_in} inputs but layer {i - 1} "
                    f"produces {layers[i - 1].affine.n_out}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].affine.n_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].affine.n_out

    @property
    def widths(self) -> list[int]:
        return [layer.affine.n_out for layer in self.layers]

    def is_piecewise_affine(self) -> bool:
        return all(layer.activation.piecewise_affine for layer in self.layers)

    def __call__(self, x):
        return eval_network(self, x)

    def __len__(self):
        return len(self.layers)


def eval_network(N: Network, x) -> np.ndarray:
    """Forward pass. ``x`` may be a single point or an ``(m, n_in)`` batch."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != N.input_dim:
        raise DimensionError(f"input has length {x.shape[-1]}, network expects {N.input_dim}")
    batch = x.ndim == 2
    h = x.T if batch else x
    for layer in N.layers:
        W, b = layer.affine.W, layer.affine.b
        h = layer.activation(W @ h + (b[:, None] if batch else b))
        h = np.asarray(h, dtype=float)
    return h.T if batch else h


def classify(N: Network, x) -> int:
    """Index of the largest output; ties go to the lowest index."""
    y = eval_network(N, x)
    if y.shape[-1] < 2:
        raise DimensionError("classification needs at least two outputs")
    return int(np.argmax(y))


def _activation_from_json(spec) -> Activation:
    if isinstance(spec, str):
        table = {"identity": Identity, "relu": ReLU, "sigmoid": Sigmoid}
        if spec not in table:
            raise FormatError(f"unknown activation {spec!r}")
        return table[spec]()
    if isinstance(spec, dict) and set(spec) == {"leaky_relu"}:
        slope = spec["leaky_relu"]
        if isinstance(slope, bool) or not isinstance(slope, (int, float)):
            raise FormatError(f"leaky ReLU slope must be a number, got {slope!r}")
        if slope < 0:
            raise FormatError(f"negative leaky ReLU slope {slope}")
        return LeakyReLU(slope)
    raise FormatError(f"unknown activation {spec!r}")


def parse_network(text: str | bytes) -> Network:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"malformed network JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
        raise FormatError('network JSON must be an object with a "layers" list')
    layers = []
    for i, entry in enumerate(doc["layers"]):
        if not isinstance(entry, dict) or not {"W", "b", "activation"} <= set(entry):
            raise FormatError(f'layer {i} needs "W", "b" and "activation"')
        try:
            W = np.array(entry["W"], dtype=float)
            b = np.array(entry["b"], dtype=float).reshape(-1)
        except (TypeError, ValueError):
            raise FormatError(f"layer {i} has non-numeric weights") from None
        if W.ndim != 2:
            raise FormatError(f"layer {i}: W must be a nested list (matrix)")
        if W.shape[0] != b.shape[0]:
            raise DimensionError(f"layer {i}: W has {W.shape[0]} rows but b has {b.shape[0]} entries")
        layers.append(Layer(AffineMap(W, b), _activation_from_json(entry["activation"])))
    return Network(layers)


def serialize_network(N: Network) -> str:
    doc = {
        "layers": [
            {
                "W": layer.affine.W.tolist(),
                "b": layer.affine.b.tolist(),
                "activation": layer.activation.to_json(),
            }
            for layer in N.layers
        ]
    }
    return json.dumps(doc, indent=2)


def load_network(path: str | Path) -> Network:
    """Read a network file; bare fixture names such as ``fig5`` resolve to bundled files."""
    p = Path(path)
    if not p.exists():
        name = p.name if p.suffix == ".json" else p.name + ".json"
        ref = resources.files("polyinv.data").joinpath(name)
        if str(p.parent) in ("", ".") and ref.is_file():
            return parse_network(ref.read_text())
    return parse_network(p.read_bytes())


FIXTURES = ("fig2", "fig5", "fig6", "fig7")


def load_fixture(name: str) -> Network:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return parse_network(resources.files("polyinv.data").joinpath(name + ".json").read_text())
