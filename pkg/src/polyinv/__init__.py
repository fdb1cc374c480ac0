"""Exact images and preimages of polyhedral sets under piecewise-affine
neural networks, with interval approximations and a forward-backward box
contractor."""

from .errors import (
    DimensionError,
    EmptySetError,
    FormatError,
    LPError,
    PolyinvError,
    UnboundedSetError,
    UnsupportedActivationError,
)
from .geometry import (
    Box,
    HalfSpace,
    Polyhedron,
    PolyUnion,
    box_hull,
    feasible_point,
    fm_project,
    poly_contains,
    poly_intersect,
    poly_is_empty,
    remove_redundant,
    support,
    union_box_hull,
    vertices_2d,
)
from .intervals import (
    NeuronTrace,
    activation_inverse_interval,
    affine_preimage_box,
    forward_backward_contract,
    interval_activation,
    interval_affine,
    preimage_overapprox_box,
)
from .lp import EPS_FEAS
from .network import (
    Activation,
    AffineMap,
    Identity,
    Layer,
    LeakyReLU,
    Network,
    ReLU,
    Sigmoid,
    activation_apply,
    classify,
    eval_network,
    load_fixture,
    load_network,
    parse_network,
    serialize_network,
)
from .preimage import (
    branch_count_bound,
    preimage_activation,
    preimage_affine,
    preimage_network,
    preimage_underapprox,
)
from .propagate import PWAPiece, activation_image, affine_image, network_image, pwa_partitioning

__version__ = "0.1.0"
