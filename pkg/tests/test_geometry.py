import math

import numpy as np
import pytest
from oracles import sample_polyhedron

from polyinv import (
    Box,
    DimensionError,
    EmptySetError,
    HalfSpace,
    Polyhedron,
    PolyUnion,
    UnboundedSetError,
    box_hull,
    feasible_point,
    fm_project,
    poly_contains,
    poly_intersect,
    poly_is_empty,
    remove_redundant,
    support,
    vertices_2d,
)
from polyinv.lp import EPS_FEAS

UNIT_SQUARE = Box([0, 0], [1, 1]).to_polyhedron()
TRIANGLE = Polyhedron([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
# the band {0 <= -0.46 x1 + 0.32 x2 <= 1} pulled back through the
# second ReLU piece (x1 <= 0, x2 >= 0) gives 0 <= x2 <= 3.125
X2 = Polyhedron([[1, 0], [0, -1], [0, 0.32], [0, -0.32]], [0, 0, 1, 0])


def random_polyhedron(rng, n=2, m=None):
    m = m or int(rng.integers(2, 7))
    C = rng.normal(size=(m, n))
    d = rng.uniform(-0.5, 1.5, size=m)
    return Polyhedron(C, d)


# -- intersection ---------------------------------------------------------


def test_intersect_with_universe():
    H = Polyhedron([[1, 0]], [0])
    P = poly_intersect(Polyhedron.universe(2), H)
    assert np.array_equal(P.C, H.C) and np.array_equal(P.d, H.d)


def test_intersect_keeps_contradiction():
    P = poly_intersect(Polyhedron([[1, 0]], [0]), Polyhedron([[-1, 0]], [-1]))
    assert P.n_constraints == 2
    assert poly_is_empty(P)


def test_intersect_example3():
    P2 = Polyhedron([[1, 0], [0, -1]], [0, 0])
    band_pullback = Polyhedron([[0, 0.32], [0, -0.32]], [1, 0])
    X = poly_intersect(P2, band_pullback)
    assert box_hull(X).hi[1] == pytest.approx(3.125)
    assert box_hull(X).lo[1] == pytest.approx(0.0)


def test_intersect_dimension_mismatch():
    with pytest.raises(DimensionError):
        poly_intersect(Polyhedron.universe(2), Polyhedron.universe(3))


def test_intersection_membership_property():
    rng = np.random.default_rng(1)
    for _ in range(10):
        P, Q = random_polyhedron(rng), random_polyhedron(rng)
        PQ = poly_intersect(P, Q)
        pts = rng.uniform(-3, 3, size=(100, 2))
        for x in pts:
            assert poly_contains(PQ, x) == (poly_contains(P, x) and poly_contains(Q, x))


# -- emptiness ------------------------------------------------------------


def test_empty_examples():
    assert poly_is_empty(Polyhedron([[1], [-1]], [0, -1]))
    assert not poly_is_empty(Polyhedron([[1, 0], [-1, 0]], [1, 0]))


def test_example3_third_piece_is_empty_on_half_open_partition():
    # P3 = {x1 > 0, x2 <= 0}; rho3^-1(band) = {0 <= -0.46 x1 <= 1}
    X3 = Polyhedron([[-1, 0], [0, 1], [-0.46, 0], [0.46, 0]], [0, 0, 1, 0])
    strict = Polyhedron([[-1, 0]], [0])
    assert poly_is_empty(X3, strict=strict)
    # its closure is the degenerate ray {x1 = 0, x2 <= 0}
    assert not poly_is_empty(X3)


def test_strict_emptiness():
    P = Polyhedron([[1.0]], [0.0])
    assert poly_is_empty(P, strict=Polyhedron([[-1.0]], [0.0]))
    assert not poly_is_empty(P, strict=Polyhedron([[1.0]], [0.0]))
    assert not poly_is_empty(Polyhedron.universe(1), strict=Polyhedron([[0.0]], [1.0]))
    assert poly_is_empty(Polyhedron.universe(1), strict=Polyhedron([[0.0]], [0.0]))


def test_witness_is_member():
    rng = np.random.default_rng(2)
    for _ in range(200):
        P = random_polyhedron(rng)
        x = feasible_point(P)
        if x is None:
            assert poly_is_empty(P)
            with pytest.raises(EmptySetError):
                support(P, [1.0, 0.0])
        else:
            assert poly_contains(P, x, EPS_FEAS)


# -- support / box hull -----------------------------------------------------


def test_support_examples():
    assert support(UNIT_SQUARE, [1, 0]) == pytest.approx(1.0)
    H = Polyhedron([[1, 0]], [0])
    assert support(H, [1, 0]) == pytest.approx(0.0)
    assert support(H, [-1, 0]) == math.inf
    assert support(X2, [0, 1]) == pytest.approx(3.125)


def test_box_hull_examples():
    B = box_hull(TRIANGLE)
    assert np.allclose(B.lo, [0, 0]) and np.allclose(B.hi, [1, 1])
    B = box_hull(Polyhedron([[1, 0]], [0]))
    assert list(B.lo) == [-math.inf, -math.inf] and B.hi[0] == 0 and B.hi[1] == math.inf
    B = box_hull(X2)
    assert B.lo[0] == -math.inf and B.hi[0] == pytest.approx(0)
    assert B.lo[1] == pytest.approx(0) and B.hi[1] == pytest.approx(3.125)
    assert box_hull(Polyhedron([[1.0], [-1.0]], [0, -1])).is_empty()


def test_box_hull_contains_samples():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 1000:
        P = random_polyhedron(rng)
        if poly_is_empty(P):
            continue
        B = box_hull(P)
        pts = sample_polyhedron(P, [-4, -4], [4, 4], 50, rng, max_tries=20000)
        for x in list(pts) + [feasible_point(P)]:
            assert B.contains(x, 1e-9)
            checked += 1


# -- redundancy -------------------------------------------------------------


def test_remove_redundant_examples():
    P = remove_redundant(Polyhedron([[1.0], [1.0]], [1, 2]))
    assert P.n_constraints == 1 and P.d[0] == 1
    assert remove_redundant(UNIT_SQUARE).n_constraints == 4


def test_remove_redundant_duplicates_keep_one():
    P = remove_redundant(Polyhedron([[1.0], [1.0], [-1.0]], [1, 1, 0]))
    assert P.n_constraints == 2


def test_negative_orthant_stays_minimal():
    from polyinv import AffineMap, ReLU, preimage_activation, preimage_affine

    band = preimage_affine(Polyhedron([[1], [-1]], [3, -2]), AffineMap([[-0.46, 0.32]], [2]))
    parts = preimage_activation(band, ReLU()).parts
    orthant = parts[-1]
    # the constant piece is emitted as the bare orthant: n constraints, none redundant
    assert orthant.n_constraints == 2
    assert remove_redundant(orthant).n_constraints == 2


def test_remove_redundant_preserves_membership():
    rng = np.random.default_rng(4)
    probes = 0
    while probes < 1000:
        C = rng.normal(size=(8, 2))
        P = Polyhedron(C, rng.uniform(0.2, 1.5, 8))
        R = remove_redundant(P)
        pts = rng.uniform(-3, 3, size=(100, 2))
        for x in pts:
            assert poly_contains(P, x, 1e-9) == poly_contains(R, x, 1e-9)
        probes += len(pts)


# -- membership -------------------------------------------------------------


def test_contains_examples():
    tol = 1e-7
    assert poly_contains(UNIT_SQUARE, [0.5, 0.5], tol)
    assert not poly_contains(UNIT_SQUARE, [1 + 2 * tol, 0], tol)
    band = Polyhedron([[-0.46, 0.32], [0.46, -0.32]], [1, 0])
    assert poly_contains(band, [0, 1], 0)


def test_contains_dimension_mismatch():
    with pytest.raises(DimensionError):
        poly_contains(UNIT_SQUARE, [0.0], 0)


# -- Fourier-Motzkin ----------------------------------------------------------


def test_fm_examples():
    P = fm_project(UNIT_SQUARE, [0])
    assert np.allclose([box_hull(P).lo[0], box_hull(P).hi[0]], [0, 1])
    P = fm_project(TRIANGLE, [0])
    assert np.allclose([box_hull(P).lo[0], box_hull(P).hi[0]], [0, 1])
    assert poly_is_empty(fm_project(Polyhedron([[1, 0], [-1, 0]], [0, -1]), [1]))


def test_fm_fig2_layer1_graph():
    W = np.array([[0.30, 0.53], [0.77, 0.42]])
    b = np.array([0.43, -0.42])
    graph = Polyhedron(
        np.vstack([np.hstack([UNIT_SQUARE.C, np.zeros((4, 2))]), np.hstack([-W, np.eye(2)]), np.hstack([W, -np.eye(2)])]),
        np.concatenate([UNIT_SQUARE.d, b, -b]),
    )
    Y = fm_project(graph, [2, 3])
    rng = np.random.default_rng(5)
    xs = rng.uniform(0, 1, (1000, 2))
    for y in xs @ W.T + b:
        assert poly_contains(Y, y, 1e-9)
    # the exact image of the square is the parallelogram spanned by W's columns
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]]) @ W.T + b
    verts = np.array(vertices_2d(Y))
    assert len(verts) == 4
    for c in corners:
        assert np.min(np.abs(verts - c).max(axis=1)) < 1e-9


def test_fm_projection_property():
    rng = np.random.default_rng(6)
    inside_checked = outside_checked = 0
    while inside_checked < 1000 or outside_checked < 1000:
        P = random_polyhedron(rng, n=3, m=6)
        if poly_is_empty(P):
            continue
        hull = box_hull(P)
        if not hull.is_bounded():
            continue
        Q = fm_project(P, [0, 2])
        pts = sample_polyhedron(P, hull.lo, hull.hi, 100, rng, max_tries=50000)
        for x in pts:
            assert poly_contains(Q, x[[0, 2]], 1e-8)
            inside_checked += 1
        probes = rng.uniform(hull.lo[[0, 2]] - 0.5, hull.hi[[0, 2]] + 0.5, size=(100, 2))
        for z in probes:
            if poly_contains(Q, z, 1e-7):
                continue
            # a point outside the projection has no lift into P
            fixed = Polyhedron(
                np.vstack([P.C, [[1, 0, 0], [-1, 0, 0], [0, 0, 1], [0, 0, -1]]]),
                np.concatenate([P.d, [z[0], -z[0], z[1], -z[1]]]),
            )
            assert poly_is_empty(fixed)
            outside_checked += 1


# -- vertices -----------------------------------------------------------------


def test_vertices_examples():
    v = vertices_2d(UNIT_SQUARE)
    assert np.allclose(v, [[0, 0], [1, 0], [1, 1], [0, 1]])
    v = vertices_2d(TRIANGLE)
    assert np.allclose(v, [[0, 0], [1, 0], [0, 1]])
    clipped = poly_intersect(X2, Box([-4, 0], [0, 4]).to_polyhedron())
    v = vertices_2d(clipped)
    assert np.allclose(v, [[-4, 0], [0, 0], [0, 3.125], [-4, 3.125]])


def test_vertices_errors():
    with pytest.raises(UnboundedSetError):
        vertices_2d(X2)
    with pytest.raises(EmptySetError):
        vertices_2d(Polyhedron([[1, 0], [-1, 0]], [0, -1]))
    with pytest.raises(DimensionError):
        vertices_2d(Polyhedron.universe(3))


def test_vertices_degenerate():
    segment = Polyhedron([[0, 1], [0, -1], [1, 0], [-1, 0]], [0, 0, 1, 0])
    assert len(vertices_2d(segment)) == 2
    point = Polyhedron([[0, 1], [0, -1], [1, 0], [-1, 0]], [0, 0, 0, 0])
    assert len(vertices_2d(point)) == 1


def _polygon_from_vertices(v):
    rows, offs = [], []
    for k in range(len(v)):
        a, b = v[k], v[(k + 1) % len(v)]
        normal = np.array([b[1] - a[1], a[0] - b[0]])  # outward for counterclockwise order
        rows.append(normal)
        offs.append(normal @ a)
    return Polyhedron(np.array(rows), offs)


def test_vertices_reassemble_polygon():
    rng = np.random.default_rng(7)
    probes = 0
    while probes < 1000:
        P = poly_intersect(random_polyhedron(rng, m=5), Box([-2, -2], [2, 2]).to_polyhedron())
        if poly_is_empty(P):
            continue
        v = vertices_2d(P)
        if len(v) < 3:
            continue
        R = _polygon_from_vertices(v)
        for x in rng.uniform(-2.5, 2.5, size=(100, 2)):
            if np.min(np.abs(P.C @ x - P.d) / np.linalg.norm(P.C, axis=1)) < 1e-7:
                continue
            assert poly_contains(P, x, 0) == poly_contains(R, x, 1e-9)
            probes += 1


# -- types --------------------------------------------------------------------


def test_halfspace_and_union_types():
    h = HalfSpace([0.0, 0.0], -1.0)
    assert poly_is_empty(h.to_polyhedron())
    assert not poly_is_empty(HalfSpace([0.0, 0.0], 1.0).to_polyhedron())
    U = PolyUnion([UNIT_SQUARE, Polyhedron([[1, 0], [-1, 0]], [0, -1])])
    assert len(U.canonical()) == 1
    assert PolyUnion([], 2).is_empty()
    with pytest.raises(DimensionError):
        PolyUnion([UNIT_SQUARE, Polyhedron.universe(3)])


def test_box_conversion():
    B = Box([0, -math.inf], [1, 2])
    P = B.to_polyhedron()
    assert P.n_constraints == 3
    assert Box([1.0], [0.0]).is_empty()
    assert poly_is_empty(Box([1.0], [0.0]).to_polyhedron())


def test_polyhedron_is_immutable():
    with pytest.raises(ValueError):
        UNIT_SQUARE.C[0, 0] = 5
