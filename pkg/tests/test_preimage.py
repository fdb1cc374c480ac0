import numpy as np
import pytest
from oracles import PARABOLA_PREIMAGE, boundary_distance, kink_distance, random_network, sample_polyhedron
from scipy.optimize import brentq

from polyinv import (
    AffineMap,
    Box,
    DimensionError,
    Identity,
    Layer,
    Network,
    Polyhedron,
    PolyUnion,
    ReLU,
    UnsupportedActivationError,
    box_hull,
    branch_count_bound,
    eval_network,
    load_fixture,
    network_image,
    poly_is_empty,
    preimage_activation,
    preimage_affine,
    preimage_network,
    preimage_underapprox,
    support,
)
from polyinv.preimage import BREADTH_FIRST, DEPTH_FIRST

BAND = Polyhedron([[-0.46, 0.32], [0.46, -0.32]], [1, 0])


def interval(P):
    B = box_hull(P)
    return float(B.lo[0]), float(B.hi[0])


def same_set(P, Q, tol=1e-7):
    def sub(A, B):
        return poly_is_empty(A) or all(support(A, c) <= e + tol for c, e in zip(B.C, B.d))

    return sub(P, Q) and sub(Q, P)


def test_example_band():
    f = AffineMap([[-0.46, 0.32]], [2.0])
    Y = Box([2], [3]).to_polyhedron()
    X = preimage_affine(Y, f)
    assert same_set(X, BAND)
    assert [0.0, 1.0] in X  # 0 <= 0.32 <= 1
    assert [0.0, 4.0] not in X


def test_preimage_affine_identity_and_constant():
    Y = Box([0, -1], [1, 1]).to_polyhedron()
    X = preimage_affine(Y, AffineMap(np.eye(2), np.zeros(2)))
    assert np.array_equal(X.C, Y.C) and np.array_equal(X.d, Y.d)
    X = preimage_affine(Box([0], [1]).to_polyhedron(), AffineMap([[0.0]], [5.0]))
    assert poly_is_empty(X)
    with pytest.raises(DimensionError):
        preimage_affine(Y, AffineMap([[1.0, 2.0]], [0.0]))


def test_example_relu_preimage_of_band():
    U = preimage_activation(BAND, ReLU())
    x1 = Polyhedron(np.vstack([BAND.C, [[-1, 0]]]), np.concatenate([BAND.d, [0]]))
    x2 = Polyhedron([[1, 0], [0, -1], [0, 1]], [0, 0, 3.125])
    x4 = Polyhedron([[1, 0], [0, 1]], [0, 0])
    assert len(U) == 3
    for got, want in zip(U, [x1, x2, x4]):
        assert same_set(got, want)
    assert support(U.parts[1], [0, 1]) == pytest.approx(3.125)


def test_relu_preimage_1d():
    assert len(preimage_activation(Box([-2], [-1]).to_polyhedron(), ReLU())) == 0
    U = preimage_activation(Box([0], [1]).to_polyhedron(), ReLU())
    for x in np.linspace(-10, 3, 27):
        assert U.contains([x]) == (x <= 1 + 1e-12)


def test_relu_codomain_normalization():
    rng = np.random.default_rng(0)
    for _ in range(20):
        C = rng.normal(size=(3, 2))
        d = rng.uniform(0, 1, 3)
        Z = Polyhedron(C, d)
        clipped = Z & Polyhedron(-np.eye(2), np.zeros(2))
        A = preimage_activation(Z, ReLU())
        B = preimage_activation(clipped, ReLU())
        for x in rng.uniform(-3, 3, (100, 2)):
            assert A.contains(x) == B.contains(x)


def test_sigmoid_rejected():
    N = load_fixture("fig7")
    with pytest.raises(UnsupportedActivationError):
        preimage_network(Box([0.5], [1]).to_polyhedron(), N)


def test_parabola_oracle_values():
    # locate N(x) = 100 and N(x) = 105 with a dense scan and root refinement
    N = load_fixture("fig5")

    def g(x):
        return float(eval_network(N, [x])[0])

    xs = np.linspace(-200, 200, 40001)
    ys = eval_network(N, xs[:, None])[:, 0]
    roots = []
    for level in (100.0, 105.0):
        s = np.sign(ys - level)
        for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
            roots.append(brentq(lambda x: g(x) - level, xs[i], xs[i + 1], xtol=1e-13))
    roots.sort()
    frozen = [v for pair in PARABOLA_PREIMAGE for v in pair]
    assert np.allclose(roots, frozen, atol=1e-9)


def test_parabola_preimage():
    U = preimage_network(Box([100], [105]).to_polyhedron(), load_fixture("fig5"))
    assert len(U) == 2
    got = sorted(interval(p) for p in U)
    for (lo, hi), (elo, ehi) in zip(got, PARABOLA_PREIMAGE):
        assert lo == pytest.approx(elo, abs=1e-6)
        assert hi == pytest.approx(ehi, abs=1e-6)


def test_parabola_nonnegative():
    Z = Polyhedron([[1.0]], [0.0])
    assert len(preimage_network(Z, load_fixture("fig5"))) == 0
    assert poly_is_empty(preimage_underapprox(Z, load_fixture("fig5")))


def test_fig2_membership_oracle():
    N = load_fixture("fig2")
    Z = Polyhedron([[1.0, -1.0]], [0.0])
    U = preimage_network(Z, N)
    X = np.random.default_rng(1).uniform(-4, 4, (1000, 2))
    Y = eval_network(N, X)
    keep = (kink_distance(N, X) > 1e-6) & (boundary_distance(Z.C, Z.d, Y) > 1e-6)
    for x, y in zip(X[keep], Y[keep]):
        assert U.contains(x, tol=1e-7) == (y[0] <= y[1])
    assert len(U) <= branch_count_bound(N)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        preimage_network(Box([0, 0], [1, 1]).to_polyhedron(), load_fixture("fig5"))


def test_underapprox_identity_network():
    f = AffineMap([[1.0, 2.0]], [0.5])
    N = Network([Layer(f, Identity())])
    Z = Box([0], [1]).to_polyhedron()
    assert same_set(preimage_underapprox(Z, N), preimage_affine(Z, f))


@pytest.mark.parametrize("strategy", [DEPTH_FIRST, BREADTH_FIRST])
def test_underapprox_parabola(strategy):
    P = preimage_underapprox(Box([100], [105]).to_polyhedron(), load_fixture("fig5"), strategy)
    lo, hi = interval(P)
    assert any(elo - 1e-6 <= lo <= hi <= ehi + 1e-6 for elo, ehi in PARABOLA_PREIMAGE)


def test_underapprox_unknown_strategy():
    with pytest.raises(ValueError):
        preimage_underapprox(Box([0], [1]).to_polyhedron(), load_fixture("fig5"), "random")


def test_branch_count_bound():
    assert branch_count_bound(load_fixture("fig2")) == 16
    assert branch_count_bound(load_fixture("fig5")) == 64
    N = Network([Layer(AffineMap(np.eye(3), np.zeros(3)), Identity())] * 2)
    assert branch_count_bound(N) == 1
    with pytest.raises(UnsupportedActivationError):
        branch_count_bound(load_fixture("fig7"))


def test_image_then_preimage_contains_input():
    rng = np.random.default_rng(2)
    for _ in range(10):
        N = random_network(rng)
        lo, hi = -np.ones(N.input_dim), np.ones(N.input_dim)
        X = Box(lo, hi).to_polyhedron()
        back = preimage_network(network_image(N, X), N)
        for x in rng.uniform(lo, hi, (50, N.input_dim)):
            assert back.contains(x, tol=1e-6)


def test_preimage_distributes_over_union():
    rng = np.random.default_rng(3)
    for _ in range(10):
        N = random_network(rng)
        m = N.output_dim
        Z1 = Box(rng.uniform(-1, 0, m), rng.uniform(0, 1, m)).to_polyhedron()
        Z2 = Box(rng.uniform(-0.5, 0.5, m), rng.uniform(0.5, 1.5, m)).to_polyhedron()
        whole = preimage_network(PolyUnion([Z1, Z2]), N)
        split = preimage_network(Z1, N) | preimage_network(Z2, N)
        X = rng.uniform(-2, 2, (100, N.input_dim))
        Y = eval_network(N, X)
        ok = boundary_distance(np.vstack([Z1.C, Z2.C]), np.concatenate([Z1.d, Z2.d]), Y) > 1e-6
        ok &= kink_distance(N, X) > 1e-6
        for x in X[ok]:
            assert whole.contains(x, 1e-7) == split.contains(x, 1e-7)


def test_underapprox_samples_map_into_target():
    N = load_fixture("fig6")
    Z = Box([0.15, 0.2], [0.25, 0.3]).to_polyhedron()
    P = preimage_underapprox(Z, N)
    assert not poly_is_empty(P)
    B = box_hull(P)
    lo = np.maximum(B.lo, -10)
    hi = np.minimum(B.hi, 10)
    pts = sample_polyhedron(P, lo, hi, 300, np.random.default_rng(4))
    assert len(pts) > 0
    for y in eval_network(N, pts):
        assert Z.contains(y, 1e-7) if hasattr(Z, "contains") else y in Z
