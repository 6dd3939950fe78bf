import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from convexproj.projlin import (
    DimensionMismatch, NotDivergent, ProjSubspace, ProjectiveError, ProjectiveMap, angle_distance,
    attracting_repelling_subspaces, cartan_projection, cartan_projection_of_product, cross_ratio,
    exterior_power, grassmann_distance, nearest_containing_subspace, norm_conorm_on_subspace, point,
    point_to_subspace_distance, span,
)

E = np.eye(3)
finite = st.floats(-3, 3, allow_nan=False)


def unit_vectors(d):
    return arrays(float, d, elements=finite).filter(lambda v: np.linalg.norm(v) > 0.1)


def rand_subspace(rng, d, k):
    return ProjSubspace(rng.standard_normal((k, d)))


# angle distance

def test_angle_orthogonal_and_diagonal():
    assert angle_distance(point(E[0]), point(E[1])) == pytest.approx(np.pi / 2, abs=1e-15)
    assert angle_distance(point(E[0]), point(E[0] + E[1])) == pytest.approx(np.pi / 4, abs=1e-15)


def test_angle_sign_enumeration_oracle():
    rng = np.random.default_rng(1)
    for _ in range(200):
        u, v = rng.standard_normal((2, 5))
        cands = []
        for su, sv in itertools.product((1, -1), repeat=2):
            a, b = su * u / np.linalg.norm(u), sv * v / np.linalg.norm(v)
            # law of cosines on the chord
            cands.append(2 * np.arcsin(np.linalg.norm(a - b) / 2))
        assert abs(angle_distance(point(u), point(v)) - min(cands)) < 1e-12


def test_angle_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        angle_distance(point(1, 0), point(1, 0, 0))


@settings(max_examples=200, deadline=None)
@given(unit_vectors(4), unit_vectors(4), unit_vectors(4))
def test_angle_triangle_inequality(a, b, c):
    p, q, r = point(a), point(b), point(c)
    assert angle_distance(p, r) <= angle_distance(p, q) + angle_distance(q, r) + 1e-10
    assert angle_distance(p, q) == pytest.approx(angle_distance(q, p), abs=1e-15)


# Grassmann distance

def sampled_hausdorff(V, W, n, rng):
    """Sup over samples of V of the distance to W, symmetrized."""
    def one_side(A, B):
        X = rng.standard_normal((n, A.k)) @ A.basis
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        cos = np.linalg.norm(X @ B.basis.T, axis=1)
        return np.arccos(np.clip(cos, 0, 1)).max()
    return max(one_side(V, W), one_side(W, V))


def test_grassmann_examples():
    V = span(E[0], E[1])
    assert grassmann_distance(V, V) == 0.0
    assert grassmann_distance(V, span(E[0], E[2])) == pytest.approx(np.pi / 2, abs=1e-14)


@pytest.mark.parametrize("theta", [0.1, 0.4, 0.9, 1.3])
def test_grassmann_sampled_hausdorff(theta):
    V = span(E[0], E[1])
    W = span(E[0], np.cos(theta) * E[1] + np.sin(theta) * E[2])
    assert grassmann_distance(V, W) == pytest.approx(theta, abs=1e-12)
    # samples along great circles; the sup is attained at the e2 direction
    t = np.linspace(0, np.pi, 10_000)
    circle = np.outer(np.cos(t), E[0]) + np.outer(np.sin(t), E[1])
    cos = np.linalg.norm(circle @ W.basis.T, axis=1)
    assert abs(np.arccos(np.clip(cos, 0, 1)).max() - theta) < 1e-4


def test_grassmann_random_sampled_oracle():
    rng = np.random.default_rng(2)
    for d, k in [(4, 2), (5, 2), (5, 3)]:
        V, W = rand_subspace(rng, d, k), rand_subspace(rng, d, k)
        est = sampled_hausdorff(V, W, 200_000, rng)
        assert est <= grassmann_distance(V, W) + 1e-12
        assert grassmann_distance(V, W) - est < 2e-2


def test_grassmann_orthogonal_invariance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        V, W = rand_subspace(rng, 5, 2), rand_subspace(rng, 5, 2)
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        gV, gW = ProjSubspace(V.basis @ Q.T), ProjSubspace(W.basis @ Q.T)
        assert abs(grassmann_distance(gV, gW) - grassmann_distance(V, W)) < 1e-10


def test_grassmann_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        grassmann_distance(span(E[0]), span(E[0], E[1]))


# cross-ratio

def affine(t):
    return point(t, 1.0)


def test_cross_ratio_affine():
    assert cross_ratio(affine(0), affine(1), affine(2), affine(3)) == pytest.approx(4.0, rel=1e-14)
    for r in (0.1, 0.5, 0.9):
        val = cross_ratio(affine(-1), affine(0), affine(r), affine(1))
        assert val == pytest.approx((1 + r) / (1 - r), rel=1e-13)


def test_cross_ratio_invariance_random_maps():
    rng = np.random.default_rng(4)
    for _ in range(200):
        ts = np.sort(rng.uniform(-2, 2, 4))
        g = rng.standard_normal((2, 2))
        if abs(np.linalg.det(g)) < 0.1:
            continue
        pts = [np.array([t, 1.0]) for t in ts]
        # embed on the line z = 0 inside R^3 to exercise the collinear frame
        lift = np.array([[1.0, 0], [0, 1], [0, 0]])
        a = cross_ratio(*[point(lift @ p) for p in pts])
        b = cross_ratio(*[point(lift @ g @ p) for p in pts])
        assert abs(a - b) < 1e-9 * max(1, a)


def test_cross_ratio_errors():
    with pytest.raises(ProjectiveError):
        cross_ratio(point(1, 0, 0), point(0, 1, 0), point(0, 0, 1), point(1, 1, 1))
    with pytest.raises(ProjectiveError):
        cross_ratio(affine(0), affine(0), affine(0), affine(1))


# point to subspace distance and the nearest containing subspace

def test_point_to_subspace_examples():
    W = span(E[0], E[2])
    assert point_to_subspace_distance(point(E[0] + E[2]), W) == pytest.approx(0, abs=1e-15)
    assert point_to_subspace_distance(point(E[1]), W) == pytest.approx(np.pi / 2, abs=1e-15)


@pytest.mark.parametrize("theta", [0.05, 0.3, 0.7, 1.2])
def test_point_to_subspace_grid_oracle(theta):
    W = span(E[0], E[2])
    x = point(np.cos(theta) * E[0] + np.sin(theta) * E[1])
    phi = np.linspace(0, np.pi, 200_001)
    w = np.outer(np.cos(phi), E[0]) + np.outer(np.sin(phi), E[2])
    grid = np.arccos(np.clip(np.abs(w @ x.rep), 0, 1)).min()
    assert abs(point_to_subspace_distance(x, W) - grid) < 1e-8


@pytest.mark.parametrize("theta", [0.05, 0.3, 1.2])
def test_nearest_containing_subspace_example(theta):
    W = span(E[0], E[2])
    x = point(np.cos(theta) * E[0] + np.sin(theta) * E[1])
    V = nearest_containing_subspace(x, W)
    assert V.same_as(span(x, E[2]))
    # principal angles computed independently via scipy
    assert scipy.linalg.subspace_angles(V.basis.T, W.basis.T).max() == pytest.approx(theta, abs=1e-9)


def test_nearest_containing_subspace_trivial_and_orthogonal():
    W = span(E[0], E[2])
    assert nearest_containing_subspace(point(E[0] + E[2]), W) is W
    V = nearest_containing_subspace(point(E[1]), W)
    assert V.contains(E[1])
    assert grassmann_distance(V, W) == pytest.approx(np.pi / 2, abs=1e-12)


def test_nearest_containing_subspace_random():
    rng = np.random.default_rng(5)
    for _ in range(300):
        d = int(rng.integers(2, 7))
        k = int(rng.integers(1, d))
        W = rand_subspace(rng, d, k)
        x = point(rng.standard_normal(d))
        V = nearest_containing_subspace(x, W)
        assert V.k == k and V.contains(x, 1e-9)
        assert abs(grassmann_distance(V, W) - point_to_subspace_distance(x, W)) < 1e-9
        # any other subspace through x is at least as far
        other = span(x, rng.standard_normal((k - 1, d))) if k > 1 else span(x)
        assert grassmann_distance(other, W) >= point_to_subspace_distance(x, W) - 1e-9


# Cartan projections

def test_cartan_examples():
    mu = cartan_projection(ProjectiveMap(np.diag([4.0, 2.0, 1.0])))
    assert mu.gap(1) == pytest.approx(np.log(2), abs=1e-14)
    assert mu.gap(2) == pytest.approx(np.log(2), abs=1e-14)
    Q, _ = np.linalg.qr(np.random.default_rng(6).standard_normal((4, 4)))
    assert np.abs(cartan_projection(ProjectiveMap(Q)).mu).max() < 1e-14


def test_cartan_against_symmetric_eigenvalues():
    rng = np.random.default_rng(7)
    for _ in range(100):
        M = ProjectiveMap(rng.standard_normal((4, 4)))
        ev = scipy.linalg.eigh(M.mat.T @ M.mat, eigvals_only=True)[::-1]
        assert np.allclose(np.exp(cartan_projection(M).mu), np.sqrt(ev), atol=1e-8, rtol=1e-8)
        mu = cartan_projection(M).mu
        assert np.all(np.diff(mu) <= 0) and abs(mu.sum()) < 1e-9


def test_cartan_inverse_and_subadditivity():
    rng = np.random.default_rng(8)
    for _ in range(100):
        g = ProjectiveMap(rng.standard_normal((4, 4)))
        h = ProjectiveMap(rng.standard_normal((4, 4)))
        assert np.allclose(cartan_projection(g.inverse()).mu, -cartan_projection(g).mu[::-1], atol=1e-8)
        lhs = np.linalg.norm(cartan_projection(g @ h).mu - cartan_projection(g).mu)
        assert lhs <= np.linalg.norm(cartan_projection(h).mu) + 1e-6


def test_exterior_power_is_multiplicative():
    rng = np.random.default_rng(9)
    A, B = rng.standard_normal((2, 4, 4))
    for k in (1, 2, 3):
        assert np.allclose(exterior_power(A @ B, k), exterior_power(A, k) @ exterior_power(B, k))
    assert exterior_power(A, 4)[0, 0] == pytest.approx(np.linalg.det(A))


def test_cartan_of_product_matches_direct_when_well_conditioned():
    rng = np.random.default_rng(10)
    fs = [ProjectiveMap(np.eye(3) + 0.3 * rng.standard_normal((3, 3))) for _ in range(5)]
    direct = np.linalg.multi_dot([f.mat for f in fs])
    assert np.allclose(cartan_projection_of_product(fs).mu, cartan_projection(direct).mu, atol=1e-10)


def test_cartan_of_long_product_keeps_middle_values():
    # diagonal factors: exact answer is n times the log diagonal
    g = np.diag([np.e ** 3, 1.0, np.e ** -3])
    mu = cartan_projection_of_product([g] * 40).mu
    assert np.allclose(mu, [120, 0, -120], atol=1e-9)


# norm and conorm

def test_norm_conorm_examples():
    assert norm_conorm_on_subspace(np.diag([3.0, 2.0, 1.0]), span(E[0], E[1])) == pytest.approx((3, 2))
    assert norm_conorm_on_subspace(np.eye(3), span(E[1])) == pytest.approx((1, 1))


def test_norm_conorm_sampling_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        M = rng.standard_normal((4, 4))
        V = rand_subspace(rng, 4, 2)
        c = rng.standard_normal((10_000, 2))
        v = c @ V.basis
        ratio = np.linalg.norm(v @ M.T, axis=1) / np.linalg.norm(v, axis=1)
        hi, lo = norm_conorm_on_subspace(M, V)
        assert ratio.max() == pytest.approx(hi, rel=1e-3)
        assert ratio.min() == pytest.approx(lo, rel=1e-3)
        assert ratio.max() <= hi * (1 + 1e-12) and ratio.min() >= lo * (1 - 1e-12)


# attracting and repelling subspaces

def test_attracting_repelling_tie_break():
    seq = [np.diag([9.0, 3.0, 1.0]) ** n for n in range(1, 6)]
    Ep, Em, p = attracting_repelling_subspaces(seq)
    assert p == 1 and Ep.same_as(span(E[0])) and Em.same_as(span(E[1], E[2]))
    Ep, Em, p = attracting_repelling_subspaces([np.diag([9.0, 9.0, 1.0]) ** n for n in range(1, 6)])
    assert p == 2 and Ep.same_as(span(E[0], E[1])) and Em.same_as(span(E[2]))


def test_attracting_repelling_rotation():
    c, s = np.cos(0.3), np.sin(0.3)
    R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    with pytest.raises(NotDivergent):
        attracting_repelling_subspaces([np.linalg.matrix_power(R, n) for n in range(1, 10)])


# normalization invariants

@settings(max_examples=100, deadline=None)
@given(arrays(float, (3, 3), elements=finite).filter(lambda m: abs(np.linalg.det(m)) > 1e-2))
def test_map_normalization(m):
    g = ProjectiveMap(m)
    assert abs(abs(np.linalg.det(g.mat)) - 1) < 1e-9
    flat = g.mat.ravel()
    assert flat[np.flatnonzero(np.abs(flat) > 1e-12 * np.abs(flat).max())[0]] > 0


@settings(max_examples=100, deadline=None)
@given(unit_vectors(5))
def test_point_normalization(v):
    p = point(v)
    assert abs(np.linalg.norm(p.rep) - 1) < 1e-12
    assert p.same_as(point(-v))
