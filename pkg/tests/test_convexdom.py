import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexproj.convexdom import (
    BoundarySet, DomainError, Ellipsoid, Membership, Polytope, boundary_samples, boundary_subset_checks,
    chord, contains, cross_ratio_of_chord, delta_invariant, dual_domain, face_of, faces,
    hilbert_distance, hull_of_boundary_set, pair_values, proper_convexity_check, ray_distance_profile,
    rows_match, sample_interior, supporting_functionals_at,
)
from convexproj.examples import klein_model, random_polytope, simplex, square
from convexproj.projlin import ProjectiveMap, angle_distance, point, point_to_subspace_distance, span

E = np.eye(3)
K = klein_model(3)
J = np.diag([1.0, 1.0, -1.0])


def chart_line_hits(P, Q, edges):
    """Parameters t where P + t (Q - P) crosses each 2-D segment in edges."""
    out = []
    D = Q - P
    for A, B in edges:
        M = np.array([D, A - B]).T
        if abs(np.linalg.det(M)) < 1e-14:
            continue
        t, s = np.linalg.solve(M, A - P)
        if -1e-12 <= s <= 1 + 1e-12:
            out.append(t)
    return sorted(out)


def euclid_cross_ratio(a, b, c, d):
    n = np.linalg.norm
    return n(c - a) * n(d - b) / (n(b - a) * n(d - c))


# membership

def test_contains_examples():
    T = simplex(3)
    assert contains(T, [1, 1, 1]) is Membership.INTERIOR
    assert contains(T, E[0]) is Membership.BOUNDARY
    assert contains(K, [1, 0, 0.5]) is Membership.EXTERIOR
    assert contains(K, [0, 0, 1]) is Membership.INTERIOR
    assert contains(K, np.array([1, 0, 1]) / np.sqrt(2)) is Membership.BOUNDARY


# chords

def test_chord_klein_center():
    a, b = chord(K, [0, 0, 1], [0.5, 0, 1])
    ends = sorted([a.rep[0] / a.rep[2], b.rep[0] / b.rep[2]])
    assert np.allclose(ends, [-1, 1], atol=1e-14)
    assert abs(a.rep[1]) < 1e-14 and abs(b.rep[1]) < 1e-14
    # order a, x, y, b: b is beyond y
    assert b.rep[0] / b.rep[2] == pytest.approx(1.0)


def test_chord_simplex_clipping_oracle():
    T = simplex(3)
    x = np.ones(3) / 3
    y = 0.5 * x + 0.5 * E[0]
    a, b = chord(T, x, y)
    assert b.same_as(point(E[0]), 1e-12)
    # independent clipping against coordinate hyperplanes in the chart sum = 1
    D = y - x
    ts = [-x[i] / D[i] for i in range(3) if abs(D[i]) > 1e-15]
    lo = max(t for t in ts if t < 0)
    aa = x + lo * D
    assert a.same_as(point(aa), 1e-12)
    assert abs(aa[0]) < 1e-12 or abs(aa[1]) < 1e-12 or abs(aa[2]) < 1e-12


def test_chord_same_point():
    with pytest.raises(DomainError):
        chord(K, [0, 0, 1], [0, 0, 2])


# Hilbert distance

@pytest.mark.parametrize("r", np.round(np.arange(0.1, 1.0, 0.1), 1))
def test_hilbert_klein_radius(r):
    assert hilbert_distance(K, [0, 0, 1], [r, 0, 1]) == pytest.approx(0.5 * np.log((1 + r) / (1 - r)), abs=1e-12)


def test_hilbert_zero_and_symmetry():
    assert hilbert_distance(K, [0.2, 0.1, 1], [0.2, 0.1, 1]) == 0.0
    T = simplex(3)
    x, y = [1, 2, 3], [3, 1, 1]
    assert hilbert_distance(T, x, y) == pytest.approx(hilbert_distance(T, y, x), abs=1e-14)


def test_hilbert_simplex_unit_chord_oracle():
    T = simplex(3)
    x = np.array([1.0, 1.0, 1.0])
    y = np.array([np.e, 1.0, 1 / np.e])
    # chart x1 + x2 + x3 = 1 with planar coordinates (x1, x2)
    P, Q = x[:2] / x.sum(), y[:2] / y.sum()
    tri = [np.array(v) for v in ([1.0, 0.0], [0.0, 1.0], [0.0, 0.0])]
    ts = chart_line_hits(P, Q, [(tri[i], tri[(i + 1) % 3]) for i in range(3)])
    a, b = P + ts[0] * (Q - P), P + ts[-1] * (Q - P)
    val = 0.5 * np.log(euclid_cross_ratio(a, P, Q, b))
    assert val == pytest.approx(1.0, abs=1e-9)
    assert hilbert_distance(T, x, y) == pytest.approx(val, abs=1e-9)
    assert 0.5 * np.log(cross_ratio_of_chord(T, x, y)) == pytest.approx(val, abs=1e-9)


def test_hilbert_exterior_rejected():
    with pytest.raises(DomainError):
        hilbert_distance(K, [0, 0, 1], [2, 0, 1])


DOMAINS = {
    "simplex": simplex(3),
    "square": square(),
    "klein": K,
    "simplex4": simplex(4),
    "random": random_polytope(4, 9, np.random.default_rng(12)),
}


@pytest.mark.parametrize("name", list(DOMAINS))
def test_hilbert_agrees_with_explicit_chord(name):
    Ω = DOMAINS[name]
    rng = np.random.default_rng(13)
    X, Y = sample_interior(Ω, 30, rng), sample_interior(Ω, 30, rng)
    fast = pair_values(Ω, X, Y)
    slow = [0.5 * np.log(cross_ratio_of_chord(Ω, x, y)) for x, y in zip(X, Y)]
    assert np.allclose(fast, slow, atol=1e-9)


@pytest.mark.parametrize("name", list(DOMAINS))
def test_triangle_inequality_and_invariance(name):
    Ω = DOMAINS[name]
    rng = np.random.default_rng(14)
    X, Y, Z = (sample_interior(Ω, 300, rng) for _ in range(3))
    dxy, dyz, dxz = pair_values(Ω, X, Y), pair_values(Ω, Y, Z), pair_values(Ω, X, Z)
    assert np.all(dxz <= dxy + dyz + 1e-9)
    g = np.eye(Ω.d) + 0.3 * rng.standard_normal((Ω.d, Ω.d))
    gΩ = Ω.transform(ProjectiveMap(g))
    gX = np.array([gΩ.lift(v) for v in X @ g.T])
    gY = np.array([gΩ.lift(v) for v in Y @ g.T])
    assert np.allclose(pair_values(gΩ, gX, gY), dxy, atol=1e-9)


# supporting functionals and faces

def test_supporting_functionals_examples():
    T = simplex(3)
    _, ext = supporting_functionals_at(T, [0, 1, 1])
    assert len(ext) == 1 and rows_match(np.array(ext), E[:1])
    can, ext = supporting_functionals_at(T, E[0])
    assert rows_match(np.array(ext), E[1:])
    assert np.all(np.abs(np.array(ext) @ E[0]) < 1e-12)
    b = np.array([0.6, 0.8, 1.0])
    can, ext = supporting_functionals_at(K, b)
    assert rows_match(np.array(ext), (J @ b / np.linalg.norm(J @ b))[None])
    # nonnegative on the closure
    S = boundary_samples(K, 200)
    assert np.all(S @ can >= -1e-9)


def test_supporting_functionals_nonnegative_on_polytope():
    Ω = DOMAINS["random"]
    for b in boundary_samples(Ω, 50):
        can, ext = supporting_functionals_at(Ω, b)
        for f in ext + [can]:
            assert abs(f @ b) < 1e-9
            assert np.min(Ω.vertex_lifts @ f) >= -1e-9


def test_face_of_examples():
    T = simplex(3)
    f = face_of(T, E[0])
    assert f.dim == 0 and f.support.same_as(span(E[0]))
    f = face_of(T, E[0] + E[1])
    assert f.dim == 1 and f.support.same_as(span(E[0], E[1]))
    b = np.array([0.6, 0.8, 1.0])
    f = face_of(K, b)
    assert f.dim == 0 and f.support.contains(b / np.linalg.norm(b))
    with pytest.raises(DomainError):
        face_of(T, [1, 1, 1])


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_face_of_stable_inside_open_face(s, t):
    Ω = simplex(4)
    b1 = np.array([s, 1 - s, 0, 0])
    b2 = np.array([t, 1 - t, 0, 0])
    assert face_of(Ω, b1).carrier == face_of(Ω, b2).carrier
    c = np.array([s, (1 - s) / 2, (1 - s) / 2, 0])
    assert face_of(Ω, c).dim == 2 and face_of(Ω, c).support.contains(c / np.linalg.norm(c))


def test_face_lattice_counts():
    # square: 4 vertices + 4 edges; 3-simplex: 4 + 6 + 4
    assert sorted(f.dim for f in faces(square())) == [0] * 4 + [1] * 4
    assert sorted(f.dim for f in faces(simplex(4))) == [0] * 4 + [1] * 6 + [2] * 4


# ray profiles

def test_ray_profile_examples():
    Ω = square()
    p = Ω.from_chart([[0.0, 0.0]])[0]
    assert np.all(ray_distance_profile(Ω, p, E[2] + E[0], p, E[2] + E[0], 10, 50) == 0)
    b1 = np.array([1.0, -0.5, 1.0])
    b2 = np.array([1.0, 0.5, 1.0])
    prof = ray_distance_profile(Ω, p, b1, p, b2, 20, 401)
    # frozen: the profile tends to the Hilbert distance log 3 of b1, b2 inside the edge [-1, 1]
    assert prof.max() <= np.log(3) + 1e-9
    assert prof[-1] == pytest.approx(np.log(3), abs=1e-9)
    T = simplex(3)
    c = T.center_lift()
    prof = ray_distance_profile(T, c, E[0], c, E[1], 15, 151)
    assert prof[-1] > 10


def test_ray_profile_unit_speed():
    T = simplex(3)
    c = T.center_lift()
    prof = ray_distance_profile(T, c, E[0], c, E[0] + 1e-300 * E[1], 5, 11)
    assert np.allclose(prof, 0, atol=1e-12)


# duality

def test_dual_examples():
    T = simplex(3)
    assert rows_match(dual_domain(T).vertex_lifts, E)
    assert np.allclose(dual_domain(K).form, K.form)
    # square [-1, 1]^2: enumerate functionals a x + b y + c >= 0 tight on two adjacent vertices
    V = np.array([[-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]], float)
    oracle = []
    for i in range(4):
        f = np.cross(V[i], V[(i + 1) % 4])
        f = f if np.all(V @ f >= -1e-12) else -f
        oracle.append(f / f[2])
    oracle = np.array(oracle)
    assert np.allclose(np.abs(oracle[:, :2]).sum(axis=1), 1)
    assert rows_match(dual_domain(square()).vertex_lifts, oracle / np.linalg.norm(oracle, axis=1, keepdims=True))


@pytest.mark.parametrize("seed", range(5))
def test_dual_involution(seed):
    Ω = random_polytope(4, 10, np.random.default_rng(seed))
    assert rows_match(dual_domain(dual_domain(Ω)).vertex_lifts, Ω.vertex_lifts, 1e-8)
    Ω.validate()


# hulls

def test_hull_examples():
    T = simplex(3)
    h = hull_of_boundary_set(T, list(E))
    assert not h.degenerate and rows_match(h.domain.vertex_lifts, E)
    assert len(h.ideal_boundary) == 3
    ang = np.array([0.3, 2.2, 4.1])
    pts = np.stack([np.cos(ang), np.sin(ang), np.ones(3)], axis=1)
    h = hull_of_boundary_set(K, pts)
    assert len(h.ideal_boundary) == 3 and h.domain.vertex_lifts.shape == (3, 3)
    with pytest.raises(DomainError):
        hull_of_boundary_set(K, [])


def test_hull_degenerate():
    h = hull_of_boundary_set(simplex(3), [E[0], E[1]])
    assert h.degenerate and h.span.k == 2


# boundary subsets

def test_boundary_subset_examples():
    T = simplex(3)
    assert boundary_subset_checks(T, BoundarySet(faces=faces(T)))["boundary_convex"]
    r = boundary_subset_checks(T, BoundarySet(faces=faces(T)))
    assert r["contains_faces"]
    S = square()
    verts = [f for f in faces(S) if f.dim == 0]
    adjacent = [f for f in verts if len(set(f.vertex_indices) & {0, 1})]
    r = boundary_subset_checks(S, BoundarySet(faces=adjacent))
    assert not r["boundary_convex"]
    r = boundary_subset_checks(S, BoundarySet(samples=[np.array([1.0, 0.0, 1.0])]))
    assert not r["contains_faces"]


# delta invariant

def delta_grid_oracle(x, n=200_000):
    """Klein disk: scan directions z on the line at infinity of the standard chart."""
    phi = np.linspace(0, np.pi, n)
    best = np.inf
    for p in phi:
        z = np.array([np.cos(p), np.sin(p), 0.0])
        # chord of the line x + t z
        a_, b_, c_ = z @ J @ z, x @ J @ z, x @ J @ x
        disc = np.sqrt(b_ * b_ - a_ * c_)
        ta, tb = (-b_ - disc) / a_, (-b_ + disc) / a_
        # [a, x; b, z] with z at parameter infinity
        best = min(best, (tb - ta) / max(-ta, tb))
    return best


def test_delta_klein_center():
    r = delta_invariant(K, [0, 0, 1], np.array([0, 0, 1.0]))
    assert r.value == pytest.approx(2.0, abs=1e-3)
    assert delta_grid_oracle(np.array([0, 0, 1.0]), 2000) == pytest.approx(2.0, abs=1e-9)


def test_delta_invariance_under_automorphism():
    from convexproj.examples import boost
    x = np.array([0.2, -0.1, 1.0])
    w = np.array([0, 0, 1.0])
    base = delta_invariant(K, x, w)
    g = boost(0.4, 0.7)
    moved = delta_invariant(K, g @ x, w @ np.linalg.inv(g))
    assert abs(moved.value - base.value) < 2 * base.resolution
    assert base.value == pytest.approx(delta_grid_oracle(x, 20_000), abs=1e-3)


def test_delta_decreases_toward_boundary():
    w = np.array([0, 0, 1.0])
    vals = [delta_invariant(K, [r, 0, 1], w).value for r in (0.0, 0.5, 0.9, 0.99, 0.999)]
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-2


def test_delta_tends_to_one_with_quoted_cross_ratios():
    # with [a, b; c, d] = |c - a||d - b| / (|b - a||d - c|) both cross-ratios are >= 1
    w = np.array([0, 0, 1.0])
    vals = np.array([delta_invariant(K, [r, 0, 1], w).value for r in (0.9, 0.99, 0.999, 0.9999)])
    assert np.all(vals >= 1 - 1e-12)
    assert np.all(np.diff(vals - 1) < 0) and vals[-1] - 1 < 1e-3


def test_delta_rejects_meeting_hyperplane():
    with pytest.raises(DomainError):
        delta_invariant(K, [0, 0, 1], np.array([1.0, 0, 0]))


# supporting subspaces stay farther than the boundary

def exact_boundary_distance(Ω, x):
    x = Ω.lift(x)
    if isinstance(Ω, Polytope):
        F = Ω.facet_functionals
        return float(np.arcsin(np.clip((F @ x) / np.linalg.norm(F, axis=1), -1, 1)).min())
    # round cone x1^2 + x2^2 < x3^2 is a cap of radius pi/4 about e3
    return float(np.pi / 4 - angle_distance(point(x), point(E[2])))


@pytest.mark.parametrize("name", ["simplex", "square", "klein", "random"])
def test_supporting_subspace_farther_than_boundary(name):
    Ω = DOMAINS[name]
    rng = np.random.default_rng(15)
    B = boundary_samples(Ω, 64)
    X = sample_interior(Ω, 64, rng)
    for x, b in zip(X, B):
        can, _ = supporting_functionals_at(Ω, b)
        # random supporting subspace through b inside ker(can)
        ker = np.linalg.svd(can[None])[2][1:]
        k = int(rng.integers(1, Ω.d))
        rows = [b] + list(rng.standard_normal((k - 1, Ω.d - 1)) @ ker)
        W = span(*rows)
        ys = rng.standard_normal((200, W.k)) @ W.basis
        dmin = min(angle_distance(point(x), point(y)) for y in ys)
        dbd = exact_boundary_distance(Ω, x)
        assert dmin >= dbd - 1e-9
        assert point_to_subspace_distance(point(x), W) >= dbd - 1e-9


def test_properly_embedded_simplex():
    # a simplex inscribed in the square: d_Delta >= d_Omega, equality only for Omega = Delta
    S = square()
    tri = Polytope.from_chart_vertices([[-1, -1], [1, -1], [1, 1]])
    rng = np.random.default_rng(16)
    X, Y = sample_interior(tri, 200, rng), sample_interior(tri, 200, rng)
    assert np.all(pair_values(tri, X, Y) >= pair_values(S, X, Y) - 1e-9)
    T = simplex(3)
    X, Y = sample_interior(T, 200, rng), sample_interior(T, 200, rng)
    same = Polytope.from_vertices(E)
    assert np.allclose(pair_values(same, X, Y), pair_values(T, X, Y), atol=1e-9)


def test_proper_convexity():
    assert proper_convexity_check(square()) and proper_convexity_check(K)
    with pytest.raises(DomainError):
        Ellipsoid(np.eye(3))
