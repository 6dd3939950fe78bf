"""The space of pointed domains.

Sampled Hausdorff distance between domains, slices and projections along a
direct sum, sampled checks of cone-duality identities, convex hulls of pairs,
centroid/inertia normalization (absolute and relative to a splitting) and the
sandwich bounds used to control a domain from its slices and projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import sqrtm
from scipy.optimize import linprog, minimize, nnls
from scipy.spatial import Delaunay
from scipy.stats import norm, qmc

from . import kernels
from .config import DEFAULT
from .convexdom import (
    ConvexDomain,
    DomainError,
    Ellipsoid,
    Membership,
    PointedDomain,
    Polytope,
    _positive_covector,
    _unit_rows,
    boundary_samples,
    cone_facets,
    contains,
    proper_convexity_check,
)
from .projlin import ProjPoint, ProjSubspace, ProjectiveMap


class NormalizationError(DomainError):
    pass


@dataclass(frozen=True, eq=False)
class DirectSumSplit:
    basis_a: np.ndarray
    basis_b: np.ndarray

    def __post_init__(self):
        A = _rows(self.basis_a)
        B = _rows(self.basis_b)
        d = A.shape[1] if A.size else B.shape[1]
        if A.shape[0] + B.shape[0] != d:
            raise DomainError("dimensions of the two factors must add up to d")
        M = np.vstack([A, B])
        if np.linalg.svd(M, compute_uv=False)[-1] < 1e-8:
            raise DomainError("factors are not complementary")
        object.__setattr__(self, "basis_a", A)
        object.__setattr__(self, "basis_b", B)

    @classmethod
    def of(cls, Va, Vb) -> "DirectSumSplit":
        a = Va.basis if isinstance(Va, ProjSubspace) else np.asarray(Va, dtype=float)
        b = Vb.basis if isinstance(Vb, ProjSubspace) else np.asarray(Vb, dtype=float)
        return cls(a, b)

    @property
    def d(self) -> int:
        return self.basis_a.shape[1]

    @property
    def ka(self) -> int:
        return self.basis_a.shape[0]

    def coords(self, v) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of v (rows) in the a- and b-bases."""
        M = np.vstack([self.basis_a, self.basis_b])
        c = np.linalg.solve(M.T, np.atleast_2d(v).T).T
        return c[:, :self.ka], c[:, self.ka:]

    def projector_a(self) -> np.ndarray:
        """Matrix of the projection onto V_a with kernel V_b."""
        M = np.vstack([self.basis_a, self.basis_b])
        P = np.linalg.inv(M.T)[:self.ka]
        return self.basis_a.T @ P


def _rows(b):
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[None, :] if b.size else b.reshape(0, 0)
    return b


class SampledDistance(float):
    """Distance value carrying the number of samples behind it."""

    samples: int

    def __new__(cls, value, samples):
        obj = super().__new__(cls, value)
        obj.samples = samples
        return obj


def _gap_to_closure(Ω, v, start):
    """Angle from the line of v to the closure of Ω, v outside."""
    v = v / np.linalg.norm(v)
    if isinstance(Ω, Polytope):
        best = np.pi / 2
        G = Ω.vertex_lifts.T
        for w in (v, -v):
            c, _ = nnls(G, w)
            p = G @ c
            if np.linalg.norm(p) > 0:
                best = min(best, math.atan2(np.linalg.norm(w - (w @ p) / (p @ p) * p), abs(w @ p) / np.linalg.norm(p)))
        return best
    F = Ω.form
    u0 = start * np.sign(start @ v)
    res = minimize(lambda u: -(u @ v) ** 2 / (u @ u), u0, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": lambda u: -(u @ F @ u) / (u @ u)}],
                   options={"ftol": 1e-15, "maxiter": 200})
    u = res.x if res.success and res.x @ F @ res.x <= 1e-12 * (res.x @ res.x) else u0
    u = u / np.linalg.norm(u)
    return math.atan2(np.linalg.norm(v - (v @ u) * u), abs(v @ u))


def _closure_gaps(Ω1, S1, Ω2, S2):
    if not len(S1):
        return 0.0
    inside = np.array([contains(Ω2, s) is not Membership.EXTERIOR for s in S1])
    coarse = kernels.nearest_angles(S1, S2)
    coarse[inside] = 0.0
    best = 0.0
    # refined gaps never exceed the coarse ones, so stop once they cannot win
    for i in np.argsort(-coarse):
        if coarse[i] <= best:
            break
        j = int(np.argmax(np.abs(S2 @ S1[i])))
        best = max(best, _gap_to_closure(Ω2, S1[i], S2[j]))
    return float(best)


def domain_distance(Ω1: ConvexDomain, Ω2: ConvexDomain, n: int | None = None) -> SampledDistance:
    """Sampled Hausdorff distance between closures in the angle metric."""
    n = DEFAULT.domain_samples if n is None else n
    if Ω1.d != Ω2.d:
        raise DomainError("domains live in different dimensions")
    S1 = boundary_samples(Ω1, n)
    S2 = boundary_samples(Ω2, n)
    v = max(_closure_gaps(Ω1, S1, Ω2, S2), _closure_gaps(Ω2, S2, Ω1, S1))
    return SampledDistance(v, n)


def slice_domain(Ω: ConvexDomain, Va) -> ConvexDomain:
    """Ω ∩ P(V_a) in the orthonormal coordinates of V_a."""
    A = Va.basis if isinstance(Va, ProjSubspace) else _rows(Va)
    return _restrict(Ω, A)


def _restrict(Ω, U):
    """Ω ∩ P(span U) in the coordinates given by the rows of U."""
    if isinstance(Ω, Polytope):
        G = Ω.facet_functionals @ U.T
        # facets vanishing on the subspace: it lies in a supporting hyperplane
        # and the slice is the corresponding face of the closure
        G = G[np.linalg.norm(G, axis=1) > 1e-12]
        _feasible_direction(G)
        facets, verts = cone_facets(G)
        return Polytope(verts, facets)
    G = U @ Ω.form @ U.T
    w = np.linalg.eigvalsh(0.5 * (G + G.T))
    if w[0] >= -1e-12 * max(1.0, abs(w[-1])):
        raise DomainError("subspace misses the domain")
    return Ellipsoid(G)


def _feasible_direction(G):
    """A vector v with G v > 0, raising when none exists."""
    k = G.shape[1]
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A = np.hstack([-G, np.ones((G.shape[0], 1))])
    res = linprog(c, A_ub=A, b_ub=np.zeros(G.shape[0]), bounds=[(-1, 1)] * k + [(None, 1)], method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        raise DomainError("subspace misses the domain")
    return res.x[:k][None, :]


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    domain: ConvexDomain | None
    closure_warning: bool
    properly_convex: bool


def _simplex_weights_zero(P):
    """Whether some convex combination of rows of P vanishes (LP feasibility)."""
    n = P.shape[0]
    res = linprog(np.zeros(n), A_eq=np.vstack([P.T, np.ones((1, n))]),
                  b_eq=np.r_[np.zeros(P.shape[1]), 1.0], bounds=[(0, None)] * n, method="highs")
    return res.status == 0


def project(Ω: ConvexDomain, split: DirectSumSplit) -> ProjectionResult:
    """Image of Ω under the projection onto V_a with kernel V_b, in V_a coordinates."""
    if isinstance(Ω, Polytope):
        ca, _ = split.coords(Ω.vertex_lifts)
        # an open combination vanishing means Ω itself meets P(V_b)
        n = ca.shape[0]
        res = linprog(np.zeros(n), A_eq=ca.T, b_eq=np.zeros(ca.shape[1]),
                      bounds=[(1.0, None)] * n, method="highs")
        if res.status == 0:
            raise DomainError("Ω meets P(V_b), the projection is undefined")
        warning = _simplex_weights_zero(ca)
        keep = np.linalg.norm(ca, axis=1) > 1e-12
        try:
            dom = Polytope.from_vertices(ca[keep])
            ok = proper_convexity_check(dom)
        except DomainError:
            dom, ok = None, False
        return ProjectionResult(dom, bool(warning), ok)
    Bb = split.basis_b
    Gb = Bb @ Ω.form @ Bb.T
    w = np.linalg.eigvalsh(Gb) if Gb.size else np.array([1.0])
    if w[0] < -1e-12:
        raise DomainError("Ω meets P(V_b), the projection is undefined")
    warning = bool(w[0] <= 1e-12)
    M = np.vstack([split.basis_a, split.basis_b])
    Pa = np.linalg.inv(M.T)[:split.ka]
    # covectors on V_a pulled back to V vanish on V_b; the image is dual to that slice
    dual = Pa @ np.linalg.inv(Ω.form) @ Pa.T
    try:
        dom = Ellipsoid(np.linalg.inv(dual))
        ok = True
    except (DomainError, np.linalg.LinAlgError):
        dom, ok = None, False
    return ProjectionResult(dom, warning, ok)


def _sphere_points(n, m, offset=1):
    if m == 1:
        return np.array([[1.0], [-1.0]])
    h = qmc.Halton(d=m, scramble=False).random(n + offset)[offset:]
    g = norm.ppf(np.clip(h, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def verify_projection_duality(C, split: DirectSumSplit, n: int = 1000, tol: float = 1e-9) -> dict:
    """Sampled check of the duality between projecting a cone and slicing its dual.

    V_1 = V_a, V_2 = V_b and V_1* is identified with the covectors vanishing
    on V_2.  For such covectors α(π v) = α(v), so membership in π(C)* is
    tested on the nonzero projected generators.  Checked: C*∩V1* ⊆ π(C)*∩V1*,
    closure(π(C)*)∩V1* ⊆ closure(C*)∩V1*, and equality when C-bar minus 0
    misses V_2.
    """
    G = C.vertex_lifts if isinstance(C, Polytope) else _unit_rows(C)
    if isinstance(C, Polytope):
        xi = C.chart_covector()
    else:
        xi = _positive_covector(G)
    G = G * np.sign(G @ xi)[:, None]
    d = G.shape[1]
    ca, cb = split.coords(G)
    projected = ca @ split.basis_a
    nonzero = np.linalg.norm(projected, axis=1) > 1e-12
    closure_meets = _simplex_weights_zero(ca)
    # annihilator of V_b
    Ann = ProjSubspace(np.linalg.svd(split.basis_b)[2][split.basis_b.shape[0]:]).basis \
        if split.basis_b.size else np.eye(d)
    k = Ann.shape[0]
    rng = np.random.default_rng(DEFAULT.seed)
    half = n // 2
    raw = _sphere_points(half, k) if k > 1 else np.array([[1.0], [-1.0]] * (half // 2 + 1))[:half]
    sample = [r @ Ann for r in raw]
    Fc = cone_facets(G)[1] if np.linalg.matrix_rank(G) == d else None
    gens = Fc if Fc is not None else Ann
    while len(sample) < n:
        w = rng.exponential(size=gens.shape[0])
        a = w @ gens
        a = Ann.T @ (Ann @ a)
        if np.linalg.norm(a) > 1e-12:
            sample.append(a / np.linalg.norm(a))
    S = np.array(sample)
    vals = S @ G.T
    in_C = np.all(vals > tol, axis=1)
    in_C_closed = np.all(vals > -tol, axis=1)
    pv = vals[:, nonzero]
    in_P = np.all(pv > tol, axis=1)
    in_P_closed = np.all(pv > -tol, axis=1)
    violations = []
    for i in np.flatnonzero(in_C & ~np.all(pv > -tol, axis=1)):
        violations.append(("C* not inside pi(C)*", S[i]))
    for i in np.flatnonzero(in_P_closed & ~in_C_closed):
        violations.append(("closure of pi(C)* not inside closure of C*", S[i]))
    equality_case = not closure_meets
    if equality_case:
        for i in np.flatnonzero(in_C != in_P):
            margin = np.min(np.abs(vals[i]))
            if margin > tol:
                violations.append(("equality fails", S[i]))
    report = {"samples": n, "equality_case": equality_case, "in_C_dual": int(in_C.sum()),
              "in_projection_dual": int(in_P.sum()), "violations": violations}
    if np.all(np.linalg.norm(cb, axis=1) < 1e-12):
        # C lies in V_1: compare with the dual computed inside V_1
        inner = (S @ split.basis_a.T) @ ca.T
        report["identified_dual_agrees"] = bool(np.all(np.all(inner > tol, axis=1) == in_C))
    return report


def _intersect_witness(Ω1, Ω2):
    """Lift of a common interior point, or None."""
    if isinstance(Ω1, Polytope) and isinstance(Ω2, Polytope):
        for s in (1.0, -1.0):
            F = np.vstack([Ω1.facet_functionals, s * Ω2.facet_functionals])
            d = F.shape[1]
            c = np.zeros(d + 1)
            c[-1] = -1.0
            A = np.hstack([-F, np.ones((F.shape[0], 1))])
            res = linprog(c, A_ub=A, b_ub=np.zeros(F.shape[0]), bounds=[(-1, 1)] * d + [(None, 1)],
                          method="highs")
            if res.success and res.x[-1] > 1e-10:
                return res.x[:d]
        return None
    from .convexdom import sample_interior
    rng = np.random.default_rng(0)
    for a, b in ((Ω1, Ω2), (Ω2, Ω1)):
        for v in sample_interior(a, 500, rng):
            if contains(b, v) is Membership.INTERIOR:
                return v
    return None


def _generators(Ω, n=2048):
    if isinstance(Ω, Polytope):
        return Ω.vertex_lifts, True
    return boundary_samples(Ω, n), False


def hull_pair(Ω1: ConvexDomain, Ω2: ConvexDomain, W="auto") -> Polytope:
    """Convex hull of Ω1 ∪ Ω2 in the chart missing the hyperplane W.

    Ellipsoids enter through boundary samples, so their hulls are
    polyhedral approximations.
    """
    if Ω1.d != Ω2.d:
        raise DomainError("dimension mismatch")
    G1, _ = _generators(Ω1)
    G2, _ = _generators(Ω2)
    if isinstance(W, str) and W == "auto":
        p = _intersect_witness(Ω1, Ω2)
        if p is None:
            raise DomainError("domains are disjoint, no automatic hull")
        G1 = G1 * np.sign(Ω1.lift(p) @ p)
        s2 = np.sign(Ω2.lift(p) @ p)
        G2 = G2 * s2
        w = None
        cand = [Ω1.chart_covector() + s2 * Ω2.chart_covector(), Ω1.chart_covector(), s2 * Ω2.chart_covector()]
        allg = np.vstack([G1, G2])
        for c in cand:
            if np.linalg.norm(c) > 1e-12 and np.all(allg @ c > 1e-12):
                w = c
                break
        if w is None:
            try:
                w = _positive_covector(allg)
            except DomainError:
                raise DomainError("no common dual hyperplane found") from None
    else:
        w = np.asarray(W, dtype=float)
        G1 = G1 * np.sign(G1 @ w)[:, None]
        G2 = G2 * np.sign(G2 @ w)[:, None]
        allg = np.vstack([G1, G2])
        if np.any(np.abs(allg @ w) < 1e-12):
            raise DomainError("W meets one of the domains")
    verts, facets = cone_facets(allg)
    return Polytope(verts, facets)


# normalization ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NormalizationResult:
    map: ProjectiveMap
    normalized: PointedDomain
    inner_radius: float
    outer_radius: float
    iterations: int = 0
    chart_covector: np.ndarray = field(default=None)


def _triangulate(Y):
    """Simplices (index arrays) of a triangulation of the hull of the rows."""
    if Y.shape[1] == 1:
        o = np.argsort(Y[:, 0])
        return np.array([[o[0], o[-1]]])
    return Delaunay(Y).simplices


def _moments(Y, simplices):
    """Volume, centroid and raw second moment of the union of simplices."""
    n = Y.shape[1]
    vol = 0.0
    first = np.zeros(n)
    second = np.zeros((n, n))
    for s in simplices:
        P = Y[s]
        v = abs(np.linalg.det(P[1:] - P[0])) / math.factorial(n)
        S = P.sum(axis=0)
        vol += v
        first += v * S / (n + 1)
        second += v / ((n + 1) * (n + 2)) * (P.T @ P + np.outer(S, S))
    return vol, first / vol, second / vol


def _log_phi(xi, cones, dets):
    """log of sum_s |det V_s| / prod_i xi(v_si), with gradient and Hessian."""
    vals = np.einsum("sij,j->si", cones, xi)
    if np.any(vals <= 0):
        return np.inf, None, None
    logs = np.log(dets) - np.log(vals).sum(axis=1)
    top = logs.max()
    w = np.exp(logs - top)
    phi = w.sum()
    R = cones / vals[:, :, None]
    g_s = -R.sum(axis=1)
    grad = (w[:, None] * g_s).sum(axis=0) / phi
    H = np.zeros((len(xi), len(xi)))
    for s in range(len(w)):
        H += w[s] * (np.outer(g_s[s], g_s[s]) + R[s].T @ R[s])
    H = H / phi - np.outer(grad, grad)
    return top + math.log(phi), grad, H


def centroid_covector(Ω: ConvexDomain, x, max_iter: int | None = None) -> tuple[np.ndarray, int]:
    """Covector xi with xi(x) = 1 for which x is the centroid of Ω in the chart xi = 1."""
    max_iter = DEFAULT.centroid_max_iter if max_iter is None else max_iter
    X = Ω.lift(x)
    if isinstance(Ω, Ellipsoid):
        xi = -(Ω.form @ X)
        return xi / (xi @ X), 0
    Y = Ω.to_chart(Ω.vertex_lifts)
    simp = _triangulate(Y)
    cones = Ω.vertex_lifts[simp]
    dets = np.abs(np.linalg.det(cones))
    keep = dets > 1e-14
    cones, dets = cones[keep], dets[keep]
    N = np.linalg.svd(X[None, :])[2][1:]
    xi = Ω.chart_covector()
    xi = xi / (xi @ X)
    f, g, H = _log_phi(xi, cones, dets)
    for it in range(1, max_iter + 1):
        gz = N @ g
        if np.linalg.norm(gz) < 1e-12 * max(1.0, np.linalg.norm(g)):
            return xi, it
        Hz = N @ H @ N.T
        step = -np.linalg.solve(Hz, gz) @ N
        # Newton decrement: scale-free, unlike the gradient, whose floor grows with conditioning
        if -(gz @ (N @ step)) < 1e-20:
            return xi, it
        t = 1.0
        while t > 1e-12:
            cand = xi + t * step
            fc, gc, Hc = _log_phi(cand, cones, dets)
            # slack of a few ulps: near the minimum the required decrease is below roundoff in f
            if np.isfinite(fc) and fc <= f + 1e-4 * t * (gz @ (N @ step)) + 8 * np.finfo(float).eps * max(1.0, abs(f)):
                break
            t *= 0.5
        else:
            # no further decrease at machine precision
            if np.linalg.norm(gz) < 1e-8 * max(1.0, np.linalg.norm(g)):
                return xi, it
            break
        xi, f, g, H = cand, fc, gc, Hc
    raise NormalizationError(f"centroid iteration did not converge in {max_iter} steps")


def _canonical_rotation(Z):
    """Orthogonal frame from the vertices: farthest vertex first, then the
    farthest in the orthogonal complement, and so on."""
    n = Z.shape[1]
    frame = []
    R = Z.copy()
    for _ in range(n):
        norms = np.linalg.norm(R, axis=1)
        i = int(np.argmax(norms))
        if norms[i] < 1e-12:
            break
        u = R[i] / norms[i]
        frame.append(u)
        R = R - np.outer(R @ u, u)
    if len(frame) < n:
        frame.extend(ProjSubspace(np.array(frame)).complement().basis if frame else np.eye(n))
    return np.array(frame[:n])


def _chart_radii(dom: Polytope):
    """Inner and outer radii around the origin of the standard chart x_d = 1."""
    F = dom.facet_functionals
    F = F * np.sign(F[:, -1].sum())
    a, c = F[:, :-1], F[:, -1]
    inner = float(np.min(c / np.linalg.norm(a, axis=1)))
    V = dom.vertex_lifts
    outer = float(np.max(np.linalg.norm(V[:, :-1] / V[:, -1:], axis=1)))
    return inner, outer


def benzecri_normalize(P: PointedDomain) -> NormalizationResult:
    """Centroid chart plus inertia whitening.

    The base point goes to the origin of the chart x_d = 1, the domain's
    centroid sits at the origin and its inertia equals that of the unit
    ball, I/(n+2).  A rotation from the vertex scatter removes the
    remaining orthogonal freedom.
    """
    Ω, x = P.domain, P.base
    d = Ω.d
    n = d - 1
    xi, iters = centroid_covector(Ω, x)
    X = Ω.lift(x)
    Xh = X / (xi @ X)
    Q = np.linalg.svd(xi[None, :])[2][1:]
    if isinstance(Ω, Polytope):
        V = Ω.vertex_lifts
        Y = ((V / (V @ xi)[:, None]) - Xh) @ Q.T
        if n == 1:
            lo, hi = Y.min(), Y.max()
            M = np.array([[(hi - lo) ** 2 / 12.0]])
        else:
            _, cen, second = _moments(Y, _triangulate(Y))
            M = second - np.outer(cen, cen)
        T = np.real(sqrtm(np.linalg.inv((n + 2) * M)))
        if n > 1:
            R = _canonical_rotation(Y @ T.T)
        else:
            R = -np.eye(1) if np.sum((Y @ T.T) ** 3) < 0 else np.eye(1)
    else:
        A = Q @ Ω.form @ Q.T / (-(Xh @ Ω.form @ Xh))
        T = np.real(sqrtm(A))
        R = np.eye(n)
    A_chart = R @ T
    top = A_chart @ Q @ (np.eye(d) - np.outer(Xh, xi))
    h = ProjectiveMap(np.vstack([top, xi[None, :]]))
    dom = Ω.transform(h)
    base = ProjPoint(np.eye(d)[-1])
    if isinstance(dom, Polytope):
        inner, outer = _chart_radii(dom)
    else:
        inner = outer = 1.0
    return NormalizationResult(h, PointedDomain(dom, base), inner, outer, iters, xi)


def chart_inertia(Ω: ConvexDomain) -> tuple[np.ndarray, np.ndarray]:
    """Centroid and inertia of Ω in the standard chart x_d = 1."""
    n = Ω.d - 1
    if isinstance(Ω, Polytope):
        V = Ω.vertex_lifts
        Y = V[:, :-1] / V[:, -1:]
        if n == 1:
            lo, hi = Y.min(), Y.max()
            return np.array([(lo + hi) / 2]), np.array([[(hi - lo) ** 2 / 12.0]])
        _, cen, second = _moments(Y, _triangulate(Y))
        return cen, second - np.outer(cen, cen)
    F = Ω.form
    Gb, g, gam = F[:-1, :-1], F[:-1, -1], F[-1, -1]
    c = -np.linalg.solve(Gb, g)
    rho = c @ Gb @ c - gam
    return c, np.linalg.inv(Gb / rho) / (n + 2)


@dataclass(frozen=True, eq=False)
class RelativeNormalization:
    map: ProjectiveMap
    block: np.ndarray
    inner_radius: float
    outer_radius: float
    reference_distance: float | None


def relative_benzecri_normalize(P: PointedDomain, split: DirectSumSplit, slice_reference=None,
                                max_reference_distance: float = 0.5) -> RelativeNormalization:
    """h = id on V_a, h_b on V_b, whitening the slice Ω ∩ P(V_b + x) about x.

    The base point must lie in P(V_a) so that h fixes it and preserves the
    slice.  slice_reference, when given, is a domain in V_a coordinates that
    the projection of Ω must stay close to.
    """
    Ω, x = P.domain, P.base
    X = Ω.lift(x)
    A, B = split.basis_a, split.basis_b
    kb = B.shape[0]
    if np.linalg.norm(X - A.T @ np.linalg.lstsq(A.T, X, rcond=None)[0]) > 1e-9:
        raise DomainError("base point must lie in P(V_a)")
    pr = project(Ω, split)
    ref_dist = None
    if slice_reference is not None:
        if pr.domain is None:
            raise DomainError("projection to V_a is not properly convex")
        ref_dist = float(domain_distance(pr.domain, slice_reference, 512))
        if ref_dist > max_reference_distance:
            raise DomainError(f"projection is {ref_dist:.3g} away from the reference family")
    if kb == 0:
        return RelativeNormalization(ProjectiveMap(np.eye(Ω.d)), np.zeros((0, 0)), np.inf, np.inf, ref_dist)
    U = np.vstack([B, X])
    n = kb
    if isinstance(Ω, Polytope):
        Gf = Ω.facet_functionals @ U.T
        _feasible_direction(Gf)
        facets, verts = cone_facets(Gf)
        verts = verts * np.sign(verts @ np.r_[np.zeros(kb), 1.0])[:, None]
        if np.any(verts[:, -1] < 1e-12):
            raise NormalizationError("slice reaches P(V_b); it is unbounded in the chart about x")
        beta = verts[:, :-1] / verts[:, -1:]
        if n == 1:
            lo, hi = beta.min(), beta.max()
            M0 = np.array([[(hi ** 3 - lo ** 3) / (3 * (hi - lo))]])
        else:
            _, _, M0 = _moments(beta, _triangulate(beta))
        Hb = np.real(sqrtm(np.linalg.inv((n + 2) * M0)))
        Z = beta @ Hb.T
        a = facets[:, :-1] @ np.linalg.inv(Hb)
        c = facets[:, -1]
        inner = float(np.min(c / np.linalg.norm(a, axis=1)))
        outer = float(np.max(np.linalg.norm(Z, axis=1)))
    else:
        G = U @ Ω.form @ U.T
        Gbb, g, gam = G[:-1, :-1], G[:-1, -1], G[-1, -1]
        if np.linalg.eigvalsh(Gbb)[0] <= 1e-12:
            raise NormalizationError("slice reaches P(V_b); it is unbounded in the chart about x")
        cen = -np.linalg.solve(Gbb, g)
        rho = cen @ Gbb @ cen - gam
        Aq = Gbb / rho
        M0 = np.linalg.inv(Aq) / (n + 2) + np.outer(cen, cen)
        Hb = np.real(sqrtm(np.linalg.inv((n + 2) * M0)))
        dirs = _sphere_points(2048, n)
        Ai = np.linalg.inv(Hb).T @ Aq @ np.linalg.inv(Hb)
        c2 = Hb @ cen
        radii = []
        for u in dirs:
            # |t u - c2|_Ai = 1, t > 0
            a2, b2, cc = u @ Ai @ u, -(u @ Ai @ c2), c2 @ Ai @ c2 - 1.0
            radii.append((-b2 + math.sqrt(b2 * b2 - a2 * cc)) / a2)
        inner, outer = float(min(radii)), float(max(radii))
    M = np.vstack([A, B])
    block = np.eye(Ω.d)
    block[A.shape[0]:, A.shape[0]:] = Hb
    h = M.T @ block @ np.linalg.inv(M.T)
    return RelativeNormalization(ProjectiveMap(h), Hb, inner, outer, ref_dist)


# sandwich bounds ---------------------------------------------------------

def euclidean_sandwich_check(A_ub, b_ub, vertices, W, R1=None, R2=None, n: int = 1000, seed: int = 0) -> dict:
    """Check π_W(Ω) ⊆ R3 (Ω ∩ W), R3 = (R1 + R2)/R1, for Ω = {A y <= b} with vertices.

    W has orthonormal rows; hypotheses: the R1-ball of W-perp lies in Ω and
    the projection of Ω to W-perp lies in the R2-ball.
    """
    A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.asarray(b_ub, dtype=float)
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    Pw = W.T @ W
    Pp = np.eye(V.shape[1]) - Pw
    if np.any(b_ub <= 0):
        raise DomainError("origin must be interior")
    r1_max = float(np.min(b_ub / np.maximum(np.linalg.norm(A_ub @ Pp, axis=1), 1e-300)))
    r2_min = float(np.max(np.linalg.norm(V @ Pp, axis=1)))
    R1 = r1_max if R1 is None else R1
    R2 = r2_min if R2 is None else R2
    hyp1 = R1 <= r1_max + 1e-12
    hyp2 = r2_min <= R2 + 1e-12
    R3 = (R1 + R2) / R1
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(len(V)), size=n)
    Z = np.vstack([w @ V, V])
    P = Z @ Pw
    slack = (A_ub @ (P / R3).T).T - b_ub
    worst = float(slack.max())
    return {"R1": R1, "R2": R2, "R3": R3, "hypotheses": {"ball_in_slice": hyp1, "projection_bounded": hyp2},
            "holds": bool(worst <= 1e-9), "worst_slack": worst, "samples": len(Z)}


def _cone_in_subspace(pts, U):
    """Vertex lifts given in U-coordinates mapped to ambient vectors."""
    return np.atleast_2d(pts) @ U


def verify_sandwich(Ω: Polytope, Wa, Vb, x, Ωa, Ωa_out, Ωb, Ωb_out, n: int = 1000, seed: int = 0) -> dict:
    """Build Ω1 = Hull(Ωa, Ωb) and Ω2 dual to Hull_x(D(Ωa'), D(Ωb')) and check Ω1 ⊆ Ω ⊆ Ω2.

    Ωa, Ωa' are cones in the coordinates of the rows [Wa; x] and Ωb, Ωb' in
    the coordinates of [Vb; x], each given by generator rows.  Hypotheses:
    (1) Ωa' ⊇ π_{Wa+x}(Ω), (2) Ωa ⊆ Ω ∩ P(Wa+x), (3) Ωb' ⊇ π_{Vb+x}(Ω),
    (4) Ωb ⊆ Ω ∩ P(Vb+x).
    """
    Wa = _rows(Wa.basis if isinstance(Wa, ProjSubspace) else Wa)
    Vb = _rows(Vb.basis if isinstance(Vb, ProjSubspace) else Vb)
    X = Ω.lift(x)
    Ua = np.vstack([Wa, X])
    Ub = np.vstack([Vb, X])
    d = Ω.d
    M = np.vstack([Wa, Vb, X])
    Minv = np.linalg.inv(M.T)
    ka = Wa.shape[0]
    # coordinates: first ka for Wa, next kb for Vb, last for x
    coef = (Minv @ Ω.vertex_lifts.T).T
    proj_a = np.hstack([coef[:, :ka], coef[:, -1:]])
    proj_b = coef[:, ka:]
    tol = 1e-9

    def cone_contains(gens, pts):
        dom = Polytope.from_vertices(gens)
        vals = np.atleast_2d(pts) @ dom.facet_functionals.T
        vals = vals * np.sign(vals.sum(axis=1))[:, None]
        return bool(np.all(vals >= -tol))

    Ωa_g, Ωa_o = _rows(Ωa), _rows(Ωa_out)
    Ωb_g, Ωb_o = _rows(Ωb), _rows(Ωb_out)
    hyp = {
        1: cone_contains(Ωa_o, proj_a[np.linalg.norm(proj_a, axis=1) > 1e-12]),
        2: bool(np.all(_signed_min(Ω, Ωa_g @ Ua) >= -tol)),
        3: cone_contains(Ωb_o, proj_b[np.linalg.norm(proj_b, axis=1) > 1e-12]),
        4: bool(np.all(_signed_min(Ω, Ωb_g @ Ub) >= -tol)),
    }
    # covector vanishing on Wa + Vb, positive at x
    xi = Minv[-1]
    xi = xi / np.linalg.norm(xi)
    hyp["disjoint_from_Wa_and_Vb"] = bool(np.all(Ω.vertex_lifts @ xi > 0))
    gens1 = np.vstack([Ωa_g @ Ua, Ωb_g @ Ub])
    gens1 = gens1 * np.sign(gens1 @ xi)[:, None]
    Ω1 = Polytope.from_vertices(gens1)
    # relative duals: facets of Ωa' in Wa+x coordinates, extended by zero on Vb
    Pa = np.vstack([Minv[:ka], Minv[-1:]])
    Pb = Minv[ka:]
    Da = Polytope.from_vertices(Ωa_o).facet_functionals @ Pa
    Db = Polytope.from_vertices(Ωb_o).facet_functionals @ Pb
    dual_gens = np.vstack([Da, Db])
    dual_gens = dual_gens * np.sign(dual_gens @ X)[:, None]
    Ω2 = Polytope.from_facets(dual_gens)
    rng = np.random.default_rng(seed)
    s1 = rng.dirichlet(np.ones(len(Ω1.vertex_lifts)), size=n) @ Ω1.vertex_lifts
    s = rng.dirichlet(np.ones(len(Ω.vertex_lifts)), size=n) @ Ω.vertex_lifts
    inner_ok = bool(np.all(_signed_min(Ω, s1) >= -tol))
    outer_ok = bool(np.all(_signed_min(Ω2, np.vstack([s, Ω.vertex_lifts])) >= -tol))
    # Euclidean form in the chart with P(Wa + Vb) at infinity, x at the origin
    Y = coef[:, :-1] / coef[:, -1:]
    F = _chart_facets(Ω, M)
    eu = euclidean_sandwich_check(-F[:, :-1], F[:, -1], Y, np.eye(d - 1)[:ka], n=n, seed=seed) \
        if ka > 0 else None
    return {"hypotheses": hyp, "hypotheses_hold": all(hyp.values()), "inner": Ω1, "outer": Ω2,
            "omega1_in_omega": inner_ok, "omega_in_omega2": outer_ok, "euclidean": eu}


def _chart_facets(Ω, M):
    """Facets of Ω in coordinates c with v = M^T c."""
    return Ω.facet_functionals @ M.T


def _signed_min(Ω: Polytope, pts):
    vals = np.atleast_2d(pts) @ Ω.facet_functionals.T
    vals = vals * np.sign(vals.sum(axis=1))[:, None]
    return vals.min(axis=1)
