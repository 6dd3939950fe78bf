"""Properly convex domains: polytopes and ellipsoids.

A domain is stored through a lift of its cone.  Polytopes keep unit vertex
lifts and unit facet covectors positive on the open cone; ellipsoids keep a
symmetric form of signature (d-1, 1) normalized to spectral norm 1.  Every
domain has a canonical chart covector strictly positive on its closure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog, minimize_scalar
from scipy.spatial import ConvexHull, QhullError

from . import kernels
from .config import DEFAULT
from .projlin import (
    DegenerateConfiguration,
    DimensionMismatch,
    ProjPoint,
    ProjSubspace,
    ProjectiveError,
    ProjectiveMap,
    cross_ratio,
    span,
)


class DomainError(ProjectiveError):
    pass


class Membership(str, enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


def _unit_rows(a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return a / np.linalg.norm(a, axis=1, keepdims=True)


def _dedup_rows(a, tol=1e-9):
    kept = []
    for r in a:
        if all(np.linalg.norm(r - k) > tol for k in kept):
            kept.append(r)
    return np.array(kept)


def _positive_covector(V):
    """Covector maximizing min_i xi(v_i) under |xi|_inf <= 1."""
    n, d = V.shape
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A = np.hstack([-V, np.ones((n, 1))])
    res = linprog(c, A_ub=A, b_ub=np.zeros(n), bounds=[(-1, 1)] * d + [(None, 1)], method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        raise DomainError("lifts do not lie in a sharp cone")
    xi = res.x[:d]
    return xi / np.linalg.norm(xi)


def _chart_frame(xi):
    """Orthonormal rows spanning the kernel of xi."""
    _, _, vt = np.linalg.svd(xi[None, :])
    return vt[1:]


def cone_facets(V):
    """Double description: extreme rays and facet covectors of the cone on V.

    Returns (vertices, facets) as unit rows; vertices are oriented so that
    the chart covector is positive on them.
    """
    V = _unit_rows(V)
    d = V.shape[1]
    if np.linalg.matrix_rank(V, tol=1e-10) < d:
        raise DomainError("lifts do not span, the cone has empty interior")
    xi = _positive_covector(V)
    Q = _chart_frame(xi)
    Y = (V @ Q.T) / (V @ xi)[:, None]
    if d == 2:
        lo, hi = int(np.argmin(Y[:, 0])), int(np.argmax(Y[:, 0]))
        verts = V[[lo, hi]]
        facets = np.array([Q[0] - Y[lo, 0] * xi, Y[hi, 0] * xi - Q[0]])
        return verts, _unit_rows(facets)
    try:
        hull = ConvexHull(Y)
    except QhullError as exc:
        raise DomainError(f"convex hull failed: {exc}") from None
    verts = V[np.sort(hull.vertices)]
    eq = hull.equations
    facets = -(eq[:, :-1] @ Q + eq[:, -1:] * xi[None, :])
    return verts, _dedup_rows(_unit_rows(facets))


class ConvexDomain:
    """Base class; use Polytope or Ellipsoid."""

    kind = "abstract"
    d: int

    def chart_covector(self) -> np.ndarray:
        raise NotImplementedError

    def lift(self, x) -> np.ndarray:
        """Unit lift of x with positive chart covector."""
        v = x.rep if isinstance(x, ProjPoint) else np.asarray(x, dtype=float)
        v = v / np.linalg.norm(v)
        return -v if v @ self.chart_covector() < 0 else v

    def chart_frame(self) -> np.ndarray:
        return _chart_frame(self.chart_covector())

    def to_chart(self, pts) -> np.ndarray:
        P = np.atleast_2d(np.asarray([p.rep if isinstance(p, ProjPoint) else p for p in pts], dtype=float)) \
            if not isinstance(pts, np.ndarray) else np.atleast_2d(pts)
        xi = self.chart_covector()
        return (P @ self.chart_frame().T) / (P @ xi)[:, None]

    def from_chart(self, Y) -> np.ndarray:
        Y = np.atleast_2d(Y)
        V = self.chart_covector()[None, :] + Y @ self.chart_frame()
        return _unit_rows(V)

    def transform(self, g: ProjectiveMap) -> "ConvexDomain":
        raise NotImplementedError

    def chart_center(self) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Polytope(ConvexDomain):
    vertex_lifts: np.ndarray
    facet_functionals: np.ndarray
    kind = "polytope"

    def __post_init__(self):
        V = _unit_rows(self.vertex_lifts)
        F = _unit_rows(self.facet_functionals)
        if V.shape[1] != F.shape[1]:
            raise DimensionMismatch("vertices and facets live in different dimensions")
        # orient vertices by the facets
        s = np.sign((V @ F.T).sum(axis=1))
        s[s == 0] = 1.0
        V = V * s[:, None]
        if np.min(V @ F.T) < -1e-10:
            raise DomainError("a vertex violates a facet inequality")
        V.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "vertex_lifts", V)
        object.__setattr__(self, "facet_functionals", F)

    @classmethod
    def from_vertices(cls, V) -> "Polytope":
        verts, facets = cone_facets(V)
        return cls(verts, facets)

    @classmethod
    def from_facets(cls, F) -> "Polytope":
        facets, verts = cone_facets(F)
        return cls(verts, facets)

    @classmethod
    def from_chart_vertices(cls, Y) -> "Polytope":
        """Polytope with the given vertices in the standard chart x_d = 1."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        return cls.from_vertices(np.hstack([Y, np.ones((Y.shape[0], 1))]))

    @property
    def d(self) -> int:
        return self.vertex_lifts.shape[1]

    def chart_covector(self) -> np.ndarray:
        xi = self.facet_functionals.sum(axis=0)
        return xi / np.linalg.norm(xi)

    def chart_center(self) -> np.ndarray:
        return self.to_chart(self.vertex_lifts).mean(axis=0)

    def center_lift(self) -> np.ndarray:
        return _unit_rows(self.vertex_lifts.sum(axis=0))[0]

    def transform(self, g: ProjectiveMap) -> "Polytope":
        m = g.mat if isinstance(g, ProjectiveMap) else np.asarray(g, dtype=float)
        return Polytope(self.vertex_lifts @ m.T, self.facet_functionals @ np.linalg.inv(m))

    def validate(self, tol: float = 1e-8) -> None:
        vals = self.vertex_lifts @ self.facet_functionals.T
        if np.min(vals) < -tol:
            raise DomainError("vertex outside a facet")
        sat = (np.abs(vals) < tol).sum(axis=1)
        if np.any(sat < self.d - 1):
            raise DomainError("vertex saturates fewer than d-1 facets")
        _, redo = cone_facets(self.facet_functionals)
        if not rows_match(redo, self.vertex_lifts, tol):
            raise DomainError("vertex and facet descriptions disagree")


@dataclass(frozen=True, eq=False)
class Ellipsoid(ConvexDomain):
    form: np.ndarray
    kind = "ellipsoid"

    def __post_init__(self):
        F = np.asarray(self.form, dtype=float)
        if F.ndim != 2 or F.shape[0] != F.shape[1]:
            raise DimensionMismatch("form must be square")
        F = 0.5 * (F + F.T)
        w = np.linalg.eigvalsh(F)
        scale = np.max(np.abs(w))
        if (w < -1e-12 * scale).sum() != 1 or (w > 1e-12 * scale).sum() != F.shape[0] - 1:
            raise DomainError("form must have signature (d-1, 1)")
        F = F / scale
        F.setflags(write=False)
        object.__setattr__(self, "form", F)

    @property
    def d(self) -> int:
        return self.form.shape[0]

    def chart_covector(self) -> np.ndarray:
        w, U = np.linalg.eigh(self.form)
        v = U[:, 0]
        idx = np.flatnonzero(np.abs(v) > 1e-12)[0]
        return -v if v[idx] < 0 else v

    def chart_center(self) -> np.ndarray:
        return np.zeros(self.d - 1)

    def center_lift(self) -> np.ndarray:
        return self.chart_covector()

    def transform(self, g: ProjectiveMap) -> "Ellipsoid":
        m = g.mat if isinstance(g, ProjectiveMap) else np.asarray(g, dtype=float)
        inv = np.linalg.inv(m)
        return Ellipsoid(inv.T @ self.form @ inv)


@dataclass(frozen=True, eq=False)
class FaceDescriptor:
    dim: int
    support: ProjSubspace
    carrier: object
    vertex_indices: tuple = field(default=())

    @property
    def face_id(self) -> str:
        if isinstance(self.carrier, frozenset):
            return "f" + "-".join(str(i) for i in sorted(self.carrier))
        return "pt"


@dataclass(frozen=True, eq=False)
class PointedDomain:
    domain: ConvexDomain
    base: ProjPoint

    def __post_init__(self):
        if contains(self.domain, self.base) is not Membership.INTERIOR:
            raise DomainError("base point must be interior")


def rows_match(A, B, tol=1e-8) -> bool:
    """Same set of rows up to order and sign."""
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    if A.shape != B.shape:
        return False
    used = set()
    for a in A:
        hit = None
        for j, b in enumerate(B):
            if j not in used and min(np.linalg.norm(a - b), np.linalg.norm(a + b)) < tol:
                hit = j
                break
        if hit is None:
            return False
        used.add(hit)
    return True


def _values(Ω, v):
    """Signed boundary values of unit lifts: facet values or form values."""
    if isinstance(Ω, Polytope):
        return v @ Ω.facet_functionals.T
    return np.einsum("...i,ij,...j->...", v, Ω.form, v)


def contains(Ω: ConvexDomain, x, tol: float | None = None) -> Membership:
    tol = DEFAULT.tol.boundary if tol is None else tol
    v = x.rep if isinstance(x, ProjPoint) else np.asarray(x, dtype=float)
    if v.shape[0] != Ω.d:
        raise DimensionMismatch("point and domain dimensions differ")
    v = v / np.linalg.norm(v)
    if isinstance(Ω, Polytope):
        vals = _values(Ω, v)
        if vals.sum() < 0:
            vals = -vals
        m = vals.min()
        if m > tol:
            return Membership.INTERIOR
        return Membership.BOUNDARY if m >= -tol else Membership.EXTERIOR
    q = float(_values(Ω, v))
    if q < -tol:
        return Membership.INTERIOR
    return Membership.BOUNDARY if q <= tol else Membership.EXTERIOR


def _line_params(Ω, p, q):
    """Ends (t_a, t_b) of Ω-bar on the homogeneous line p + t q through interior p."""
    if isinstance(Ω, Polytope):
        gp = Ω.facet_functionals @ p
        gq = Ω.facet_functionals @ q
        with np.errstate(divide="ignore"):
            tb = np.min(np.where(gq < 0, gp / -np.where(gq < 0, gq, 1.0), np.inf))
            ta = -np.min(np.where(gq > 0, gp / np.where(gq > 0, gq, 1.0), np.inf))
        return float(ta), float(tb)
    F = Ω.form
    a, b, c = q @ F @ q, p @ F @ q, p @ F @ p
    disc = b * b - a * c
    if disc < 0:
        raise DomainError("line misses the domain")
    if abs(a) < 1e-300:
        t = -c / (2 * b)
        return (t, np.inf) if t < 0 else (-np.inf, t)
    s = -(b + math.copysign(math.sqrt(disc), b))
    r1, r2 = s / a, (c / s if s != 0 else -s / a)
    lo, hi = min(r1, r2), max(r1, r2)
    if a < 0:
        # the interior parameter set is unbounded on both sides in this lift
        raise DomainError("line leaves the affine chart inside the domain")
    return float(lo), float(hi)


def chord(Ω: ConvexDomain, x, y) -> tuple[ProjPoint, ProjPoint]:
    """Boundary ends (a, b) of the line xy, ordered a, x, y, b."""
    if contains(Ω, x) is not Membership.INTERIOR:
        raise DomainError("x must be interior")
    X = Ω.lift(x)
    Y = Ω.lift(y)
    xi = Ω.chart_covector()
    X, Y = X / (X @ xi), Y / (Y @ xi)
    D = Y - X
    if np.linalg.norm(D) < 1e-14:
        raise DomainError("x and y coincide")
    ta, tb = _line_params(Ω, X, D)
    if not (np.isfinite(ta) and np.isfinite(tb)):
        raise DomainError("line misses the domain")
    return ProjPoint(X + ta * D), ProjPoint(X + tb * D)


def pair_values(Ω, X, Y):
    """Hilbert distances for rows of unit lifts X, Y (interior points)."""
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    if isinstance(Ω, Polytope):
        G1 = X @ Ω.facet_functionals.T
        G2 = Y @ Ω.facet_functionals.T
        # the kernel needs both lifts in one affine chart; sum of facet values is one
        G1 = G1 / G1.sum(axis=1)[:, None]
        G2 = G2 / G2.sum(axis=1)[:, None]
        return kernels.polytope_hilbert(G1, G2)
    F = Ω.form
    q11 = np.einsum("ij,jk,ik->i", X, F, X)
    q22 = np.einsum("ij,jk,ik->i", Y, F, Y)
    q12 = np.einsum("ij,jk,ik->i", X, F, Y)
    return np.atleast_1d(kernels.quadric_hilbert(q11, q12, q22))


def hilbert_distance(Ω: ConvexDomain, x, y) -> float:
    """Half the log of the cross-ratio [a, x; y, b] along the chord through x, y."""
    for p in (x, y):
        if contains(Ω, p) is not Membership.INTERIOR:
            raise DomainError("Hilbert distance needs interior points")
    X, Y = Ω.lift(x), Ω.lift(y)
    return float(pair_values(Ω, X[None, :], Y[None, :])[0])


def supporting_functionals_at(Ω: ConvexDomain, b, tol: float | None = None):
    """(canonical covector, extreme supporting covectors) at a boundary point."""
    if contains(Ω, b) is not Membership.BOUNDARY:
        raise DomainError("point is not on the boundary")
    tol = DEFAULT.tol.saturation if tol is None else tol
    v = Ω.lift(b)
    if isinstance(Ω, Polytope):
        vals = Ω.facet_functionals @ v
        ext = Ω.facet_functionals[np.abs(vals) < tol]
    else:
        ext = _unit_rows(-(Ω.form @ v))
    can = ext.mean(axis=0)
    return can / np.linalg.norm(can), [e.copy() for e in ext]


def face_of(Ω: ConvexDomain, b, tol: float | None = None) -> FaceDescriptor:
    """Open face of a boundary point and its support."""
    if contains(Ω, b) is not Membership.BOUNDARY:
        raise DomainError("point is not on the boundary")
    tol = DEFAULT.tol.saturation if tol is None else tol
    v = Ω.lift(b)
    if isinstance(Ω, Ellipsoid):
        p = ProjPoint(v)
        return FaceDescriptor(0, span(v), p)
    carrier = frozenset(np.flatnonzero(np.abs(Ω.facet_functionals @ v) < tol).tolist())
    return face_from_carrier(Ω, carrier, tol)


def face_from_carrier(Ω: Polytope, carrier, tol: float | None = None) -> FaceDescriptor:
    tol = DEFAULT.tol.saturation if tol is None else tol
    carrier = frozenset(carrier)
    idx = list(carrier)
    vals = Ω.vertex_lifts @ Ω.facet_functionals[idx].T
    verts = tuple(np.flatnonzero(np.all(np.abs(vals) < tol, axis=1)).tolist())
    sup = span(Ω.vertex_lifts[list(verts)])
    return FaceDescriptor(sup.k - 1, sup, carrier, verts)


def faces(Ω: Polytope) -> list[FaceDescriptor]:
    """All proper closed faces, keyed by their maximal carrier."""
    tol = DEFAULT.tol.saturation
    sat = np.abs(Ω.vertex_lifts @ Ω.facet_functionals.T) < tol
    vsets = {frozenset(np.flatnonzero(sat[:, j]).tolist()) for j in range(sat.shape[1])}
    frontier = set(vsets)
    while frontier:
        new = set()
        for a, b in combinations(sorted(vsets, key=sorted), 2):
            c = a & b
            if c and c not in vsets:
                new.add(c)
        vsets |= new
        frontier = new
    out = []
    for vs in sorted(vsets, key=lambda s: (len(s), sorted(s))):
        carrier = frozenset(np.flatnonzero(np.all(sat[list(vs)], axis=0)).tolist())
        out.append(face_from_carrier(Ω, carrier))
    return out


def boundary_samples(Ω: ConvexDomain, n: int, include_vertices: bool = True) -> np.ndarray:
    """Deterministic boundary lifts: radial shots from the chart center along
    low-discrepancy directions, plus vertices for polytopes."""
    from scipy.stats import norm, qmc

    m = Ω.d - 1
    if m == 1:
        dirs = np.array([[-1.0], [1.0]])
    else:
        h = qmc.Halton(d=m, scramble=False).random(n + 1)[1:]
        g = norm.ppf(np.clip(h, 1e-12, 1 - 1e-12))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    xi = Ω.chart_covector()
    Q = Ω.chart_frame()
    c = Ω.chart_center()
    P = xi + c @ Q
    out = []
    for u in dirs:
        q = u @ Q
        _, tb = _line_params(Ω, P, q)
        out.append(P + tb * q)
    pts = _unit_rows(np.array(out))
    if include_vertices and isinstance(Ω, Polytope):
        pts = np.vstack([pts, Ω.vertex_lifts])
    return pts


def sample_interior(Ω: ConvexDomain, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random interior unit lifts."""
    if isinstance(Ω, Polytope):
        w = rng.dirichlet(np.ones(len(Ω.vertex_lifts)), size=n)
        w = 0.9 * w + 0.1 / len(Ω.vertex_lifts)
        return _unit_rows(w @ Ω.vertex_lifts)
    F = Ω.form
    w, U = np.linalg.eigh(F)
    m = Ω.d - 1
    g = rng.normal(size=(n, m))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.uniform(0, 0.95, size=(n, 1)) ** (1.0 / m)
    c = g * r
    V = U[:, :1].T / math.sqrt(-w[0]) + c @ (U[:, 1:] / np.sqrt(w[1:])).T
    return _unit_rows(V)


def ray_distance_profile(Ω: ConvexDomain, p1, b1, p2, b2, T: float, N: int) -> np.ndarray:
    """d_Ω(c1(t), c2(t)) for unit-speed rays from p_i toward b_i, t in [0, T]."""
    for b in (b1, b2):
        if contains(Ω, b) is not Membership.BOUNDARY:
            raise DomainError("ray endpoints must be on the boundary")
    for p in (p1, p2):
        if contains(Ω, p) is not Membership.INTERIOR:
            raise DomainError("ray origins must be interior")
    xi = Ω.chart_covector()
    lifts = []
    for p, b in ((p1, b1), (p2, b2)):
        P, B = Ω.lift(p), Ω.lift(b)
        P, B = P / (P @ xi), B / (B @ xi)
        ta, _ = _line_params(Ω, P, B - P)
        lifts.append((P, B, ta))
    ts = np.linspace(0.0, T, N)
    R = np.exp(2 * ts)
    weights = []
    for _, _, ta in lifts:
        den = 1.0 - R * ta
        weights.append(np.stack([(1.0 - ta) / den, ta * (1.0 - R) / den], axis=1))
    (P1, B1, _), (P2, B2, _) = lifts
    if isinstance(Ω, Polytope):
        def vals(v, snap):
            g = Ω.facet_functionals @ v
            if snap:
                g[np.abs(g) < DEFAULT.tol.saturation] = 0.0
            return g
        G1 = weights[0][:, :1] * vals(P1, False) + weights[0][:, 1:] * vals(B1, True)
        G2 = weights[1][:, :1] * vals(P2, False) + weights[1][:, 1:] * vals(B2, True)
        return kernels.polytope_hilbert(G1, G2)
    basis = np.array([P1, B1, P2, B2])
    gram = basis @ Ω.form @ basis.T
    gram[1, 1] = gram[3, 3] = 0.0
    W1 = np.hstack([weights[0], np.zeros((N, 2))])
    W2 = np.hstack([np.zeros((N, 2)), weights[1]])
    q11 = np.einsum("ij,jk,ik->i", W1, gram, W1)
    q22 = np.einsum("ij,jk,ik->i", W2, gram, W2)
    q12 = np.einsum("ij,jk,ik->i", W1, gram, W2)
    return np.atleast_1d(kernels.quadric_hilbert(q11, q12, q22))


def dual_domain(Ω: ConvexDomain) -> ConvexDomain:
    if isinstance(Ω, Polytope):
        return Polytope(Ω.facet_functionals, Ω.vertex_lifts)
    return Ellipsoid(np.linalg.inv(Ω.form))


@dataclass(frozen=True, eq=False)
class HullResult:
    domain: ConvexDomain | None
    ideal_boundary: list
    degenerate: bool
    span: ProjSubspace
    vertices: np.ndarray


def hull_of_boundary_set(Ω: ConvexDomain, Λ) -> HullResult:
    """Convex hull of boundary points in the chart of Ω."""
    pts = [p.rep if isinstance(p, ProjPoint) else np.asarray(p, dtype=float) for p in Λ]
    if not pts:
        raise DomainError("empty boundary set")
    L = _unit_rows(np.array(pts))
    L = L * np.sign(L @ Ω.chart_covector())[:, None]
    sp = _row_span(L)
    if sp.k == Ω.d:
        verts, facets = cone_facets(L)
        dom = Polytope(verts, facets)
        ideal = [ProjPoint(v) for v in verts if contains(Ω, v) is Membership.BOUNDARY]
        return HullResult(dom, ideal, False, sp, verts)
    coords = L @ sp.basis.T
    if sp.k >= 2:
        cv, cf = cone_facets(coords)
        verts = cv @ sp.basis
        dom = Polytope(cv, cf)
    else:
        verts = L[:1]
        dom = None
    verts = _unit_rows(verts)
    ideal = [ProjPoint(v) for v in verts if contains(Ω, v) is Membership.BOUNDARY]
    return HullResult(dom, ideal, True, sp, verts)


def _row_span(L, tol=1e-9):
    _, s, vt = np.linalg.svd(L, full_matrices=False)
    r = int((s > tol * s[0]).sum())
    return ProjSubspace(vt[:r])


@dataclass
class BoundarySet:
    """Boundary subset given by closed faces and finite samples."""

    faces: list = field(default_factory=list)
    samples: list = field(default_factory=list)


def boundary_subset_checks(Ω: ConvexDomain, Λ: BoundarySet) -> dict:
    """Boundary-convexity and face-closure of a boundary subset.

    Polytopes are handled through the face lattice: a face G meets Λ in a
    convex set iff the smallest face spanned by the points of Λ in G lies
    inside a declared closed face.  Ellipsoid faces are points, so both
    properties hold.
    """
    for s in Λ.samples:
        if contains(Ω, s) is not Membership.BOUNDARY:
            raise DomainError("sample is not on the boundary")
    if isinstance(Ω, Ellipsoid):
        return {"boundary_convex": True, "contains_faces": True, "witnesses": [], "resolution": "exact"}
    tol = DEFAULT.tol.saturation
    F = Ω.facet_functionals
    declared = [f.carrier for f in Λ.faces]
    witnesses = []

    def covered(carrier):
        return any(c <= carrier for c in declared)

    sample_lifts = [Ω.lift(s) for s in Λ.samples]
    sample_carriers = [frozenset(np.flatnonzero(np.abs(F @ v) < tol).tolist()) for v in sample_lifts]
    contains_faces = True
    for v, c in zip(sample_lifts, sample_carriers):
        f = face_from_carrier(Ω, c)
        if f.dim >= 1 and not covered(c):
            contains_faces = False
            witnesses.append(("open face not contained", ProjPoint(v), f.face_id))

    boundary_convex = True
    for G in faces(Ω):
        pts = []
        in_G = set(G.vertex_indices)
        for vs_face in Λ.faces:
            pts.extend(Ω.vertex_lifts[i] for i in vs_face.vertex_indices if i in in_G)
        for v, c in zip(sample_lifts, sample_carriers):
            if G.carrier <= c:
                pts.append(v)
        pts = _dedup_rows(np.array(pts)) if pts else np.zeros((0, Ω.d))
        if len(pts) <= 1:
            continue
        spanned = frozenset(np.flatnonzero(np.all(np.abs(pts @ F.T) < tol, axis=0)).tolist())
        if not covered(spanned):
            boundary_convex = False
            witnesses.append(("non-convex section", G.face_id, len(pts)))
    resolution = "exact" if not Λ.samples else "sampling"
    return {"boundary_convex": boundary_convex, "contains_faces": contains_faces,
            "witnesses": witnesses, "resolution": resolution}


@dataclass(frozen=True)
class DeltaResult:
    value: float
    grid_value: float
    resolution: float
    argmin: np.ndarray


def _delta_direction(Ω, X, Z):
    """min of the two cross-ratios for the line through X and the point Z."""
    ta, tb = _line_params(Ω, X, Z)
    return (tb - ta) / max(-ta, tb)


def delta_invariant(Ω: ConvexDomain, x, W, grid: int | None = None) -> DeltaResult:
    """inf over z in the hyperplane W of min([a, x; b, z], [b, x; a, z]).

    W is a covector or a hyperplane given as a ProjSubspace.  The infimum is
    estimated on a grid over directions in W and refined coordinatewise.
    """
    grid = DEFAULT.delta_grid if grid is None else grid
    if contains(Ω, x) is not Membership.INTERIOR:
        raise DomainError("x must be interior")
    if isinstance(W, ProjSubspace):
        if W.k != Ω.d - 1:
            raise DomainError("W must be a hyperplane")
        w = np.linalg.svd(W.basis)[2][-1]
    else:
        w = np.asarray(W, dtype=float)
    if isinstance(Ω, Polytope):
        vals = Ω.vertex_lifts @ w
        misses = np.all(vals > 1e-12) or np.all(vals < -1e-12)
    else:
        misses = float(w @ np.linalg.inv(Ω.form) @ w) < -1e-12
    if not misses:
        raise DomainError("W meets the closure of the domain")
    B = _chart_frame(w / np.linalg.norm(w))
    X = Ω.lift(x)
    m = Ω.d - 2

    def direction(phi):
        u = np.ones(m + 1)
        for i, a in enumerate(phi):
            u[i] *= math.cos(a)
            u[i + 1:] *= math.sin(a)
        return u @ B

    def f(phi):
        return _delta_direction(Ω, X, direction(phi))

    if m == 0:
        v = f([])
        return DeltaResult(v, v, 0.0, np.zeros(0))
    axes = [np.linspace(0, math.pi, grid, endpoint=(i < m - 1)) for i in range(m)]
    h = math.pi / grid
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    vals = np.array([f(p) for p in mesh])
    best = mesh[int(np.argmin(vals))].copy()
    gv = float(vals.min())
    cur = gv
    for _ in range(3):
        for i in range(m):
            def g(a, i=i):
                p = best.copy()
                p[i] = a
                return f(p)
            r = minimize_scalar(g, bounds=(best[i] - h, best[i] + h), method="bounded",
                                options={"xatol": 1e-12})
            if r.fun < cur:
                cur = float(r.fun)
                best[i] = r.x
    return DeltaResult(cur, gv, h, best)


def cross_ratio_of_chord(Ω, x, y) -> float:
    """[a, x; y, b] for the chord through x and y, via explicit endpoints."""
    a, b = chord(Ω, x, y)
    return cross_ratio(a, x, y, b)


def proper_convexity_check(Ω: ConvexDomain) -> bool:
    """Sharpness of the cone and nonempty interior."""
    try:
        if isinstance(Ω, Polytope):
            _positive_covector(Ω.vertex_lifts)
            return np.linalg.matrix_rank(Ω.vertex_lifts, tol=1e-10) == Ω.d
        return True
    except (DomainError, DegenerateConfiguration):
        return False
