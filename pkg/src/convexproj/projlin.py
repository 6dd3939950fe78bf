"""Points, subspaces and maps of real projective space.

Points are unit vectors up to sign, subspaces carry orthonormal row bases,
and maps are normalized to ``|det| = 1`` with a deterministic sign.  The
Grassmannian is metrized by Hausdorff distance in the angle metric, which is
the largest principal angle between the two subspaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from itertools import combinations

import numpy as np

from .config import DEFAULT


class ProjectiveError(ValueError):
    """Invalid projective input."""


class DimensionMismatch(ProjectiveError):
    pass


class DegenerateConfiguration(ProjectiveError):
    pass


class NotDivergent(ProjectiveError):
    """The sequence has no usable singular value gap."""


def _sign_fix(v, rel=1e-12):
    v = np.asarray(v, dtype=float)
    flat = v.ravel()
    scale = np.max(np.abs(flat)) if flat.size else 0.0
    if scale == 0.0:
        return v
    idx = np.flatnonzero(np.abs(flat) > rel * scale)[0]
    return -v if flat[idx] < 0 else v


@dataclass(frozen=True, eq=False)
class ProjPoint:
    rep: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.rep, dtype=float).reshape(-1)
        n = np.linalg.norm(v)
        if not np.isfinite(n) or n == 0.0:
            raise DegenerateConfiguration("zero vector does not define a point")
        v = _sign_fix(v / n)
        v.setflags(write=False)
        object.__setattr__(self, "rep", v)

    @property
    def d(self) -> int:
        return self.rep.shape[0]

    def same_as(self, other: "ProjPoint", tol: float = 1e-10) -> bool:
        return angle_distance(self, other) < tol

    def __repr__(self):
        return f"ProjPoint({np.array2string(self.rep, precision=6)})"


@dataclass(frozen=True, eq=False)
class ProjSubspace:
    """Linear subspace of R^d given by orthonormal rows.

    ``k = 0`` is allowed for the trivial subspace so that direct sums with a
    missing factor stay uniform.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim == 1:
            b = b[None, :]
        if b.shape[0] > 0:
            b = _orthonormal_rows(b)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def contains(self, x, tol: float = 1e-9) -> bool:
        v = _rep(x)
        if self.k == 0:
            return False
        return np.linalg.norm(v - self.projector() @ v) < tol

    def complement(self) -> "ProjSubspace":
        return orthogonal_complement(self)

    def same_as(self, other: "ProjSubspace", tol: float = 1e-9) -> bool:
        return self.k == other.k and grassmann_distance(self, other) < tol

    def __repr__(self):
        return f"ProjSubspace(k={self.k}, d={self.d})"


def _orthonormal_rows(b, rank_tol=1e-10):
    u, s, vt = np.linalg.svd(b, full_matrices=False)
    if s.size == 0 or s[-1] < rank_tol * max(1.0, s[0]):
        raise DegenerateConfiguration("rows are linearly dependent")
    # keep the row space, canonical up to rotation inside it
    q, _ = np.linalg.qr(b.T)
    return q.T.copy()


@dataclass(frozen=True, eq=False)
class ProjectiveMap:
    mat: np.ndarray
    label: str | None = field(default=None)

    def __post_init__(self):
        m = np.array(self.mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("map must be square")
        det = np.linalg.det(m)
        if not np.isfinite(det) or abs(det) < 1e-300:
            raise DegenerateConfiguration("singular matrix")
        m = _sign_fix(m / abs(det) ** (1.0 / m.shape[0]))
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @classmethod
    def _unimodular(cls, m, label=None) -> "ProjectiveMap":
        """Wrap a product of normalized lifts; its determinant is already +-1
        and recomputing it loses everything to cancellation once the
        product is ill conditioned."""
        out = object.__new__(cls)
        m = _sign_fix(np.array(m, dtype=float))
        m.setflags(write=False)
        object.__setattr__(out, "mat", m)
        object.__setattr__(out, "label", label)
        return out

    @property
    def d(self) -> int:
        return self.mat.shape[0]

    def __matmul__(self, other):
        if isinstance(other, ProjectiveMap):
            lab = None
            if self.label is not None and other.label is not None:
                lab = join_words(self.label, other.label)
            return ProjectiveMap._unimodular(self.mat @ other.mat, lab)
        if isinstance(other, ProjPoint):
            return ProjPoint(self.mat @ other.rep)
        if isinstance(other, ProjSubspace):
            if other.k == 0:
                return other
            return ProjSubspace((self.mat @ other.basis.T).T)
        return NotImplemented

    def inverse(self) -> "ProjectiveMap":
        return ProjectiveMap(np.linalg.inv(self.mat), invert_word(self.label) if self.label is not None else None)

    def dual(self) -> "ProjectiveMap":
        """Contragredient action on covectors."""
        return ProjectiveMap(np.linalg.inv(self.mat).T, self.label)

    def power(self, n: int) -> "ProjectiveMap":
        base = self.mat if n >= 0 else np.linalg.inv(self.mat)
        return ProjectiveMap._unimodular(np.linalg.matrix_power(base, abs(n)))

    def __repr__(self):
        return f"ProjectiveMap(d={self.d}, label={self.label!r})"


@dataclass(frozen=True)
class CartanVector:
    mu: np.ndarray

    def gap(self, i: int) -> float:
        """mu_i - mu_{i+1} with 1-based i."""
        return float(self.mu[i - 1] - self.mu[i])


def identity(d: int) -> ProjectiveMap:
    return ProjectiveMap(np.eye(d), "")


def map_distance(a: ProjectiveMap, b: ProjectiveMap) -> float:
    return float(min(np.linalg.norm(a.mat - b.mat), np.linalg.norm(a.mat + b.mat)))


# words are space separated generator labels, inverses carry a trailing "^-1"

def invert_letter(s: str) -> str:
    return s[:-3] if s.endswith("^-1") else s + "^-1"


def invert_word(w: str) -> str:
    return " ".join(invert_letter(s) for s in reversed(w.split()))


def join_words(a: str, b: str) -> str:
    letters = a.split() + b.split()
    out: list[str] = []
    for s in letters:
        if out and out[-1] == invert_letter(s):
            out.pop()
        else:
            out.append(s)
    return " ".join(out)


def _rep(x) -> np.ndarray:
    return x.rep if isinstance(x, ProjPoint) else np.asarray(x, dtype=float)


def point(*coords) -> ProjPoint:
    if len(coords) == 1:
        return ProjPoint(np.asarray(coords[0], dtype=float))
    return ProjPoint(np.asarray(coords, dtype=float))


def span(*items) -> ProjSubspace:
    rows = []
    for it in items:
        if isinstance(it, ProjSubspace):
            rows.extend(it.basis)
        elif isinstance(it, ProjPoint):
            rows.append(it.rep)
        else:
            a = np.asarray(it, dtype=float)
            rows.extend(a if a.ndim == 2 else [a])
    return ProjSubspace(np.array(rows))


def trivial_subspace(d: int) -> ProjSubspace:
    return ProjSubspace(np.zeros((0, d)))


def orthogonal_complement(V: ProjSubspace) -> ProjSubspace:
    if V.k == 0:
        return ProjSubspace(np.eye(V.d))
    _, _, vt = np.linalg.svd(V.basis)
    return ProjSubspace(vt[V.k:]) if V.k < V.d else trivial_subspace(V.d)


def intersect(V: ProjSubspace, W: ProjSubspace, tol: float = 1e-9) -> ProjSubspace:
    """Intersection of two linear subspaces."""
    _check(V.d, W.d)
    if V.k == 0 or W.k == 0:
        return trivial_subspace(V.d)
    # vectors of V annihilated by the projection onto W^perp
    res = V.basis @ (np.eye(V.d) - W.projector())
    u, s, vt = np.linalg.svd(res.T, full_matrices=True)
    null = [vt[i] for i in range(V.k) if i >= len(s) or s[i] < tol]
    if not null:
        return trivial_subspace(V.d)
    return ProjSubspace(np.array(null) @ V.basis)


def _check(d1, d2):
    if d1 != d2:
        raise DimensionMismatch(f"ambient dimensions differ: {d1} vs {d2}")


def angle_distance(p: ProjPoint, q: ProjPoint) -> float:
    _check(p.d, q.d)
    c = abs(float(p.rep @ q.rep))
    s = np.linalg.norm(p.rep - (p.rep @ q.rep) * q.rep)
    return float(np.arctan2(s, c))


def grassmann_distance(V: ProjSubspace, W: ProjSubspace) -> float:
    _check(V.d, W.d)
    if V.k != W.k:
        raise DimensionMismatch(f"subspace dimensions differ: {V.k} vs {W.k}")
    if V.k == 0:
        return 0.0
    cos = np.linalg.svd(V.basis @ W.basis.T, compute_uv=False)
    res = V.basis - (V.basis @ W.basis.T) @ W.basis
    sin = np.linalg.svd(res, compute_uv=False)
    return float(np.arctan2(min(sin.max(), 1.0), min(cos.min(), 1.0)))


def _det2(u, v):
    return u[0] * v[1] - u[1] * v[0]


def line_coordinates(*pts, tol=None):
    """Coordinates of collinear points in an orthonormal frame of their plane."""
    tol = DEFAULT.tol.collinear if tol is None else tol
    reps = np.array([_rep(p) / np.linalg.norm(_rep(p)) for p in pts])
    _, s, vt = np.linalg.svd(reps)
    if s.size > 2 and s[2] > tol * max(1.0, s[0]):
        raise ProjectiveError("points are not collinear")
    return reps @ vt[:2].T


def cross_ratio(a, b, c, d) -> float:
    """[a, b; c, d] = |c - a| |d - b| / (|b - a| |d - c|) in any chart."""
    A, B, Cc, D = line_coordinates(a, b, c, d)
    num = _det2(A, Cc) * _det2(B, D)
    den = _det2(A, B) * _det2(Cc, D)
    if abs(den) < 1e-14:
        raise DegenerateConfiguration("cross-ratio has a vanishing denominator")
    return float(abs(num / den))


def point_to_subspace_distance(x: ProjPoint, W: ProjSubspace) -> float:
    _check(x.d, W.d)
    proj = W.basis @ x.rep
    res = x.rep - W.basis.T @ proj
    return float(np.arctan2(np.linalg.norm(res), np.linalg.norm(proj)))


def nearest_containing_subspace(x: ProjPoint, W: ProjSubspace) -> ProjSubspace:
    """Subspace through x, of the same dimension as W, at distance d(x, W) from W."""
    _check(x.d, W.d)
    c = W.basis @ x.rep
    if point_to_subspace_distance(x, W) < 1e-14:
        return W
    if np.linalg.norm(c) < 1e-13:
        # x is orthogonal to W, every choice attains the diameter
        return span(W.basis[:-1], x.rep) if W.k > 1 else span(x.rep)
    # directions of W orthogonal to x
    _, _, vt = np.linalg.svd(c[None, :])
    rows = vt[1:] @ W.basis
    return span(rows, x.rep) if W.k > 1 else span(x.rep)


def cartan_projection(M) -> CartanVector:
    m = M.mat if isinstance(M, ProjectiveMap) else np.asarray(M, dtype=float)
    s = np.linalg.svd(m, compute_uv=False)
    if not (s[-1] > 0 and np.isfinite(s[0])):
        raise DegenerateConfiguration("singular matrix")
    ls = np.log(s)
    return CartanVector(ls - ls.mean())


def exterior_power(m, k: int) -> np.ndarray:
    """Matrix of k x k minors, rows and columns in lexicographic order."""
    m = np.asarray(m, dtype=float)
    idx = list(combinations(range(m.shape[0]), k))
    out = np.empty((len(idx), len(idx)))
    for a, r in enumerate(idx):
        sub = m[list(r)]
        for b, c in enumerate(idx):
            out[a, b] = np.linalg.det(sub[:, list(c)])
    return out


def cartan_projection_of_product(factors) -> CartanVector:
    """Cartan projection of a product of unimodular factors.

    Partial sums mu_1 + ... + mu_k are read off the top singular value of
    the k-th exterior power of the product, accumulated factor by factor,
    so small and middle singular values keep relative accuracy.
    """
    factors = [f.mat if isinstance(f, ProjectiveMap) else np.asarray(f, dtype=float) for f in factors]
    d = factors[0].shape[0] if factors else 0
    if d == 0:
        raise DimensionMismatch("empty product")
    logdet = sum(np.linalg.slogdet(f)[1] for f in factors)
    partial = [0.0]
    for k in range(1, d):
        acc = np.eye(len(list(combinations(range(d), k))))
        logscale = 0.0
        for f in factors:
            acc = acc @ exterior_power(f, k)
            nrm = np.abs(acc).max()
            acc /= nrm
            logscale += np.log(nrm)
        partial.append(logscale + np.log(np.linalg.svd(acc, compute_uv=False)[0]))
    partial.append(logdet)
    mu = np.diff(partial)
    return CartanVector(mu - mu.mean())


def singular_gap(M, i: int) -> float:
    return cartan_projection(M).gap(i)


def norm_conorm_on_subspace(M, V: ProjSubspace) -> tuple[float, float]:
    """Largest and smallest stretch of a lift of M restricted to V."""
    m = M.mat if isinstance(M, ProjectiveMap) else np.asarray(M, dtype=float)
    s = np.linalg.svd(m @ V.basis.T, compute_uv=False)
    return float(s[0]), float(s[-1])


def attracting_repelling_subspaces(seq, gap_floor: float = 1.0):
    """(E+, E-, p) for the last element of a divergent sequence.

    p is the index of the largest gap mu_p - mu_{p+1}, the smallest such
    index on ties.
    """
    seq = list(seq)
    if not seq:
        raise NotDivergent("empty sequence")
    last = seq[-1]
    m = last.mat if isinstance(last, ProjectiveMap) else np.asarray(last, dtype=float)
    s = np.linalg.svd(m, compute_uv=False)
    if not (np.isfinite(s[0]) and s[0] > 0):
        raise DegenerateConfiguration("singular matrix")
    # singular values below working precision of the largest are unresolved; floor them
    ls = np.log(np.maximum(s, s[0] * m.shape[0] * np.finfo(float).eps))
    mu = ls - ls.mean()
    if mu[0] - mu[-1] <= gap_floor:
        raise NotDivergent(f"mu_1 - mu_d = {mu[0] - mu[-1]:.3g} does not exceed {gap_floor}")
    gaps = mu[:-1] - mu[1:]
    top = gaps.max()
    p = int(np.flatnonzero(gaps >= top - 1e-9 * max(1.0, top))[0]) + 1
    u, _, vt = np.linalg.svd(m)
    return ProjSubspace(u[:, :p].T), ProjSubspace(vt[p:]), p
