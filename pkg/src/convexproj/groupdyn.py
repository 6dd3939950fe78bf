"""Finitely generated matrix groups acting on convex domains.

Orbits are enumerated breadth first over freely reduced words and
deduplicated by distance between normalized matrices.  Limit sets are
sampled from orbit points close to the boundary, pushed radially onto it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .config import DEFAULT
from .convexdom import (
    ConvexDomain,
    DomainError,
    Ellipsoid,
    FaceDescriptor,
    Membership,
    Polytope,
    _line_params,
    _unit_rows,
    contains,
    dual_domain,
    face_from_carrier,
    face_of,
    hull_of_boundary_set,
    pair_values,
    sample_interior,
)
from .domspace import _feasible_direction
from .projlin import (
    NotDivergent,
    ProjPoint,
    ProjSubspace,
    ProjectiveError,
    ProjectiveMap,
    angle_distance,
    attracting_repelling_subspaces,
    cartan_projection,
    cartan_projection_of_product,
    invert_letter,
    point_to_subspace_distance,
)


class GroupError(ProjectiveError):
    pass


@dataclass(frozen=True, eq=False)
class MatrixGroup:
    generators: tuple
    domain_hint: ConvexDomain | None = None

    def __post_init__(self):
        gens = tuple(self.generators)
        labels = [g.label for g in gens]
        if any(lab is None or lab == "" for lab in labels):
            raise GroupError("generators need labels")
        if len(set(labels)) != len(labels):
            raise GroupError("duplicate generator labels")
        object.__setattr__(self, "generators", gens)

    @property
    def d(self) -> int:
        return self.generators[0].d if self.generators else 0

    def letters(self) -> list[ProjectiveMap]:
        """Generators and their inverses; involutions contribute one letter."""
        out = []
        for g in self.generators:
            out.append(g)
            if not is_involution(g):
                out.append(g.inverse())
        return out

    def element(self, word: str) -> ProjectiveMap:
        m = np.eye(self.d)
        for f in self.factors(word):
            m = m @ f
        return ProjectiveMap._unimodular(m, word)

    def factors(self, word: str) -> list:
        table = {g.label: g.mat for g in self.letters()}
        out = []
        for s in word.split():
            if s in table:
                out.append(table[s])
            elif s.endswith("^-1") and s[:-3] in table:
                out.append(table[s[:-3]])
            else:
                raise GroupError(f"unknown letter {s!r}")
        return out

    def power_word(self, word: str, n: int) -> str:
        return " ".join([word] * n)

    def validate(self, Ω: ConvexDomain | None = None, n_points: int = 32, seed: int = 0) -> dict:
        Ω = self.domain_hint if Ω is None else Ω
        inv_res = max((float(np.abs(g.mat @ g.inverse().mat - np.eye(self.d)).max())
                       for g in self.generators), default=0.0)
        report = {"inverse_residual": inv_res, "inverse_ok": inv_res < 1e-9}
        if Ω is not None:
            rng = np.random.default_rng(seed)
            P = sample_interior(Ω, n_points, rng)
            Q = sample_interior(Ω, n_points, rng)
            interior_ok = True
            dist_err = 0.0
            d0 = pair_values(Ω, P, Q)
            for g in self.letters():
                gP = _unit_rows(P @ g.mat.T)
                gQ = _unit_rows(Q @ g.mat.T)
                interior_ok &= all(contains(Ω, p) is Membership.INTERIOR for p in gP)
                if interior_ok:
                    dist_err = max(dist_err, float(np.abs(pair_values(Ω, gP, gQ) - d0).max()))
            report.update(interior_ok=bool(interior_ok), distance_error=dist_err,
                          preserves=bool(interior_ok and dist_err < 1e-8))
        return report


def is_involution(g: ProjectiveMap, tol: float = 1e-9) -> bool:
    m = g.mat @ g.mat
    return bool(min(np.abs(m - np.eye(g.d)).max(), np.abs(m + np.eye(g.d)).max()) < tol)


@dataclass(frozen=True, eq=False)
class OrbitCloud:
    words: list
    mats: np.ndarray
    lengths: np.ndarray
    points: np.ndarray
    basepoints: np.ndarray

    def __len__(self):
        return len(self.words)

    def maps(self) -> list[ProjectiveMap]:
        return [ProjectiveMap._unimodular(m, w) for m, w in zip(self.mats, self.words)]

    def upto(self, length: int) -> "OrbitCloud":
        keep = self.lengths <= length
        return OrbitCloud([w for w, k in zip(self.words, keep) if k], self.mats[keep],
                          self.lengths[keep], self.points[keep], self.basepoints)


def _normalize_batch(M):
    """Unit Frobenius norm with a sign fixed by the largest entry."""
    flat = M.reshape(len(M), -1)
    flat = flat / np.linalg.norm(flat, axis=1, keepdims=True)
    idx = np.argmax(np.abs(flat) > 1e-6, axis=1)
    s = np.sign(flat[np.arange(len(flat)), idx])
    return flat * s[:, None]


def default_basepoints(Ω: ConvexDomain, n: int | None = None) -> np.ndarray:
    """Deterministic interior points: the chart center and shrunk chart offsets."""
    n = DEFAULT.n_basepoints if n is None else n
    c = Ω.center_lift()
    pts = [c]
    Q = Ω.chart_frame()
    xi = Ω.chart_covector()
    C = c / (c @ xi)
    k = 0
    while len(pts) < n:
        u = Q[k % len(Q)] * (1 if (k // len(Q)) % 2 == 0 else -1)
        _, tb = _line_params(Ω, C, u)
        pts.append(_unit_rows(C + 0.5 * tb * u)[0])
        k += 1
    return np.array(pts[:n])


def orbit(Γ: MatrixGroup, Ω: ConvexDomain, basepoints=None, max_word_len: int = 3,
          dedup_tol: float = 1e-8) -> OrbitCloud:
    """Breadth-first orbit over reduced words, duplicates removed."""
    if basepoints is None:
        basepoints = Ω.center_lift()[None, :]
    B = _unit_rows(np.atleast_2d([b.rep if isinstance(b, ProjPoint) else b for b in basepoints]))
    d = Ω.d
    letters = Γ.letters()
    labels = [g.label for g in letters]
    inv_of = []
    for lab in labels:
        inv = lab if lab in labels and is_involution(letters[labels.index(lab)]) else invert_letter(lab)
        inv_of.append(labels.index(inv) if inv in labels else -1)
    L = np.array([g.mat for g in letters]).reshape(-1, d, d)
    mats = [np.eye(d)[None]]
    words: list[tuple] = [()]
    lengths = [0]
    keys = _normalize_batch(mats[0])
    level_mats = mats[0]
    level_words = [()]
    all_keys = [keys]
    for length in range(1, max_word_len + 1):
        if not level_words or not len(letters):
            break
        cand = (level_mats[:, None] @ L[None]).reshape(-1, d, d)
        cw = [w + (j,) for w in level_words for j in range(len(letters))]
        ok = np.array([not (len(w) > 1 and inv_of[w[-1]] == w[-2]) for w in cw])
        cand = cand[ok]
        cw = [w for w, k in zip(cw, ok) if k]
        if not cw:
            break
        ck = _normalize_batch(cand)
        tree = cKDTree(np.vstack(all_keys))
        dist, _ = tree.query(ck, k=1)
        fresh = dist > dedup_tol
        # near keys only nominate duplicates; long words crowd toward rank one
        for i in np.flatnonzero(~fresh):
            near = tree.query_ball_point(ck[i], dedup_tol)
            fresh[i] = not any(_same_element(cw[i], words[j], L, inv_of) for j in near)
        # duplicates inside the new level, keep the first in enumeration order
        if fresh.any():
            idx = np.flatnonzero(fresh)
            sub = cKDTree(ck[idx])
            drop = set()
            for a, b in sorted(sub.query_pairs(dedup_tol)):
                if a not in drop and b not in drop and _same_element(cw[idx[a]], cw[idx[b]], L, inv_of):
                    drop.add(b)
            keep_idx = [i for n_, i in enumerate(idx) if n_ not in drop]
        else:
            keep_idx = []
        level_mats = cand[keep_idx]
        level_words = [cw[i] for i in keep_idx]
        if len(keep_idx):
            all_keys.append(ck[keep_idx])
            mats.append(level_mats)
            words.extend(level_words)
            lengths.extend([length] * len(keep_idx))
    M = np.vstack(mats)
    pts = np.einsum("nij,bj->nbi", M, B)
    pts = pts / np.linalg.norm(pts, axis=2, keepdims=True)
    wstr = [" ".join(labels[j] for j in w) for w in words]
    return OrbitCloud(wstr, M, np.array(lengths), pts, B)


def _same_element(wa, wb, L, inv_of, tol=1e-6) -> bool:
    """Whether wb^-1 wa is the identity, evaluated letter by letter after free reduction."""
    red = []
    for j in [inv_of[k] for k in reversed(wb)] + list(wa):
        if red and inv_of[red[-1]] == j:
            red.pop()
        else:
            red.append(j)
    if not red:
        return True
    m = np.eye(L.shape[1])
    for j in red:
        m = m @ L[j]
    # letters are unimodular, so no rescaling
    eye = np.eye(len(m))
    return bool(min(np.abs(m - eye).max(), np.abs(m + eye).max()) < tol)


@dataclass(frozen=True, eq=False)
class LimitSetSample:
    domain: ConvexDomain
    points: np.ndarray
    words: list
    carriers: list
    epsilon: float
    basepoints: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @cached_property
    def faces(self) -> list[FaceDescriptor]:
        if isinstance(self.domain, Polytope):
            cache = {c: face_from_carrier(self.domain, c) for c in set(self.carriers)}
            return [cache[c] for c in self.carriers]
        return [face_of(self.domain, p) for p in self.points]

    @property
    def face_dims(self) -> np.ndarray:
        if isinstance(self.domain, Polytope):
            dims = {c: face_from_carrier(self.domain, c).dim for c in set(self.carriers)}
            return np.array([dims[c] for c in self.carriers], dtype=int)
        return np.zeros(len(self.points), dtype=int)

    @property
    def face_ids(self) -> list[str]:
        if isinstance(self.domain, Polytope):
            return ["f" + "-".join(str(i) for i in sorted(c)) for c in self.carriers]
        return ["pt"] * len(self.points)

    def proj_points(self) -> list[ProjPoint]:
        return [ProjPoint(p) for p in self.points]


def _radial_projection(Ω, anchor, P):
    """Boundary points hit by rays from the anchor through the rows of P."""
    xi = Ω.chart_covector()
    A = anchor / (anchor @ xi)
    P = P * np.sign(P @ xi)[:, None]
    Q = P / (P @ xi)[:, None] - A
    if isinstance(Ω, Polytope):
        ga = Ω.facet_functionals @ A
        gq = Q @ Ω.facet_functionals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(gq < 0, ga[None, :] / -gq, np.inf).min(axis=1)
    else:
        F = Ω.form
        a = np.einsum("ij,jk,ik->i", Q, F, Q)
        b = Q @ (F @ A)
        c = A @ F @ A
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (-b + np.sqrt(np.maximum(b * b - a * c, 0.0))) / a
    t[~np.isfinite(t) | (np.linalg.norm(Q, axis=1) < 1e-15)] = np.nan
    return _unit_rows(A + t[:, None] * Q)


def limit_set_sample(Γ: MatrixGroup, Ω: ConvexDomain, basepoints=None, max_word_len: int = 10,
                     epsilon: float | None = None, orbit_cloud: OrbitCloud | None = None) -> LimitSetSample:
    """Orbit points within epsilon of the boundary, pushed onto it radially."""
    epsilon = DEFAULT.epsilon if epsilon is None else epsilon
    if basepoints is None:
        basepoints = Ω.center_lift()[None, :]
    oc = orbit(Γ, Ω, basepoints, max_word_len) if orbit_cloud is None else orbit_cloud
    nb = oc.points.shape[1]
    P = oc.points.reshape(-1, Ω.d)
    B = _radial_projection(Ω, Ω.center_lift(), P)
    gap = _pairwise_angles(P, B)
    sel = np.flatnonzero(gap < epsilon)
    pts = B[sel]
    if isinstance(Ω, Polytope):
        sat = np.abs(pts @ Ω.facet_functionals.T) < DEFAULT.tol.saturation
        carriers = [frozenset(np.flatnonzero(r).tolist()) for r in sat]
    else:
        carriers = [None] * len(pts)
    diag = {"orbit_size": len(oc), "orbit_points": len(P), "selected": len(sel),
            "basepoints": nb, "basepoint_gap": "finite basepoint set"}
    if len(sel) == 0:
        diag["empty"] = "no orbit point within epsilon of the boundary"
    return LimitSetSample(Ω, pts, [oc.words[i // nb] for i in sel], carriers, epsilon,
                          oc.basepoints, diag)


def _pairwise_angles(P, B):
    dots = np.einsum("ij,ij->i", P, B)
    res = np.linalg.norm(P - dots[:, None] * B, axis=1)
    out = np.arctan2(res, np.abs(dots))
    out[~np.all(np.isfinite(B), axis=1)] = np.inf
    return out


def convex_core_sample(Γ: MatrixGroup, Ω: ConvexDomain, Λ: LimitSetSample):
    return hull_of_boundary_set(Ω, list(Λ.points)) if len(Λ) else _empty_hull(Ω)


def _empty_hull(Ω):
    raise DomainError("empty limit set sample, no hull")


def dual_group(Γ: MatrixGroup) -> MatrixGroup:
    return MatrixGroup(tuple(ProjectiveMap(g.dual().mat, g.label) for g in Γ.generators))


def dual_limit_set_sample(Γ: MatrixGroup, Ω: ConvexDomain, max_word_len: int = 10,
                          epsilon: float | None = None, basepoints=None) -> LimitSetSample:
    """Limit set of the contragredient action on the dual domain."""
    Ωd = dual_domain(Ω)
    if not Γ.generators:
        return LimitSetSample(Ωd, np.zeros((0, Ω.d)), [], [], epsilon or DEFAULT.epsilon,
                              np.zeros((0, Ω.d)), {"empty": "group has no generators"})
    if basepoints is None:
        basepoints = Ωd.center_lift()[None, :]
    return limit_set_sample(dual_group(Γ), Ωd, basepoints, max_word_len, epsilon)


def verify_limit_dual_pairing(Λ: LimitSetSample, Λd: LimitSetSample, tol: float | None = None) -> dict:
    """For each x in Λ, min over w in Λ* of |w(x)| on unit representatives."""
    tol = DEFAULT.pairing if tol is None else tol
    if not len(Λ) or not len(Λd):
        raise GroupError("pairing needs nonempty samples")
    res = np.empty(len(Λ))
    step = 4096
    for lo in range(0, len(Λ), step):
        res[lo:lo + step] = np.abs(Λ.points[lo:lo + step] @ Λd.points.T).min(axis=1)
    worst = int(np.argmax(res))
    uncovered = np.flatnonzero(res >= tol).tolist()
    return {"max_residual": float(res.max()), "worst_point": Λ.points[worst], "passed": bool(res.max() < tol),
            "uncovered": uncovered, "residuals": res}


# Cartan traces --------------------------------------------------------------

def cartan_trace(words, Γ: MatrixGroup) -> list:
    return [cartan_projection_of_product(Γ.factors(w)) if w.strip() else cartan_projection(np.eye(Γ.d))
            for w in words]


def check_gap_growth(trace, k: int, delta_min: float = 1e-3) -> dict:
    """Gap mu_k - mu_{k+1} growth over the trace and the bound on mu_1 - mu_k."""
    if not trace:
        raise GroupError("empty trace")
    gaps = np.array([c.gap(k) for c in trace])
    top = np.array([c.mu[0] - c.mu[k - 1] for c in trace])
    half = gaps[len(gaps) // 2:]
    growth = bool(len(half) >= 2 and np.all(np.diff(half) >= delta_min))
    # fit on the tail; early terms carry a bounded transient
    n = np.arange(1, len(gaps) + 1, dtype=float)[len(gaps) // 2:]
    slope = float(np.polyfit(n, half, 1)[0]) if len(half) >= 2 else float("nan")
    return {"gap_growth": growth, "top_bound": float(top.max()), "slope": slope, "gaps": gaps}


# segments and peripheral bookkeeping ---------------------------------------

@dataclass(frozen=True, eq=False)
class SegmentCluster:
    face_id: str
    dim: int
    indices: tuple
    endpoints: np.ndarray


def detect_segments(Λ: LimitSetSample, collinearity_tol: float = 1e-9) -> list[SegmentCluster]:
    """Maximal boundary segments met by the sample.

    Polytopes group samples by face carrier; ellipsoids have none; other
    inputs fall back to clustering collinear triples.
    """
    if not len(Λ):
        return []
    Ω = Λ.domain
    if isinstance(Ω, Ellipsoid):
        return []
    if isinstance(Ω, Polytope):
        groups: dict = {}
        for i, f in enumerate(Λ.faces):
            if f.dim >= 1:
                groups.setdefault(f.face_id, (f, []))[1].append(i)
        out = []
        for fid in sorted(groups):
            f, idx = groups[fid]
            if len(idx) >= 2:
                out.append(SegmentCluster(fid, f.dim, tuple(idx), Ω.vertex_lifts[list(f.vertex_indices)]))
        return out
    return collinear_clusters(Λ.points, collinearity_tol)


def collinear_clusters(P, tol: float = 1e-9) -> list[SegmentCluster]:
    """Group points lying on common projective lines (at least three per line)."""
    P = _unit_rows(P)
    n = len(P)
    used = set()
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            if angle_distance(ProjPoint(P[i]), ProjPoint(P[j])) < 1e-12:
                continue
            line = ProjSubspace(np.array([P[i], P[j]]))
            on = [k for k in range(n) if np.linalg.norm(P[k] - line.projector() @ P[k]) < tol]
            key = tuple(on)
            if len(on) >= 3 and key not in used:
                used.add(key)
                out.append(SegmentCluster(f"line{len(out)}", 1, key, P[[on[0], on[-1]]]))
    return out


@dataclass(frozen=True, eq=False)
class PeripheralFamily:
    subgroups: list
    limit_samples: list


def _min_angle_between(A, B):
    if not len(A) or not len(B):
        return np.inf, None
    a = kernels.nearest_angles(A, B)
    i = int(np.argmin(a))
    j = int(np.argmax(np.abs(B @ A[i])))
    return float(a[i]), (i, j)


def peripheral_checks(fam: PeripheralFamily, Λ: LimitSetSample, separation: float | None = None,
                      matching: float | None = None) -> dict:
    separation = DEFAULT.separation if separation is None else separation
    matching = DEFAULT.matching if matching is None else matching
    samples = [s.points for s in fam.limit_samples]
    disjoint = True
    witness = None
    for a in range(len(samples)):
        for b in range(a + 1, len(samples)):
            m, pair = _min_angle_between(samples[a], samples[b])
            if m <= separation:
                disjoint = False
                witness = (a, b, pair, m)
                break
        if not disjoint:
            break
    segs = detect_segments(Λ)
    seg_ok = True
    seg_owner = []
    for s in segs:
        owner = None
        for i, S in enumerate(samples):
            if len(S) and np.all(kernels.nearest_angles(Λ.points[list(s.indices)], S) < matching):
                owner = i
                break
        seg_owner.append(owner)
        seg_ok &= owner is not None
    classes = []
    for k, p in enumerate(Λ.points):
        label = None
        for i, S in enumerate(samples):
            if len(S) and kernels.nearest_angles(p[None], S)[0] < matching:
                label = f"H{i}"
                break
        classes.append(label if label is not None else f"s{k}")
    return {"disjoint": disjoint, "witness": witness, "segments_peripheral": bool(seg_ok),
            "segment_owners": seg_owner, "quotient_classes": classes,
            "n_classes": len(set(classes))}


# north-south dynamics ------------------------------------------------------

def is_supporting(Ω: ConvexDomain, E: ProjSubspace, tol: float = 1e-9) -> bool:
    """P(E) misses Ω and meets its closure."""
    if isinstance(Ω, Polytope):
        G = Ω.facet_functionals @ E.basis.T
        try:
            _feasible_direction(G)
            return False
        except DomainError:
            pass
        from scipy.optimize import linprog
        k = E.k
        xi = Ω.chart_covector() @ E.basis.T
        res = linprog(np.zeros(k), A_ub=-G, b_ub=np.full(G.shape[0], tol), A_eq=xi[None, :],
                      b_eq=[1.0], bounds=[(None, None)] * k, method="highs")
        return res.status == 0
    w = np.linalg.eigvalsh(E.basis @ Ω.form @ E.basis.T)
    return bool(w[0] > -tol and w[0] <= tol)


def north_south_check(seq, Ω: ConvexDomain, K, F=None, limit_sample=None, margin: float = 0.2,
                      eps_ns: float = 1e-5, gap_floor: float = 1.0) -> dict:
    """Attracting and repelling subspaces of a divergent sequence and the
    convergence of a boundary compact K toward the attracting one."""
    seq = list(seq)
    Eplus, Eminus, p = attracting_repelling_subspaces(seq, gap_floor)
    K = _unit_rows(np.atleast_2d(K))
    Fpts = None
    if F is not None:
        Fpts = _unit_rows(np.atleast_2d(F.support.basis if isinstance(F, FaceDescriptor) else F))
        if isinstance(F, FaceDescriptor):
            near = min(point_to_subspace_distance(ProjPoint(k), F.support) for k in K)
        else:
            near = float(kernels.nearest_angles(K, Fpts).min())
        if near <= margin:
            raise GroupError(f"compact K comes within {near:.3g} of the repelling face")
    dists = []
    for g in seq:
        m = g.mat if isinstance(g, ProjectiveMap) else np.asarray(g)
        img = _unit_rows(K @ m.T)
        dists.append(max(point_to_subspace_distance(ProjPoint(v), Eplus) for v in img))
    dists = np.array(dists)
    tail = dists[len(dists) // 2:]
    decreasing = bool(np.all(np.diff(tail) <= 1e-15 + 1e-9 * tail[:-1]))
    report = {"E_plus": Eplus, "E_minus": Eminus, "p": p,
              "supporting_plus": is_supporting(Ω, Eplus), "supporting_minus": is_supporting(Ω, Eminus),
              "distances": dists, "decreasing": decreasing, "final": float(dists[-1]),
              "converged": bool(dists[-1] < eps_ns)}
    if Fpts is not None and isinstance(F, FaceDescriptor):
        reps = []
        for g in seq[len(seq) // 2:]:
            try:
                _, Em, _ = attracting_repelling_subspaces([g], gap_floor)
            except NotDivergent:
                continue
            reps.append(max(point_to_subspace_distance(ProjPoint(f), Em) for f in Fpts))
        report["repelling_distances"] = np.array(reps)
    if limit_sample is not None and len(limit_sample):
        L = limit_sample.points
        report["plus_meets_limit"] = float(min(point_to_subspace_distance(ProjPoint(x), Eplus) for x in L))
        report["minus_meets_limit"] = float(min(point_to_subspace_distance(ProjPoint(x), Eminus) for x in L))
    report["passed"] = bool(report["converged"] and report["supporting_plus"] and report["supporting_minus"])
    return report
