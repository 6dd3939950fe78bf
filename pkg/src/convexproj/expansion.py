"""Expansion at faces, pseudo-loxodromic sequences and related diagnostics.

The sampled expansion test on Grassmannian balls is the ground truth; the
singular value ratio is only a screen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .config import DEFAULT
from .convexdom import (
    ConvexDomain,
    DomainError,
    FaceDescriptor,
    Membership,
    PointedDomain,
    Polytope,
    _unit_rows,
    chord,
    contains,
    face_of,
    pair_values,
    supporting_functionals_at,
)
from .domspace import DirectSumSplit, domain_distance, project, relative_benzecri_normalize
from .groupdyn import MatrixGroup, OrbitCloud, is_supporting, orbit
from .projlin import (
    ProjPoint,
    ProjSubspace,
    ProjectiveError,
    ProjectiveMap,
    grassmann_distance,
    norm_conorm_on_subspace,
    orthogonal_complement,
)


class ExpansionError(ProjectiveError):
    pass


@dataclass(frozen=True)
class ExpansionCheck:
    passed: bool
    measured_min_ratio: float
    derivative_ratio: float
    n_pairs: int
    seed: int


@dataclass(frozen=True, eq=False)
class ExpansionCertificate:
    face: FaceDescriptor
    word: str
    element: ProjectiveMap
    constant: float
    radius: float
    method: str
    metric: str
    seed: int | None = None
    n_samples: int | None = None
    target: float | None = None

    def __post_init__(self):
        if not self.constant > 1:
            raise ExpansionError("certificate constant must exceed 1")

    def as_dict(self) -> dict:
        return {"face": self.face.face_id, "face_dim": self.face.dim, "word": self.word,
                "C": self.target, "r": self.radius, "method": self.method, "metric": self.metric,
                "seed": self.seed, "samples": self.n_samples, "measured": self.constant}


def _ball_point(V: ProjSubspace, Vp: np.ndarray, rho: float, rng) -> ProjSubspace:
    """Subspace at Grassmann distance rho from V, random direction."""
    A = rng.standard_normal((V.k, Vp.shape[0]))
    A *= np.tan(rho) / np.linalg.norm(A, 2)
    return ProjSubspace(V.basis + A @ Vp)


def _image(m, W: ProjSubspace) -> ProjSubspace:
    return ProjSubspace((m @ W.basis.T).T)


def is_expanding_on_ball(γ: ProjectiveMap, V: ProjSubspace, r: float, C: float,
                         n_pairs: int | None = None, seed: int | None = None) -> ExpansionCheck:
    """Sampled expansion ratio on the radius-r ball around V plus the
    derivative proxy at the center."""
    if not r < np.pi / 4:
        raise ExpansionError("radius must be below pi/4")
    if V.k in (0, V.d):
        raise ExpansionError("ball around a trivial subspace")
    n_pairs = DEFAULT.expansion_pairs if n_pairs is None else n_pairs
    seed = DEFAULT.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    m = γ.mat if isinstance(γ, ProjectiveMap) else np.asarray(γ, dtype=float)
    Vp = orthogonal_complement(V).basis
    worst = np.inf
    done = 0
    while done < n_pairs:
        W1 = _ball_point(V, Vp, r * rng.uniform() ** (1.0 / 2), rng)
        if done % 2:
            W2 = _ball_point(V, Vp, r * rng.uniform() ** (1.0 / 2), rng)
        else:
            # local pair around W1, kept inside the ball
            W2 = _ball_point(W1, orthogonal_complement(W1).basis, r * 1e-2 * rng.uniform(), rng)
            if grassmann_distance(W2, V) > r:
                continue
        d0 = grassmann_distance(W1, W2)
        if d0 < 1e-9:
            continue
        worst = min(worst, grassmann_distance(_image(m, W1), _image(m, W2)) / d0)
        done += 1
    deriv = np.inf
    for _ in range(8):
        W = _ball_point(V, Vp, 1e-5, rng)
        deriv = min(deriv, grassmann_distance(_image(m, V), _image(m, W)) / grassmann_distance(V, W))
    return ExpansionCheck(bool(worst >= C and deriv >= C), float(worst), float(deriv), n_pairs, seed)


def sv_expansion_bound(γ: ProjectiveMap, V_minus: ProjSubspace, E_plus: ProjSubspace, tol: float = 1e-8) -> float:
    """m(γ|E+) / ||γ|V-|| on a fixed lift."""
    if V_minus.k + E_plus.k != V_minus.d or np.linalg.matrix_rank(np.vstack([V_minus.basis, E_plus.basis]), 1e-9) < V_minus.d:
        raise ExpansionError("subspaces are not complementary")
    for S in (V_minus, E_plus):
        if grassmann_distance(γ @ S, S) > tol:
            raise ExpansionError("subspace is not invariant")
    _, conorm = norm_conorm_on_subspace(γ, E_plus)
    nrm, _ = norm_conorm_on_subspace(γ, V_minus)
    return conorm / nrm


def find_expanding_element(Γ: MatrixGroup, Ω: ConvexDomain, face: FaceDescriptor, C: float, r: float,
                           max_word_len: int, n_pairs: int | None = None, seed: int | None = None,
                           orbit_cloud: OrbitCloud | None = None) -> ExpansionCertificate | None:
    """First element in breadth-first order that is C-expanding around the face support."""
    seed = DEFAULT.seed if seed is None else seed
    oc = orbit(Γ, Ω, None, max_word_len) if orbit_cloud is None else orbit_cloud.upto(max_word_len)
    V = face.support
    for g in oc.maps():
        if not g.label:
            continue
        check = is_expanding_on_ball(g, V, r, C, n_pairs=8, seed=seed)
        if check.derivative_ratio < C or check.measured_min_ratio < C:
            continue
        check = is_expanding_on_ball(g, V, r, C, n_pairs=n_pairs, seed=seed)
        if check.passed:
            return ExpansionCertificate(face, g.label, g, min(check.measured_min_ratio, check.derivative_ratio),
                                        r, "sampled", DEFAULT.metric, seed, check.n_pairs, C)
    return None


def check_uniform_expansion_at_faces(Γ: MatrixGroup, Ω: ConvexDomain, faces: list, C: float, r: float,
                                     max_word_len: int, n_pairs: int | None = None, seed: int | None = None) -> dict:
    oc = orbit(Γ, Ω, None, max_word_len)
    certs = [find_expanding_element(Γ, Ω, f, C, r, max_word_len, n_pairs, seed, oc) for f in faces]
    return {"passed": all(c is not None for c in certs), "certificates": certs,
            "failures": [i for i, c in enumerate(certs) if c is None], "C": C, "r": r}


def covering_radius(core_sample, orbit_cloud: OrbitCloud, Ω: ConvexDomain, chunk: int = 256) -> float:
    """Max over core samples of the Hilbert distance to the nearest orbit point."""
    X = _unit_rows(np.atleast_2d(core_sample))
    Y = orbit_cloud.points.reshape(-1, Ω.d)
    if not len(X) or not len(Y):
        raise ExpansionError("empty input")
    xi = Ω.chart_covector()
    X = X * np.sign(X @ xi)[:, None]
    Y = Y * np.sign(Y @ xi)[:, None]
    best = np.full(len(X), np.inf)
    for lo in range(0, len(X), chunk):
        Xs = X[lo:lo + chunk]
        P = np.repeat(Xs, len(Y), axis=0)
        Q = np.tile(Y, (len(Xs), 1))
        best[lo:lo + chunk] = pair_values(Ω, P, Q).reshape(len(Xs), len(Y)).min(axis=1)
    return float(best.max())


# pseudo-loxodromic sequences ----------------------------------------------

@dataclass(frozen=True, eq=False)
class PseudoLoxSequence:
    V_plus: ProjSubspace
    V_minus: ProjSubspace
    H0: ProjSubspace
    maps: list
    lambdas: np.ndarray
    reference_pointed: PointedDomain
    K_radius: float
    x_n: list = field(default_factory=list)
    distances: np.ndarray = field(default_factory=lambda: np.zeros(0))
    checks: dict = field(default_factory=dict)

    def sv_ratios(self) -> np.ndarray:
        E = ProjSubspace(np.vstack([self.H0.basis, self.V_plus.basis]))
        return np.array([sv_expansion_bound(g, self.V_minus, E) for g in self.maps])


def _as_vec(x):
    return np.asarray(x.rep if isinstance(x, ProjPoint) else x, dtype=float)


def _line_frame(Ω, x_plus, x_minus, x_target):
    """Positive lifts with x_target = x_plus_lift * s_t + x_minus_lift, s_t > 0."""
    xp, xm, xt = Ω.lift(x_plus), Ω.lift(x_minus), Ω.lift(x_target)
    c, *_ = np.linalg.lstsq(np.stack([xp, xm], axis=1), xt, rcond=None)
    if np.linalg.norm(np.stack([xp, xm], axis=1) @ c - xt) > 1e-8 or c.min() <= 0:
        raise ExpansionError("target is not inside the segment between the endpoints")
    return xp, c[1] * xm, c[0] / c[1]


def _schedule(lambdas, x_n, n_terms, Ω, xp, xm, st):
    if x_n is not None:
        lam = []
        B = np.stack([xp, xm], axis=1)
        for x in x_n:
            v = Ω.lift(_as_vec(x))
            c, *_ = np.linalg.lstsq(B, v, rcond=None)
            if np.linalg.norm(B @ c - v) > 1e-8 or c.min() <= 0:
                raise ExpansionError("x_n is not on the line through the endpoints")
            lam.append(st / (c[0] / c[1]))
        return np.array(lam)
    if lambdas is None:
        return 2.0 ** np.arange(1, n_terms + 1)
    return np.asarray(lambdas, dtype=float)


def _split_map(blocks, scales):
    """Map scaling each block of rows (given as a basis) by the given factor."""
    Bm = np.vstack([b for b in blocks if len(b)]).T
    D = np.concatenate([np.full(len(b), s) for b, s in zip(blocks, scales) if len(b)])
    return Bm @ np.diag(D) @ np.linalg.inv(Bm)


def _verify_splitting(maps, V_minus, H0, V_plus, Ω, tol=1e-8) -> dict:
    stacked = np.vstack([V_minus.basis, H0.basis, V_plus.basis]) if H0.k else np.vstack([V_minus.basis, V_plus.basis])
    spans = abs(np.linalg.det(stacked)) > 1e-12
    worst = 0.0
    for g in maps:
        for S in (V_minus, H0, V_plus):
            if S.k:
                worst = max(worst, grassmann_distance(g @ S, S))
    return {"spans": bool(spans), "blockwise_residual": worst, "blockwise": worst < tol,
            "supporting_minus": is_supporting(Ω, V_minus), "supporting_plus": is_supporting(Ω, V_plus)}


def _cone_reference(Ω, F_minus: FaceDescriptor, xp, xm):
    if isinstance(Ω, Polytope) and F_minus.vertex_indices:
        V = np.vstack([Ω.vertex_lifts[list(F_minus.vertex_indices)], xp])
    else:
        V = np.vstack([xm, xp])
    return Polytope.from_vertices(V)


def _pointed(reference, fallback, x):
    try:
        return PointedDomain(reference, ProjPoint(x))
    except DomainError:
        return PointedDomain(fallback, ProjPoint(x))


def make_codim1_pseudolox(Ω: ConvexDomain, F_minus: FaceDescriptor, x_plus, x_target, x_n=None,
                          lambdas=None, n_terms: int = 12, n_samples: int = 1024) -> PseudoLoxSequence:
    """s_n = lambda_n on x_plus and the identity on the span of the codim-1 face."""
    d = Ω.d
    if F_minus.dim != d - 2:
        raise ExpansionError("face must have codimension one in the boundary")
    V_minus = F_minus.support
    xp0 = _as_vec(x_plus)
    if np.linalg.norm(xp0 - V_minus.projector() @ xp0) / np.linalg.norm(xp0) < 1e-9:
        raise ExpansionError("x_plus lies in the span of the face")
    if contains(Ω, xp0) is not Membership.BOUNDARY:
        raise ExpansionError("x_plus must be a boundary point")
    if contains(Ω, _as_vec(x_target)) is not Membership.INTERIOR:
        raise ExpansionError("x_target must be interior")
    nu = orthogonal_complement(V_minus).basis[0]
    xt = Ω.lift(_as_vec(x_target))
    xm = (nu @ xt) * xp0 - (nu @ xp0) * xt
    if contains(Ω, xm) is not Membership.BOUNDARY:
        raise ExpansionError("the line through x_plus and x_target misses the face")
    xp, xm, st = _line_frame(Ω, xp0, xm, xt)
    lam = _schedule(lambdas, x_n, n_terms, Ω, xp, xm, st)
    maps = [ProjectiveMap(_split_map([xp[None], V_minus.basis], [L, 1.0]), f"s{i + 1}") for i, L in enumerate(lam)]
    xs = [ProjPoint((st / L) * xp + xm) for L in lam]
    V_plus = ProjSubspace(xp[None])
    H0 = ProjSubspace(np.zeros((0, d)))
    ref = _cone_reference(Ω, F_minus, xp, xm)
    dist = np.array([float(domain_distance(Ω.transform(g), ref, n_samples)) for g in maps])
    checks = _verify_splitting(maps, V_minus, H0, V_plus, Ω)
    return PseudoLoxSequence(V_plus, V_minus, H0, maps, lam, _pointed(ref, Ω.transform(maps[-1]), xt),
                             float(dist.max()), xs, dist, checks)


def _meets_closure(Ω, H: ProjSubspace) -> bool:
    if H.k == 0:
        return False
    if isinstance(Ω, Polytope):
        G = Ω.facet_functionals @ H.basis.T
        xi = Ω.chart_covector() @ H.basis.T
        res = linprog(np.zeros(H.k), A_ub=-G, b_ub=np.zeros(len(G)), A_eq=xi[None], b_eq=[1.0],
                      bounds=[(None, None)] * H.k, method="highs")
        return res.status == 0
    return bool(np.linalg.eigvalsh(H.basis @ Ω.form @ H.basis.T)[0] <= 1e-12)


def _null_rows(M, tol=1e-10):
    M = np.atleast_2d(M)
    _, s, vt = np.linalg.svd(M)
    r = int((s > tol * max(1.0, s[0] if len(s) else 1.0)).sum())
    return vt[r:]


def projection_subspace(Ω: ConvexDomain, x_minus, x_plus, H_plus=None, H_minus=None,
                        budget: int = 32, seed: int = 0) -> ProjSubspace:
    """Neutral subspace H0 inside H+ ∩ H- with H- = H0 + V- and a properly
    convex projection to V- + x_plus along H0."""
    xm, xp = Ω.lift(_as_vec(x_minus)), Ω.lift(_as_vec(x_plus))
    for v in (xm, xp):
        if contains(Ω, v) is not Membership.BOUNDARY:
            raise ExpansionError("endpoints must be boundary points")
    if contains(Ω, xm + xp) is not Membership.INTERIOR:
        raise ExpansionError("open segment between the endpoints is not inside the domain")
    V_minus = face_of(Ω, xm).support
    hp = supporting_functionals_at(Ω, xp)[0] if H_plus is None else _as_vec(H_plus)
    hm = supporting_functionals_at(Ω, xm)[0] if H_minus is None else _as_vec(H_minus)
    if abs(hp @ xp) > 1e-9 or np.abs(V_minus.basis @ hm).max() > 1e-9:
        raise ExpansionError("hyperplanes do not support at the endpoints")
    d, km = Ω.d, V_minus.k
    m = d - 1 - km
    if m == 0:
        return ProjSubspace(np.zeros((0, d)))
    N = _null_rows(np.stack([hp, hm]))
    A = _null_rows((V_minus.basis @ hp)[None, :]) @ V_minus.basis
    # orthogonal complement of V- ∩ H+ inside H+ ∩ H-
    C0 = N - (N @ A.T) @ A if len(A) else N
    C0 = np.linalg.svd(C0)[2][:m]
    W = np.vstack([V_minus.basis, xp])
    rng = np.random.default_rng(seed)
    for attempt in range(budget):
        C = C0
        if attempt and len(A):
            C = C0 + 0.5 * rng.standard_normal((m, len(A))) @ A
        H0 = ProjSubspace(C)
        if H0.k != m or np.linalg.matrix_rank(np.vstack([H0.basis, V_minus.basis]), 1e-9) != d - 1:
            continue
        if _meets_closure(Ω, H0):
            continue
        pr = project(Ω, DirectSumSplit(ProjSubspace(W).basis, H0.basis))
        if pr.properly_convex and not pr.closure_warning:
            return H0
        if len(A) == 0:
            break
    raise ExpansionError(f"no neutral subspace verified within budget {budget} (seed {seed})")


def make_general_pseudolox(Ω: ConvexDomain, F_minus: FaceDescriptor, x_plus, x_target, x_n=None,
                           lambdas=None, n_terms: int = 12, H_plus=None, H_minus=None,
                           n_samples: int = 1024, seed: int = 0) -> PseudoLoxSequence:
    """g_n = (s_n on V- + x_plus) combined with the relative normalization on H0."""
    xt = Ω.lift(_as_vec(x_target))
    xp0 = Ω.lift(_as_vec(x_plus))
    a, b = chord(Ω, ProjPoint(xt), ProjPoint(xp0))
    xm = Ω.lift(a.rep)
    if face_of(Ω, xm).face_id != F_minus.face_id or grassmann_distance(face_of(Ω, xm).support, F_minus.support) > 1e-8:
        raise ExpansionError("the line through x_plus and x_target does not end in the given face")
    H0 = projection_subspace(Ω, xm, xp0, H_plus, H_minus, seed=seed)
    if H0.k == 0:
        return make_codim1_pseudolox(Ω, F_minus, xp0, xt, x_n, lambdas, n_terms, n_samples)
    V_minus = F_minus.support
    xp, xm, st = _line_frame(Ω, xp0, xm, xt)
    lam = _schedule(lambdas, x_n, n_terms, Ω, xp, xm, st)
    W = ProjSubspace(np.vstack([V_minus.basis, xp]))
    split = DirectSumSplit(W.basis, H0.basis)
    maps = []
    for i, L in enumerate(lam):
        s = ProjectiveMap(_split_map([xp[None], V_minus.basis, H0.basis], [L, 1.0, 1.0]))
        Ωn = Ω.transform(s)
        rel = relative_benzecri_normalize(PointedDomain(Ωn, ProjPoint(xt)), split)
        maps.append(ProjectiveMap(rel.map.mat @ s.mat, f"g{i + 1}"))
    xs = [ProjPoint((st / L) * xp + xm) for L in lam]
    V_plus = ProjSubspace(xp[None])
    last = Ω.transform(maps[-1])
    dist = np.array([float(domain_distance(Ω.transform(g), last, n_samples)) for g in maps])
    checks = _verify_splitting(maps, V_minus, H0, V_plus, Ω)
    return PseudoLoxSequence(V_plus, V_minus, H0, maps, lam, PointedDomain(last, ProjPoint(xt)),
                             float(dist.max()), xs, dist, checks)


def decompose_kg(gammas, pl: PseudoLoxSequence, bound: float | None = None) -> dict:
    """k_n = γ_n g_n^{-1} and the largest operator norm of k_n, k_n^{-1}."""
    if len(gammas) != len(pl.maps):
        raise ExpansionError("sequence lengths differ")
    ks, norms = [], []
    for γ, g in zip(gammas, pl.maps):
        m = γ.mat if isinstance(γ, ProjectiveMap) else np.asarray(γ, dtype=float)
        k = ProjectiveMap(m @ np.linalg.inv(g.mat))
        ks.append(k)
        norms.append(max(np.linalg.norm(k.mat, 2), np.linalg.norm(np.linalg.inv(k.mat), 2)))
    norms = np.array(norms)
    out = {"k": ks, "norms": norms, "max_norm": float(norms.max())}
    if bound is not None:
        out["passed"] = bool(norms.max() <= bound)
    return out
