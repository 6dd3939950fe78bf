"""Deterministic test-bed domains and groups."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convexdom import Ellipsoid, Polytope
from .groupdyn import GroupError, MatrixGroup
from .projlin import ProjectiveMap


class ExampleError(ValueError):
    pass


@dataclass(frozen=True)
class ExampleSpec:
    name: str
    parameters: dict = field(default_factory=dict)


def simplex(d: int) -> Polytope:
    return Polytope.from_vertices(np.eye(d))


def square() -> Polytope:
    return Polytope.from_chart_vertices(np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]))


def standard_simplex_with_lattice(d: int, exponent_basis=None):
    """Simplex on e_1..e_d with the diagonal lattice exp(v_i)."""
    if d < 2:
        raise ExampleError("need d >= 2")
    if exponent_basis is None:
        exponent_basis = [np.eye(d)[i] - np.eye(d)[d - 1] for i in range(d - 1)]
    V = np.atleast_2d(np.asarray(exponent_basis, dtype=float))
    if V.shape != (d - 1, d):
        raise ExampleError(f"need {d - 1} exponent vectors of length {d}")
    if np.abs(V.sum(axis=1)).max() > 1e-12:
        raise ExampleError("exponent vectors must sum to zero")
    if np.linalg.matrix_rank(V, tol=1e-9) < d - 1:
        raise ExampleError("dependent exponent basis")
    gens = tuple(ProjectiveMap(np.diag(np.exp(v)), f"g{i + 1}") for i, v in enumerate(V))
    Ω = simplex(d)
    return Ω, MatrixGroup(gens, Ω)


def klein_model(d: int) -> Ellipsoid:
    if d < 2:
        raise ExampleError("klein model needs d >= 2")
    return Ellipsoid(np.diag([1.0] * (d - 1) + [-1.0]))


def _form_frame(G):
    """P with P^T J P = G for J = diag(1, 1, -1)."""
    w, U = np.linalg.eigh(G)
    order = np.argsort(-w)
    w, U = w[order], U[:, order]
    return np.sqrt(np.abs(w))[:, None] * U.T


def triangle_group(p: int, q: int, r: int) -> MatrixGroup:
    """Reflection group with angles pi/p, pi/q, pi/r preserving the Klein disk."""
    if min(p, q, r) < 2:
        raise ExampleError("orders must be at least 2")
    if 1 / p + 1 / q + 1 / r >= 1 - 1e-12:
        raise ExampleError(f"({p},{q},{r}) is not hyperbolic")
    m = {(0, 1): p, (1, 2): q, (0, 2): r}
    G = np.eye(3)
    for (i, j), mij in m.items():
        G[i, j] = G[j, i] = -np.cos(np.pi / mij)
    P = _form_frame(G)
    Pinv = np.linalg.inv(P)
    J = np.diag([1.0, 1.0, -1.0])
    refl = []
    for i in range(3):
        s = np.eye(3) - 2.0 * np.outer(np.eye(3)[i], G[i])
        refl.append(P @ s @ Pinv)
    for i, s in enumerate(refl):
        if np.abs(s @ s - np.eye(3)).max() > 1e-10:
            raise GroupError("reflection does not square to identity")
        if np.abs(s.T @ J @ s - J).max() > 1e-9:
            raise GroupError("reflection does not preserve the form")
    for (i, j), mij in m.items():
        prod = np.linalg.matrix_power(refl[i] @ refl[j], mij)
        if np.abs(prod - np.eye(3)).max() > 1e-8:
            raise GroupError(f"relation (s{i}s{j})^{mij} fails")
    gens = tuple(ProjectiveMap(s, lab) for s, lab in zip(refl, "abc"))
    return MatrixGroup(gens, klein_model(3))


def boost(t: float, angle: float = 0.0) -> np.ndarray:
    """Hyperbolic translation of length t along the diameter at the given angle."""
    B = np.array([[np.cosh(t), 0.0, np.sinh(t)], [0.0, 1.0, 0.0], [np.sinh(t), 0.0, np.cosh(t)]])
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return R @ B @ R.T


def _cap_interval(direction, t):
    """Boundary arc of the half-disk beyond the bisector at distance t/2."""
    return direction, float(np.arccos(np.tanh(t / 2)))


def _arc_gap(a, b):
    d = abs((a[0] - b[0] + np.pi) % (2 * np.pi) - np.pi)
    return d - a[1] - b[1]


def schottky_group(t1: float = 4.0, t2: float = 4.0, axis_angle: float = np.pi / 2) -> MatrixGroup:
    """Two translations along crossing axes; ping-pong checked before returning."""
    caps = {"g1": _cap_interval(0.0, t1), "g1^-1": _cap_interval(np.pi, t1),
            "g2": _cap_interval(axis_angle, t2), "g2^-1": _cap_interval(axis_angle + np.pi, t2)}
    names = list(caps)
    gaps = {(a, b): _arc_gap(caps[a], caps[b]) for i, a in enumerate(names) for b in names[i + 1:]}
    mats = {"g1": boost(t1, 0.0), "g2": boost(t2, axis_angle)}
    mats["g1^-1"] = np.linalg.inv(mats["g1"])
    mats["g2^-1"] = np.linalg.inv(mats["g2"])
    # each letter maps the circle outside its inverse's cap into its own cap
    containment = {}
    theta = np.linspace(0, 2 * np.pi, 721)[:-1]
    circle = np.stack([np.cos(theta), np.sin(theta), np.ones_like(theta)], axis=1)
    for lab, m in mats.items():
        inv = lab[:-3] if lab.endswith("^-1") else lab + "^-1"
        c_inv = caps[inv]
        outside = np.abs((theta - c_inv[0] + np.pi) % (2 * np.pi) - np.pi) >= c_inv[1]
        img = circle[outside] @ m.T
        ang = np.arctan2(img[:, 1], img[:, 0])
        off = np.abs((ang - caps[lab][0] + np.pi) % (2 * np.pi) - np.pi)
        containment[lab] = float(caps[lab][1] - off.max())
    ok = min(gaps.values()) > 0 and min(containment.values()) > -1e-12
    if not ok:
        raise ExampleError(f"ping-pong fails for t=({t1}, {t2}), angle {axis_angle}")
    gens = (ProjectiveMap(mats["g1"], "g1"), ProjectiveMap(mats["g2"], "g2"))
    Γ = MatrixGroup(gens, klein_model(3))
    object.__setattr__(Γ, "certificate", {"cap_gaps": {f"{a}|{b}": v for (a, b), v in gaps.items()},
                                          "containment_margin": containment})
    return Γ


def random_polytope(d: int, n_vertices: int, rng) -> Polytope:
    """Hull of Gaussian chart points; resampled until full dimensional."""
    for _ in range(100):
        P = rng.standard_normal((n_vertices, d - 1))
        try:
            Ω = Polytope.from_chart_vertices(P)
        except Exception:
            continue
        if len(Ω.vertex_lifts) >= d:
            return Ω
    raise ExampleError("could not sample a full-dimensional polytope")


PRESETS = {
    "simplex-z2": ExampleSpec("simplex-z2", {"d": 3}),
    "simplex-z3": ExampleSpec("simplex-z3", {"d": 4}),
    "triangle-237": ExampleSpec("triangle-237", {"pqr": (2, 3, 7)}),
    "triangle-334": ExampleSpec("triangle-334", {"pqr": (3, 3, 4)}),
    "schottky": ExampleSpec("schottky", {"t": (4.0, 4.0), "axis_angle": np.pi / 2}),
    "klein-disk": ExampleSpec("klein-disk", {"d": 3}),
    "square": ExampleSpec("square", {}),
}


def build(name: str):
    """Domain and group (possibly trivial) for a named preset."""
    if name not in PRESETS:
        raise ExampleError(f"unknown example {name!r}; known: {', '.join(sorted(PRESETS))}")
    p = PRESETS[name].parameters
    if name.startswith("simplex-z"):
        return standard_simplex_with_lattice(p["d"])
    if name.startswith("triangle-"):
        Γ = triangle_group(*p["pqr"])
        return Γ.domain_hint, Γ
    if name == "schottky":
        Γ = schottky_group(*p["t"], p["axis_angle"])
        return Γ.domain_hint, Γ
    if name == "klein-disk":
        Ω = klein_model(p["d"])
        return Ω, MatrixGroup((), Ω)
    Ω = square()
    return Ω, MatrixGroup((), Ω)
