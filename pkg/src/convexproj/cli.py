"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
Domains and groups travel between subcommands as JSON (see ``example``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import examples
from .config import DEFAULT
from .convexdom import (
    ConvexDomain,
    Ellipsoid,
    Polytope,
    PointedDomain,
    boundary_samples,
    face_of,
    faces,
    sample_interior,
)
from .domspace import benzecri_normalize
from .expansion import (
    check_uniform_expansion_at_faces,
    covering_radius,
    is_expanding_on_ball,
    make_general_pseudolox,
)
from .groupdyn import (
    MatrixGroup,
    PeripheralFamily,
    cartan_trace,
    check_gap_growth,
    convex_core_sample,
    detect_segments,
    limit_set_sample,
    orbit,
    peripheral_checks,
)
from .projlin import ProjectiveError, ProjectiveMap, ProjPoint


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    tol: float | None = None
    threads: int | None = None
    out: str | None = None


# serialization --------------------------------------------------------------

def _num(x: float) -> str:
    return "%.17g" % x


def _matrix(m) -> list:
    return [[float(v) for v in row] for row in np.asarray(m)]


def domain_to_json(Ω: ConvexDomain) -> dict:
    if isinstance(Ω, Polytope):
        return {"kind": "polytope", "d": Ω.d, "vertices": _matrix(Ω.vertex_lifts), "facets": _matrix(Ω.facet_functionals)}
    return {"kind": "ellipsoid", "d": Ω.d, "form": _matrix(Ω.form)}


def group_to_json(Γ: MatrixGroup, domain_ref: str | None) -> dict:
    return {"d": Γ.d if Γ.generators else None, "domain_ref": domain_ref,
            "generators": [{"label": g.label, "matrix": _matrix(g.mat)} for g in Γ.generators]}


def domain_from_json(obj: dict) -> ConvexDomain:
    kind = obj.get("kind")
    if kind == "polytope":
        return Polytope(np.array(obj["vertices"], dtype=float), np.array(obj["facets"], dtype=float))
    if kind == "ellipsoid":
        return Ellipsoid(np.array(obj["form"], dtype=float))
    raise InputError(f"unknown domain kind {kind!r}")


def group_from_json(obj: dict, Ω: ConvexDomain) -> MatrixGroup:
    gens = tuple(ProjectiveMap(np.array(g["matrix"], dtype=float), g["label"]) for g in obj.get("generators", []))
    return MatrixGroup(gens, Ω)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_text(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def points_csv(points, words, dims, ids) -> str:
    d = points.shape[1] if np.ndim(points) == 2 else 0
    header = [f"x{i + 1}" for i in range(d)] + ["word", "face_dim", "face_id"]
    rows = [[*map(float, p), w, int(fd), fid] for p, w, fd, fid in zip(points, words, dims, ids)]
    return rows_to_csv(header, rows)


# input handling -------------------------------------------------------------

def load_problem(args) -> tuple[ConvexDomain, MatrixGroup, str]:
    if getattr(args, "example", None):
        Ω, Γ = examples.build(args.example)
        return Ω, Γ, args.example
    src = getattr(args, "input", None)
    if src and src != "-":
        with open(src, encoding="utf-8") as fh:
            text = fh.read()
    elif not sys.stdin.isatty():
        text = sys.stdin.read()
    else:
        raise InputError("no problem given; use --example NAME, --input FILE, or pipe `example` output")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"bad JSON input: {e}") from None
    Ω = domain_from_json(obj["domain"])
    return Ω, group_from_json(obj.get("group", {}), Ω), obj.get("name", "input")


def _parse_point(text: str, d: int) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise InputError(f"bad point {text!r}") from None
    if v.shape != (d,):
        raise InputError(f"point needs {d} coordinates")
    return v


# subcommands ----------------------------------------------------------------

def cmd_example(args, cfg: RunConfig) -> int:
    Ω, Γ = examples.build(args.name)
    write_text(dumps({"name": args.name, "domain": domain_to_json(Ω), "group": group_to_json(Γ, args.name)}), cfg.out)
    return 0


def cmd_orbit(args, cfg):
    Ω, Γ, _ = load_problem(args)
    oc = orbit(Γ, Ω, None, args.len)
    pts = oc.points[:, 0]
    header = [f"x{i + 1}" for i in range(Ω.d)] + ["word", "length"]
    rows = [[*map(float, p), w, int(L)] for p, w, L in zip(pts, oc.words, oc.lengths)]
    write_text(rows_to_csv(header, rows), cfg.out)
    return 0


def cmd_limitset(args, cfg):
    Ω, Γ, _ = load_problem(args)
    Λ = limit_set_sample(Γ, Ω, None, args.len, args.eps)
    write_text(points_csv(Λ.points, Λ.words, Λ.face_dims, Λ.face_ids), cfg.out)
    return 0


def cmd_core(args, cfg):
    Ω, Γ, _ = load_problem(args)
    Λ = limit_set_sample(Γ, Ω, None, args.len, args.eps)
    if not len(Λ):
        write_text(dumps({"degenerate": True, "vertices": [], "facets": [], "ideal_count": 0}), cfg.out)
        return 1
    H = convex_core_sample(Γ, Ω, Λ)
    dom = H.domain
    out = {"degenerate": H.degenerate, "ideal_count": len(H.ideal_boundary),
           "vertices": _matrix(H.vertices),
           "facets": _matrix(dom.facet_functionals) if (dom is not None and not H.degenerate) else []}
    write_text(dumps(out), cfg.out)
    return 0


def cmd_cartan(args, cfg):
    Ω, Γ, _ = load_problem(args)
    words = [Γ.power_word(args.word, n) for n in range(1, args.powers + 1)]
    tr = cartan_trace(words, Γ)
    rep = check_gap_growth(tr, args.k, args.delta_min)
    d = Γ.d
    header = ["n"] + [f"mu{i + 1}" for i in range(d)] + ["gap", "top"]
    rows = [[n + 1, *map(float, c.mu), float(c.gap(args.k)), float(c.mu[0] - c.mu[args.k - 1])]
            for n, c in enumerate(tr)]
    write_text(rows_to_csv(header, rows), cfg.out)
    return 0 if rep["gap_growth"] else 1


def _face_list(Ω, Γ, spec, args):
    if isinstance(Ω, Polytope):
        fl = faces(Ω)
        if spec == "all":
            return fl
        if spec == "vertices":
            return [f for f in fl if f.dim == 0]
        wanted = spec.split(",")
        chosen = [f for f in fl if f.face_id in wanted]
        if len(chosen) != len(wanted):
            raise InputError(f"unknown face ids in {spec!r}")
        return chosen
    # strictly convex: faces are limit points; take hull-extreme ones
    Λ = limit_set_sample(Γ, Ω, None, args.limit_len, DEFAULT.epsilon)
    if not len(Λ):
        raise InputError("empty limit set sample")
    H = convex_core_sample(Γ, Ω, Λ)
    pts = np.array([p.rep for p in H.ideal_boundary])
    step = max(1, len(pts) // args.max_faces)
    return [face_of(Ω, p) for p in pts[::step][: args.max_faces]]


def cmd_expansion(args, cfg):
    Ω, Γ, _ = load_problem(args)
    fl = _face_list(Ω, Γ, args.face_list, args)
    rep = check_uniform_expansion_at_faces(Γ, Ω, fl, args.C, args.r, args.max_len, args.pairs, cfg.seed)
    certs = []
    for f, c in zip(fl, rep["certificates"]):
        certs.append(c.as_dict() if c is not None else
                     {"face": f.face_id, "face_dim": f.dim, "word": None, "C": args.C, "r": args.r,
                      "method": "sampled", "seed": cfg.seed, "measured": None})
    write_text(dumps({"passed": rep["passed"], "certificates": certs}), cfg.out)
    return 0 if rep["passed"] else 1


def pseudolox_family(name: str, n_terms: int):
    """Bundled pseudo-loxodromic families: square, Klein 3-ball, 3-simplex."""
    if name == "square":
        Ω = examples.square()
        F = face_of(Ω, [1.0, 0.0, 1.0])
        return make_general_pseudolox(Ω, F, [-1.0, -1.0, 1.0], [0.0, -0.5, 1.0], n_terms=n_terms)
    if name == "klein3":
        Ω = examples.klein_model(4)
        xm = np.array([1.0, 0.0, 0.0, 1.0])
        return make_general_pseudolox(Ω, face_of(Ω, xm), [-1.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0], n_terms=n_terms)
    if name == "simplex3":
        Ω = examples.simplex(4)
        return make_general_pseudolox(Ω, face_of(Ω, [1.0, 0, 0, 0]), [0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0],
                                      n_terms=n_terms)
    raise InputError(f"unknown pseudolox family {name!r}")


def expansion_profile(pl, C: float, r: float, seed: int = 0) -> dict:
    ratios = pl.sv_ratios()
    checks = [is_expanding_on_ball(g, pl.V_minus, r, C, seed=seed) for g in pl.maps]
    passed = [c.passed for c in checks]
    n0 = None
    for i in range(len(passed)):
        if all(passed[i:]):
            n0 = i + 1
            break
    return {"sv_ratios": ratios, "sv_increasing": bool(np.all(np.diff(ratios) > 0)),
            "expanding": passed, "min_ratio": [c.measured_min_ratio for c in checks],
            "derivative": [c.derivative_ratio for c in checks], "n0": n0}


def cmd_pseudolox(args, cfg):
    pl = pseudolox_family(args.family, args.terms)
    prof = expansion_profile(pl, args.C, args.r, cfg.seed)
    tol = 1e-8 if cfg.tol is None else cfg.tol
    ok = prof["sv_increasing"] and prof["n0"] is not None and prof["n0"] <= 10 and pl.checks["blockwise_residual"] < tol
    out = {"family": args.family, "lambdas": pl.lambdas, "K_radius": pl.K_radius, "H0_dim": pl.H0.k,
           "checks": {k: v for k, v in pl.checks.items()}, **prof, "passed": bool(ok)}
    write_text(dumps(out), cfg.out)
    return 0 if ok else 1


def cmd_relhyp(args, cfg):
    Ω, Γ, _ = load_problem(args)
    Λ = limit_set_sample(Γ, Ω, None, args.len, args.eps)
    subgroups, samples = [], []
    for spec in (args.peripheral or []):
        words = [w.strip() for w in spec.split(",") if w.strip()]
        H = MatrixGroup(tuple(ProjectiveMap(Γ.element(w).mat, f"h{i + 1}") for i, w in enumerate(words)), Ω)
        subgroups.append(H)
        samples.append(limit_set_sample(H, Ω, None, args.len, args.eps))
    tol = cfg.tol
    rep = peripheral_checks(PeripheralFamily(subgroups, samples), Λ, tol, tol)
    segs = detect_segments(Λ)
    out = {"segments": [{"face_id": s.face_id, "dim": s.dim, "count": len(s.indices)} for s in segs],
           "disjoint": rep["disjoint"], "segments_peripheral": rep["segments_peripheral"],
           "n_classes": rep["n_classes"], "samples": len(Λ),
           "witness": None if rep["witness"] is None else {"pair": list(rep["witness"][:2]),
                                                            "distance": rep["witness"][3]}}
    write_text(dumps(out), cfg.out)
    return 0 if (rep["disjoint"] and rep["segments_peripheral"]) else 1


def cmd_benzecri(args, cfg):
    Ω, _, _ = load_problem(args)
    x = _parse_point(args.base, Ω.d) if args.base else Ω.center_lift()
    res = benzecri_normalize(PointedDomain(Ω, ProjPoint(x)))
    out = {"map": _matrix(res.map.mat), "inner_radius": res.inner_radius, "outer_radius": res.outer_radius,
           "iterations": res.iterations, "normalized": domain_to_json(res.normalized.domain)}
    write_text(dumps(out), cfg.out)
    return 0


def cmd_covering(args, cfg):
    Ω, Γ, _ = load_problem(args)
    rng = np.random.default_rng(cfg.seed)
    core = sample_interior(Ω, args.samples, rng)
    vals = {L: covering_radius(core, orbit(Γ, Ω, None, L), Ω) for L in args.lens}
    write_text(dumps({"covering_radius": {str(k): v for k, v in vals.items()}}), cfg.out)
    return 0


# rendering ------------------------------------------------------------------

def _outline(Ω: ConvexDomain) -> np.ndarray:
    if isinstance(Ω, Polytope):
        Y = Ω.to_chart(Ω.vertex_lifts)
        c = Y.mean(axis=0)
        order = np.argsort(np.arctan2(Y[:, 1] - c[1], Y[:, 0] - c[0]))
        return Y[order]
    B = boundary_samples(Ω, 256, include_vertices=False)
    Y = Ω.to_chart(B)
    c = Y.mean(axis=0)
    return Y[np.argsort(np.arctan2(Y[:, 1] - c[1], Y[:, 0] - c[0]))]


def render_chart(Ω: ConvexDomain, points: np.ndarray, face_ids=None, face_dims=None, size: int = 480) -> str:
    """Affine chart plot of boundary data with the domain outline."""
    if Ω.d != 3:
        raise InputError("rendering needs d = 3")
    O = _outline(Ω)
    lo, hi = O.min(axis=0), O.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 20.0
    s = (size - 2 * pad) / span

    def xy(p):
        return pad + (p[0] - lo[0]) * s, size - pad - (p[1] - lo[1]) * s

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    poly = " ".join("%.4f,%.4f" % xy(p) for p in O)
    out.append(f'<polygon points="{poly}" fill="none" stroke="#444444" stroke-width="1"/>')
    Y = Ω.to_chart(points) if len(points) else np.zeros((0, 2))
    if face_ids is not None and len(Y):
        groups: dict = {}
        for i, (fid, fd) in enumerate(zip(face_ids, face_dims)):
            if int(fd) >= 1:
                groups.setdefault(fid, []).append(i)
        for fid in sorted(groups):
            idx = groups[fid]
            if len(idx) < 2:
                continue
            P = Y[idx]
            u = P[-1] - P[0] if np.linalg.norm(P[-1] - P[0]) > 0 else np.array([1.0, 0.0])
            t = P @ u
            a, b = P[int(np.argmin(t))], P[int(np.argmax(t))]
            (x1, y1), (x2, y2) = xy(a), xy(b)
            out.append(f'<line x1="{x1:.4f}" y1="{y1:.4f}" x2="{x2:.4f}" y2="{y2:.4f}" '
                       f'stroke="#d62728" stroke-width="3" stroke-opacity="0.5"/>')
    for p in Y:
        x, y = xy(p)
        out.append(f'<circle cx="{x:.4f}" cy="{y:.4f}" r="1.5" fill="#1f77b4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def read_points_csv(path: str):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError("empty CSV")
    header = rows[0]
    xs = [i for i, h in enumerate(header) if h.startswith("x")]
    P = np.array([[float(r[i]) for i in xs] for r in rows[1:]]).reshape(-1, len(xs))
    ids = [r[header.index("face_id")] for r in rows[1:]] if "face_id" in header else None
    dims = [int(r[header.index("face_dim")]) for r in rows[1:]] if "face_dim" in header else None
    return P, ids, dims


def cmd_render(args, cfg):
    Ω, _, _ = load_problem(args)
    if args.data:
        P, ids, dims = read_points_csv(args.data)
        if len(P) and P.shape[1] != Ω.d:
            raise InputError("data dimension does not match the domain")
    else:
        P, ids, dims = np.zeros((0, Ω.d)), None, None
    write_text(render_chart(Ω, P, ids, dims), cfg.out)
    return 0


# entry point ----------------------------------------------------------------

def _problem_args(p):
    p.add_argument("--example", help="named preset instead of JSON input")
    p.add_argument("--input", help="JSON file from `example` (default: stdin)")


def _sub_parser_factory(common):
    class _Sub(argparse.ArgumentParser):
        def __init__(self, *a, **kw):
            kw.setdefault("parents", [common])
            super().__init__(*a, **kw)
    return _Sub


def build_parser() -> argparse.ArgumentParser:
    # shared flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed (default 0)")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="check tolerance override")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file (default stdout)")
    ap = argparse.ArgumentParser(prog="convexproj", description=__doc__.splitlines()[0], parents=[common])
    sub = ap.add_subparsers(dest="cmd", metavar="COMMAND", parser_class=_sub_parser_factory(common))

    p = sub.add_parser("example", help="emit domain and group JSON for a preset")
    p.add_argument("name", choices=sorted(examples.PRESETS))
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("orbit", help="orbit of the chart center as CSV")
    _problem_args(p)
    p.add_argument("--len", type=int, default=4)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("limitset", help="limit set sample as CSV")
    _problem_args(p)
    p.add_argument("--len", type=int, default=10)
    p.add_argument("--eps", type=float, default=DEFAULT.epsilon)
    p.set_defaults(func=cmd_limitset)

    p = sub.add_parser("core", help="convex hull of the limit set sample as JSON")
    _problem_args(p)
    p.add_argument("--len", type=int, default=10)
    p.add_argument("--eps", type=float, default=DEFAULT.epsilon)
    p.set_defaults(func=cmd_core)

    p = sub.add_parser("cartan-trace", help="Cartan projections of powers of a word")
    _problem_args(p)
    p.add_argument("--word", required=True)
    p.add_argument("--powers", type=int, default=20)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--delta-min", type=float, default=1e-3)
    p.set_defaults(func=cmd_cartan)

    p = sub.add_parser("expansion-check", help="search expanding elements at faces")
    _problem_args(p)
    p.add_argument("--face-list", default="all", help="all, vertices, or comma-separated face ids")
    p.add_argument("--C", type=float, default=2.0)
    p.add_argument("--r", type=float, default=0.05)
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument("--pairs", type=int, default=DEFAULT.expansion_pairs)
    p.add_argument("--limit-len", type=int, default=8)
    p.add_argument("--max-faces", type=int, default=8)
    p.set_defaults(func=cmd_expansion)

    p = sub.add_parser("pseudolox", help="constructed pseudo-loxodromic family report")
    p.add_argument("--family", choices=["square", "klein3", "simplex3"], default="square")
    p.add_argument("--terms", type=int, default=12)
    p.add_argument("--C", type=float, default=4.0)
    p.add_argument("--r", type=float, default=0.02)
    p.set_defaults(func=cmd_pseudolox)

    p = sub.add_parser("relhyp-check", help="segments and peripheral subgroup checks")
    _problem_args(p)
    p.add_argument("--len", type=int, default=10)
    p.add_argument("--eps", type=float, default=DEFAULT.epsilon)
    p.add_argument("--peripheral", action="append",
                   help="generator words of one peripheral subgroup, comma separated; repeatable")
    p.set_defaults(func=cmd_relhyp)

    p = sub.add_parser("benzecri", help="normalize a pointed domain")
    _problem_args(p)
    p.add_argument("--base", help="comma-separated base point (default chart center)")
    p.set_defaults(func=cmd_benzecri)

    p = sub.add_parser("covering", help="covering radius of orbits of increasing length")
    _problem_args(p)
    p.add_argument("--lens", type=int, nargs="+", default=[6, 8])
    p.add_argument("--samples", type=int, default=500)
    p.set_defaults(func=cmd_covering)

    p = sub.add_parser("render", help="SVG chart plot of CSV point data (d = 3)")
    _problem_args(p)
    p.add_argument("--data", help="CSV from limitset")
    p.set_defaults(func=cmd_render)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.cmd is None:
        ap.print_usage(sys.stderr)
        return 2
    threads = os.environ.get("CONVEXPROJ_THREADS")
    cfg = RunConfig(seed=getattr(args, "seed", DEFAULT.seed), tol=getattr(args, "tol", None),
                    threads=int(threads) if threads else None, out=getattr(args, "out", None))
    try:
        return args.func(args, cfg)
    except (InputError, examples.ExampleError, KeyError, FileNotFoundError) as e:
        print(f"convexproj: error: {e}", file=sys.stderr)
        return 2
    except ProjectiveError as e:
        print(f"convexproj: error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
