"""Compiled versus numpy kernels on batched Hilbert distances and nearest angles.

    python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from convexproj import _kernels_py as py
from convexproj.convexdom import sample_interior
from convexproj.examples import klein_model, random_polytope

try:
    from convexproj import _kernels as cy
except ImportError:
    cy = None

J = np.diag([1.0, 1.0, -1.0])


def cases(n, rng):
    Ω = random_polytope(4, 12, rng)
    F = Ω.facet_functionals
    X, Y = sample_interior(Ω, n, rng), sample_interior(Ω, n, rng)
    G1, G2 = X @ F.T, Y @ F.T
    K = klein_model(3)
    U, W = sample_interior(K, n, rng), sample_interior(K, n, rng)
    q = [np.einsum("ij,jk,ik->i", a, J, b) for a, b in ((U, U), (U, W), (W, W))]
    A = rng.standard_normal((n // 10, 4))
    B = rng.standard_normal((n // 10, 4))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    B /= np.linalg.norm(B, axis=1, keepdims=True)
    return {"polytope_hilbert": (G1, G2), "quadric_hilbert": tuple(q), "nearest_angles": (A, B)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    data = cases(args.n, np.random.default_rng(0))
    print(f"{'kernel':<18}{'numpy ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, inputs in data.items():
        t_py = min(timeit.repeat(lambda: getattr(py, name)(*inputs), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:<18}{t_py:>12.3f}{'n/a':>12}{'':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: getattr(cy, name)(*inputs), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<18}{t_py:>12.3f}{t_cy:>12.3f}{t_py / t_cy:>10.2f}")


if __name__ == "__main__":
    main()
