"""Batched kernels, compiled when the extension is built, numpy otherwise.

Only the polytope distance kernel dispatches to the compiled module; the
numpy versions of the other two are faster (BLAS matmul, vectorized ufuncs),
see benchmarks/bench_kernels.py.  Set ``CONVEXPROJ_PURE=1`` to force numpy.
"""

import os

from ._kernels_py import nearest_angles, polytope_hilbert, quadric_hilbert  # noqa: F401

BACKEND = "python"

if os.environ.get("CONVEXPROJ_PURE", "") not in ("1", "true"):
    try:
        from ._kernels import polytope_hilbert  # noqa: F401,F811
        BACKEND = "cython"
    except ImportError:
        pass
