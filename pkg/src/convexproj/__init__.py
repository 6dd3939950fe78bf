"""Numerical convex projective geometry and matrix-group dynamics."""

import os as _os

# BLAS reads these at load time, so map the thread knob before numpy imports
if _os.environ.get("CONVEXPROJ_THREADS"):
    for _k in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_k, _os.environ["CONVEXPROJ_THREADS"])

from .kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND"]
