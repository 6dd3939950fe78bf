"""Pure numpy versions of the batched kernels."""

import numpy as np


def polytope_hilbert(G1, G2):
    """Hilbert distances from facet values of lifts of x (G1) and y (G2).

    Along x + t(y - x) the chord ends at t_a < 0 and t_b > 1 and the
    distance is (log1p(1/-t_a) + log1p(1/(t_b - 1))) / 2.
    """
    G1 = np.atleast_2d(np.asarray(G1, dtype=float))
    G2 = np.atleast_2d(np.asarray(G2, dtype=float))
    D = G2 - G1
    with np.errstate(divide="ignore", invalid="ignore"):
        ra = np.where(D > 0, D / G1, 0.0)
        rb = np.where(D < 0, -D / G2, 0.0)
    ra = np.where(np.isnan(ra), np.inf, ra).max(axis=1)
    rb = np.where(np.isnan(rb), np.inf, rb).max(axis=1)
    return 0.5 * (np.log1p(ra) + np.log1p(rb))


def quadric_hilbert(q11, q12, q22):
    """Hilbert distances inside {q < 0} from Gram entries of the lifts."""
    q11 = np.asarray(q11, dtype=float)
    q12 = np.asarray(q12, dtype=float)
    q22 = np.asarray(q22, dtype=float)
    prod = q11 * q22
    disc = np.maximum(q12 * q12 - prod, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.arcsinh(np.sqrt(disc) / np.sqrt(prod))
    return np.where(prod <= 0.0, np.inf, out)


def nearest_angles(A, B):
    """For each unit row of A, the angle to the closest row of B up to sign."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    out = np.empty(A.shape[0])
    step = max(1, 2_000_000 // max(1, B.shape[0]))
    for lo in range(0, A.shape[0], step):
        a = A[lo:lo + step]
        dots = a @ B.T
        j = np.argmax(np.abs(dots), axis=1)
        c = dots[np.arange(a.shape[0]), j]
        res = a - c[:, None] * B[j]
        out[lo:lo + step] = np.arctan2(np.linalg.norm(res, axis=1), np.abs(c))
    return out
