"""Small dense symmetric eigenvalue routines.

Every construction in this package lives in dimension at most 4, so the
eigenvalue code favours determinism over speed: a closed form for d <= 2
and a cyclic Jacobi sweep for d <= 8.  Larger matrices fall back to
``numpy.linalg.eigvalsh``.
"""

from __future__ import annotations

import math

import numpy as np

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


def _eig_2x2(a: float, b: float, c: float) -> np.ndarray:
    # eigenvalues of [[a, b], [b, c]]; hypot keeps the discriminant stable
    mean = 0.5 * (a + c)
    rad = math.hypot(0.5 * (a - c), b)
    return np.array([mean - rad, mean + rad])


def jacobi_eigenvalues(A: np.ndarray, tol: float = JACOBI_TOL) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol`` times the Frobenius norm of ``A`` (or is exactly zero).
    Returns the eigenvalues in ascending order.
    """
    M = np.array(A, dtype=float, copy=True)
    d = M.shape[0]
    scale = np.linalg.norm(M)
    if scale == 0.0:
        return np.zeros(d)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(max(np.sum(M * M) - np.sum(np.diag(M) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = M[p, q]
                if apq == 0.0:
                    continue
                diff = M[q, q] - M[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    # theta = diff/(2 apq) is huge (or would overflow): t ~ 1/(2 theta)
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # apply the rotation J^T M J on rows/cols p and q
                rp = M[p, :].copy()
                rq = M[q, :].copy()
                M[p, :] = c * rp - s * rq
                M[q, :] = s * rp + c * rq
                cp = M[:, p].copy()
                cq = M[:, q].copy()
                M[:, p] = c * cp - s * cq
                M[:, q] = s * cp + c * cq
    return np.sort(np.diag(M))


def symmetric_eigenvalues(A: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a small symmetric matrix."""
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if d == 1:
        return np.array([A[0, 0]])
    if d == 2:
        return _eig_2x2(A[0, 0], 0.5 * (A[0, 1] + A[1, 0]), A[1, 1])
    if d <= 8:
        return jacobi_eigenvalues(0.5 * (A + A.T))
    return np.linalg.eigvalsh(A)


def spectral_norm_symmetric(A: np.ndarray) -> float:
    ev = symmetric_eigenvalues(A)
    return float(max(abs(ev[0]), abs(ev[-1])))
