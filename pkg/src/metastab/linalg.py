"""Small dense linear-algebra helpers used across the analysis."""

import numpy as np

from .errors import NotSPD


def jacobi_eigh(a, off_tol=1e-12, max_sweeps=100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (w, v) with eigenvalues ascending and orthonormal columns of v
    matching.  Sweeps stop when the off-diagonal Frobenius mass drops below
    off_tol * ||a||_F.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if n == 1 or norm == 0.0:
        return np.diag(a).copy(), v
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= off_tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 0.25 * off_tol * norm / (n * n):
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def orthogonal_completion(eta):
    """Deterministic orthogonal Q with first column eta (|eta| = 1).

    Built from a single Householder reflector, so the remaining columns
    span eta-perp.
    """
    eta = np.asarray(eta, dtype=float).reshape(-1)
    n = eta.shape[0]
    eta = eta / np.linalg.norm(eta)
    sign = 1.0 if eta[0] >= 0.0 else -1.0
    v = eta + sign * np.eye(n)[:, 0]
    h = np.eye(n) - 2.0 * np.outer(v, v) / np.dot(v, v)
    # h e1 = -sign * eta, so flip the first column's sign when needed
    q = h.copy()
    q[:, 0] = -sign * h[:, 0]
    return q


def require_spd(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSPD("%s is not square" % name)
    if not np.allclose(a, a.T, atol=1e-12 * (1.0 + np.abs(a).max())):
        raise NotSPD("%s is not symmetric" % name)
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotSPD("%s is not positive definite" % name)
    return 0.5 * (a + a.T)


def spd_sqrt(a):
    """Symmetric square root of an SPD matrix."""
    w, v = np.linalg.eigh(np.asarray(a, dtype=float))
    if np.any(w <= 0.0):
        raise NotSPD("matrix has non-positive eigenvalues")
    return (v * np.sqrt(w)) @ v.T


def smoothstep5(t):
    """Quintic smoothstep: 0 -> 1 on [0, 1] with zero 1st/2nd derivatives
    at both ends.  Accepts arrays; clamps outside [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def smoothstep5_d(t):
    """Derivative of smoothstep5 w.r.t. t (zero outside [0, 1])."""
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    d = 30.0 * t * t * (t * (t - 2.0) + 1.0)
    return np.where(inside, d, 0.0)


def smoothstep5_int(t):
    """Integral of smoothstep5 from 0 to t, for t in [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 6 - 3.0 * t ** 5 + 2.5 * t ** 4
