"""Small dense linear-algebra helpers shared by the algebra, group and grading code."""

from __future__ import annotations

import numpy as np
import scipy.linalg

#: Maximum Frobenius distance from the identity at which the matrix log is trusted.
LOG_WINDOW = 0.5


class OutOfWindowError(ValueError):
    """A chart operation was requested outside its validity window."""


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential; accepts stacked matrices of shape (..., n, n)."""
    return scipy.linalg.expm(np.asarray(a, dtype=float))


def _sqrtm_db(a: np.ndarray, iters: int = 30) -> np.ndarray:
    # Denman-Beavers iteration, batched; converges quadratically near I.
    y = a.copy()
    z = np.broadcast_to(np.eye(a.shape[-1]), a.shape).copy()
    for _ in range(iters):
        yi = np.linalg.inv(y)
        zi = np.linalg.inv(z)
        y, z, prev = 0.5 * (y + zi), 0.5 * (z + yi), y
        if np.max(np.abs(y - prev)) < 1e-15:
            break
    return y


def logm_near_identity(a: np.ndarray, window: float = LOG_WINDOW) -> np.ndarray:
    """Principal logarithm by inverse scaling and squaring.

    ``a`` may be a stack of matrices. Every matrix must satisfy
    ``||a - I||_F < window``; otherwise :class:`OutOfWindowError` is raised.
    Three square roots bring ``a`` within ~window/8 of the identity, after
    which the Mercator series converges to machine precision in 20 terms.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    eye = np.eye(n)
    off = np.linalg.norm(a - eye, axis=(-2, -1))
    if np.any(off >= window):
        raise OutOfWindowError(
            f"matrix log requested at distance {float(np.max(off)):.3g} >= {window} from I"
        )
    k = 3
    r = a
    for _ in range(k):
        r = _sqrtm_db(r)
    x = r - eye
    term = x.copy()
    out = x.copy()
    for m in range(2, 21):
        term = term @ x
        out = out + ((-1) ** (m + 1) / m) * term
    return out * (2.0**k)


def orth(m: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (columns) for the column span of ``m``.

    Rank is decided by singular values above ``rel_tol`` times the largest one.
    """
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return np.zeros((m.shape[0], 0))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[0], 0))
    rank = int(np.sum(s > rel_tol * s[0]))
    return u[:, :rank]


def smallest_right_singular(m: np.ndarray, k: int) -> np.ndarray:
    """The ``k`` right singular vectors of ``m`` with smallest singular values (columns)."""
    _, _, vh = np.linalg.svd(m)
    return vh[m.shape[1] - k :].conj().T


def span_residual(v: np.ndarray, basis: np.ndarray) -> float:
    """Norm of the part of ``v`` orthogonal to the span of orthonormal ``basis`` columns."""
    v = np.asarray(v, dtype=float)
    if basis.shape[1] == 0:
        return float(np.linalg.norm(v))
    return float(np.linalg.norm(v - basis @ (basis.T @ v)))


def op_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2))
