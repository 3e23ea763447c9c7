"""Log-domain occupancy polynomials for factors whose potential depends on |x| only.

A factor with slot weights ``w_j(x_j)`` (given as logs) has generating
polynomial ``P(s) = sum over patterns with |x| = s of prod_j w_j(x_j)``.
All arrays carry a leading batch axis over factors.
"""
import numpy as np
from scipy.special import logsumexp

NEG_INF = -np.inf


def extend(poly: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Multiply ``poly`` (n, s+1) by one slot ``vec`` (n, 2)."""
    n, width = poly.shape
    out = np.full((n, width + 1), NEG_INF)
    out[:, :-1] = poly + vec[:, :1]
    out[:, 1:] = np.logaddexp(out[:, 1:], poly + vec[:, 1:])
    return out


def occupancy(vecs: np.ndarray) -> np.ndarray:
    """Polynomial over all slots: (n, m, 2) -> (n, m+1)."""
    poly = np.zeros((vecs.shape[0], 1))
    for j in range(vecs.shape[1]):
        poly = extend(poly, vecs[:, j])
    return poly


def leave_one_out(vecs: np.ndarray, log_psi: np.ndarray) -> np.ndarray:
    """Factor-to-slot messages ``log sum_s P_{-j}(s) psi(s + x_j)``.

    ``vecs`` is (n, m, 2) and ``log_psi`` has length m + 1.  Prefix and
    suffix polynomials are combined directly against ``psi``.
    """
    n, m, _ = vecs.shape
    prefix = [np.zeros((n, 1))]
    for j in range(m):
        prefix.append(extend(prefix[-1], vecs[:, j]))
    suffix = [np.zeros((n, 1))]
    for j in range(m - 1, -1, -1):
        suffix.append(extend(suffix[-1], vecs[:, j]))
    suffix = suffix[::-1]  # suffix[j] covers slots j..m-1

    out = np.empty((n, m, 2))
    for j in range(m):
        pre, suf = prefix[j], suffix[j + 1]
        idx = np.arange(pre.shape[1])[:, None] + np.arange(suf.shape[1])[None, :]
        pair = pre[:, :, None] + suf[:, None, :]
        for x in (0, 1):
            out[:, j, x] = logsumexp(pair + log_psi[idx + x], axis=(1, 2))
    return out
