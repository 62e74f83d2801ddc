"""Per-group zero-forcing: uplink filter, downlink precoder and scalings.

For a group with composite channels ``Xi_u`` and ``Xi_d`` (both N x 2K)::

    W_u  = (Xi_u^H Xi_u)^-1 Xi_u^H          left pseudo-inverse
    W_d  = Xi_d^* (Xi_d^T Xi_d^*)^-1        right pseudo-inverse of Xi_d^T
    zeta = Tr[(Xi_d^T Xi_d^*)^-1]           precoding power penalty
    alpha = sqrt(P_R / (P_U ||W Xi_u||_F^2 + N0_R ||W||_F^2)),  W = W_d W_u

The relay-side product ``W`` (N x N) is never formed; Frobenius norms are
evaluated from the 2K x 2K factors.

All kernels accept stacked inputs with arbitrary leading dimensions.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConditioningError, ConfigError

# Gram condition numbers
QR_THRESHOLD = 1e6
MAX_CONDITION = 1e12


def hermitian(a):
    return np.conj(np.swapaxes(a, -1, -2))


def gram_condition(xi):
    """Condition number of ``xi^H xi`` (squared 2-norm condition of xi)."""
    s = np.linalg.svd(xi, compute_uv=False)
    with np.errstate(divide="ignore"):
        return (s[..., 0] / s[..., -1]) ** 2


def left_pinv(xi, cond=None):
    """Left pseudo-inverse and inverse-Gram trace of tall matrices.

    Parameters
    ----------
    xi : ndarray, shape (..., N, P)
        Full column rank stack, ``N >= P``.
    cond : ndarray, optional
        Precomputed Gram condition numbers (same leading shape). Matrices
        above `QR_THRESHOLD` go through a QR factorization of `xi`, the
        others through a Cholesky factor of the Gram matrix.

    Returns
    -------
    pinv : ndarray, shape (..., P, N)
        ``(xi^H xi)^-1 xi^H``.
    trace_inv : ndarray, shape (...)
        ``Tr[(xi^H xi)^-1]``, real.

    Notes
    -----
    Both routes produce a triangular ``R`` with ``xi^H xi = R^H R``; the
    trace is ``||R^-1||_F^2``. Matrices that are numerically singular give
    non-finite output; screening them is the caller's job.
    """
    xi = np.asarray(xi)
    if cond is None:
        cond = gram_condition(xi)
    lead = xi.shape[:-2]
    n, p = xi.shape[-2:]
    flat = xi.reshape((-1, n, p))
    cond = np.broadcast_to(cond, lead).reshape(-1)
    eye = np.eye(p, dtype=flat.dtype)

    pinv = np.empty((flat.shape[0], p, n), dtype=flat.dtype)
    trace_inv = np.empty(flat.shape[0])
    use_qr = ~(cond <= QR_THRESHOLD)

    idx = np.flatnonzero(~use_qr)
    if idx.size:
        x = flat[idx]
        gram = hermitian(x) @ x
        lower = np.linalg.cholesky(gram)
        # lower^-1 = R^-H with R = lower^H
        linv = np.linalg.solve(lower, np.broadcast_to(eye, lower.shape))
        pinv[idx] = hermitian(linv) @ (linv @ hermitian(x))
        trace_inv[idx] = np.sum(np.abs(linv) ** 2, axis=(-1, -2))

    idx = np.flatnonzero(use_qr)
    if idx.size:
        x = flat[idx]
        q, r = np.linalg.qr(x)
        with np.errstate(all="ignore"):
            rinv = np.linalg.solve(r, np.broadcast_to(eye, r.shape))
        pinv[idx] = rinv @ hermitian(q)
        trace_inv[idx] = np.sum(np.abs(rinv) ** 2, axis=(-1, -2))

    return pinv.reshape(lead + (p, n)), trace_inv.reshape(lead)


def zf_batch(xi_u, xi_d, cond_u=None, cond_d=None):
    """Zero-forcing matrices for stacked composite channels.

    Known Gram condition numbers may be passed in to skip recomputing them.

    Returns
    -------
    W_u : ndarray (..., 2K, N)
    W_d : ndarray (..., N, 2K)
    zeta : ndarray (...)
    cond : ndarray (...)
        The larger of the uplink and downlink Gram condition numbers.
    """
    if cond_u is None:
        cond_u = gram_condition(xi_u)
    xd_conj = np.conj(xi_d)
    if cond_d is None:
        cond_d = gram_condition(xd_conj)
    W_u, _ = left_pinv(xi_u, cond_u)
    pd, zeta = left_pinv(xd_conj, cond_d)
    return W_u, hermitian(pd), zeta, np.maximum(cond_u, cond_d)


def frobenius_terms(W_u, W_d, xi_u):
    """``||W xi_u||_F^2`` and ``||W||_F^2`` for ``W = W_d W_u``.

    Evaluated from 2K x 2K products; works on stacks.
    """
    signal = np.sum(np.abs(W_d @ (W_u @ xi_u)) ** 2, axis=(-1, -2))
    # ||W_d W_u||_F^2 = Tr[(W_d^H W_d)(W_u W_u^H)]
    a = hermitian(W_d) @ W_d
    b = W_u @ hermitian(W_u)
    noise = np.real(np.sum(a * np.swapaxes(b, -1, -2), axis=(-1, -2)))
    return signal, noise


def alpha_batch(W_u, W_d, xi_u, P_U, P_R, N0_R):
    signal, noise = frobenius_terms(W_u, W_d, xi_u)
    denom = P_U * signal + N0_R * noise
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(P_R / denom)


@dataclass(frozen=True, eq=False)
class GroupProcessor:
    """Zero-forcing state of one relay group.

    Attributes
    ----------
    W_u : ndarray (2K, N)
        Uplink filter.
    W_d : ndarray (N, 2K)
        Downlink precoder.
    zeta : float
        ``Tr[(Xi_d^T Xi_d^*)^-1]``.
    alpha : float or None
        Amplitude scaling, set by `with_alpha`.
    condition : float
        Worst Gram condition number of the two composite channels.
    """

    W_u: np.ndarray
    W_d: np.ndarray
    zeta: float
    alpha: float = None
    condition: float = 1.0

    def with_alpha(self, alpha):
        return GroupProcessor(self.W_u, self.W_d, self.zeta, float(alpha), self.condition)

    def composite(self):
        """The N x N relay gain matrix ``W_d W_u`` (materialized on request)."""
        return self.W_d @ self.W_u


def _check_shapes(xi_u, xi_d):
    xi_u = np.asarray(xi_u, dtype=complex)
    xi_d = np.asarray(xi_d, dtype=complex)
    if xi_u.ndim != 2 or xi_u.shape != xi_d.shape or xi_u.shape[1] % 2:
        raise ValueError(
            f"composite channels must both be N x 2K, got {xi_u.shape} and {xi_d.shape}"
        )
    n, p = xi_u.shape
    if n <= p:
        raise ConfigError(
            f"zero-forcing needs N > 2K to null all interference (N={n}, 2K={p})"
        )
    return xi_u, xi_d


def zf_filters(xi_u, xi_d):
    """Build the zero-forcing processor of one group (alpha unset).

    Raises
    ------
    ConfigError
        If N <= 2K.
    ConditioningError
        If either Gram matrix has condition number above `MAX_CONDITION`.
    """
    xi_u, xi_d = _check_shapes(xi_u, xi_d)
    W_u, W_d, zeta, cond = zf_batch(xi_u[None], xi_d[None])
    cond = float(cond[0])
    if not cond <= MAX_CONDITION:
        raise ConditioningError("composite channel Gram matrix is singular", cond)
    return GroupProcessor(W_u[0], W_d[0], float(zeta[0]), None, cond)


def power_scaling(proc, xi_u, P_U, P_R, N0_R):
    """Amplitude factor making the mean group transmit power equal `P_R`."""
    signal, noise = frobenius_terms(proc.W_u, proc.W_d, np.asarray(xi_u))
    denom = P_U * float(signal) + N0_R * float(noise)
    if not denom > 0.0:
        raise ArithmeticError("transmit power normalization has a zero denominator")
    return float(np.sqrt(P_R / denom))


def zeta_of(xi_d):
    """``Tr[(Xi_d^T Xi_d^*)^-1]`` via a Cholesky factor and triangular solve."""
    xi_d = np.asarray(xi_d, dtype=complex)
    gram = xi_d.T @ np.conj(xi_d)
    cond = float(gram_condition(np.conj(xi_d)))
    if not cond <= MAX_CONDITION:
        raise ConditioningError("downlink Gram matrix is singular", cond)
    lower = scipy.linalg.cholesky(gram, lower=True)
    linv = scipy.linalg.solve_triangular(lower, np.eye(gram.shape[0]), lower=True)
    return float(np.sum(np.abs(linv) ** 2))


def zeta_batch(xi_d):
    """Stacked `zeta_of` without conditioning screening (sampling use)."""
    _, zeta = left_pinv(np.conj(xi_d), np.zeros(np.shape(xi_d)[:-2]))
    return zeta
