"""Brute-force reference model.

Written straight from the matrix definitions with explicit inverses and a
materialized N x N relay gain; shares no code with the package kernels.
"""

import numpy as np


def zf_explicit(xi_u, xi_d):
    W_u = np.linalg.inv(xi_u.conj().T @ xi_u) @ xi_u.conj().T
    gram_d = xi_d.T @ xi_d.conj()
    W_d = xi_d.conj() @ np.linalg.inv(gram_d)
    zeta = np.trace(np.linalg.inv(gram_d)).real
    return W_u, W_d, zeta


def alpha_explicit(W, xi_u, P_U, P_R, N0_R):
    return np.sqrt(
        P_R / (P_U * np.linalg.norm(W @ xi_u, "fro") ** 2 + N0_R * np.linalg.norm(W, "fro") ** 2)
    )


def system(H, G, P_U, P_R, N0_R):
    """Per-group composite gains and alphas for channels of shape (L, N, K)."""
    out = []
    for Hi, Gi in zip(H, G):
        xi_u = np.hstack([Hi, Gi])
        xi_d = np.hstack([Gi, Hi])
        W_u, W_d, zeta = zf_explicit(xi_u, xi_d)
        W = W_d @ W_u
        out.append((xi_u, xi_d, W, alpha_explicit(W, xi_u, P_U, P_R, N0_R), zeta))
    return out


def received(H, G, P_U, P_R, N0_R, x, n_R, n_U):
    """Total received vector ``z`` (2K,) for given symbols and noise.

    ``n_R`` has shape (L, N); rows 0..K-1 of z belong to side B users.
    """
    z = n_U.astype(complex).copy()
    for (xi_u, xi_d, W, alpha, _), n in zip(system(H, G, P_U, P_R, N0_R), n_R):
        t = alpha * (np.sqrt(P_U) * W @ xi_u @ x + W @ n)
        z += xi_d.T @ t
    return z


def precoded_noise_power(H, G, P_U, P_R, N0_R, row):
    total = 0.0
    for xi_u, xi_d, W, alpha, _ in system(H, G, P_U, P_R, N0_R):
        total += alpha**2 * N0_R * np.linalg.norm((xi_d.T @ W)[row]) ** 2
    return total
