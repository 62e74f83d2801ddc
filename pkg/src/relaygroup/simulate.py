"""Two-phase signal chain and Monte Carlo sumrate estimation.

The received vector at the users is ``z = C x + (relay noise) + n_U`` with
the coupling matrix::

    C = sqrt(P_U) * sum_i alpha_i Xi_d,i^T W_d,i W_u,i Xi_u,i      (2K x 2K)

Row ``r < K`` of ``z`` is user ``k = r`` of side B, row ``K + k`` is user
``k`` of side A. Because ``Xi_d`` lists G before H, the wanted symbol of
every row sits on the diagonal of ``C``; everything off the diagonal is
self- or interuser interference.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .channel import compose_downlink, compose_uplink, draw_channel_batch
from .errors import ConditioningError, SimulationFailed
from .zfproc import (
    MAX_CONDITION,
    alpha_batch,
    gram_condition,
    power_scaling,
    zf_batch,
    zf_filters,
)

MAX_REJECTION_RATE = 1e-3
MAX_ATTEMPTS = 16
CHUNK = 2048


@dataclass(frozen=True)
class ImpairmentDecomposition:
    """Received-signal terms of one user.

    Attributes
    ----------
    wanted : complex
        Coefficient of the partner's symbol.
    self_interference : complex
        Coefficient of the user's own symbol.
    interuser : ndarray, shape (2(K-1),)
        Coefficients of the other pairs' symbols, side A users first.
    precoded_noise_power : float
        Variance of the relay noise forwarded to this user.
    user_noise_power : float
    """

    wanted: complex
    self_interference: complex
    interuser: np.ndarray
    precoded_noise_power: float
    user_noise_power: float

    @property
    def sinr(self):
        interference = abs(self.self_interference) ** 2 + float(np.sum(np.abs(self.interuser) ** 2))
        return abs(self.wanted) ** 2 / (
            interference + self.precoded_noise_power + self.user_noise_power
        )


@dataclass(frozen=True, eq=False)
class SumrateEstimate:
    """Monte Carlo ergodic sumrate.

    Attributes
    ----------
    mean : float
        Sumrate in bps/Hz; the sum of `per_user_means`.
    std_error : float
        Standard error of `mean` from the per-trial sumrate spread.
    trials : int
    per_user_means : ndarray (K,)
        Mean rate of pair k, averaged over its two directions.
    direction_means, direction_std_errors : ndarray (2, K)
        Mean rate and its standard error for users of side A (row 0) and
        side B (row 1).
    rejected : int
        Channel draws discarded for ill-conditioning.
    general_bound, fair_bound : float
        Closed-form lower bounds for the same configuration.
    """

    mean: float
    std_error: float
    trials: int
    per_user_means: np.ndarray
    direction_means: np.ndarray = field(repr=False)
    direction_std_errors: np.ndarray = field(repr=False)
    rejected: int = 0
    general_bound: float = float("nan")
    fair_bound: float = float("nan")


def _coupling(H, G, W_u, W_d, alpha, P_U, N0_R):
    """Coupling matrix and forwarded relay-noise power per row.

    Inputs are stacked over ``(..., L)``; the group axis is summed.
    """
    xi_u = np.concatenate([H, G], axis=-1)
    xi_d = np.concatenate([G, H], axis=-1)
    # Xi_d^T W_d W_u : (..., L, 2K, N)
    front = (np.swapaxes(xi_d, -1, -2) @ W_d) @ W_u
    a = alpha[..., None, None]
    C = math.sqrt(P_U) * np.sum(a * (front @ xi_u), axis=-3)
    noise = N0_R * np.sum(alpha[..., None] ** 2 * np.sum(np.abs(front) ** 2, axis=-1), axis=-2)
    return C, noise


def _sinr_from_coupling(C, noise, N0_U):
    power = np.abs(C) ** 2
    wanted = np.diagonal(power, axis1=-2, axis2=-1)
    interference = np.sum(power, axis=-1) - wanted
    sinr = wanted / (interference + noise + N0_U)
    K = sinr.shape[-1] // 2
    # rows K.. are side A, rows ..K side B
    return np.stack([sinr[..., K:], sinr[..., :K]], axis=-2)


def _process(config, H, G, cond=None, relay_noise=True):
    """ZF processing for stacked channels (..., L, N, K).

    Returns the per-trial SINR array (..., 2, K).
    """
    xi_u = np.concatenate([H, G], axis=-1)
    xi_d = np.concatenate([G, H], axis=-1)
    W_u, W_d, _, _ = zf_batch(xi_u, xi_d, cond, cond)
    N0_R = config.N0_R if relay_noise else 0.0
    alpha = alpha_batch(W_u, W_d, xi_u, config.P_U, config.P_R, N0_R)
    C, noise = _coupling(H, G, W_u, W_d, alpha, config.P_U, N0_R)
    return _sinr_from_coupling(C, noise, config.N0_U)


def decompose(real, procs, config, side="A"):
    """Split the received signal of every user of one side into its terms.

    Parameters
    ----------
    real : ChannelRealization
    procs : list of GroupProcessor
        One per group, with alpha set.
    config : SystemConfig
    side : {"A", "B"}

    Returns
    -------
    list of ImpairmentDecomposition
        One entry per user pair index k.
    """
    if len(procs) != real.L:
        raise ValueError(f"need one processor per group, got {len(procs)} for L={real.L}")
    K = real.H.shape[-1]
    if any(p.W_u.shape != (2 * K, real.H.shape[1]) for p in procs):
        raise ValueError("processor dimensions do not match the channel")
    if any(p.alpha is None for p in procs):
        raise ValueError("processors must carry their power scaling alpha")
    W_u = np.stack([p.W_u for p in procs])
    W_d = np.stack([p.W_d for p in procs])
    alpha = np.array([p.alpha for p in procs])
    C, noise = _coupling(real.H, real.G, W_u, W_d, alpha, config.P_U, config.N0_R)
    if side == "A":
        rows, own = range(K, 2 * K), range(K)
    elif side == "B":
        rows, own = range(K), range(K, 2 * K)
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    out = []
    for k, (r, s) in enumerate(zip(rows, own)):
        others = [c for c in range(2 * K) if c not in (r, s)]
        # keep side A symbols first in the interuser vector
        others = [c for c in others if c < K] + [c for c in others if c >= K]
        out.append(
            ImpairmentDecomposition(
                wanted=complex(C[r, r]),
                self_interference=complex(C[r, s]),
                interuser=C[r, others].copy(),
                precoded_noise_power=float(noise[r]),
                user_noise_power=config.N0_U,
            )
        )
    return out


def build_processors(config, real):
    """Zero-forcing processors (alpha included) for every group of `real`.

    Raises `ConditioningError` on an ill-conditioned group.
    """
    procs = []
    for i in range(real.L):
        xi_u = compose_uplink(real, i)
        proc = zf_filters(xi_u, compose_downlink(real, i))
        alpha = power_scaling(proc, xi_u, config.P_U, config.P_R, config.N0_R)
        procs.append(proc.with_alpha(alpha))
    return procs


def _draw_valid(config, profile, trials):
    """Channels for the given trial indices with ill-conditioned draws replaced.

    Returns ``(H, G, cond, rejected)`` where ``cond`` holds the Gram
    condition number of every (trial, group).
    """
    trials = np.asarray(trials, dtype=np.int64)
    attempts = np.zeros_like(trials)
    H, G = draw_channel_batch(config, profile, trials, attempts)
    cond = np.empty(H.shape[:2])
    rejected = 0
    pending = np.arange(len(trials))
    while True:
        # [G H] is a column permutation of [H G]: same singular values,
        # so one condition number serves uplink and downlink.
        cond[pending] = gram_condition(np.concatenate([H[pending], G[pending]], axis=-1))
        bad = pending[~(cond[pending] <= MAX_CONDITION).all(axis=-1)]
        if bad.size == 0:
            return H, G, cond, rejected
        rejected += bad.size
        attempts[bad] += 1
        if attempts.max() >= MAX_ATTEMPTS:
            raise SimulationFailed(
                f"trial {int(trials[bad[0]])} stayed ill-conditioned after {MAX_ATTEMPTS} draws"
            )
        H[bad], G[bad] = draw_channel_batch(config, profile, trials[bad], attempts[bad])
        pending = bad


def simulate_trial(config, profile, trial, relay_noise=True):
    """Exact finite-SNR SINR of every user for one channel realization.

    Ill-conditioned draws are replaced by the next attempt substream of
    the same trial.

    Returns
    -------
    ndarray, shape (2, K)
        Linear SINR of side A users (row 0) and side B users (row 1).
    """
    config.require_zf()
    H, G, cond, _ = _draw_valid(config, profile, [trial])
    return _process(config, H, G, cond, relay_noise)[0]


def _chunk_rates(config, profile, start, stop, relay_noise):
    H, G, cond, rejected = _draw_valid(config, profile, np.arange(start, stop))
    sinr = _process(config, H, G, cond, relay_noise)
    return np.log2(1.0 + sinr), rejected


def ergodic_sumrate(config, profile, relay_noise=True, workers=1, trials=None):
    """Monte Carlo estimate of the ergodic sumrate.

    Each trial contributes ``R_t = 1/2 sum_k (R_A,k + R_B,k)`` with
    ``R = log2(1 + SINR)`` per realization; the 1/2 is the half-duplex
    loss. The result depends only on the seed and the trial count, not on
    `workers`.

    Parameters
    ----------
    config : SystemConfig
    profile : FadingProfile
    relay_noise : bool
        ``False`` drops the relay thermal noise (``N0_R = 0``).
    workers : int
        Threads used to evaluate trial chunks.
    trials : int, optional
        Overrides ``config.trials``.
    """
    config.require_zf()
    T = config.trials if trials is None else int(trials)
    if T < 1:
        raise ValueError("trials must be positive")
    bounds_ = list(range(0, T, CHUNK)) + [T]
    spans = list(zip(bounds_[:-1], bounds_[1:]))

    def run(span):
        return _chunk_rates(config, profile, span[0], span[1], relay_noise)

    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(run, spans))
        else:
            parts = [run(s) for s in spans]
    except ConditioningError as exc:
        raise SimulationFailed(str(exc)) from exc

    rates = np.concatenate([p[0] for p in parts])  # (T, 2, K)
    rejected = sum(p[1] for p in parts)
    if rejected > MAX_REJECTION_RATE * T:
        raise SimulationFailed(
            f"{rejected} of {T} channel draws rejected for ill-conditioning "
            f"(limit {MAX_REJECTION_RATE:.1%})"
        )
    if not np.all(np.isfinite(rates)):
        raise SimulationFailed("non-finite rates in Monte Carlo trials")

    K = config.K
    direction_means = np.array(
        [[math.fsum(rates[:, s, k]) / T for k in range(K)] for s in range(2)]
    )
    if T > 1:
        direction_se = rates.std(axis=0, ddof=1) / math.sqrt(T)
        per_trial = 0.5 * rates.sum(axis=(1, 2))
        std_error = float(per_trial.std(ddof=1) / math.sqrt(T))
    else:
        direction_se = np.full((2, K), np.nan)
        std_error = float("nan")
    per_user = 0.5 * (direction_means[0] + direction_means[1])
    return SumrateEstimate(
        mean=math.fsum(per_user),
        std_error=std_error,
        trials=T,
        per_user_means=per_user,
        direction_means=direction_means,
        direction_std_errors=direction_se,
        rejected=int(rejected),
        general_bound=bounds.general_lower_bound(config, profile),
        fair_bound=bounds.fair_lower_bound(config, profile),
    )

