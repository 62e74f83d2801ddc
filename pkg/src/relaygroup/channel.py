"""Rayleigh small-scale fading on top of per-group large-scale gains.

Group ``i`` sees ``H_i = H~_i diag(sqrt(beta_A[i]))`` towards user side A and
``G_i = G~_i diag(sqrt(beta_B[i]))`` towards side B, where ``H~_i`` and
``G~_i`` are N x K with iid unit-variance ZMCSCG entries. Group indices are
0-based throughout.
"""

from dataclasses import dataclass

import numpy as np

from . import rng as _rng

NORMALIZATION_RTOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FadingProfile:
    """Large-scale power gains of every (group, user) link.

    Attributes
    ----------
    beta_A, beta_B : ndarray, shape (L, K)
        Linear power gains towards user sides A and B. Each group row sums
        to K (the normalization ``Tr D_A,i = Tr D_B,i = K``).
    """

    beta_A: np.ndarray
    beta_B: np.ndarray

    def __post_init__(self):
        beta_A = _frozen(self.beta_A)
        beta_B = _frozen(self.beta_B)
        if beta_A.ndim != 2 or beta_A.shape != beta_B.shape:
            raise ValueError(
                f"beta_A and beta_B must be matching (L, K) arrays, got "
                f"{beta_A.shape} and {beta_B.shape}"
            )
        if not (np.all(beta_A > 0) and np.all(beta_B > 0)):
            raise ValueError("large-scale gains must be strictly positive")
        K = beta_A.shape[1]
        for name, beta in (("beta_A", beta_A), ("beta_B", beta_B)):
            sums = beta.sum(axis=1)
            if not np.allclose(sums, K, rtol=NORMALIZATION_RTOL, atol=0.0):
                raise ValueError(f"every row of {name} must sum to K={K}, got {sums}")
        object.__setattr__(self, "beta_A", beta_A)
        object.__setattr__(self, "beta_B", beta_B)

    @property
    def L(self):
        return self.beta_A.shape[0]

    @property
    def K(self):
        return self.beta_A.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FadingProfile):
            return NotImplemented
        return np.array_equal(self.beta_A, other.beta_A) and np.array_equal(
            self.beta_B, other.beta_B
        )


def uniform_profile(L, K):
    """Profile without any power imbalance (all gains equal to one)."""
    if L < 1 or K < 1:
        raise ValueError(f"L and K must be positive, got L={L}, K={K}")
    ones = np.ones((L, K))
    return FadingProfile(ones, ones)


def random_profile(rng, L, K, spread):
    """Draw an imbalanced, normalized profile.

    Raw gains are log-uniform on ``[exp(-spread), exp(spread)]`` and each
    group row is then rescaled to sum to K.

    Parameters
    ----------
    rng : numpy.random.Generator
    L, K : int
    spread : float
        Half-width of the log-domain interval. Zero gives the uniform
        profile.
    """
    if spread < 0:
        raise ValueError(f"spread must be nonnegative, got {spread}")
    if spread == 0:
        return uniform_profile(L, K)
    if L < 1 or K < 1:
        raise ValueError(f"L and K must be positive, got L={L}, K={K}")
    raw = np.exp(rng.uniform(-spread, spread, size=(2, L, K)))
    raw *= K / raw.sum(axis=2, keepdims=True)
    return FadingProfile(raw[0], raw[1])


def profile_for(config, spread=0.0):
    """The profile used by a run: drawn from the run seed when imbalanced."""
    if spread == 0:
        return uniform_profile(config.L, config.K)
    return random_profile(_rng.stream(config.seed, _rng.PROFILE), config.L, config.K, spread)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Channel matrices of every group for one trial.

    Attributes
    ----------
    H, G : ndarray, shape (L, N, K), complex
        ``H[i]`` connects group i with side A, ``G[i]`` with side B.
    """

    H: np.ndarray
    G: np.ndarray

    @property
    def L(self):
        return self.H.shape[0]


def _check_dims(config, profile):
    if profile.beta_A.shape != (config.L, config.K):
        raise ValueError(
            f"profile has shape {profile.beta_A.shape}, config needs "
            f"(L, K) = ({config.L}, {config.K})"
        )


def _scale(raw, profile):
    # raw: (..., L, 2, N, K)
    H = raw[..., 0, :, :] * np.sqrt(profile.beta_A)[:, None, :]
    G = raw[..., 1, :, :] * np.sqrt(profile.beta_B)[:, None, :]
    return H, G


def draw_channels(config, profile, trial=0, attempt=0, rng=None):
    """Draw the channels of one trial.

    The draw is a pure function of ``(config.seed, trial, attempt)``
    unless an explicit `rng` is given.
    """
    _check_dims(config, profile)
    if rng is None:
        rng = _rng.stream(config.seed, _rng.CHANNEL, trial, attempt)
    raw = _rng.complex_normal(rng, (config.L, 2, config.N, config.K))
    H, G = _scale(raw, profile)
    return ChannelRealization(H, G)


def draw_channel_batch(config, profile, trials, attempts=None):
    """Stacked channels for several trials.

    Returns ``(H, G)`` with shape ``(T, L, N, K)``; row t is bitwise equal
    to ``draw_channels(config, profile, trials[t], attempts[t])``.
    """
    _check_dims(config, profile)
    trials = np.asarray(trials, dtype=np.int64)
    if attempts is None:
        attempts = np.zeros_like(trials)
    shape = (config.L, 2, config.N, config.K)
    raw = np.empty((len(trials),) + shape, dtype=complex)
    for row, (t, a) in enumerate(zip(trials.tolist(), np.asarray(attempts).tolist())):
        raw[row] = _rng.complex_normal(_rng.stream(config.seed, _rng.CHANNEL, t, a), shape)
    return _scale(raw, profile)


def compose_uplink(real, i):
    """Composite uplink channel ``[H_i G_i]`` of group `i` (N x 2K)."""
    if not 0 <= i < real.L:
        raise IndexError(f"group index {i} out of range for L={real.L}")
    return np.concatenate([real.H[i], real.G[i]], axis=1)


def compose_downlink(real, i):
    """Composite downlink channel ``[G_i H_i]`` of group `i` (N x 2K).

    The swapped block order routes what came from side A towards side B
    and vice versa.
    """
    if not 0 <= i < real.L:
        raise IndexError(f"group index {i} out of range for L={real.L}")
    return np.concatenate([real.G[i], real.H[i]], axis=1)
