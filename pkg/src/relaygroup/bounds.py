"""Closed-form analytics for grouped zero-forcing relaying.

Notation: ``gamma_i = sum_k (1/beta_A[i,k] + 1/beta_B[i,k])`` is the power
imbalance factor of group i, ``delta = (sum_i gamma_i^-1/2)^2`` the array
gain degradation factor and ``epsilon = 2K delta / L^2`` its normalized
form (one when there is no imbalance).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .errors import DomainError, InvalidSample
from .zfproc import zeta_batch


def gamma_factor(profile, i):
    """Power imbalance factor of group `i` (0-based)."""
    return float(np.sum(1.0 / profile.beta_A[i]) + np.sum(1.0 / profile.beta_B[i]))


def gamma_factors(profile):
    return np.sum(1.0 / profile.beta_A, axis=1) + np.sum(1.0 / profile.beta_B, axis=1)


def delta_factor(gammas):
    """Array gain degradation factor from the per-group gammas."""
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    if np.any(gammas <= 0):
        raise ValueError("gamma factors must be positive")
    return float(np.sum(1.0 / np.sqrt(gammas)) ** 2)


def epsilon_of(profile):
    """Normalized imbalance ``2K delta / L^2`` of a profile, in (0, 1]."""
    return 2 * profile.K * delta_factor(gamma_factors(profile)) / profile.L**2


def expected_zeta(config, profile, i):
    """Mean of the ZF precoding penalty of group `i`: ``gamma_i / (N - 2K)``."""
    margin = config.N - 2 * config.K
    if margin <= 0:
        raise DomainError(
            f"E[zeta] exists only for N > 2K (N={config.N}, 2K={2 * config.K})"
        )
    return gamma_factor(profile, i) / margin


def _clamped_rate(K, argument):
    if argument < 0:
        raise DomainError(f"negative log argument {argument!r}")
    if argument <= 1.0:
        return 0.0
    return K * math.log2(argument)


def _check_group_size(N, K):
    if N < 2 * K:
        raise DomainError(f"the bound requires N >= 2K (N={N}, 2K={2 * K})")


def general_lower_bound(config, profile):
    """``max{0, K log2[(P_R/N0_U)(N - 2K) delta]}`` in bps/Hz.

    ``N == 2K`` gives the vacuous bound 0; ``N < 2K`` raises `DomainError`.
    """
    _check_group_size(config.N, config.K)
    delta = delta_factor(gamma_factors(profile))
    return _clamped_rate(config.K, config.snr_d * (config.N - 2 * config.K) * delta)


def fair_bound_value(snr_total, M, N, K, epsilon):
    """Fair-comparison bound for explicit arguments.

    ``snr_total`` is ``P_T / N0_U``. `N` need not divide `M`, which allows
    the relaxed group sizes used for efficiency curves.
    """
    _check_group_size(N, K)
    if not 0 < epsilon <= 1 + 1e-12:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    return _clamped_rate(K, snr_total * (M / N) * ((N - 2 * K) / (2 * K)) * epsilon)


def fair_lower_bound(config, profile):
    """``max{0, K log2[(P_T/N0_U)(M/N)((N-2K)/2K) epsilon]}`` in bps/Hz."""
    return fair_bound_value(
        config.P_T / config.N0_U, config.M, config.N, config.K, epsilon_of(profile)
    )


def asymptotic_gain(config, epsilon):
    """Array gain for ``N >> 2K``: ``M epsilon / (2K)``."""
    return config.M * epsilon / (2 * config.K)


def exact_gain(M, N, K, epsilon):
    """Array gain ``(M/N)((N - 2K)/2K) epsilon`` of the fair bound."""
    return (M / N) * ((N - 2 * K) / (2 * K)) * epsilon


def cooperation_cost(N, c_BW):
    """Intra-group backhaul bandwidth ``c_BW N`` in Hz."""
    return c_BW * N


def cooperation_efficiency(R, N, c_BW):
    """Sumrate per unit of cooperation bandwidth, ``R / (c_BW N)``."""
    if R < 0 or N < 1 or not c_BW > 0:
        raise ValueError(f"need R >= 0, N >= 1, c_BW > 0 (got {R}, {N}, {c_BW})")
    return R / cooperation_cost(N, c_BW)


def relative_efficiency(etas):
    """Efficiencies normalized by their maximum over a sweep."""
    etas = np.asarray(etas, dtype=float)
    top = np.max(etas)
    if not top > 0:
        raise DomainError("all efficiencies are zero; relative efficiency undefined")
    return etas / top


@dataclass(frozen=True, eq=False)
class BoundReport:
    gamma: np.ndarray
    delta: float
    epsilon: float
    expected_zeta: np.ndarray
    general_bound: float
    fair_bound: float
    asymptotic_gain: float
    cost: float
    efficiency: float


def bound_report(config, profile, c_BW=1.0):
    """Every closed-form quantity for one configuration."""
    gammas = gamma_factors(profile)
    delta = delta_factor(gammas)
    eps = 2 * config.K * delta / config.L**2
    fair = fair_lower_bound(config, profile)
    return BoundReport(
        gamma=gammas,
        delta=delta,
        epsilon=eps,
        expected_zeta=np.array([expected_zeta(config, profile, i) for i in range(config.L)]),
        general_bound=general_lower_bound(config, profile),
        fair_bound=fair,
        asymptotic_gain=asymptotic_gain(config, eps),
        cost=cooperation_cost(config.N, c_BW),
        efficiency=cooperation_efficiency(fair, config.N, c_BW),
    )


# Lemma 1 ------------------------------------------------------------------


class Exponential:
    """Exponential variable with the given mean."""

    def __init__(self, mean=1.0):
        self.mean = float(mean)

    def sample(self, rng, size):
        return rng.exponential(self.mean, size)


class LogNormal:
    """``exp(mu + sigma Z)``; mean ``exp(mu + sigma^2 / 2)``."""

    def __init__(self, mu=0.0, sigma=1.0):
        self.mu, self.sigma = float(mu), float(sigma)
        self.mean = math.exp(self.mu + 0.5 * self.sigma**2)

    def sample(self, rng, size):
        return rng.lognormal(self.mu, self.sigma, size)


class Constant:
    def __init__(self, value):
        self.mean = float(value)

    def sample(self, rng, size):
        return np.full(size, self.mean)


class ZetaDistribution:
    """ZF penalty ``zeta`` of an N x 2K Rayleigh channel with column gains.

    A scaled inverse complex-Wishart trace with mean ``gamma / (N - 2K)``.

    Parameters
    ----------
    N, K : int
    beta_A, beta_B : array_like (K,), optional
        Large-scale gains of the group; all ones by default.
    """

    def __init__(self, N, K, beta_A=None, beta_B=None):
        if N <= 2 * K:
            raise DomainError("zeta has a finite mean only for N > 2K")
        self.N, self.K = N, K
        beta_A = np.ones(K) if beta_A is None else np.asarray(beta_A, dtype=float)
        beta_B = np.ones(K) if beta_B is None else np.asarray(beta_B, dtype=float)
        # downlink column order: side B then side A
        self._scale = np.sqrt(np.concatenate([beta_B, beta_A]))
        self.mean = float(np.sum(1 / beta_A) + np.sum(1 / beta_B)) / (N - 2 * K)

    def sample(self, rng, size):
        raw = _rng.complex_normal(rng, (size, self.N, 2 * self.K))
        return zeta_batch(raw * self._scale)


@dataclass(frozen=True)
class Lemma1Link:
    name: str
    left: float
    right: float
    std_error: float

    @property
    def holds(self):
        # non-strict step; equality for degenerate laws up to rounding
        slack = 2.0 * self.std_error + 1e-12 * max(1.0, abs(self.right))
        return self.left - self.right >= -slack


@dataclass(frozen=True)
class Lemma1Report:
    """Monte Carlo check of ``E log2[1 + S^2] > log2[(sum 1/sqrt(E psi))^2]``.

    ``S = sum_i psi_i^-1/2``. `links` holds the three steps of the Jensen
    chain: dropping the ``+1``, moving the expectation inside the
    log-sum-exp, and replacing ``E ln psi`` by ``ln E psi``.
    """

    lhs: float
    rhs: float
    std_error: float
    trials: int
    links: tuple

    @property
    def holds(self):
        return self.lhs > self.rhs - 2.0 * self.std_error

    @property
    def margin(self):
        """``(lhs - rhs)`` in units of the lhs standard error."""
        if self.std_error == 0:
            return math.inf if self.lhs > self.rhs else -math.inf
        return (self.lhs - self.rhs) / self.std_error


def verify_lemma1(samplers, trials=10**6, seed=0, block=1 << 16):
    """Check the Jensen-type inequality on independent samplers.

    Parameters
    ----------
    samplers : sequence
        One object per component ``psi_i`` with ``sample(rng, size)`` and a
        ``mean`` attribute (None if unknown; the sample mean is used then).
    trials : int
    seed : int
    block : int
        Samples per counter-based substream. Part of the reproducibility
        contract together with `seed`.

    Returns
    -------
    Lemma1Report

    Raises
    ------
    InvalidSample
        If any sample is not strictly positive.
    """
    L = len(samplers)
    if L < 1:
        raise ValueError("need at least one sampler")
    trials = int(trials)
    cols = []
    for i, sampler in enumerate(samplers):
        draws = []
        for b, start in enumerate(range(0, trials, block)):
            size = min(block, trials - start)
            g = _rng.stream(seed, _rng.LEMMA, index=b, attempt=i)
            draws.append(np.asarray(sampler.sample(g, size), dtype=float))
        col = np.concatenate(draws)
        if not np.all(col > 0) or not np.all(np.isfinite(col)):
            raise InvalidSample(f"sampler {i} produced a non-positive or non-finite value")
        cols.append(col)
    psi = np.stack(cols, axis=1)  # (T, L)

    s2 = np.sum(psi**-0.5, axis=1) ** 2
    lhs_t = np.log2(1.0 + s2)
    log_t = np.log2(s2)
    y = np.log(psi)
    y_mean = y.mean(axis=0)

    def logsumexp_bound(u):
        # (2 / ln 2) ln sum_i exp(-u_i / 2)
        return 2.0 / math.log(2) * math.log(float(np.sum(np.exp(-0.5 * u))))

    means = np.array(
        [psi[:, i].mean() if s.mean is None else s.mean for i, s in enumerate(samplers)]
    )
    inner = logsumexp_bound(y_mean)
    rhs = math.log2(float(np.sum(1.0 / np.sqrt(means)) ** 2))

    # delta-method influence of the plug-in term on E ln psi
    weights = np.exp(-0.5 * y_mean)
    grad = -(1.0 / math.log(2)) * weights / weights.sum()
    plug_in = y @ grad

    def se(x):
        return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0

    lhs = float(lhs_t.mean())
    links = (
        Lemma1Link("drop +1", lhs, float(log_t.mean()), se(lhs_t - log_t)),
        Lemma1Link("log-sum-exp convexity", float(log_t.mean()), inner, se(log_t - plug_in)),
        Lemma1Link("log concavity", inner, rhs, se(plug_in)),
    )
    return Lemma1Report(lhs=lhs, rhs=rhs, std_error=se(lhs_t), trials=trials, links=links)
