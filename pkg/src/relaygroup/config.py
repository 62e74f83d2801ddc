"""System parameters shared by every module."""

from dataclasses import dataclass, replace

from .errors import ConfigError


def db2lin(x_db):
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of a grouped two-way relay network.

    Parameters
    ----------
    M : int
        Total number of single-antenna relays.
    N : int
        Relays per group. Must divide `M`.
    K : int
        Number of user pairs (2K users in total).
    P_U : float
        Uplink transmit power per user, linear.
    P_T : float
        Transmit power of the whole relay system, linear. Each group gets
        ``P_R = P_T / L``.
    N0_R, N0_U : float
        Noise power at each relay and at each user.
    trials : int
        Monte Carlo channel realizations.
    seed : int
        Seed of the counter-based generator (64 bit).
    """

    M: int
    N: int
    K: int
    P_U: float = 1.0
    P_T: float = 1.0
    N0_R: float = 1.0
    N0_U: float = 1.0
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        for name in ("M", "N", "K", "trials"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.M % self.N:
            raise ConfigError(f"N must divide M (M={self.M}, N={self.N})")
        for name in ("P_U", "P_T", "N0_R", "N0_U"):
            value = float(getattr(self, name))
            if not value > 0.0 or value == float("inf"):
                raise ConfigError(f"{name} must be strictly positive and finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def L(self):
        """Number of relay groups."""
        return self.M // self.N

    @property
    def P_R(self):
        """Transmit power of one relay group."""
        return self.P_T / self.L

    @property
    def snr_u(self):
        return self.P_U / self.N0_R

    @property
    def snr_d(self):
        return self.P_R / self.N0_U

    def require_zf(self):
        """Raise `ConfigError` unless the group size allows zero-forcing."""
        if self.N <= 2 * self.K:
            raise ConfigError(
                f"N must exceed 2K for zero-forcing (N={self.N}, 2K={2 * self.K})"
            )
        return self

    def replace(self, **changes):
        return replace(self, **changes)


PRESETS = ("fig2_split",)


def apply_snr(config, snr_db, preset=None, snr_u_db=None):
    """Return a copy of `config` with powers set from reference SNRs.

    ``S_d = 10^(snr_db/10)`` fixes the whole relay system through
    ``P_T / N0_U = S_d`` (``P_R / N0_U = S_d / L`` per group), which keeps
    the comparison across group sizes fair. The uplink gets
    ``P_U / N0_R = S_u``, with ``S_u = S_d`` unless `snr_u_db` is given.

    Without a preset the noise powers are kept and the transmit powers
    scaled. With ``preset="fig2_split"`` the total power ``P_tot`` is split
    evenly between users and relays, ``P_U = P_tot / (4K)`` and
    ``P_R = P_tot / (2L)``, with ``P_tot = 4K S_u N0_R``; the user noise is
    then whatever makes ``P_T / N0_U = S_d``. Only power ratios enter the
    model, so both conventions give identical rates.
    """
    s_d = db2lin(snr_db)
    s_u = s_d if snr_u_db is None else db2lin(snr_u_db)
    if preset is None:
        return config.replace(P_U=s_u * config.N0_R, P_T=s_d * config.N0_U)
    if preset == "fig2_split":
        p_tot = 4 * config.K * s_u * config.N0_R
        return config.replace(
            P_U=p_tot / (4 * config.K), P_T=p_tot / 2.0, N0_U=p_tot / (2.0 * s_d)
        )
    raise ConfigError(f"unknown power preset {preset!r}; known: {', '.join(PRESETS)}")
