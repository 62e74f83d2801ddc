"""Simulator and closed-form bounds for multipair two-way relay networks
with grouped relays doing per-group zero-forcing."""

from .bounds import (
    bound_report,
    cooperation_efficiency,
    delta_factor,
    epsilon_of,
    expected_zeta,
    fair_lower_bound,
    gamma_factor,
    general_lower_bound,
    verify_lemma1,
)
from .channel import (
    ChannelRealization,
    FadingProfile,
    compose_downlink,
    compose_uplink,
    draw_channels,
    random_profile,
    uniform_profile,
)
from .config import SystemConfig, apply_snr
from .errors import (
    ConditioningError,
    ConfigError,
    DomainError,
    InvalidSample,
    RelayError,
    SimulationFailed,
)
from .simulate import SumrateEstimate, decompose, ergodic_sumrate, simulate_trial
from .zfproc import GroupProcessor, power_scaling, zeta_of, zf_filters

__version__ = "0.1.0"
