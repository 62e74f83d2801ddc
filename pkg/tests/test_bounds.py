import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaygroup import rng
from relaygroup.bounds import (
    Constant,
    Exponential,
    LogNormal,
    ZetaDistribution,
    asymptotic_gain,
    bound_report,
    cooperation_efficiency,
    delta_factor,
    epsilon_of,
    exact_gain,
    expected_zeta,
    fair_bound_value,
    fair_lower_bound,
    gamma_factor,
    gamma_factors,
    general_lower_bound,
    relative_efficiency,
    verify_lemma1,
)
from relaygroup.channel import FadingProfile, random_profile, uniform_profile
from relaygroup.config import SystemConfig
from relaygroup.errors import DomainError, InvalidSample
from relaygroup.zfproc import zeta_batch

# gamma, delta, E[zeta] ---------------------------------------------------


def test_gamma_uniform():
    assert gamma_factor(uniform_profile(1, 3), 0) == 6.0


def test_gamma_hand_computed():
    p = FadingProfile([[1.0, 1.0]], [[0.5, 1.5]])
    assert gamma_factor(p, 0) == pytest.approx(2 + 2 + 2 / 3, rel=1e-15)
    assert gamma_factor(p, 0) == pytest.approx(4.6667, abs=1e-4)


@pytest.mark.parametrize(
    "gammas, expected",
    [([4.0], 0.25), ([2.0, 8.0], (1 / math.sqrt(2) + 1 / math.sqrt(8)) ** 2), ([4.0] * 3, 2.25)],
)
def test_delta_examples(gammas, expected):
    assert delta_factor(gammas) == pytest.approx(expected, rel=1e-15)


def test_delta_hand_value():
    assert delta_factor([2, 8]) == pytest.approx(1.125, rel=1e-15)


def test_delta_rejects_nonpositive():
    with pytest.raises(ValueError):
        delta_factor([1.0, 0.0])


def test_expected_zeta_examples():
    assert expected_zeta(SystemConfig(M=3, N=3, K=1), uniform_profile(1, 1), 0) == 2.0
    assert expected_zeta(SystemConfig(M=8, N=8, K=2), uniform_profile(1, 2), 0) == 1.0
    p = FadingProfile([[1.0, 1.0]], [[0.5, 1.5]])
    assert expected_zeta(SystemConfig(M=6, N=6, K=2), p, 0) == pytest.approx(2.3333, abs=1e-4)


def test_expected_zeta_domain():
    with pytest.raises(DomainError):
        expected_zeta(SystemConfig(M=4, N=4, K=2), uniform_profile(1, 2), 0)


def test_expected_zeta_monte_carlo():
    raw = rng.complex_normal(np.random.default_rng(31), (100_000, 8, 4))
    assert abs(zeta_batch(raw).mean() - 1.0) < 0.01


# bounds ---------------------------------------------------------------------


def test_general_bound_clamp_boundary():
    # snr_d (N - 2K) delta = 1 with L=1, K=1, N=3: P_R/N0_U = 2
    cfg = SystemConfig(M=3, N=3, K=1, P_T=2.0)
    assert general_lower_bound(cfg, uniform_profile(1, 1)) == 0.0


def test_general_bound_hand_value():
    cfg = SystemConfig(M=8, N=8, K=2, P_T=10.0)
    assert general_lower_bound(cfg, uniform_profile(1, 2)) == pytest.approx(
        2 * math.log2(10), rel=1e-14
    )
    assert general_lower_bound(cfg, uniform_profile(1, 2)) == pytest.approx(6.6439, abs=1e-4)


def test_general_bound_monotone_in_snr():
    p = uniform_profile(2, 2)
    values = [
        general_lower_bound(SystemConfig(M=16, N=8, K=2, P_T=s), p)
        for s in np.logspace(-2, 4, 61)
    ]
    assert np.all(np.diff(values) >= 0)


def test_general_bound_domain():
    assert general_lower_bound(SystemConfig(M=4, N=4, K=2, P_T=100.0), uniform_profile(1, 2)) == 0
    with pytest.raises(DomainError):
        general_lower_bound(SystemConfig(M=3, N=3, K=2), uniform_profile(1, 2))


def test_fair_bound_examples():
    cfg = SystemConfig(M=64, N=8, K=2, P_T=10.0)
    assert fair_lower_bound(cfg, uniform_profile(8, 2)) == pytest.approx(2 * math.log2(80), rel=1e-14)
    assert fair_lower_bound(cfg, uniform_profile(8, 2)) == pytest.approx(12.6439, abs=1e-4)
    cfg = SystemConfig(M=40, N=5, K=2, P_T=10.0)
    assert fair_lower_bound(cfg, uniform_profile(8, 2)) == pytest.approx(8.6439, abs=1e-4)
    assert fair_bound_value(10.0, 64, 4, 2, 1.0) == 0.0


def test_fair_bound_rejects_bad_epsilon():
    with pytest.raises(DomainError):
        fair_bound_value(10.0, 64, 8, 2, 1.5)
    with pytest.raises(DomainError):
        fair_bound_value(10.0, 64, 8, 2, 0.0)


def test_negative_argument_is_domain_error():
    with pytest.raises(DomainError):
        fair_bound_value(-1.0, 64, 8, 2, 1.0)


def test_asymptotic_gain_examples():
    cfg = SystemConfig(M=256, N=128, K=4)
    assert asymptotic_gain(cfg, 1.0) == 32.0
    assert exact_gain(256, 128, 4, 1.0) == 30.0
    assert exact_gain(256, 128, 4, 1.0) / asymptotic_gain(cfg, 1.0) == 0.9375


@given(N=st.integers(9, 10**6))
def test_exact_gain_converges(N):
    M, K = 256, 4
    gap = 1 - exact_gain(M, N, K, 1.0) / (M / (2 * K))
    assert 0 < gap <= 2 * K / N + 1e-15


def test_cooperation_efficiency_examples():
    R = fair_lower_bound(SystemConfig(M=64, N=8, K=2, P_T=10.0), uniform_profile(8, 2))
    assert cooperation_efficiency(R, 8, 1.0) == pytest.approx(1.5805, abs=1e-4)
    assert cooperation_efficiency(R, 16, 1.0) == cooperation_efficiency(R, 8, 1.0) / 2
    with pytest.raises(ValueError):
        cooperation_efficiency(R, 8, 0.0)


@given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=20).filter(lambda v: max(v) > 0))
def test_relative_efficiency_normalized(etas):
    rel = relative_efficiency(etas)
    assert rel.max() == 1.0
    assert np.all(rel >= 0)


def test_relative_efficiency_all_zero():
    with pytest.raises(DomainError):
        relative_efficiency([0.0, 0.0])


def test_bound_report_fields():
    cfg = SystemConfig(M=16, N=8, K=2, P_T=10.0)
    rep = bound_report(cfg, uniform_profile(2, 2), c_BW=2.0)
    np.testing.assert_array_equal(rep.gamma, [4.0, 4.0])
    assert rep.delta == pytest.approx(1.0)
    assert rep.epsilon == pytest.approx(1.0)
    np.testing.assert_allclose(rep.expected_zeta, [1.0, 1.0])
    assert rep.general_bound == pytest.approx(rep.fair_bound, rel=1e-12)
    assert rep.asymptotic_gain == pytest.approx(4.0)
    assert rep.cost == 16.0
    assert rep.efficiency == pytest.approx(rep.fair_bound / 16.0)


# invariants -----------------------------------------------------------------

profiles = st.builds(
    lambda seed, L, K, spread: random_profile(np.random.default_rng(seed), L, K, spread),
    st.integers(0, 2**32 - 1),
    st.integers(1, 6),
    st.integers(1, 6),
    st.floats(0.0, 3.0),
)


@settings(max_examples=200, deadline=None)
@given(profiles)
def test_imbalance_invariants(p):
    gam = gamma_factors(p)
    assert np.all(gam >= 2 * p.K * (1 - 1e-12))
    assert delta_factor(gam) <= p.L**2 / (2 * p.K) * (1 + 1e-12)
    eps = epsilon_of(p)
    assert 0 < eps <= 1 + 1e-12


def test_epsilon_is_one_when_uniform():
    for L, K in [(1, 1), (3, 2), (32, 8)]:
        assert epsilon_of(uniform_profile(L, K)) == pytest.approx(1.0, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(
    profiles,
    st.integers(1, 8),
    st.integers(1, 4),
    st.floats(1e-2, 1e4),
    st.floats(1e-2, 10.0),
)
def test_general_and_fair_bounds_agree(p, extra, scale, P_T, N0_U):
    N = 2 * p.K + extra
    cfg = SystemConfig(M=N * p.L, N=N, K=p.K, P_T=P_T, N0_U=N0_U)
    g, f = general_lower_bound(cfg, p), fair_lower_bound(cfg, p)
    assert g >= 0 and f >= 0
    assert g == pytest.approx(f, rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    K=st.integers(1, 16),
    N=st.integers(20, 4096),
    snr=st.floats(1.0, 1e4),
    eps=st.floats(0.05, 1.0),
)
def test_flatness_for_large_groups(K, N, snr, eps):
    N = max(N, 20 * K)
    M = 4 * N
    drop = fair_bound_value(snr, M, 2 * N, K, eps) - fair_bound_value(snr, M, N, K, eps)
    assert abs(drop) / K < 10 * math.log2(math.e) * (2 * K / N)


# Lemma 1 ----------------------------------------------------------------------


def test_lemma1_constant_single():
    rep = verify_lemma1([Constant(1.0)], trials=10_000)
    assert rep.lhs == pytest.approx(1.0, abs=1e-15)
    assert rep.rhs == pytest.approx(0.0, abs=1e-15)
    assert rep.holds


def test_lemma1_constant_pair():
    rep = verify_lemma1([Constant(4.0), Constant(4.0)], trials=10_000)
    assert rep.lhs == pytest.approx(1.0, abs=1e-15)
    assert rep.rhs == pytest.approx(0.0, abs=1e-15)
    assert all(link.holds for link in rep.links)


def test_lemma1_exponential_chain():
    rep = verify_lemma1([Exponential(1.0)] * 3, trials=200_000, seed=4)
    assert rep.holds and rep.margin > 2
    assert [link.name for link in rep.links] == [
        "drop +1",
        "log-sum-exp convexity",
        "log concavity",
    ]
    assert all(link.holds for link in rep.links)
    # the chain telescopes from lhs to rhs
    assert rep.links[0].left == rep.lhs and rep.links[-1].right == rep.rhs
    for a, b in zip(rep.links, rep.links[1:]):
        assert a.right == b.left


def test_lemma1_mixed_families():
    samplers = [LogNormal(0.0, 0.8), ZetaDistribution(6, 2), Exponential(2.0)]
    rep = verify_lemma1(samplers, trials=50_000, seed=9, block=4096)
    assert rep.holds and all(link.holds for link in rep.links)


def test_lemma1_reproducible():
    a = verify_lemma1([Exponential(1.0)] * 2, trials=30_000, seed=5, block=1000)
    b = verify_lemma1([Exponential(1.0)] * 2, trials=30_000, seed=5, block=1000)
    assert a == b


def test_lemma1_rejects_nonpositive_samples():
    with pytest.raises(InvalidSample):
        verify_lemma1([Constant(0.0)], trials=100)
    with pytest.raises(InvalidSample):
        verify_lemma1([Exponential(1.0), Constant(-1.0)], trials=100)


def test_zeta_distribution_mean():
    z = ZetaDistribution(6, 2, beta_A=[1.0, 1.0], beta_B=[0.5, 1.5])
    assert z.mean == pytest.approx(14 / 3 / 2)
    draws = z.sample(np.random.default_rng(3), 100_000)
    se = draws.std() / math.sqrt(len(draws))
    assert abs(draws.mean() - z.mean) < 4 * se
    with pytest.raises(DomainError):
        ZetaDistribution(4, 2)
