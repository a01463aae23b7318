import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from irs_noma_pls.channel import (
    ChannelBatch,
    SystemConfig,
    db_to_linear,
    draw_channel_batch,
    draw_channels,
    expected_gain_squared,
    gain_squared_oracle,
    instantaneous_sinrs,
    mu1_growth_factor,
    normalised_growth_ratio,
    pair_stats,
    path_gain,
    sample_nakagami,
)

shapes = st.floats(0.5, 6.0)


def eps_oracle(ma, mb):
    # (E|g| E|h|)^2 with E|X| = Gamma(m + 1/2) / (Gamma(m) sqrt(m))
    mean = lambda m: special.gamma(m + 0.5) / (special.gamma(m) * math.sqrt(m))
    return (mean(ma) * mean(mb)) ** 2


# ---------------------------------------------------------------- config


def test_defaults_and_validation():
    cfg = SystemConfig()
    assert (cfg.a1, cfg.a2, cfg.m1, cfg.m2, cfg.m3, cfg.N) == (0.2, 0.8, 3.0, 1.0, 1.0, 1)
    assert (cfg.d_1, cfg.d_B2, cfg.d_E, cfg.d_B1) == (100.0, 10.0, 50.0, 20.0)
    assert cfg.violations() == []
    for bad in (dict(a1=0.6, a2=0.4), dict(a1=0.3, a2=0.8), dict(N=0), dict(m1=0.4), dict(d_E=0.0),
                dict(alpha_1=1.5), dict(beta=1.5), dict(R1=-0.1)):
        with pytest.raises(ValueError):
            SystemConfig(**bad)


def test_derived_gains():
    cfg = SystemConfig(rho_db=30.0)
    assert cfg.rho == pytest.approx(1000.0)
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert cfg.gain_B2 == pytest.approx(100**-2.5 * 10**-2.5)
    assert cfg.gain_E == pytest.approx(100**-2.5 * 50**-2.5)


def test_path_gain_examples():
    assert path_gain(1.0, 3.7) == 1.0
    assert path_gain(10.0, 2.5) == pytest.approx(3.1623e-3, rel=1e-4)
    assert path_gain(20.0, 3.5) == pytest.approx(2.7951e-5, rel=1e-4)
    with pytest.raises(ValueError):
        path_gain(0.0, 2.0)


# ---------------------------------------------------------------- pair statistics


def test_pair_stats_examples():
    p11 = pair_stats(1, 1)
    assert p11.eps == pytest.approx(math.pi**2 / 16, rel=1e-14)
    assert p11.m_tilde is None
    p31 = pair_stats(3, 1)
    assert p31.eps == pytest.approx(eps_oracle(3, 1), rel=1e-13)
    assert p31.eps == pytest.approx(0.72287142, rel=1e-8)
    assert p31.m_tilde == pytest.approx(3.0, rel=1e-13)
    assert (p31.m_c, p31.m_d) == (1, 3)
    assert pair_stats(2, 2).m_tilde is None
    with pytest.raises(ValueError):
        pair_stats(0.3, 1)


@settings(max_examples=100, deadline=None)
@given(shapes, shapes)
def test_pair_stats_invariants(ma, mb):
    p = pair_stats(ma, mb)
    assert 0 < p.eps < 1
    assert p.eps == pytest.approx(eps_oracle(ma, mb), rel=1e-12)
    assert p.c == 1 + p.a - p.b
    for k in (p.k1, p.k2, p.k3):
        assert math.isfinite(k) and k > 0
    # omega * k1 = d^a follows from the transform at s = 0 being 1
    assert p.log_omega + math.log(p.k1) == pytest.approx(p.a * math.log(p.d), rel=1e-11, abs=1e-11)


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 3.0])
def test_eps_grows_with_shape(m):
    assert pair_stats(m, m).eps < pair_stats(m + 1, m + 1).eps


def test_expected_gain_squared_examples():
    for m in ((0.5, 0.5), (1, 3), (2.5, 4)):
        assert expected_gain_squared(pair_stats(*m), 1) == pytest.approx(1.0, rel=1e-12)
    p13 = pair_stats(1, 3)
    assert expected_gain_squared(p13, 3) == pytest.approx(3 + 6 * p13.eps, rel=1e-12)
    assert expected_gain_squared(p13, 3) == pytest.approx(7.3372285, rel=1e-7)
    assert expected_gain_squared(pair_stats(1, 1), 10) == pytest.approx(10 + 90 * math.pi**2 / 16, rel=1e-12)
    assert gain_squared_oracle(pair_stats(1, 1), 2) == pytest.approx(3.2337006, rel=1e-7)
    assert gain_squared_oracle(p13, 1) == 1.0


@pytest.mark.parametrize("mc", [0.5, 1.0, 2.0, 3.0])
@pytest.mark.parametrize("md", [0.5, 1.0, 2.0, 3.0])
@pytest.mark.parametrize("N", [1, 2, 3, 5, 10, 30])
def test_moment_identity_grid(mc, md, N):
    p = pair_stats(mc, md)
    assert expected_gain_squared(p, N) == pytest.approx(gain_squared_oracle(p, N), rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(shapes, shapes, st.integers(1, 200))
def test_moment_identity_random(ma, mb, N):
    p = pair_stats(ma, mb)
    assert expected_gain_squared(p, N) == pytest.approx(gain_squared_oracle(p, N), rel=1e-8)


def test_mu1_growth_examples():
    assert mu1_growth_factor(pair_stats(1, 1)) == pytest.approx(2.0, rel=1e-14)
    assert mu1_growth_factor(pair_stats(1, 3)) == pytest.approx(4 * math.sqrt(3), rel=1e-14)
    assert mu1_growth_factor(pair_stats(0.5, 2)) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_mu1_exceeds_one_on_grid():
    grid = np.linspace(0.5, 5.0, 10)
    for mc in grid:
        for md in grid:
            if md > mc:
                assert mu1_growth_factor(pair_stats(mc, md)) > 1


def test_normalised_growth_ratio_closed_form():
    p = pair_stats(1, 3)
    assert normalised_growth_ratio(p) == pytest.approx(p.d ** (p.a - 1), rel=1e-12)


# ---------------------------------------------------------------- sampling


def test_nakagami_moments():
    rng = np.random.default_rng(1)
    x = sample_nakagami(3.0, rng, 1_000_000)
    assert np.mean(x**2) == pytest.approx(1.0, abs=0.005)
    assert np.mean(x) == pytest.approx(special.gamma(3.5) / (special.gamma(3) * math.sqrt(3)), abs=0.005)
    y = sample_nakagami(1.0, rng, 1_000_000)
    # Rayleigh: |X|^2 is unit exponential
    assert np.mean(y**2) == pytest.approx(1.0, abs=0.005)
    assert np.mean(y**4) == pytest.approx(2.0, abs=0.02)
    with pytest.raises(ValueError):
        sample_nakagami(0.2, rng, 3)


def test_draw_channels_single_element():
    cfg = SystemConfig(N=1, beta=0.7)
    d = draw_channels(cfg, np.random.default_rng(3))
    assert d.h_hat_B2 == pytest.approx(0.7 * d.g_B2[0] * d.h[0], rel=1e-15)
    assert d.h_hat_E >= 0 and d.h_B1_sq >= 0


def test_draw_channels_sums_exactly():
    cfg = SystemConfig(N=8)
    d = draw_channels(cfg, np.random.default_rng(4))
    assert d.h_hat_B2 == float(d.g_B2 @ d.h)
    assert d.h_hat_E == float(d.g_E @ d.h)


def test_draw_n30_matches_moment():
    cfg = SystemConfig(N=30, beta=0.9)
    rng = np.random.default_rng(5)
    vals = np.array([draw_channels(cfg, rng).h_hat_B2 ** 2 for _ in range(100_000 // 10)])
    batch = draw_channel_batch(cfg, rng, 100_000)
    target = expected_gain_squared(cfg.user2_pair, 30) * cfg.beta**2
    assert np.mean(batch.h_hat_B2**2) == pytest.approx(target, rel=0.02)
    assert np.mean(vals) == pytest.approx(target, rel=0.05)


def test_sinr_examples():
    cfg = SystemConfig(rho_db=10.0)
    one = ChannelBatch(np.array(1.0), np.array(1.0), np.array(1.0))
    g1, _, _, _ = instantaneous_sinrs(one, cfg)
    assert g1 == pytest.approx(2 * 20**-3.5, rel=1e-12)
    hot = SystemConfig(rho_db=400.0)
    _, g2, _, _ = instantaneous_sinrs(one, hot)
    assert g2 == pytest.approx(4.0, rel=1e-9)
    _, _, e1, e2 = instantaneous_sinrs(ChannelBatch(np.array(1.0), np.array(1.0), np.array(0.0)), cfg)
    assert e1 == 0 and e2 == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.floats(-20, 200), st.integers(0, 2**32 - 1))
def test_gamma_b2_below_ceiling(N, rho_db, seed):
    cfg = SystemConfig(N=N, rho_db=rho_db)
    b = draw_channel_batch(cfg, np.random.default_rng(seed), 200)
    _, g2, _, _ = instantaneous_sinrs(b, cfg)
    assert np.all(g2 >= 0) and np.all(g2 <= cfg.a2 / cfg.a1)
    assert np.all(g2 < cfg.a2 / cfg.a1) or rho_db > 150
