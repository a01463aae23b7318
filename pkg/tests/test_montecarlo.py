import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irs_noma_pls.analytic import Which, asc, asymptotic_sop, mu_eve, sop_user1, sop_user2
from irs_noma_pls.channel import SystemConfig
from irs_noma_pls.montecarlo import (
    BLOCK_SIZE,
    THREADS_ENV,
    DegenerateFitError,
    EveMode,
    empirical_cdf_gamma_b2,
    estimate_asc,
    estimate_sop,
    estimate_sop_many,
    fit_loglog_slope,
    oma_baseline,
    run_blocks,
    worker_count,
)


def test_zero_targets_never_outage():
    cfg = SystemConfig(R1=0.0, R2=0.0, rho_e_db=-math.inf, N=3)
    s = estimate_sop(cfg, 50_000, 1)
    assert s.user1.value == s.user2.value == s.network.value == 0.0


def test_mean_eve_matches_closed_form_at_default_point():
    cfg = SystemConfig(N=1, rho_db=30, rho_e_db=10)
    est = estimate_sop(cfg, 1_000_000, 2, EveMode.MEAN).user1
    p = sop_user1(cfg)
    assert abs(est.value - p) <= 3 * max(est.std_error, math.sqrt(p * (1 - p) / est.trials))


def test_mean_eve_matches_closed_form_random_configs():
    rng = np.random.default_rng(77)
    for j in range(10):
        cfg = SystemConfig(
            N=int(rng.integers(1, 8)),
            m1=float(rng.uniform(0.5, 4)),
            m3=float(rng.uniform(0.5, 4)),
            rho_db=float(rng.uniform(50, 90)),
            rho_e_db=float(rng.uniform(0, 60)),
            R1=float(rng.uniform(0, 1)),
        )
        est = estimate_sop(cfg, 1_000_000, 100 + j, EveMode.MEAN).user1
        p = sop_user1(cfg)
        assert abs(est.value - p) <= 3 * max(est.std_error, math.sqrt(p * (1 - p) / est.trials)), cfg


def test_random_eve_differs_but_same_order():
    cfg = SystemConfig(N=3, rho_db=80, rho_e_db=60)
    mean = estimate_sop(cfg, 400_000, 3, EveMode.MEAN).user1.value
    rand = estimate_sop(cfg, 400_000, 3, EveMode.RANDOM).user1.value
    assert mean != rand
    assert 0.1 < rand / mean < 10


def test_eve_gain_moment_under_random_eve():
    cfg = SystemConfig(N=10)
    n = 1_000_000
    s = run_blocks(cfg, n, 4, lambda b: np.array([np.sum(b.h_hat_E**2), np.sum(b.h_hat_E**4)]))
    m = s[0] / n
    se = math.sqrt((s[1] / n - m * m) / n)
    assert abs(m - mu_eve(cfg)) <= 3 * se


def test_network_dominates_pathwise():
    cfgs = [SystemConfig(N=2, rho_db=r) for r in (40, 60, 80, 100)]
    for est in estimate_sop_many(cfgs, 100_000, 5):
        assert est.network.value >= max(est.user1.value, est.user2.value)


def test_sop_many_requires_shared_law():
    with pytest.raises(ValueError):
        estimate_sop_many([SystemConfig(N=1), SystemConfig(N=2)], 1000, 0)


@settings(max_examples=5, deadline=None)
@given(st.integers(1, 3 * BLOCK_SIZE), st.integers(0, 2**63 - 1))
def test_deterministic_across_workers(trials, seed):
    cfg = SystemConfig(N=4, rho_db=80, rho_e_db=40)
    a = estimate_sop(cfg, trials, seed, workers=1)
    b = estimate_sop(cfg, trials, seed, workers=3)
    assert a == b
    assert estimate_asc(cfg, trials, seed, workers=1) == estimate_asc(cfg, trials, seed, workers=4)


def test_worker_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_count() == 3
    monkeypatch.setenv(THREADS_ENV, "0")
    assert worker_count() >= 1


def test_run_blocks_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_blocks(SystemConfig(), 0, 0, lambda b: np.zeros(1))


def test_asc_without_eve_equals_user_rates():
    cfg = SystemConfig(N=5, rho_db=70, rho_e_db=-math.inf)
    a = estimate_asc(cfg, 100_000, 6)
    assert a.asc1.value == a.rate_B1.value
    assert a.asc2.value == a.rate_B2.value
    assert a.rate_E1.value == 0.0


def test_unclamped_below_clamped():
    a = estimate_asc(SystemConfig(N=30, rho_db=40, rho_e_db=40), 100_000, 7)
    assert a.asc1_unclamped.value <= a.asc1.value
    assert a.asc2_unclamped.value <= a.asc2.value


def test_asc2_rises_then_falls_along_N():
    # rho = rho_e = 60 dB, the N direction of the ASC surface
    vals = [estimate_asc(SystemConfig(N=n, rho_db=60, rho_e_db=60), 100_000, 8).asc2.value for n in (1, 10, 30, 60)]
    peak = int(np.argmax(vals))
    assert 0 < peak < len(vals) - 1
    assert vals[0] < vals[peak] and vals[-1] < vals[peak]


def test_empirical_cdf_examples():
    cfg = SystemConfig(N=30, rho_db=20)
    emp = empirical_cdf_gamma_b2(cfg, 200_000, [0.0, 0.01, cfg.a2 / cfg.a1, 10.0], seed=9)
    assert emp.probs[0] == 0.0
    assert emp.probs[2] == 1.0 and emp.probs[3] == 1.0
    with pytest.raises(ValueError):
        empirical_cdf_gamma_b2(cfg, 10, [1.0, 0.5])


def test_fit_slope_on_formulas():
    pts = [(r, asymptotic_sop(SystemConfig(rho_db=r), Which.USER1)) for r in (60, 70, 80, 90)]
    assert fit_loglog_slope(pts) == pytest.approx(1.0, abs=1e-6)
    pts = [(r, asymptotic_sop(SystemConfig(N=3, rho_db=r), Which.USER2)) for r in (60, 70, 80, 90)]
    assert fit_loglog_slope(pts) == pytest.approx(3.0, abs=1e-6)


def test_fit_slope_degenerate():
    with pytest.raises(DegenerateFitError):
        fit_loglog_slope([(1, 0.1), (2, 0.01)])
    with pytest.raises(DegenerateFitError):
        fit_loglog_slope([(1, 0.1), (5, 0.01), (9, 0.001)])
    with pytest.raises(DegenerateFitError):
        fit_loglog_slope([(10, 0.1), (20, 0.0), (30, 0.001)])


# MeanEve MC diversity orders in the SNR windows where the default geometry is asymptotic.
@pytest.mark.parametrize(
    "N,user,rhos,order",
    [
        (1, 1, (70, 75, 80, 85, 90), 1.0),
        (3, 1, (70, 72, 74, 76, 78, 80), 1.0),
        (1, 2, (90, 95, 100, 105, 110), 1.0),
        (3, 2, (70, 72, 74, 76, 78, 80), 3.0),
    ],
)
def test_mc_diversity_orders_in_asymptotic_window(N, user, rhos, order):
    cfgs = [SystemConfig(N=N, rho_db=float(r), rho_e_db=10.0) for r in rhos]
    ests = estimate_sop_many(cfgs, 10_000_000 if N == 3 else 2_000_000, 5, EveMode.MEAN)
    pts = [(r, getattr(e, f"user{user}").value) for r, e in zip(rhos, ests)]
    assert fit_loglog_slope(pts) == pytest.approx(order, rel=0.10)


def test_oma_examples():
    z = oma_baseline(SystemConfig(R1=0.0, R2=0.0, rho_e_db=-math.inf), 20_000, 10)
    assert z.sop1.value == 0.0 and z.sop2.value == 0.0
    # half the resource: ASC slope of 1/2 per doubling at high SNR
    lo = oma_baseline(SystemConfig(rho_db=120), 200_000, 11).asc1.value
    hi = oma_baseline(SystemConfig(rho_db=120 + 10 * math.log10(2)), 200_000, 11).asc1.value
    assert hi - lo == pytest.approx(0.5, abs=0.05)
    cfg = SystemConfig(rho_db=30)
    assert oma_baseline(cfg, 200_000, 12).sop2.value >= sop_user2(cfg)


def test_mc_asc_tracks_analytic_user1():
    cfg = SystemConfig(N=30, rho_db=40, rho_e_db=30)
    assert estimate_asc(cfg, 400_000, 13).asc1.value == pytest.approx(asc(1, cfg), abs=0.05)
