"""Acceptance checks: analytic results against oracles and Monte Carlo.

Each check returns a CriterionResult. ``Budget.QUICK`` cuts trial counts by
ten and doubles every tolerance. ``Hooks`` lets tests swap in a broken
component to confirm that a check can fail.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .analytic import (
    Method,
    asc,
    asc_asymptotic,
    cdf_gamma_b2_low,
    mu_eve,
    mu_user2,
    refl_gain_B2,
    sop1_floor,
    sop_user1,
)
from .channel import PairStats, SystemConfig, expected_gain_squared, gain_squared_oracle, pair_stats
from .montecarlo import (
    EveMode,
    empirical_cdf_gamma_b2,
    estimate_asc_many,
    estimate_sop_many,
    fit_loglog_slope,
    run_blocks,
)
from .specfun import gauss_laguerre_rule, hyp2f1_at_minus1, marcum_q_half


class Budget(str, Enum):
    QUICK = "Quick"
    FULL = "Full"


@dataclass
class Hooks:
    expected_gain_squared: Callable[[PairStats, int], float] = expected_gain_squared


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: str
    runtime_s: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] C{self.number:02d} {self.name}: {self.measured} ({self.runtime_s:.1f} s)"


def _scale(budget: Budget) -> tuple[int, float]:
    # (trial divisor, tolerance multiplier)
    return (10, 2.0) if budget is Budget.QUICK else (1, 1.0)


# ---------------------------------------------------------------- independent oracles


def marcum_tail_oracle(a: float, b: float) -> float:
    """P(X > b^2) for X noncentral chi-square(1, a^2), by integrating the density."""
    if b == 0:
        return 1.0
    val, _ = integrate.quad(lambda x: stats.ncx2.pdf(x, 1, a * a), b * b, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def hyp2f1_direct_oracle(a: float, b: float, c: float, tail_terms: int = 80) -> float:
    """2F1(a, b; c; -1) from its defining series, accelerated by repeated averaging.

    Terms are summed directly until their sign starts to alternate for good,
    then the partial sums of the alternating tail are averaged pairwise
    ``tail_terms`` times (the Euler transform in its stable form).
    """
    term, total, n = 1.0, 0.0, 0
    # (b)_n changes sign until n exceeds -b; same for a
    start = int(max(0.0, -a, -b)) + 2
    while n < start:
        total += term
        term *= -(a + n) * (b + n) / ((c + n) * (n + 1))
        n += 1
    partial = []
    s = total
    for _ in range(tail_terms):
        s += term
        partial.append(s)
        term *= -(a + n) * (b + n) / ((c + n) * (n + 1))
        n += 1
    sums = np.array(partial)
    while len(sums) > 1:
        sums = 0.5 * (sums[1:] + sums[:-1])
    return float(sums[0])


# ---------------------------------------------------------------- criteria


def c01_moment_identity(budget: Budget = Budget.FULL, hooks: Hooks | None = None) -> CriterionResult:
    hooks = hooks or Hooks()
    _, k = _scale(budget)
    tol = 1e-8 * k
    worst = 0.0
    for mc in (0.5, 1.0, 2.0, 3.0):
        for md in (0.5, 1.0, 2.0, 3.0):
            pair = pair_stats(mc, md)
            for N in (1, 2, 3, 5, 10, 30):
                exact = gain_squared_oracle(pair, N)
                worst = max(worst, abs(hooks.expected_gain_squared(pair, N) / exact - 1.0))
    return CriterionResult(1, "moment identity", worst <= tol, f"max rel err {worst:.2e} (tol {tol:.0e})")


def c02_mc_moment(budget: Budget = Budget.FULL, hooks: Hooks | None = None, seed: int = 2) -> CriterionResult:
    hooks = hooks or Hooks()
    div, k = _scale(budget)
    trials = 1_000_000 // div
    rng = np.random.default_rng(seed)
    worst = 0.0
    for j in range(5):
        cfg = SystemConfig(
            m1=float(rng.uniform(0.5, 3.0)),
            m2=float(rng.uniform(0.5, 3.0)),
            N=int(rng.integers(1, 31)),
        )
        sums = run_blocks(cfg, trials, seed + j, lambda b: np.array([np.sum(b.h_hat_B2**2), np.sum(b.h_hat_B2**4)]))
        mean = sums[0] / trials
        se = math.sqrt(max(sums[1] / trials - mean * mean, 0.0) / trials)
        target = hooks.expected_gain_squared(cfg.user2_pair, cfg.N)
        worst = max(worst, abs(mean - target) / se)
    return CriterionResult(2, "MC moment check", worst <= 3.0 * k, f"max |z| {worst:.2f} (limit {3 * k:.0f})")


def c03_user1_mean_eve(budget: Budget = Budget.FULL, seed: int = 3) -> CriterionResult:
    div, k = _scale(budget)
    trials = 1_000_000 // div
    worst = 0.0
    for N in (1, 3):
        cfgs = [SystemConfig(N=N, rho_db=r, rho_e_db=10.0) for r in (10.0, 20.0, 30.0, 40.0)]
        for c, est in zip(cfgs, estimate_sop_many(cfgs, trials, seed, EveMode.MEAN)):
            p = sop_user1(c)
            diff = abs(est.user1.value - p)
            # an all-outage sample has zero empirical spread; fall back to the binomial one at p
            se = max(est.user1.std_error, math.sqrt(p * (1.0 - p) / trials))
            z = 0.0 if diff == 0 else (math.inf if se == 0 else diff / se)
            worst = max(worst, z)
    return CriterionResult(3, "user-1 SOP vs MC (MeanEve)", worst <= 3.0 * k, f"max |z| {worst:.2f} (limit {3 * k:.0f})")


def c04_low_snr_cdf(budget: Budget = Budget.FULL, seed: int = 4) -> CriterionResult:
    div, k = _scale(budget)
    cfg = SystemConfig(N=30, rho_db=20.0)
    # grid over the bulk of Z^2 (0 to 3 E[Z^2]) mapped to gamma_B2
    z2 = np.linspace(0.0, 3.0 * mu_user2(cfg), 201)[1:]
    s = cfg.rho * z2 * refl_gain_B2(cfg)
    grid = cfg.a2 * s / (cfg.a1 * s + 1.0)
    emp = empirical_cdf_gamma_b2(cfg, 1_000_000 // div, grid, seed)
    ana = np.array([cdf_gamma_b2_low(x, cfg) for x in grid])
    dist = float(np.max(np.abs(emp.probs - ana)))
    tol = 0.02 * k
    return CriterionResult(4, "low-SNR CDF sup distance", dist <= tol, f"sup |F - F_emp| {dist:.4f} (tol {tol:.2f})")


def c05_diversity_orders(
    budget: Budget = Budget.FULL, seed: int = 5, rhos=(30.0, 35.0, 40.0, 45.0, 50.0)
) -> CriterionResult:
    div, k = _scale(budget)
    trials = 10_000_000 // div
    tol = 0.10 * k
    slopes, ok = {}, True
    for N in (1, 3):
        cfgs = [SystemConfig(N=N, rho_db=r, rho_e_db=10.0) for r in rhos]
        ests = estimate_sop_many(cfgs, trials, seed, EveMode.MEAN)
        expected = {1: 1.0, 2: min(cfgs[0].m1, cfgs[0].m2) * N}
        for user in (1, 2):
            pts = [(r, getattr(e, f"user{user}").value) for r, e in zip(rhos, ests)]
            try:
                d = fit_loglog_slope(pts)
            except ValueError:
                d = math.nan
            slopes[f"user{user},N={N}"] = d
            ok &= abs(d - expected[user]) <= tol * expected[user]
    txt = ", ".join(f"{k_}: {v:.3f}" for k_, v in slopes.items())
    return CriterionResult(5, "secrecy diversity orders", bool(ok), f"{txt} (tol {tol:.0%})", details=slopes)


def c06_sop_floor(budget: Budget = Budget.FULL, rho_db: float = 60.0) -> CriterionResult:
    _, k = _scale(budget)
    cfg = SystemConfig(N=1, rho_db=rho_db, rho_e_db=rho_db)
    p, floor = sop_user1(cfg), sop1_floor(cfg)
    rel = abs(p / floor - 1.0)
    tol = 0.01 * k
    return CriterionResult(
        6, "user-1 SOP floor", rel <= tol, f"SOP {p:.4e} vs floor {floor:.4e}, rel {rel:.3g} (tol {tol:.2f})"
    )


def c07_asc_agreement(budget: Budget = Budget.FULL, seed: int = 7) -> CriterionResult:
    div, k = _scale(budget)
    base = SystemConfig(N=30, rho_e_db=30.0)
    rhos = (20.0, 30.0, 40.0)
    cfgs = [base.with_(rho_db=r) for r in rhos]
    ests = estimate_asc_many(cfgs, 1_000_000 // div, seed, EveMode.RANDOM)
    e1 = e_qj = e_mc = 0.0
    for c, est in zip(cfgs, ests):
        a1 = asc(1, c)
        q, j = asc(2, c, Method.QUADRATURE), asc(2, c, Method.JENSEN)
        e1 = max(e1, abs(a1 - est.asc1.value))
        e_qj = max(e_qj, abs(q - j))
        e_mc = max(e_mc, abs(q - est.asc2.value), abs(j - est.asc2.value))
    hi = base.with_(rho_db=80.0)
    e_ceil = max(
        abs(asc(2, hi, Method.QUADRATURE) - asc_asymptotic(2, hi, Method.QUADRATURE)),
        abs(asc(2, hi, Method.JENSEN) - asc_asymptotic(2, hi, Method.JENSEN)),
    )
    ok = e1 <= 0.05 * k and e_qj <= 0.3 * k and e_mc <= 0.3 * k and e_ceil <= 0.01 * k
    msg = f"asc1-MC {e1:.4f}, Q-J {e_qj:.4f}, asc2-MC {e_mc:.4f}, ceiling gap {e_ceil:.4f}"
    return CriterionResult(7, "ASC agreement", ok, msg)


def c08_high_snr_slopes(budget: Budget = Budget.FULL, lo_db: float = 50.0, hi_db: float = 60.0) -> CriterionResult:
    _, k = _scale(budget)
    lo, hi = SystemConfig(rho_db=lo_db), SystemConfig(rho_db=hi_db)
    dlog2 = (hi_db - lo_db) / 10.0 * math.log2(10.0)
    s1 = (asc(1, hi) - asc(1, lo)) / dlog2
    s2 = (asc(2, hi) - asc(2, lo)) / dlog2
    ok = abs(s1 - 1.0) <= 0.05 * k and abs(s2) <= 0.02 * k
    return CriterionResult(8, "high-SNR slopes", ok, f"user1 {s1:.4f} (1 ± {0.05 * k:.2f}), user2 {s2:.4f} (0 ± {0.02 * k:.2f})")


def c09_growth_trend(budget: Budget = Budget.FULL) -> CriterionResult:
    base = SystemConfig(m1=3.0, m3=1.0)
    mus = [mu_eve(base.with_(N=n)) for n in range(1, 65)]
    mu_ok = all(b > a for a, b in zip(mus, mus[1:]))
    sop_ok = True
    for r in (20.0, 40.0, 60.0, 80.0, 100.0):
        sops = [sop_user1(base.with_(N=n, rho_db=r, rho_e_db=r)) for n in range(1, 65)]
        sop_ok &= all(b >= a for a, b in zip(sops, sops[1:]))
    return CriterionResult(9, "growth in N", mu_ok and sop_ok, f"mu increasing: {mu_ok}, SOP1 nondecreasing: {sop_ok}")


def c10_special_functions(budget: Budget = Budget.FULL, seed: int = 10) -> CriterionResult:
    _, k = _scale(budget)
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 6.0, 50)
    b = rng.uniform(0.0, 8.0, 50)
    e_q = max(abs(marcum_q_half(x, y) - marcum_tail_oracle(x, y)) for x, y in zip(a, b))
    e_f = 0.0
    for _ in range(100):
        mc, md = np.sort(rng.uniform(0.5, 5.0, 2))
        shift = int(rng.integers(0, 3))
        aa, bb, cc = 2 * mc + shift, mc - md + 0.5 + shift, mc + md + 0.5 + shift
        ref = hyp2f1_direct_oracle(aa, bb, cc)
        e_f = max(e_f, abs(hyp2f1_at_minus1(aa, bb, cc) / ref - 1.0))
    rule = gauss_laguerre_rule(100)
    logw, logx = np.log(rule.weights), np.log(rule.nodes)
    e_gl = 0.0
    for p in range(200):
        v = logw + p * logx
        top = v.max()
        log_moment = top + math.log(np.sum(np.exp(v - top)))
        e_gl = max(e_gl, abs(math.expm1(log_moment - math.lgamma(p + 1))))
    ok = e_q <= 1e-8 * k and e_f <= 1e-8 * k and e_gl <= 1e-9 * k
    return CriterionResult(10, "special-function oracles", ok, f"Marcum {e_q:.1e}, 2F1 {e_f:.1e}, Laguerre moments {e_gl:.1e}")


def c11_determinism(budget: Budget = Budget.FULL, seed: int = 42) -> CriterionResult:
    from .cli import THREADS_ENV, main

    outputs = []
    old = os.environ.get(THREADS_ENV)
    try:
        with tempfile.TemporaryDirectory() as tmp:
            for i, threads in enumerate(("1", "4")):
                os.environ[THREADS_ENV] = threads
                path = os.path.join(tmp, f"fig2_{i}.csv")
                args = ["figure", "fig2", "--seed", str(seed), "--out", path]
                if budget is Budget.QUICK:
                    args += ["--trials", "20000"]
                code = main(args)
                with open(path, "rb") as fh:
                    outputs.append((code, fh.read()))
    finally:
        if old is None:
            os.environ.pop(THREADS_ENV, None)
        else:
            os.environ[THREADS_ENV] = old
    same = outputs[0] == outputs[1] and outputs[0][0] == 0
    return CriterionResult(11, "figure determinism", same, f"byte-identical across 1 and 4 workers: {same}")


CRITERIA = (
    c01_moment_identity,
    c02_mc_moment,
    c03_user1_mean_eve,
    c04_low_snr_cdf,
    c05_diversity_orders,
    c06_sop_floor,
    c07_asc_agreement,
    c08_high_snr_slopes,
    c09_growth_trend,
    c10_special_functions,
    c11_determinism,
)


def run_all(budget: Budget = Budget.QUICK, hooks: Hooks | None = None, only=None) -> list[CriterionResult]:
    results = []
    for fn in CRITERIA:
        number = int(fn.__name__[1:3])
        if only is not None and number not in only:
            continue
        t0 = time.perf_counter()
        if "hooks" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
            res = fn(budget, hooks)
        else:
            res = fn(budget)
        res.runtime_s = time.perf_counter() - t0
        results.append(res)
    return results


def validate_report(budget: Budget = Budget.QUICK, hooks: Hooks | None = None, only=None) -> tuple[int, str, list[CriterionResult]]:
    """Run the checks; returns (exit status, text report, results)."""
    results = run_all(budget, hooks, only)
    failed = sum(not r.passed for r in results)
    lines = [r.line() for r in results]
    lines.append(f"{len(results) - failed}/{len(results)} criteria passed")
    return (1 if failed else 0), "\n".join(lines), results
