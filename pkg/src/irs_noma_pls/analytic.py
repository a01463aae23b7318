"""Closed-form secrecy metrics: CDFs, SOP, ergodic rates, ASC and their asymptotes.

Reflected-link gains carry the IRS amplitude as beta**2 so that the closed forms
stay consistent with the sampler when beta < 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .channel import SystemConfig, expected_gain_squared
from .specfun import (
    EULER_GAMMA,
    DEFAULT_SERIES,
    SeriesControl,
    chebyshev_gauss_rule,
    exp_e1_scaled,
    gauss_laguerre_rule,
    log_lower_incomplete_gamma,
    marcum_q_half,
    poisson_mixture_sum,
    regularized_gamma_pq,
)

LN2 = math.log(2.0)
LOW_HIGH_SWITCH_DB = 30.0


class Method(str, Enum):
    CLOSED_FORM = "ClosedForm"
    LOW_SNR = "LowSNR"
    HIGH_SNR = "HighSNR"
    ASYMPTOTIC = "Asymptotic"
    JENSEN = "Jensen"
    QUADRATURE = "Quadrature"


class Regime(str, Enum):
    LOW = "Low"
    HIGH = "High"


class Which(str, Enum):
    USER1 = "User1"
    USER2 = "User2"
    NETWORK = "Network"


class BranchBoundaryWarning(UserWarning):
    """m_s * N == 1: the network asymptote has no unique dominant user."""


def _clip01(p: float) -> float:
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------- shared pieces


def refl_gain_B2(cfg: SystemConfig) -> float:
    return cfg.beta**2 * cfg.gain_B2


def refl_gain_E(cfg: SystemConfig) -> float:
    return cfg.beta**2 * cfg.gain_E


def mu_eve(cfg: SystemConfig) -> float:
    """E|h_E|^2 for the (m1, m3) pair."""
    return expected_gain_squared(cfg.eve_pair, int(cfg.N))


def mu_user2(cfg: SystemConfig) -> float:
    return expected_gain_squared(cfg.user2_pair, int(cfg.N))


def threshold_user1(cfg: SystemConfig) -> float:
    return 2.0**cfg.R1 * (1.0 + cfg.a1 * cfg.rho_e * mu_eve(cfg) * refl_gain_E(cfg)) - 1.0


def threshold_user2(cfg: SystemConfig) -> float:
    return 2.0**cfg.R2 * (1.0 + cfg.a2 * mu_eve(cfg) * cfg.rho_e * refl_gain_E(cfg)) - 1.0


def _tail_constants(cfg: SystemConfig):
    pair = cfg.user2_pair
    if pair.m_tilde is None:
        raise ValueError("high-SNR expressions need m1 != m2")
    return pair.m_c, pair.m_d, pair.log_m_tilde


# ---------------------------------------------------------------- CDFs


def cdf_gamma_b1(x: float, cfg: SystemConfig) -> float:
    if x <= 0:
        return 0.0
    return -math.expm1(-x / (cfg.a1 * cfg.rho * cfg.gain_B1))


def _scaled_b2_argument(x: float, cfg: SystemConfig) -> float:
    # x / (rho (a2 - a1 x) L), the squared-gain threshold for gamma_B2 < x
    return x / (cfg.rho * (cfg.a2 - cfg.a1 * x) * refl_gain_B2(cfg))


def cdf_gamma_b2_low(x: float, cfg: SystemConfig) -> float:
    if x <= 0:
        return 0.0
    if x >= cfg.a2 / cfg.a1:
        return 1.0
    pair = cfg.user2_pair
    N = int(cfg.N)
    y = _scaled_b2_argument(x, cfg) / (N * (1.0 - pair.eps))
    return _clip01(1.0 - marcum_q_half(math.sqrt(pair.lam(N)), math.sqrt(y)))


def _high_snr_cdf_of_gain(z_sq: float, cfg: SystemConfig) -> float:
    """Gamma-form approximation of P(Z^2 < z_sq) near the origin."""
    ms, ml, log_mt = _tail_constants(cfg)
    N = int(cfg.N)
    shape = 2 * ms * N
    arg = 2.0 * math.sqrt(ms * ml * z_sq)
    log_pref = N * log_mt - ms * N * math.log(4 * ms * ml) - math.lgamma(shape)
    return _clip01(math.exp(log_pref + log_lower_incomplete_gamma(shape, arg)))


def cdf_gamma_b2_high(x: float, cfg: SystemConfig) -> float:
    _tail_constants(cfg)
    if x <= 0:
        return 0.0
    if x >= cfg.a2 / cfg.a1:
        return 1.0
    return _high_snr_cdf_of_gain(_scaled_b2_argument(x, cfg), cfg)


# ---------------------------------------------------------------- SOP


def sop_user1(cfg: SystemConfig) -> float:
    return _clip01(cdf_gamma_b1(threshold_user1(cfg), cfg))


def default_regime(cfg: SystemConfig) -> Regime:
    if cfg.rho_db <= LOW_HIGH_SWITCH_DB or cfg.m1 == cfg.m2:
        return Regime.LOW
    return Regime.HIGH


def sop_user2(cfg: SystemConfig, regime: Regime | str | None = None, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    regime = default_regime(cfg) if regime is None else Regime(regime)
    if regime is Regime.HIGH:
        _tail_constants(cfg)
    y2 = threshold_user2(cfg)
    if y2 >= cfg.a2 / cfg.a1:
        return 1.0
    if y2 <= 0:
        return 0.0
    if regime is Regime.HIGH:
        return _high_snr_cdf_of_gain(_scaled_b2_argument(y2, cfg), cfg)
    pair = cfg.user2_pair
    N = int(cfg.N)
    y_low = _scaled_b2_argument(y2, cfg) / (N * (1.0 - pair.eps))
    half = y_low / 2.0

    def term(k: int) -> float:
        # gamma(k + 1/2, y/2) / Gamma(k + 1/2); the weight's 1/Gamma(k+1/2) is folded in
        return math.exp(log_lower_incomplete_gamma(k + 0.5, half) - math.lgamma(k + 0.5))

    return _clip01(poisson_mixture_sum(pair.lam(N), term, ctrl))


def sop_network(cfg: SystemConfig, regime: Regime | str | None = None) -> float:
    p1 = sop_user1(cfg)
    p2 = sop_user2(cfg, regime)
    return _clip01(1.0 - (1.0 - p1) * (1.0 - p2))


def asymptotic_sop(cfg: SystemConfig, which: Which | str) -> float:
    """Leading-order high-SNR SOP; deliberately not clipped to [0, 1]."""
    which = Which(which)
    if which is Which.USER1:
        return threshold_user1(cfg) / (cfg.a1 * cfg.rho * cfg.gain_B1)
    ms, _, log_mt = _tail_constants(cfg)
    N = int(cfg.N)
    y2 = threshold_user2(cfg)
    if y2 >= cfg.a2 / cfg.a1:
        p2 = math.inf
    else:
        ratio = _scaled_b2_argument(y2, cfg)  # y_h ** 2
        p2 = math.exp(N * log_mt + ms * N * math.log(ratio) - math.lgamma(2 * ms * N + 1))
    if which is Which.USER2:
        return p2
    order = ms * N
    p1 = asymptotic_sop(cfg, Which.USER1)
    if order < 1:
        return p2
    if order > 1:
        return p1
    warnings.warn("m_s*N == 1: returning the larger of the two asymptotic branches", BranchBoundaryWarning)
    return max(p1, p2)


def sop1_floor(cfg: SystemConfig) -> float:
    return _clip01(2.0**cfg.R1 * mu_eve(cfg) * refl_gain_E(cfg) / cfg.gain_B1)


@dataclass(frozen=True)
class AsymptoticSummary:
    diversity_user1: float
    diversity_user2: float
    diversity_network: float
    slope_user1: float
    slope_user2: float
    sop1_floor: float


def diversity_and_slopes(cfg: SystemConfig) -> AsymptoticSummary:
    ms = min(cfg.m1, cfg.m2)
    d2 = ms * int(cfg.N)
    return AsymptoticSummary(1.0, d2, min(1.0, d2), 1.0, 0.0, sop1_floor(cfg))


# ---------------------------------------------------------------- ergodic rates


@lru_cache(maxsize=512)
def _laguerre(n: int, alpha: float = 0.0, normalized: bool = False):
    return gauss_laguerre_rule(n, alpha, normalized=normalized)


@lru_cache(maxsize=64)
def _chebyshev(n: int):
    return chebyshev_gauss_rule(n)


def _eve_scale(i: int, cfg: SystemConfig) -> float:
    # gamma_Ei = scale * X with X noncentral chi-square(1, lambda_e)
    a_i = {1: cfg.a1, 2: cfg.a2}[i]
    return a_i * cfg.rho_e * int(cfg.N) * (1.0 - cfg.eve_pair.eps) * refl_gain_E(cfg)


def ergodic_rate_eve(
    i: int, cfg: SystemConfig, method: str = "scaled", ctrl: SeriesControl = DEFAULT_SERIES
) -> float:
    """Eve's ergodic rate on user i's stream (bits/s/Hz).

    Both methods sum the noncentral-chi-square Poisson mixture over k. ``literal``
    applies the standard Gauss-Laguerre rule to the raw integration variable x,
    exactly as the closed form is printed. ``scaled`` rescales x by the Eve SNR
    scale and uses the Gauss-Laguerre rule with exponent k - 1/2, which keeps the
    rule accurate when the SNR scale is far from unity.
    """
    if i not in (1, 2):
        raise ValueError("user index must be 1 or 2")
    scale = _eve_scale(i, cfg)
    if scale == 0.0:
        return 0.0
    lam_e = cfg.eve_pair.lam(int(cfg.N))
    n = int(cfg.u1)
    if method == "scaled":

        def term(k: int) -> float:
            rule = _laguerre(n, k - 0.5, True)
            # E[ln(1 + 2 scale Y)] with Y ~ Gamma(k + 1/2, 1)
            return float(np.dot(rule.weights, np.log1p(2.0 * scale * rule.nodes)))

    elif method == "literal":
        rule = _laguerre(n, 0.0)
        x = rule.nodes
        w_ex = np.exp(np.log(rule.weights) + x) / (1.0 + x)

        def term(k: int) -> float:
            _, q = regularized_gamma_pq(k + 0.5, x / (2.0 * scale))
            return float(np.dot(w_ex, q))

    else:
        raise ValueError(f"unknown method {method!r}")
    return poisson_mixture_sum(lam_e, term, ctrl) / LN2


def ergodic_rate_user(
    i: int, cfg: SystemConfig, as_printed: bool = False, ctrl: SeriesControl = DEFAULT_SERIES
) -> float:
    """Ergodic rate of user i.

    User 1 is exact (Rayleigh direct link). User 2 uses the low-SNR CDF under a
    Chebyshev-Gauss rule. The CDF argument is halved as in the mixture form of
    the low-SNR CDF; ``as_printed`` drops the halving to reproduce the printed
    kernel.
    """
    if i == 1:
        s = cfg.a1 * cfg.rho * cfg.gain_B1
        return exp_e1_scaled(1.0 / s) / LN2
    if i != 2:
        raise ValueError("user index must be 1 or 2")
    pair = cfg.user2_pair
    N = int(cfg.N)
    rule = _chebyshev(int(cfg.u2))
    t = rule.nodes
    denom = N * (1.0 - pair.eps) * cfg.rho * cfg.a1 * (1.0 - t) * refl_gain_B2(cfg)
    y = (t + 1.0) / denom
    arg = y if as_printed else y / 2.0
    kernel = rule.weights * np.sqrt(1.0 - t * t) / (1.0 + t + 2.0 * cfg.a1 / cfg.a2)

    def term(k: int) -> float:
        p, _ = regularized_gamma_pq(k + 0.5, arg)
        return float(np.dot(kernel, p))

    ceiling = math.log2(1.0 + cfg.a2 / cfg.a1)
    loss = poisson_mixture_sum(pair.lam(N), term, ctrl)
    return min(ceiling, max(0.0, ceiling - loss / LN2))


# ---------------------------------------------------------------- ASC


def _jensen_gain(cfg: SystemConfig, as_printed: bool) -> float:
    if as_printed:
        # printed symbols: reflected gain taken as d_1^-alpha_1 * d_B1^-alpha_B1
        return cfg.beta**2 * cfg.gain_B1 * (cfg.d_1 ** (-cfg.alpha_1))
    return refl_gain_B2(cfg)


def asc(
    user: int,
    cfg: SystemConfig,
    method: Method | str = Method.QUADRATURE,
    as_printed: bool = False,
    eve_method: str = "scaled",
) -> float:
    method = Method(method)
    if method not in (Method.QUADRATURE, Method.JENSEN):
        raise ValueError(f"asc supports Quadrature or Jensen, got {method.value}")
    if user == 1:
        if method is not Method.QUADRATURE:
            raise ValueError("the Jensen approach is only defined for user 2")
        val = ergodic_rate_user(1, cfg) - ergodic_rate_eve(1, cfg, eve_method)
    elif user == 2:
        if method is Method.QUADRATURE:
            val = ergodic_rate_user(2, cfg, as_printed) - ergodic_rate_eve(2, cfg, eve_method)
        else:
            g = mu_user2(cfg) * cfg.rho * _jensen_gain(cfg, as_printed)
            eve = 1.0 + cfg.a2 * mu_eve(cfg) * refl_gain_E(cfg) * cfg.rho_e
            val = math.log2((g + 1.0) / ((cfg.a1 * g + 1.0) * eve))
    else:
        raise ValueError("user index must be 1 or 2")
    return max(0.0, val)


def asc_asymptotic(
    user: int,
    cfg: SystemConfig,
    method: Method | str = Method.QUADRATURE,
    as_printed: bool = False,
    eve_method: str = "scaled",
) -> float:
    """High-SNR ASC expansion (user 1) or ceiling (user 2); not clipped."""
    method = Method(method)
    if user == 1:
        s = cfg.a1 * cfg.rho * cfg.gain_B1
        lead = -math.log2(s) if as_printed else math.log2(s)
        return lead - EULER_GAMMA / LN2 - ergodic_rate_eve(1, cfg, eve_method)
    if user != 2:
        raise ValueError("user index must be 1 or 2")
    if method is Method.QUADRATURE:
        return math.log2(1.0 + cfg.a2 / cfg.a1) - ergodic_rate_eve(2, cfg, eve_method)
    if method is Method.JENSEN:
        return math.log2(1.0 / (cfg.a1 * (1.0 + cfg.a2 * mu_eve(cfg) * cfg.rho_e * refl_gain_E(cfg))))
    raise ValueError(f"unsupported method {method.value}")


@dataclass(frozen=True)
class SecrecyMetrics:
    sop1: float
    sop2: float
    sop_network: float
    asc1: float
    asc2: float
    asc2_jensen: float
    methods: dict


def secrecy_metrics(cfg: SystemConfig, regime: Regime | str | None = None) -> SecrecyMetrics:
    regime = default_regime(cfg) if regime is None else Regime(regime)
    p1 = sop_user1(cfg)
    p2 = sop_user2(cfg, regime)
    tags = {
        "sop1": Method.CLOSED_FORM,
        "sop2": Method.LOW_SNR if regime is Regime.LOW else Method.HIGH_SNR,
        "sop_network": Method.CLOSED_FORM,
        "asc1": Method.QUADRATURE,
        "asc2": Method.QUADRATURE,
        "asc2_jensen": Method.JENSEN,
    }
    return SecrecyMetrics(
        p1,
        p2,
        _clip01(1.0 - (1.0 - p1) * (1.0 - p2)),
        asc(1, cfg),
        asc(2, cfg, Method.QUADRATURE),
        asc(2, cfg, Method.JENSEN),
        tags,
    )
