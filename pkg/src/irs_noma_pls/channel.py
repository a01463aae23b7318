"""Scenario configuration, cascaded-fading statistics and channel sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .specfun import hyp2f1_at_minus1

_HALF_LOG_PI = 0.5 * math.log(math.pi)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """One downlink scenario. Distances in metres, SNRs in dB, rates in bits/s/Hz."""

    a1: float = 0.2
    a2: float = 0.8
    N: int = 1
    m1: float = 3.0
    m2: float = 1.0
    m3: float = 1.0
    d_B1: float = 20.0
    d_1: float = 100.0
    d_B2: float = 10.0
    d_E: float = 50.0
    alpha_B1: float = 3.5
    alpha_1: float = 2.5
    alpha_B2: float = 2.5
    alpha_E: float = 2.5
    rho_db: float = 20.0
    rho_e_db: float = 10.0
    R1: float = 0.1
    R2: float = 0.1
    bandwidth_hz: float = 1e6
    beta: float = 1.0
    u1: int = 100
    u2: int = 100

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("invalid SystemConfig: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if abs(self.a1 + self.a2 - 1.0) > 1e-12:
            out.append(f"a1 + a2 must equal 1 (got {self.a1 + self.a2!r})")
        if not 0 < self.a1 < self.a2:
            out.append(f"need 0 < a1 < a2 (got a1={self.a1}, a2={self.a2})")
        if int(self.N) != self.N or self.N < 1:
            out.append(f"N must be a positive integer (got {self.N})")
        for name in ("m1", "m2", "m3"):
            if not getattr(self, name) >= 0.5:
                out.append(f"{name} must be >= 0.5 (got {getattr(self, name)})")
        for name in ("d_B1", "d_1", "d_B2", "d_E"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0 (got {getattr(self, name)})")
        for name in ("alpha_B1", "alpha_1", "alpha_B2", "alpha_E"):
            if not getattr(self, name) >= 2:
                out.append(f"{name} must be >= 2 (got {getattr(self, name)})")
        if not 0 < self.beta <= 1:
            out.append(f"beta must lie in (0, 1] (got {self.beta})")
        if self.R1 < 0 or self.R2 < 0:
            out.append("rate targets must be nonnegative")
        if not self.bandwidth_hz > 0:
            out.append("bandwidth_hz must be > 0")
        if self.u1 < 1 or self.u2 < 1:
            out.append("quadrature orders u1, u2 must be >= 1")
        return out

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    # derived quantities used all over the analytic module

    @property
    def rho(self) -> float:
        return db_to_linear(self.rho_db)

    @property
    def rho_e(self) -> float:
        return db_to_linear(self.rho_e_db)

    @property
    def gain_B1(self) -> float:
        return path_gain(self.d_B1, self.alpha_B1)

    @property
    def gain_B2(self) -> float:
        """Reflected-link large-scale gain d_1^-alpha_1 * d_B2^-alpha_B2."""
        return path_gain(self.d_1, self.alpha_1) * path_gain(self.d_B2, self.alpha_B2)

    @property
    def gain_E(self) -> float:
        return path_gain(self.d_1, self.alpha_1) * path_gain(self.d_E, self.alpha_E)

    @property
    def user2_pair(self) -> "PairStats":
        return pair_stats(self.m1, self.m2)

    @property
    def eve_pair(self) -> "PairStats":
        return pair_stats(self.m1, self.m3)


def path_gain(d: float, alpha: float) -> float:
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    return d ** (-alpha)


# ---------------------------------------------------------------- pair statistics


@dataclass(frozen=True)
class PairStats:
    """Constants of one cascaded pair z = |g||h| with Nakagami shapes (m_c <= m_d)."""

    m_c: float
    m_d: float
    eps: float
    m_tilde: float | None
    a: float
    b: float
    c: float
    d: float
    log_omega: float
    k1: float
    k2: float
    k3: float

    @property
    def omega(self) -> float:
        return math.exp(self.log_omega)

    def lam(self, N: int) -> float:
        return N * self.eps / (1.0 - self.eps)

    @property
    def log_m_tilde(self) -> float:
        if self.m_tilde is None:
            raise ValueError("m_tilde is undefined for equal shape parameters")
        return math.log(self.m_tilde)

    def mho_terms(self, N: int) -> tuple[float, float, float, float]:
        a, b, c, d, k1, k2, k3 = self.a, self.b, self.c, self.d, self.k1, self.k2, self.k3
        d2 = d * d
        mho1 = (a * N + 1) / d2
        mho2 = 4 * a * b * b * k2 * k2 / (c * c * d2 * k1 * k1) * (N - 1)
        mho3 = 4 * a * b * N * k2 / (c * d2 * k1)
        # the 1/k1 on the last group comes from differentiating the normalised transform
        mho4 = (4 * (a + 1) * (b * b + b) / ((c * c + c) * d2) * k3 - 4 * b / (c * d2) * k2) / k1
        return mho1, mho2, mho3, mho4

    def mho(self, N: int) -> float:
        m1, m2, m3, m4 = self.mho_terms(N)
        return m1 + m2 - m3 + m4


def _log_nakagami_mean_ratio(m: float) -> float:
    # log(Gamma(m + 1/2) / Gamma(m))
    return math.lgamma(m + 0.5) - math.lgamma(m)


def pair_stats(m_a: float, m_b: float) -> PairStats:
    if not (m_a >= 0.5 and m_b >= 0.5):
        raise ValueError(f"Nakagami shapes must be >= 0.5 (got {m_a}, {m_b})")
    mc, md = min(m_a, m_b), max(m_a, m_b)
    log_eps = (
        2 * _log_nakagami_mean_ratio(m_a) + 2 * _log_nakagami_mean_ratio(m_b) - math.log(m_a * m_b)
    )
    eps = math.exp(log_eps)
    a = 2 * mc
    b = mc - md + 0.5
    c = 1 + a - b  # = mc + md + 1/2, written so the identity is exact in floating point
    d = 2 * math.sqrt(mc * md)
    log_omega = (
        _HALF_LOG_PI
        + (mc - md + 1) * math.log(4)
        + mc * math.log(mc * md)
        + math.lgamma(2 * mc)
        + math.lgamma(2 * md)
        - math.lgamma(mc)
        - math.lgamma(md)
        - math.lgamma(mc + md + 0.5)
    )
    m_tilde = None
    if mc != md:
        m_tilde = math.exp(
            _HALF_LOG_PI
            + (mc - md + 1) * math.log(4)
            + mc * math.log(mc * md)
            + math.lgamma(2 * mc)
            + math.lgamma(2 * md - 2 * mc)
            - math.lgamma(mc)
            - math.lgamma(md)
            - math.lgamma(md - mc + 0.5)
        )
    k1 = hyp2f1_at_minus1(a, b, c)
    k2 = hyp2f1_at_minus1(a + 1, b + 1, c + 1)
    k3 = hyp2f1_at_minus1(a + 2, b + 2, c + 2)
    return PairStats(mc, md, eps, m_tilde, a, b, c, d, log_omega, k1, k2, k3)


def expected_gain_squared(pair: PairStats, N: int) -> float:
    """E[Z^2] for Z = sum_n |g_n||h_n| from the second derivative of the Laplace transform."""
    if N < 1:
        raise ValueError("N must be >= 1")
    mho = pair.mho(N)
    if not mho > 0:
        raise ArithmeticError(f"nonpositive moment bracket {mho!r}")
    log_val = (
        math.log(pair.a * N)
        + N * pair.log_omega
        - pair.a * N * math.log(pair.d)
        + N * math.log(pair.k1)
        + math.log(mho)
    )
    if log_val > 700:
        raise OverflowError(f"E[Z^2] not representable for N={N}")
    return math.exp(log_val)


def gain_squared_oracle(pair: PairStats, N: int) -> float:
    return N + N * (N - 1) * pair.eps


def mu1_growth_factor(pair: PairStats) -> float:
    """Per-element growth factor from the large-N argument, in its simplified printed form."""
    mc, md = pair.m_c, pair.m_d
    return math.exp(
        (2 * mc - 1) * math.log(2)
        + (mc - 0.5) * math.log(mc * md)
        + math.lgamma(mc)
        + math.lgamma(md)
    )


def normalised_growth_ratio(pair: PairStats) -> float:
    """omega * k1 / d evaluated directly (equals d**(a-1) since omega*k1 = d**a)."""
    return math.exp(pair.log_omega + math.log(pair.k1) - math.log(pair.d))


# ---------------------------------------------------------------- sampling


@dataclass(frozen=True)
class ChannelDraw:
    h: np.ndarray
    g_B2: np.ndarray
    g_E: np.ndarray
    h_B1_sq: float
    h_hat_B2: float
    h_hat_E: float


def sample_nakagami(m: float, rng: np.random.Generator, size=None):
    """Unit-power Nakagami-m magnitude: sqrt of Gamma(m, 1/m)."""
    if not m >= 0.5:
        raise ValueError(f"Nakagami shape must be >= 0.5, got {m}")
    return np.sqrt(rng.gamma(m, 1.0 / m, size=size))


def draw_channels(cfg: SystemConfig, rng: np.random.Generator) -> ChannelDraw:
    N = int(cfg.N)
    h = sample_nakagami(cfg.m1, rng, N)
    g2 = sample_nakagami(cfg.m2, rng, N)
    gE = sample_nakagami(cfg.m3, rng, N)
    hb1 = float(rng.exponential(1.0))
    return ChannelDraw(h, g2, gE, hb1, cfg.beta * float(g2 @ h), cfg.beta * float(gE @ h))


@dataclass(frozen=True)
class ChannelBatch:
    """Vectorised counterpart of ChannelDraw, one row per trial."""

    h_B1_sq: np.ndarray
    h_hat_B2: np.ndarray
    h_hat_E: np.ndarray


def draw_channel_batch(cfg: SystemConfig, rng: np.random.Generator, trials: int) -> ChannelBatch:
    N = int(cfg.N)
    h = sample_nakagami(cfg.m1, rng, (trials, N))
    g2 = sample_nakagami(cfg.m2, rng, (trials, N))
    gE = sample_nakagami(cfg.m3, rng, (trials, N))
    hb1 = rng.exponential(1.0, size=trials)
    return ChannelBatch(hb1, cfg.beta * np.einsum("ij,ij->i", g2, h), cfg.beta * np.einsum("ij,ij->i", gE, h))


def instantaneous_sinrs(draw, cfg: SystemConfig):
    """(gamma_B1, gamma_B2, gamma_E1, gamma_E2); works on a ChannelDraw or ChannelBatch."""
    rho = cfg.rho
    gamma_b1 = rho * cfg.a1 * draw.h_B1_sq * cfg.gain_B1
    s2 = np.square(draw.h_hat_B2) * cfg.gain_B2
    gamma_b2 = cfg.a2 * s2 / (cfg.a1 * s2 + 1.0 / rho)
    sE = cfg.rho_e * np.square(draw.h_hat_E) * cfg.gain_E
    return gamma_b1, gamma_b2, cfg.a1 * sE, cfg.a2 * sE
