"""Seeded block-parallel Monte-Carlo estimators.

Trials are cut into fixed blocks of BLOCK_SIZE. Block b always draws from the
stream seeded by (seed, b), and block results are reduced in block order with
exact float summation, so results do not depend on the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .analytic import mu_eve
from .channel import ChannelBatch, SystemConfig, draw_channel_batch, instantaneous_sinrs

BLOCK_SIZE = 1 << 16
THREADS_ENV = "IRS_NOMA_THREADS"


class EveMode(str, Enum):
    RANDOM = "RandomEve"
    MEAN = "MeanEve"


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    trials: int
    seed: int
    eve_mode: EveMode = EveMode.RANDOM


@dataclass(frozen=True)
class SopEstimates:
    user1: McEstimate
    user2: McEstimate
    network: McEstimate


@dataclass(frozen=True)
class AscEstimates:
    asc1: McEstimate
    asc2: McEstimate
    asc1_unclamped: McEstimate
    asc2_unclamped: McEstimate
    rate_B1: McEstimate
    rate_B2: McEstimate
    rate_E1: McEstimate
    rate_E2: McEstimate


@dataclass(frozen=True)
class EmpiricalCdf:
    grid: np.ndarray
    probs: np.ndarray
    trials: int


@dataclass(frozen=True)
class OmaEstimates:
    sop1: McEstimate
    sop2: McEstimate
    asc1: McEstimate
    asc2: McEstimate


class DegenerateFitError(ValueError):
    pass


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "0") or 0)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), block])))


def _block_sizes(trials: int) -> list[int]:
    full, rest = divmod(int(trials), BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def run_blocks(
    cfg: SystemConfig,
    trials: int,
    seed: int,
    stat: Callable[[ChannelBatch], np.ndarray],
    workers: int | None = None,
) -> np.ndarray:
    """Sum ``stat(batch)`` (a 1-D array of per-block totals) over all blocks."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sizes = _block_sizes(trials)

    def one(b: int) -> np.ndarray:
        batch = draw_channel_batch(cfg, block_rng(seed, b), sizes[b])
        return np.asarray(stat(batch), dtype=float)

    nw = min(worker_count(workers), len(sizes))
    if nw == 1:
        parts = [one(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(nw) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    stacked = np.vstack(parts)
    return np.array([math.fsum(col) for col in stacked.T])


def _pin_eve(batch: ChannelBatch, cfg: SystemConfig, mode: EveMode) -> ChannelBatch:
    if mode is EveMode.RANDOM:
        return batch
    pinned = np.full_like(batch.h_hat_E, cfg.beta * math.sqrt(mu_eve(cfg)))
    return ChannelBatch(batch.h_B1_sq, batch.h_hat_B2, pinned)


def _outage(gamma_b, gamma_e, R: float) -> np.ndarray:
    # clamped secrecy rate below R; R = 0 can never be undercut
    if R <= 0:
        return np.zeros(np.shape(gamma_b), dtype=bool)
    return gamma_b < 2.0**R * (1.0 + gamma_e) - 1.0


def _binomial(count: float, n: int, seed: int, mode: EveMode) -> McEstimate:
    p = count / n
    return McEstimate(p, math.sqrt(max(p * (1.0 - p), 0.0) / n), n, seed, mode)


def _mean(s: float, s2: float, n: int, seed: int, mode: EveMode) -> McEstimate:
    m = s / n
    var = max(s2 / n - m * m, 0.0) * n / max(n - 1, 1)
    return McEstimate(m, math.sqrt(var / n), n, seed, mode)


def estimate_sop_many(
    cfgs: Sequence[SystemConfig],
    trials: int,
    seed: int,
    eve_mode: EveMode | str = EveMode.RANDOM,
    workers: int | None = None,
) -> list[SopEstimates]:
    """SOP for several configs sharing one channel law (common random numbers).

    All configs must agree on N, m1..m3 and beta; they may differ in SNRs,
    rates, powers and distances.
    """
    mode = EveMode(eve_mode)
    base = cfgs[0]
    for c in cfgs[1:]:
        if (c.N, c.m1, c.m2, c.m3, c.beta) != (base.N, base.m1, base.m2, base.m3, base.beta):
            raise ValueError("configs in one MC sweep must share the small-scale channel law")

    def stat(batch: ChannelBatch) -> np.ndarray:
        out = []
        for c in cfgs:
            g1, g2, e1, e2 = instantaneous_sinrs(_pin_eve(batch, c, mode), c)
            o1 = _outage(g1, e1, c.R1)
            o2 = _outage(g2, e2, c.R2)
            out += [o1.sum(), o2.sum(), (o1 | o2).sum()]
        return np.array(out, dtype=float)

    sums = run_blocks(base, trials, seed, stat, workers)
    res = []
    for j in range(len(cfgs)):
        u1, u2, net = sums[3 * j : 3 * j + 3]
        res.append(
            SopEstimates(
                _binomial(u1, trials, seed, mode),
                _binomial(u2, trials, seed, mode),
                _binomial(net, trials, seed, mode),
            )
        )
    return res


def estimate_sop(
    cfg: SystemConfig,
    trials: int,
    seed: int,
    eve_mode: EveMode | str = EveMode.RANDOM,
    workers: int | None = None,
) -> SopEstimates:
    return estimate_sop_many([cfg], trials, seed, eve_mode, workers)[0]


def estimate_asc_many(
    cfgs: Sequence[SystemConfig],
    trials: int,
    seed: int,
    eve_mode: EveMode | str = EveMode.RANDOM,
    workers: int | None = None,
) -> list[AscEstimates]:
    mode = EveMode(eve_mode)
    base = cfgs[0]

    def stat(batch: ChannelBatch) -> np.ndarray:
        out = []
        for c in cfgs:
            g1, g2, e1, e2 = instantaneous_sinrs(_pin_eve(batch, c, mode), c)
            rates = [np.log2(1.0 + g) for g in (g1, g2, e1, e2)]
            d1 = rates[0] - rates[2]
            d2 = rates[1] - rates[3]
            cols = rates + [np.maximum(d1, 0.0), np.maximum(d2, 0.0), d1, d2]
            for v in cols:
                out += [v.sum(), np.dot(v, v)]
        return np.array(out)

    sums = run_blocks(base, trials, seed, stat, workers)
    res = []
    width = 16
    for j in range(len(cfgs)):
        s = sums[width * j : width * (j + 1)]
        est = [_mean(s[2 * q], s[2 * q + 1], trials, seed, mode) for q in range(8)]
        rB1, rB2, rE1, rE2, a1c, a2c, a1u, a2u = est
        res.append(AscEstimates(a1c, a2c, a1u, a2u, rB1, rB2, rE1, rE2))
    return res


def estimate_asc(
    cfg: SystemConfig, trials: int, seed: int, eve_mode: EveMode | str = EveMode.RANDOM, workers: int | None = None
) -> AscEstimates:
    return estimate_asc_many([cfg], trials, seed, eve_mode, workers)[0]


def empirical_cdf_gamma_b2(
    cfg: SystemConfig, trials: int, grid, seed: int = 0, workers: int | None = None
) -> EmpiricalCdf:
    """Fraction of draws with gamma_B2 <= each grid point."""
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")

    def stat(batch: ChannelBatch) -> np.ndarray:
        _, g2, _, _ = instantaneous_sinrs(batch, cfg)
        idx = np.searchsorted(grid, g2, side="left")  # first grid point >= sample
        counts = np.bincount(idx, minlength=len(grid) + 1)[: len(grid)]
        return np.cumsum(counts)

    counts = run_blocks(cfg, trials, seed, stat, workers)
    probs = np.clip(counts / trials, 0.0, 1.0)
    return EmpiricalCdf(grid, probs, int(trials))


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> float:
    """Empirical diversity order: minus the LS slope of log10(P) against log10(rho)."""
    if len(points) < 3:
        raise DegenerateFitError("need at least three points")
    rho_db = np.array([p[0] for p in points], dtype=float)
    prob = np.array([p[1] for p in points], dtype=float)
    if np.any(~(prob > 0)):
        raise DegenerateFitError("all probabilities must be positive")
    if rho_db.max() - rho_db.min() < 10.0:
        raise DegenerateFitError("points must span at least 10 dB")
    slope = np.polyfit(rho_db / 10.0, np.log10(prob), 1)[0]
    return float(-slope)


def oma_baseline(
    cfg: SystemConfig,
    trials: int,
    seed: int,
    eve_mode: EveMode | str = EveMode.RANDOM,
    workers: int | None = None,
) -> OmaEstimates:
    """Time-sharing OMA: each user gets half the resource at full power."""
    return oma_baseline_many([cfg], trials, seed, eve_mode, workers)[0]


def oma_baseline_many(
    cfgs: Sequence[SystemConfig],
    trials: int,
    seed: int,
    eve_mode: EveMode | str = EveMode.RANDOM,
    workers: int | None = None,
) -> list[OmaEstimates]:
    mode = EveMode(eve_mode)

    def stat(batch: ChannelBatch) -> np.ndarray:
        out = []
        for c in cfgs:
            b = _pin_eve(batch, c, mode)
            cb1 = 0.5 * np.log2(1.0 + c.rho * b.h_B1_sq * c.gain_B1)
            cb2 = 0.5 * np.log2(1.0 + c.rho * np.square(b.h_hat_B2) * c.gain_B2)
            ce = 0.5 * np.log2(1.0 + c.rho_e * np.square(b.h_hat_E) * c.gain_E)
            s1 = np.maximum(cb1 - ce, 0.0)
            s2 = np.maximum(cb2 - ce, 0.0)
            o1 = (s1 < c.R1) if c.R1 > 0 else np.zeros_like(s1, dtype=bool)
            o2 = (s2 < c.R2) if c.R2 > 0 else np.zeros_like(s2, dtype=bool)
            out += [o1.sum(), o2.sum(), s1.sum(), np.dot(s1, s1), s2.sum(), np.dot(s2, s2)]
        return np.array(out, dtype=float)

    sums = run_blocks(cfgs[0], trials, seed, stat, workers)
    res = []
    for j in range(len(cfgs)):
        s = sums[6 * j : 6 * j + 6]
        res.append(
            OmaEstimates(
                _binomial(s[0], trials, seed, mode),
                _binomial(s[1], trials, seed, mode),
                _mean(s[2], s[3], trials, seed, mode),
                _mean(s[4], s[5], trials, seed, mode),
            )
        )
    return res
