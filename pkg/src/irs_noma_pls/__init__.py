"""Secrecy analysis of IRS-aided two-user NOMA downlinks with an eavesdropper."""

__version__ = "0.1.0"

from .channel import PairStats, SystemConfig, expected_gain_squared, pair_stats  # noqa: E402
from .analytic import (  # noqa: E402
    Method,
    Regime,
    Which,
    asc,
    asc_asymptotic,
    asymptotic_sop,
    secrecy_metrics,
    sop1_floor,
    sop_network,
    sop_user1,
    sop_user2,
)

__all__ = [
    "PairStats",
    "SystemConfig",
    "expected_gain_squared",
    "pair_stats",
    "Method",
    "Regime",
    "Which",
    "asc",
    "asc_asymptotic",
    "asymptotic_sop",
    "secrecy_metrics",
    "sop1_floor",
    "sop_network",
    "sop_user1",
    "sop_user2",
]
