"""Config files, parameter sweeps, figure presets and CSV tables."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .analytic import (
    BranchBoundaryWarning,
    Method,
    Regime,
    Which,
    asc,
    asc_asymptotic,
    asymptotic_sop,
    ergodic_rate_eve,
    ergodic_rate_user,
    sop1_floor,
    sop_network,
    sop_user1,
    sop_user2,
)
from .channel import SystemConfig
from .montecarlo import EveMode, estimate_asc_many, estimate_sop_many, oma_baseline_many

NOISE_DBM_PER_HZ = -174.0

METRICS = ("sop1", "sop2", "sop_net", "asc1", "asc2", "rates", "asymptotes", "floors", "oma")
PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig8")
META_PREFIX = "sweep."


class ConfigError(ValueError):
    """Bad config input; ``line`` is set for syntax problems."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class Axis(str, Enum):
    RHO_DB = "rho_db"
    RHO_E_DB = "rho_e_db"
    N = "N"


# ---------------------------------------------------------------- config files

_FIELD_TYPES = {f.name: f.type for f in fields(SystemConfig)}
_INT_FIELDS = {"N", "u1", "u2"}

_ALIASES = {
    "d1": "d_1",
    "dB1": "d_B1",
    "dB2": "d_B2",
    "dE": "d_E",
    "alpha1": "alpha_1",
    "alphaB1": "alpha_B1",
    "alphaB2": "alpha_B2",
    "alphaE": "alpha_E",
    "bw": "bandwidth_hz",
}

# keys converted to config fields once the whole file is read
_DERIVED = ("rate_target_bps", "R1_bps", "R2_bps", "tx_power_dbm", "eve_tx_power_dbm")


def noise_dbm(bandwidth_hz: float) -> float:
    return NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz)


def _number(name: str, text: str, line: int | None):
    try:
        if name in _INT_FIELDS:
            val = float(text)
            if val != int(val):
                raise ValueError
            return int(val)
        return float(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot read {text!r} as a number", line) from None


def _read_pairs(text: str) -> list[tuple[str, str, int]]:
    pairs = []
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        # allow several comma-separated assignments on one line
        for chunk in body.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            if "=" not in chunk:
                raise ConfigError(f"expected key=value, got {chunk!r}", no)
            key, val = (s.strip() for s in chunk.split("=", 1))
            if not key or (not val and not key.startswith(META_PREFIX)):
                raise ConfigError(f"empty key or value in {chunk!r}", no)
            pairs.append((key, val, no))
    return pairs


def _build_config(pairs: Iterable[tuple[str, str, int | None]], base: SystemConfig | None = None) -> SystemConfig:
    values = {} if base is None else base.as_dict()
    given: dict[str, float] = {}
    derived: dict[str, tuple[float, int | None]] = {}
    for key, val, no in pairs:
        if key.startswith(META_PREFIX):
            continue
        name = _ALIASES.get(key, key)
        if name in _DERIVED:
            derived[name] = (_number(name, val, no), no)
        elif name in _FIELD_TYPES:
            given[name] = _number(name, val, no)
        else:
            raise ConfigError(f"unknown key {key!r}", no)
    values.update(given)
    # one power coefficient implies the other
    if "a1" in given and "a2" not in given:
        values["a2"] = 1.0 - given["a1"]
    elif "a2" in given and "a1" not in given:
        values["a1"] = 1.0 - given["a2"]
    bw = values.get("bandwidth_hz", SystemConfig.bandwidth_hz)
    if "rate_target_bps" in derived:
        values["R1"] = values["R2"] = derived["rate_target_bps"][0] / bw
    if "R1_bps" in derived:
        values["R1"] = derived["R1_bps"][0] / bw
    if "R2_bps" in derived:
        values["R2"] = derived["R2_bps"][0] / bw
    if "tx_power_dbm" in derived:
        values["rho_db"] = derived["tx_power_dbm"][0] - noise_dbm(bw)
    if "eve_tx_power_dbm" in derived:
        values["rho_e_db"] = derived["eve_tx_power_dbm"][0] - noise_dbm(bw)
    try:
        return SystemConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text: str, base: SystemConfig | None = None) -> SystemConfig:
    return _build_config(_read_pairs(text), base)


def parse_config(path) -> SystemConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def apply_overrides(cfg: SystemConfig, overrides: Sequence[str]) -> SystemConfig:
    pairs = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        pairs.append((k, v, None))
    return _build_config(pairs, cfg)


def config_text(cfg: SystemConfig) -> str:
    return "".join(f"{k}={v!r}\n" for k, v in cfg.as_dict().items())


# ---------------------------------------------------------------- tables


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


@dataclass
class MetricTable:
    """Rows are (group value, axis value) pairs; columns are named ``metric:Method``."""

    axis_name: str
    axis_values: list
    columns: dict[str, list[float]] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)
    group_name: str | None = None
    group_values: list | None = None

    def __post_init__(self):
        n = len(self.axis_values)
        for name, col in self.columns.items():
            if len(col) != n:
                raise ValueError(f"column {name!r} has {len(col)} values for {n} rows")
        if self.group_name is not None and len(self.group_values or []) != n:
            raise ValueError("group column length mismatch")

    @property
    def n_rows(self) -> int:
        return len(self.axis_values)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name], dtype=float)

    def header(self) -> list[str]:
        keys = [self.group_name] if self.group_name else []
        return keys + [self.axis_name] + list(self.columns)

    def rows(self):
        for r in range(self.n_rows):
            keys = [self.group_values[r]] if self.group_name else []
            yield keys + [self.axis_values[r]] + [col[r] for col in self.columns.values()]

    def to_csv(self, stream=None) -> str:
        buf = io.StringIO() if stream is None else stream
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows():
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue() if stream is None else ""

    def metadata_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.metadata.items())

    def write(self, path) -> None:
        """Write the CSV and a ``<path>.meta`` file in config syntax."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            self.to_csv(fh)
        with open(f"{path}.meta", "w", encoding="utf-8") as fh:
            fh.write(self.metadata_text())

    @classmethod
    def stack(cls, group_name: str, parts: Sequence[tuple[object, "MetricTable"]], metadata: dict) -> "MetricTable":
        names = list(parts[0][1].columns)
        for _, t in parts[1:]:
            if list(t.columns) != names:
                raise ValueError("cannot stack tables with different columns")
        axis, groups = [], []
        cols: dict[str, list[float]] = {n: [] for n in names}
        for g, t in parts:
            axis += list(t.axis_values)
            groups += [g] * t.n_rows
            for n in names:
                cols[n] += list(t.columns[n])
        return cls(parts[0][1].axis_name, axis, cols, dict(metadata), group_name, groups)


def _meta(cfg: SystemConfig, **run) -> dict[str, str]:
    meta = {k: repr(v) for k, v in cfg.as_dict().items()}
    for k, v in run.items():
        meta[META_PREFIX + k] = v if isinstance(v, str) else repr(v)
    meta[META_PREFIX + "version"] = __version__
    return meta


# ---------------------------------------------------------------- sweeps


def _config_at(cfg: SystemConfig, axis: Axis, value, tie_eve: bool) -> SystemConfig:
    if axis is Axis.N:
        return cfg.with_(N=int(value))
    change = {axis.value: float(value)}
    if tie_eve and axis is Axis.RHO_DB:
        change["rho_e_db"] = float(value)
    return cfg.with_(**change)


def _analytic_columns(cfgs: list[SystemConfig], metrics: set[str]) -> dict[str, list[float]]:
    cols: dict[str, list[float]] = {}

    def put(name, fn):
        cols[name] = [float(fn(c)) for c in cfgs]

    shapes_differ = cfgs[0].m1 != cfgs[0].m2
    if "sop1" in metrics:
        put("sop1:ClosedForm", sop_user1)
    if "sop2" in metrics:
        put("sop2:LowSNR", lambda c: sop_user2(c, Regime.LOW))
        if shapes_differ:
            put("sop2:HighSNR", lambda c: sop_user2(c, Regime.HIGH))
    if "sop_net" in metrics:
        put("sop_net:ClosedForm", sop_network)
    if "asc1" in metrics:
        put("asc1:Quadrature", lambda c: asc(1, c))
    if "asc2" in metrics:
        put("asc2:Quadrature", lambda c: asc(2, c, Method.QUADRATURE))
        put("asc2:Jensen", lambda c: asc(2, c, Method.JENSEN))
    if "rates" in metrics:
        put("rate_B1:ClosedForm", lambda c: ergodic_rate_user(1, c))
        put("rate_B2:Quadrature", lambda c: ergodic_rate_user(2, c))
        put("rate_E1:Quadrature", lambda c: ergodic_rate_eve(1, c))
        put("rate_E2:Quadrature", lambda c: ergodic_rate_eve(2, c))
    # asymptotes follow whichever family of metrics was asked for
    asym = "asymptotes" in metrics
    want_sop = asym and (bool(metrics & {"sop1", "sop2", "sop_net"}) or not metrics & {"asc1", "asc2"})
    want_asc = asym and (bool(metrics & {"asc1", "asc2"}) or not metrics & {"sop1", "sop2", "sop_net"})
    if want_sop:
        put("sop1:Asymptotic", lambda c: asymptotic_sop(c, Which.USER1))
        if shapes_differ:
            put("sop2:Asymptotic", lambda c: asymptotic_sop(c, Which.USER2))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BranchBoundaryWarning)
                put("sop_net:Asymptotic", lambda c: asymptotic_sop(c, Which.NETWORK))
    if want_asc:
        put("asc1:Asymptotic", lambda c: asc_asymptotic(1, c))
        put("asc2_ceiling:Quadrature", lambda c: asc_asymptotic(2, c, Method.QUADRATURE))
        put("asc2_ceiling:Jensen", lambda c: asc_asymptotic(2, c, Method.JENSEN))
    if "floors" in metrics:
        put("sop1_floor:ClosedForm", sop1_floor)
    return cols


def _mc_columns(
    cfgs: list[SystemConfig], metrics: set[str], trials: int, seed: int, eve_mode: EveMode
) -> dict[str, list[float]]:
    cols: dict[str, list[float]] = {}

    def put(name, ests):
        cols[f"{name}:MC"] = [e.value for e in ests]
        cols[f"{name}:MC_se"] = [e.std_error for e in ests]

    if metrics & {"sop1", "sop2", "sop_net"}:
        sops = estimate_sop_many(cfgs, trials, seed, eve_mode)
        if "sop1" in metrics:
            put("sop1", [s.user1 for s in sops])
        if "sop2" in metrics:
            put("sop2", [s.user2 for s in sops])
        if "sop_net" in metrics:
            put("sop_net", [s.network for s in sops])
    if metrics & {"asc1", "asc2", "rates"}:
        ascs = estimate_asc_many(cfgs, trials, seed, eve_mode)
        if "asc1" in metrics:
            put("asc1", [a.asc1 for a in ascs])
        if "asc2" in metrics:
            put("asc2", [a.asc2 for a in ascs])
        if "rates" in metrics:
            for r in ("rate_B1", "rate_B2", "rate_E1", "rate_E2"):
                put(r, [getattr(a, r) for a in ascs])
    if "oma" in metrics:
        oma = oma_baseline_many(cfgs, trials, seed, eve_mode)
        for r in ("sop1", "sop2", "asc1", "asc2"):
            put(f"oma_{r}", [getattr(o, r) for o in oma])
    return cols


def _merge(parts: list[dict[str, list[float]]]) -> dict[str, list[float]]:
    out: dict[str, list[float]] = {}
    for p in parts:
        for k, v in p.items():
            out.setdefault(k, []).extend(v)
    return out


def run_sweep(
    cfg: SystemConfig,
    axis: Axis | str,
    values: Sequence[float],
    metrics: Iterable[str],
    mc_trials: int = 0,
    seed: int = 0,
    eve_mode: EveMode | str = EveMode.RANDOM,
    tie_eve: bool = False,
) -> MetricTable:
    """Evaluate ``metrics`` along one axis.

    With ``tie_eve`` a rho_db sweep moves Eve's SNR along with the users'.
    MC columns use common random numbers across the axis except along N,
    where each point draws its own channels.
    """
    axis = Axis(axis)
    values = list(values)
    metrics = set(metrics)
    if not values:
        raise ValueError("sweep needs at least one axis value")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("axis values must be sorted")
    unknown = metrics - set(METRICS)
    if unknown or not metrics:
        raise ValueError(f"unknown metrics {sorted(unknown)}; choose from {METRICS}")
    if axis is Axis.N:
        values = [int(v) for v in values]
    else:
        values = [float(v) for v in values]
    eve_mode = EveMode(eve_mode)
    cfgs = [_config_at(cfg, axis, v, tie_eve) for v in values]
    cols = _analytic_columns(cfgs, metrics)
    if mc_trials > 0:
        if axis is Axis.N:
            mc = _merge([_mc_columns([c], metrics, mc_trials, seed, eve_mode) for c in cfgs])
        else:
            mc = _mc_columns(cfgs, metrics, mc_trials, seed, eve_mode)
        cols.update(mc)
    if not cols:
        # oma without MC has nothing to report
        raise ValueError("no columns: the oma baseline needs mc_trials > 0")
    meta = _meta(
        cfg,
        kind="sweep",
        axis=axis.value,
        values=" ".join(_fmt(v) for v in values),
        metrics=" ".join(m for m in METRICS if m in metrics),
        trials=int(mc_trials),
        seed=int(seed),
        eve_mode=eve_mode.value,
        tie_eve=bool(tie_eve),
    )
    return MetricTable(axis.value, values, cols, meta)


# ---------------------------------------------------------------- figure presets


@dataclass(frozen=True)
class Preset:
    axis: Axis
    values: tuple
    metrics: tuple
    group: str | None = None
    group_values: tuple = ()
    fixed: tuple = ()  # (field, value) pairs applied before overrides
    tie_eve: bool = False


def _steps(lo, hi, step):
    return tuple(float(v) for v in np.arange(lo, hi + step / 2, step))


PRESET_TABLE = {
    # user 1 with Eve's SNR tied to the transmit SNR so the floor shows
    "fig2": Preset(Axis.RHO_DB, _steps(0, 140, 10), ("sop1", "floors", "oma"), "N", (1, 3), tie_eve=True),
    "fig3": Preset(Axis.RHO_DB, _steps(0, 120, 10), ("sop2", "oma"), "N", (1, 3)),
    "fig4": Preset(Axis.RHO_DB, _steps(40, 140, 10), ("sop1", "sop2", "asymptotes"), "N", (1, 3), (("rho_e_db", 10.0),)),
    "fig5": Preset(Axis.N, tuple(range(1, 65)), ("sop1", "sop2"), "rho_db", (60.0, 90.0), tie_eve=True),
    "fig6": Preset(
        Axis.RHO_DB, _steps(0, 100, 5), ("asc1", "asc2", "asymptotes"), fixed=(("N", 30), ("rho_e_db", 30.0))
    ),
    "fig8": Preset(Axis.RHO_DB, _steps(0, 100, 10), ("asc1", "asc2"), "N", (1, 5, 10, 20, 30, 40, 50, 60), tie_eve=True),
}


def figure_preset(
    name: str,
    cfg: SystemConfig | None = None,
    overrides: Sequence[str] = (),
    mc_trials: int = 0,
    seed: int = 0,
    eve_mode: EveMode | str = EveMode.RANDOM,
) -> MetricTable:
    """Table behind one of the numbered figures.

    Overrides are applied after the preset's fixed parameters. Overriding the
    preset's grouping key (N, or rho_db for fig5) replaces its list of groups.
    """
    if name not in PRESET_TABLE:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
    p = PRESET_TABLE[name]
    base = SystemConfig() if cfg is None else cfg
    base = base.with_(**dict(p.fixed))
    base = apply_overrides(base, overrides)
    groups = list(p.group_values)
    if p.group is not None:
        for item in overrides:
            key = item.split("=", 1)[0].strip()
            if _ALIASES.get(key, key) == p.group:
                groups = [getattr(base, p.group)]
    eve_mode = EveMode(eve_mode)
    run_meta = dict(
        kind="figure",
        figure=name,
        overrides=" ".join(overrides),
        trials=int(mc_trials),
        seed=int(seed),
        eve_mode=eve_mode.value,
    )
    if p.group is None:
        t = run_sweep(base, p.axis, p.values, p.metrics, mc_trials, seed, eve_mode, p.tie_eve)
        t.metadata = _meta(cfg if cfg is not None else SystemConfig(), **run_meta)
        return t
    parts = []
    for g in groups:
        gcfg = base.with_(**{p.group: int(g) if p.group == "N" else float(g)})
        values = p.values
        if p.axis is Axis.N and p.group == "rho_db" and p.tie_eve:
            gcfg = gcfg.with_(rho_e_db=float(g))
        parts.append((g, run_sweep(gcfg, p.axis, values, p.metrics, mc_trials, seed, eve_mode, p.tie_eve)))
    return MetricTable.stack(p.group, parts, _meta(cfg if cfg is not None else SystemConfig(), **run_meta))


# ---------------------------------------------------------------- round trip


def rerun_from_metadata(text: str) -> MetricTable:
    """Re-run the sweep or preset described by a table's metadata."""
    pairs = _read_pairs(text)
    run = {k[len(META_PREFIX) :]: v for k, v, _ in pairs if k.startswith(META_PREFIX)}
    cfg = _build_config(pairs)
    trials, seed = int(run.get("trials", "0")), int(run.get("seed", "0"))
    mode = run.get("eve_mode", EveMode.RANDOM.value)
    if run.get("kind") == "figure":
        overrides = run.get("overrides", "").split()
        return figure_preset(run["figure"], cfg, overrides, trials, seed, mode)
    axis = Axis(run["axis"])
    values = [float(v) for v in run["values"].split()]
    return run_sweep(cfg, axis, values, run["metrics"].split(), trials, seed, mode, run.get("tie_eve") == "True")
