"""Command-line entry point: stats, sweep, figure, mc, validate."""

from __future__ import annotations

import argparse
import math
import sys
import warnings

from . import __version__
from .acceptance import Budget, Hooks, validate_report
from .analytic import (
    BranchBoundaryWarning,
    Which,
    asymptotic_sop,
    diversity_and_slopes,
    mu_eve,
    mu_user2,
    secrecy_metrics,
)
from .channel import SystemConfig
from .montecarlo import THREADS_ENV, EveMode, estimate_asc, estimate_sop, worker_count
from .sweep import (
    METRICS,
    PRESETS,
    Axis,
    ConfigError,
    MetricTable,
    apply_overrides,
    figure_preset,
    parse_config,
    run_sweep,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

PLOT_SCRIPT = '''"""Plot every numeric column of a sweep CSV against its axis."""
import sys

import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv(sys.argv[1] if len(sys.argv) > 1 else "{csv}")
keys = list(df.columns[:{nkeys}])
axis = keys[-1]
groups = df.groupby(keys[0]) if len(keys) > 1 else [(None, df)]
for g, part in groups:
    for col in df.columns[{nkeys}:]:
        if col.endswith("_se"):
            continue
        label = col if g is None else f"{{col}} ({{keys[0]}}={{g}})"
        plt.plot(part[axis], part[col], marker=".", label=label)
plt.xlabel(axis)
plt.yscale("log" if "sop" in " ".join(df.columns) else "linear")
plt.legend(fontsize=6)
plt.savefig("{csv}.png", dpi=150)
'''


def parse_values(text: str) -> list[float]:
    """'0:40:5' (inclusive range) or '1,3,10'."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"range must be start:stop:step with step > 0, got {text!r}")
        lo, hi, step = parts
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(n)]
    return [float(v) for v in text.split(",") if v.strip()]


def _load_config(args) -> SystemConfig:
    cfg = parse_config(args.config) if args.config else SystemConfig()
    return apply_overrides(cfg, args.override or [])


def _emit(table: MetricTable, args) -> None:
    if args.out:
        table.write(args.out)
        if getattr(args, "plot_script", False):
            nkeys = 2 if table.group_name else 1
            with open(f"{args.out}.plot.py", "w", encoding="utf-8") as fh:
                fh.write(PLOT_SCRIPT.format(csv=args.out, nkeys=nkeys))
    else:
        sys.stdout.write(table.to_csv())


def cmd_stats(args) -> int:
    cfg = _load_config(args)
    N = int(cfg.N)
    up, ep = cfg.user2_pair, cfg.eve_pair
    summary = diversity_and_slopes(cfg)
    rows = [
        ("eps (user 2)", up.eps),
        ("lambda (user 2)", up.lam(N)),
        ("m_tilde (user 2)", up.m_tilde if up.m_tilde is not None else math.nan),
        ("eps (Eve)", ep.eps),
        ("lambda (Eve)", ep.lam(N)),
        ("mu (Eve)", mu_eve(cfg)),
        ("mu2 (user 2)", mu_user2(cfg)),
        ("diversity user 1", summary.diversity_user1),
        ("diversity user 2", summary.diversity_user2),
        ("diversity network", summary.diversity_network),
        ("high-SNR slope user 1", summary.slope_user1),
        ("high-SNR slope user 2", summary.slope_user2),
        ("SOP1 floor", summary.sop1_floor),
    ]
    m = secrecy_metrics(cfg)
    rows += [
        ("SOP1", m.sop1),
        (f"SOP2 [{m.methods['sop2'].value}]", m.sop2),
        ("SOP network", m.sop_network),
        ("ASC1", m.asc1),
        ("ASC2 [Quadrature]", m.asc2),
        ("ASC2 [Jensen]", m.asc2_jensen),
        ("SOP1 asymptote", asymptotic_sop(cfg, Which.USER1)),
    ]
    if cfg.m1 != cfg.m2:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BranchBoundaryWarning)
            rows.append(("SOP2 asymptote", asymptotic_sop(cfg, Which.USER2)))
    width = max(len(r[0]) for r in rows)
    for name, val in rows:
        print(f"{name:<{width}}  {val:.10g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    table = run_sweep(
        cfg, Axis(args.axis), parse_values(args.values), metrics, args.trials or 0, args.seed, args.eve_mode, args.tie_eve
    )
    _emit(table, args)
    return EXIT_OK


def cmd_figure(args) -> int:
    base = parse_config(args.config) if args.config else None
    trials = 100_000 if args.trials is None else args.trials
    table = figure_preset(args.name, base, args.override or [], trials, args.seed, args.eve_mode)
    _emit(table, args)
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = _load_config(args)
    trials = 1_000_000 if args.trials is None else args.trials
    sop = estimate_sop(cfg, trials, args.seed, args.eve_mode)
    ac = estimate_asc(cfg, trials, args.seed, args.eve_mode)
    rows = [
        ("sop1", sop.user1),
        ("sop2", sop.user2),
        ("sop_net", sop.network),
        ("asc1", ac.asc1),
        ("asc2", ac.asc2),
        ("rate_B1", ac.rate_B1),
        ("rate_B2", ac.rate_B2),
        ("rate_E1", ac.rate_E1),
        ("rate_E2", ac.rate_E2),
    ]
    table = MetricTable(
        "metric_index",
        list(range(len(rows))),
        {"value:MC": [r[1].value for r in rows], "value:MC_se": [r[1].std_error for r in rows]},
    )
    if args.out:
        table.write(args.out)
    print(f"trials={trials} seed={args.seed} eve_mode={EveMode(args.eve_mode).value} workers={worker_count()}")
    for name, est in rows:
        print(f"{name:<8} {est.value:.8g} ± {est.std_error:.2g}")
    return EXIT_OK


def cmd_validate(args) -> int:
    budget = Budget.FULL if args.budget == "full" else Budget.QUICK
    only = {int(x) for x in args.only.split(",")} if args.only else None
    status, report, results = validate_report(budget, Hooks(), only)
    print(report)
    if args.out:
        table = MetricTable(
            "criterion",
            [r.number for r in results],
            {"passed": [float(r.passed) for r in results], "runtime_s": [r.runtime_s for r in results]},
        )
        table.write(args.out)
    return EXIT_FAIL if status else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials (0 disables MC)")
    common.add_argument("--out", help="CSV output path (a .meta file is written next to it)")
    common.add_argument("--override", action="append", metavar="KEY=VALUE")
    common.add_argument("--eve-mode", default=EveMode.RANDOM.value, choices=[m.value for m in EveMode])

    p = argparse.ArgumentParser(prog="irs-noma", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("stats", parents=[common], help="derived constants and closed-form metrics")

    s = sub.add_parser("sweep", parents=[common], help="sweep one axis")
    s.add_argument("--axis", default="rho_db", choices=[a.value for a in Axis])
    s.add_argument("--values", required=True, help="start:stop:step or comma list")
    s.add_argument("--metrics", default="sop1,sop2", help=f"comma list from {','.join(METRICS)}")
    s.add_argument("--tie-eve", action="store_true", help="move rho_e_db with rho_db")
    s.add_argument("--plot-script", action="store_true")

    f = sub.add_parser("figure", parents=[common], help="reproduce a figure table")
    f.add_argument("name", choices=PRESETS)
    f.add_argument("--plot-script", action="store_true")

    sub.add_parser("mc", parents=[common], help="Monte-Carlo estimates at one point")

    v = sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    v.add_argument("--budget", choices=["quick", "full"], default="quick")
    v.add_argument("--only", help="comma list of criterion numbers")
    return p


COMMANDS = {"stats": cmd_stats, "sweep": cmd_sweep, "figure": cmd_figure, "mc": cmd_mc, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


__all__ = ["main", "THREADS_ENV"]
