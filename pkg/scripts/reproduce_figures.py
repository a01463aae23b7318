"""Write every figure preset to results/<name>.csv (plus .meta sidecars).

    python scripts/reproduce_figures.py --trials 100000 --seed 1 --out results
"""

import argparse
import logging
import time
from pathlib import Path

from irs_noma_pls.montecarlo import EveMode
from irs_noma_pls.sweep import PRESETS, figure_preset

log = logging.getLogger("reproduce_figures")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--eve-mode", choices=[m.value for m in EveMode], default=EveMode.RANDOM.value)
    ap.add_argument("names", nargs="*", help="subset of presets (default: all)")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.names or sorted(PRESETS):
        t0 = time.perf_counter()
        table = figure_preset(name, mc_trials=args.trials, seed=args.seed, eve_mode=args.eve_mode)
        path = args.out / f"{name}.csv"
        table.write(path)
        log.info("%s: %d rows -> %s (%.1f s)", name, table.n_rows, path, time.perf_counter() - t0)


if __name__ == "__main__":
    main()
