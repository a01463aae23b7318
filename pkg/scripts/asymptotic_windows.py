"""Where do the high-SNR slopes settle for a given geometry?

Prints local log-log slopes of the closed-form user-1/user-2 SOP and of the
ASC against SNR, over a wide grid. Useful for choosing a fitting window.

    python scripts/asymptotic_windows.py --N 3 --override d_B1=20
"""

import argparse
import dataclasses
import math

import numpy as np

from irs_noma_pls.analytic import asc, sop_user1, sop_user2
from irs_noma_pls.channel import SystemConfig
from irs_noma_pls.sweep import apply_overrides


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, default=1)
    ap.add_argument("--rho-e-db", type=float, default=10.0)
    ap.add_argument("--override", action="append", default=[])
    args = ap.parse_args()
    base = apply_overrides(SystemConfig(N=args.N, rho_e_db=args.rho_e_db), args.override)

    rhos = np.arange(20.0, 201.0, 10.0)
    rows = []
    for r in rhos:
        cfg = dataclasses.replace(base, rho_db=float(r))
        rows.append((sop_user1(cfg), sop_user2(cfg), asc(1, cfg), asc(2, cfg)))
    print(f"{'rho_db':>7} {'sop1':>11} {'slope1':>7} {'sop2':>11} {'slope2':>7} {'dASC1':>7} {'dASC2':>7}")
    for k in range(1, len(rhos)):
        (p1, p2, c1, c2), (q1, q2, d1, d2) = rows[k - 1], rows[k]
        dr = (rhos[k] - rhos[k - 1]) / 10.0

        def slope(a, b):
            return -(math.log10(b) - math.log10(a)) / dr if a > 0 and b > 0 else float("nan")

        # ASC change per decade of SNR, in bits divided by log2(10)
        print(
            f"{rhos[k]:7.0f} {q1:11.4e} {slope(p1, q1):7.3f} {q2:11.4e} {slope(p2, q2):7.3f}"
            f" {(d1 - c1) / dr / math.log2(10):7.3f} {(d2 - c2) / dr / math.log2(10):7.3f}"
        )


if __name__ == "__main__":
    main()
