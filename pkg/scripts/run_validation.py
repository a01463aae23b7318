"""Run the acceptance checks and print one line per criterion.

    python scripts/run_validation.py --budget full
"""

import argparse
import sys

from irs_noma_pls.acceptance import Budget, validate_report


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--budget", choices=["quick", "full"], default="full")
    ap.add_argument("--only", default="", help="comma list of criterion numbers")
    args = ap.parse_args()
    only = [int(x) for x in args.only.split(",") if x] or None
    status, text, _ = validate_report(Budget[args.budget.upper()], only=only)
    print(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
