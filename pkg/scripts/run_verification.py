#!/usr/bin/env python3
"""Run the full cross-form verification battery over a random corpus and
write the JSON report.

Example:
    python3 scripts/run_verification.py --seed 7 --sizes 2x2,2x3,3x3 \
        --count 4 --out report.json
"""

import argparse
import sys

from dmc_exponents import run_corpus


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sizes", default="2x2,2x3,3x3")
    ap.add_argument("--count", type=int, default=4)
    ap.add_argument("--no-builtins", action="store_true")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    sizes = [tuple(int(t) for t in part.split("x"))
             for part in args.sizes.split(",") if part]
    report = run_corpus(args.seed, sizes, args.count,
                        include_builtins=not args.no_builtins)
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"summary: {report.summary}", file=sys.stderr)
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
