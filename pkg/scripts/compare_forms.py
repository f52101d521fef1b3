#!/usr/bin/env python3
"""Print both computational routes to the exponent curves side by side for
one channel, so the equivalence theorems can be eyeballed.

Example:
    python3 scripts/compare_forms.py bsc:0.1 --points 11
"""

import argparse
import math
import sys

import numpy as np

from dmc_exponents import (capacity, dk_exponent, error_exponent,
                           sphere_packing_err, strong_converse_exponent,
                           zero_rate_threshold)
from dmc_exponents.cli import format_value, load_channel


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("channel", help="channel file or builtin spec")
    ap.add_argument("--points", type=int, default=11)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    W = load_channel(args.channel, args.seed)
    c = capacity(W)
    c0 = zero_rate_threshold(W)
    print(f"C = {c:.6f} nats, C0 = {c0:.6f} nats")

    print(f"{'R':>10} {'G':>12} {'G_dk':>12} {'|diff|':>10}")
    for R in np.linspace(0.0, math.log(W.input_size) + 0.5, args.points):
        g = strong_converse_exponent(float(R), W, seed=args.seed)
        gdk = dk_exponent(float(R), W, seed=args.seed)
        print(f"{R:>10.4f} {g:>12.8f} {gdk:>12.8f} {abs(g - gdk):>10.2e}")

    if (W.matrix > 0).all():
        print(f"\n{'R':>10} {'E':>12} {'E_sp':>12} {'|diff|':>10}")
        for R in np.linspace(c0 + 0.01, c + 0.5, args.points):
            e = error_exponent(float(R), W, seed=args.seed)
            esp = sphere_packing_err(float(R), W, seed=args.seed)
            diff = 0.0 if math.isinf(e) and math.isinf(esp) else abs(e - esp)
            print(f"{R:>10.4f} {format_value(e):>12} {format_value(esp):>12} "
                  f"{diff:>10.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
