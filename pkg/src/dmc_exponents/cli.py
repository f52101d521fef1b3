"""Command-line surface: channel file I/O, builtin families, curve CSV
emission, and verification runs.

Exit codes: 0 success / all checks passed, 1 check failure, 2 usage or
infrastructure error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import gallager, klform, verifier
from .channel import Channel, ValidationError, make_channel
from .families import parse_channel_spec

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_ERROR = 2

CURVE_QUANTITIES = ("G", "G_dk", "G_sp", "E", "E_sp")


# -- channel file format --------------------------------------------------


def write_channel_file(W: Channel, path, name: str | None = None):
    """Write a channel as structured text: input_size, output_size, rows,
    optional name."""
    doc = {
        "input_size": W.input_size,
        "output_size": W.output_size,
        "rows": [[float(x) for x in row] for row in W.matrix],
    }
    if name:
        doc["name"] = name
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_channel_file(path) -> Channel:
    """Parse a channel file; malformed structure raises ValidationError."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read channel file {path}: {exc}") from None
    if not isinstance(doc, dict) or "rows" not in doc:
        raise ValidationError(f"channel file {path} lacks a 'rows' field")
    W = make_channel(doc["rows"])
    for key in ("input_size", "output_size"):
        if key in doc and int(doc[key]) != getattr(W, key):
            raise ValidationError(
                f"channel file {path}: {key} = {doc[key]} does not match rows")
    return W


def load_channel(source: str, seed: int = 0) -> Channel:
    """A channel from either a file path or a builtin spec string."""
    if Path(source).exists() or source.endswith(".json"):
        return read_channel_file(source)
    return parse_channel_spec(source, np.random.default_rng(seed))


# -- curve CSV format -----------------------------------------------------


def format_value(v: float) -> str:
    """CSV cell: 'inf' token for +infinity, else 9 significant digits."""
    if math.isinf(v):
        return "inf"
    return f"{v:.9g}"


def parse_value(s: str) -> float:
    return math.inf if s == "inf" else float(s)


def curve_rows(W: Channel, quantities, R_grid, seed: int = 0):
    """(header, rows) for the requested quantities over the rate grid."""
    fns = {
        "G": lambda R: gallager.strong_converse_exponent(R, W, seed=seed),
        "G_dk": lambda R: klform.dk_exponent(R, W, seed=seed),
        "G_sp": lambda R: klform.sphere_packing_sc(R, W, seed=seed),
        "E": lambda R: gallager.error_exponent(R, W, seed=seed),
        "E_sp": lambda R: klform.sphere_packing_err(R, W, seed=seed),
    }
    for q in quantities:
        if q not in fns:
            raise ValidationError(
                f"unknown quantity {q!r}; expected a subset of {CURVE_QUANTITIES}")
    header = ["R"] + list(quantities)
    rows = []
    for R in R_grid:
        rows.append([float(R)] + [fns[q](float(R)) for q in quantities])
    return header, rows


def write_curve_csv(path_or_stream, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        Path(path_or_stream).write_text(text, encoding="utf-8")


def read_curve_csv(path):
    """Parse a curve CSV back into (header, rows) with +inf restored."""
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    rows = [[parse_value(c) for c in line.split(",")] for line in lines[1:]]
    return header, rows


# -- commands -------------------------------------------------------------


def cmd_capacity(args) -> int:
    W = load_channel(args.channel, args.seed)
    c = klform.capacity(W)
    c0 = klform.zero_rate_threshold(W)
    if args.bits:
        print(f"C  = {c:.6f} nats = {c / math.log(2):.6f} bits")
        print(f"C0 = {c0:.6f} nats = {c0 / math.log(2):.6f} bits")
    else:
        print(f"C  = {c:.6f}")
        print(f"C0 = {c0:.6f}")
    return EXIT_OK


def cmd_curve(args) -> int:
    W = load_channel(args.channel, args.seed)
    quantities = [q.strip() for q in args.quantities.split(",") if q.strip()]
    if args.points < 2:
        raise ValidationError("curve needs at least 2 points")
    r_max = args.rmax if args.rmax is not None else math.log(W.input_size) + 0.5
    if not r_max > args.rmin:
        raise ValidationError("rmax must exceed rmin")
    grid = np.linspace(args.rmin, r_max, args.points)
    header, rows = curve_rows(W, quantities, grid, seed=args.seed)
    if args.out:
        write_curve_csv(args.out, header, rows)
    else:
        write_curve_csv(sys.stdout, header, rows)
    return EXIT_OK


def cmd_gen(args) -> int:
    W = parse_channel_spec(args.spec, np.random.default_rng(args.seed))
    if args.out:
        write_channel_file(W, args.out, name=args.spec)
    else:
        doc = {"input_size": W.input_size, "output_size": W.output_size,
               "rows": [[float(x) for x in row] for row in W.matrix],
               "name": args.spec}
        print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def _parse_sizes(text: str):
    sizes = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        nx, ny = part.lower().split("x")
        sizes.append((int(nx), int(ny)))
    if not sizes:
        raise ValidationError("no sizes given")
    return sizes


def cmd_verify(args) -> int:
    if args.dir:
        channels = []
        report_pre = []
        for path in sorted(Path(args.dir).glob("*.json")):
            try:
                channels.append((path.name, read_channel_file(path)))
            except ValidationError as exc:
                report_pre.append(verifier.CheckResult(
                    "channel-file", path.name, False, math.inf,
                    0.0, {"error": str(exc)}))
        report = verifier.run_corpus(args.seed, [], 0, include_builtins=False,
                                     channels=channels,
                                     description=f"dir={args.dir}")
        report.results = report_pre + report.results
    else:
        sizes = _parse_sizes(args.sizes)
        report = verifier.run_corpus(args.seed, sizes, args.count,
                                     include_builtins=not args.no_builtins)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    s = report.summary
    print(f"checks: {s['total']}  passed: {s['passed']}  failed: {s['failed']}",
          file=sys.stderr)
    return EXIT_OK if report.all_passed else EXIT_CHECK_FAILURE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dmc-exponents",
        description="Strong-converse and error exponents of discrete "
                    "memoryless channels, in two independently computed forms.")
    sub = p.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("capacity", help="print C(W) and the zero-rate threshold")
    pc.add_argument("channel", help="channel file or builtin spec (e.g. bsc:0.1)")
    pc.add_argument("--bits", action="store_true", help="also print values in bits")
    pc.add_argument("--seed", type=int, default=0)
    pc.set_defaults(fn=cmd_capacity)

    pv = sub.add_parser("curve", help="emit exponent curves as CSV")
    pv.add_argument("channel")
    pv.add_argument("-q", "--quantities", default="G,G_dk",
                    help=f"comma-separated subset of {','.join(CURVE_QUANTITIES)}")
    pv.add_argument("--rmin", type=float, default=0.0)
    pv.add_argument("--rmax", type=float, default=None,
                    help="default ln(input_size) + 0.5")
    pv.add_argument("--points", type=int, default=21)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("-o", "--out", default=None)
    pv.set_defaults(fn=cmd_curve)

    pg = sub.add_parser("gen", help="write a builtin or random channel file")
    pg.add_argument("spec", help="e.g. bsc:0.1, identity:3, random:3x4")
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("-o", "--out", default=None)
    pg.set_defaults(fn=cmd_gen)

    pr = sub.add_parser("verify", help="run the check suite over a corpus")
    pr.add_argument("--sizes", default="2x2",
                    help="comma-separated sizes, e.g. 2x2,3x3")
    pr.add_argument("--count", type=int, default=5,
                    help="random channels per size")
    pr.add_argument("--dir", default=None,
                    help="verify channel files from a directory instead")
    pr.add_argument("--no-builtins", action="store_true")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("-o", "--out", default=None)
    pr.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
