"""
Command-line interface.

    strangecp run --synthetic heteroscedastic,n=4000 --estimator targ-strg \\
        --mode norm --k-grid 10:100:10 --seeds 0,1,2,3,4 --out results/
    strangecp report --in results/results.csv --format markdown --out results/
    strangecp selftest

Options may also come from a key=value file given with ``--config``; flags on
the command line override it. Exit status is 0 on success, 1 for usage errors
and 2 for data errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..data import DataError
from ..difficulty import DifficultyKind
from .engine import CsvSource, ExperimentConfig, SyntheticSource, run_experiment, select_best
from .report import FORMATS, emit_report, read_rows_csv
from .selftest import run_selftest

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def parse_grid(text: str) -> tuple:
    """``10,20,30`` or ``start:stop:step`` with an inclusive stop."""
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"bad grid range {text!r}")
        start, stop, step = parts
        return tuple(range(start, stop + 1, step))
    return tuple(int(p) for p in text.split(",") if p.strip())


def parse_floats(text: str) -> tuple:
    return tuple(float(p) for p in text.split(",") if p.strip())


def parse_synthetic(text: str) -> SyntheticSource:
    """``kind[,n=..][,noise=..][,features=..][,split=a/b/c]``"""
    items = [p.strip() for p in text.split(",") if p.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty synthetic spec")
    kw = {"kind": items[0]}
    keys = {"n": ("n", int), "noise": ("noise_scale", float),
            "features": ("n_features", int),
            "split": ("fractions", lambda v: tuple(float(x) for x in v.split("/")))}
    for item in items[1:]:
        key, _, value = item.partition("=")
        if key not in keys:
            raise argparse.ArgumentTypeError(f"unknown synthetic option {key!r}")
        name, conv = keys[key]
        kw[name] = conv(value)
    if kw["kind"] not in ("heteroscedastic", "homoscedastic"):
        raise argparse.ArgumentTypeError(f"unknown synthetic kind {kw['kind']!r}")
    return SyntheticSource(**kw)


def read_config_file(path) -> list[str]:
    """Turn ``key = value`` lines into ``--key value`` tokens."""
    tokens = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-")
        if not sep or not key:
            raise UsageError(f"{path}: expected key=value, got {raw!r}")
        tokens += [f"--{key}", value.strip()]
    return tokens


def expand_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a file path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    try:
        file_tokens = read_config_file(path)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    # subcommand first, then file values, then command-line flags (last wins)
    return rest[:1] + file_tokens + rest[1:]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strangecp", description="Split conformal regression benchmark")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment grid")
    src = run.add_argument_group("data")
    src.add_argument("--train", help="CSV of proper-training rows")
    src.add_argument("--cal", help="CSV of calibration rows")
    src.add_argument("--test", help="CSV of test rows")
    src.add_argument("--data", help="single CSV resplit per seed by --split")
    src.add_argument("--split", default="0.5,0.25,0.25", type=parse_floats,
                     help="train,calibration,test fractions for --data")
    src.add_argument("--synthetic", type=parse_synthetic,
                     help="synthetic spec, e.g. heteroscedastic,n=4000,noise=1")
    src.add_argument("--target", default="y", help="target column name")
    src.add_argument("--prediction", default="y_hat", help="prediction column name")
    run.add_argument("--estimator", default="targ-strg",
                     choices=[k.value for k in DifficultyKind])
    run.add_argument("--mode", default="norm", choices=["plain", "norm", "mondrian"])
    run.add_argument("--k-grid", default="25", type=parse_grid)
    run.add_argument("--bin-grid", default="10", type=parse_grid)
    run.add_argument("--confidence", default="0.9,0.95,0.99", type=parse_floats)
    run.add_argument("--seeds", default="0,1,2,3,4", type=parse_grid)
    run.add_argument("--beta", default=0.01, type=float)
    run.add_argument("--bandwidth", default=0.75, type=float)
    run.add_argument("--jobs", default=1, type=int, help="parallel workers")
    run.add_argument("--target-coverage", default=0.9, type=float)
    run.add_argument("--tolerance", default=0.01, type=float)
    run.add_argument("--out", default="results", help="output directory")

    rep = sub.add_parser("report", help="render a results CSV")
    rep.add_argument("--in", dest="input", required=True, help="results.csv from run")
    rep.add_argument("--format", default="markdown", choices=FORMATS)
    rep.add_argument("--out", default=".", help="output directory")

    sub.add_parser("selftest", help="run built-in invariant checks")
    return parser


def _source(args):
    given = [args.synthetic is not None, args.data is not None,
             any(p is not None for p in (args.train, args.cal, args.test))]
    if sum(given) != 1:
        raise UsageError("choose exactly one of --synthetic, --data, or --train/--cal/--test")
    if args.synthetic is not None:
        return args.synthetic
    return CsvSource(args.target, args.prediction, args.train, args.cal, args.test,
                     args.data, args.split)


def _cmd_run(args) -> int:
    try:
        config = ExperimentConfig(
            source=_source(args), estimator=args.estimator, mode=args.mode,
            confidences=args.confidence, k_grid=args.k_grid, bin_grid=args.bin_grid,
            seeds=args.seeds, beta=args.beta, bandwidth=args.bandwidth, n_jobs=args.jobs,
        )
    except (UsageError, ValueError) as exc:
        print(f"strangecp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rows = run_experiment(config)
    except (DataError, ValueError, OSError) as exc:
        print(f"strangecp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    out = Path(args.out)
    try:
        paths = [emit_report(rows, fmt, out) for fmt in FORMATS]
    except OSError as exc:
        print(f"strangecp: cannot write report: {exc}", file=sys.stderr)
        return EXIT_DATA
    selection = select_best(rows, args.target_coverage, args.tolerance)
    print(selection.diagnostic)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        rows = read_rows_csv(args.input)
        path = emit_report(rows, args.format, args.out)
    except (OSError, KeyError, ValueError) as exc:
        print(f"strangecp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = expand_config(argv)
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"strangecp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "report":
        return _cmd_report(args)
    return EXIT_OK if run_selftest() else 1


if __name__ == "__main__":
    sys.exit(main())
