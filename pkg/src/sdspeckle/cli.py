"""Command-line entry point.

    sdspeckle filter   --method sdnlm --eta 0.90 --iterations 1 --dof 1 in.pgm out.raw
    sdspeckle simulate --situation 2 --seed 42 out.raw
    sdspeckle bench    --situation 2 --replications 100 --seed 7 --filters sdnm,sdnlm report.csv
    sdspeckle metrics  --truth phantom.raw --test filtered.raw --annotation ann.json report.csv

Exit status: 0 on success, 1 on a runtime failure, 2 on a usage error.
Output paths of "-" write CSV to stdout.
"""

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from .filters import METHODS, FilterConfig, apply_filter
from .imageio import read_annotation, read_image, write_annotation, write_image
from .metrics import UndefinedMetricError, compute_metrics
from .neighborhoods import BorderPolicy
from .simulation import (
    FILTER_NAMES,
    METRIC_COLUMNS,
    SITUATIONS,
    build_phantom,
    corrupt,
    protocol_csv,
    replication_seed,
    run_protocol,
)

PROG = "sdspeckle"


def _ranged(kind, lo=None, hi=None, open_interval=False):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if open_interval:
            bad = not (lo < value < hi)
            rng = f"({lo}, {hi})"
        else:
            bad = (lo is not None and value < lo) or (hi is not None and value > hi)
            rng = f"[{lo if lo is not None else '-inf'}, {hi if hi is not None else 'inf'}]"
        if bad:
            raise argparse.ArgumentTypeError(f"{text} outside {rng}")
        return value

    return parse


def _filter_list(text):
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    unknown = [n for n in names if n not in FILTER_NAMES]
    if not names or unknown:
        raise argparse.ArgumentTypeError(
            f"expected a comma-separated subset of {','.join(FILTER_NAMES)}, got {text!r}"
        )
    return names


def _add_filter_flags(p, with_method=True):
    if with_method:
        p.add_argument("--method", choices=METHODS, default="sdnlm")
    p.add_argument("--eta", type=_ranged(float, 0.0, 1.0, open_interval=True), default=0.9,
                   help="test confidence; the tests run at level 1 - eta (default 0.9)")
    p.add_argument("--iterations", type=_ranged(int, 1), default=1)
    p.add_argument("--dof", type=int, choices=(1, 2), default=1)
    p.add_argument("--border", choices=[b.value for b in BorderPolicy], default="mirror")
    p.add_argument("--fallback-looks", type=_ranged(float, 1e-12), default=None,
                   help="looks to use when the ML equation has no root (default: moment estimate)")
    p.add_argument("--weight-threshold", type=_ranged(float, 0.0, 1.0, open_interval=True),
                   default=None, help="SDNLM weight threshold (default 1 - eta)")


def build_parser():
    parser = argparse.ArgumentParser(prog=PROG, description="Stochastic-distance SAR despeckling.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="despeckle one image")
    _add_filter_flags(p)
    p.add_argument("--workers", type=_ranged(int, 1), default=1)
    p.add_argument("input")
    p.add_argument("output")

    p = sub.add_parser("simulate", help="write one speckled phantom")
    p.add_argument("--situation", type=int, choices=sorted(SITUATIONS), required=True)
    p.add_argument("--seed", type=_ranged(int, 0), required=True)
    p.add_argument("--size", type=_ranged(int, 64), default=256)
    p.add_argument("--truth", help="also write the noiseless phantom here")
    p.add_argument("--annotation", help="also write the phantom annotation (JSON) here")
    p.add_argument("output")

    p = sub.add_parser("bench", help="Monte Carlo assessment, CSV summary")
    p.add_argument("--situation", type=int, choices=sorted(SITUATIONS), required=True)
    p.add_argument("--replications", type=_ranged(int, 1), default=100)
    p.add_argument("--seed", type=_ranged(int, 0), required=True)
    p.add_argument("--filters", type=_filter_list, default=("sdnm", "sdnlm"))
    p.add_argument("--workers", type=_ranged(int, 1), default=1)
    p.add_argument("--size", type=_ranged(int, 64), default=256)
    p.add_argument("--dump-dir", help="write every replication's images here (raw float)")
    _add_filter_flags(p, with_method=False)
    p.add_argument("output")

    p = sub.add_parser("metrics", help="score a test image against a reference")
    p.add_argument("--truth", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--annotation", required=True)
    p.add_argument("output")
    return parser


def _config(args, method="sdnlm", workers=1):
    return FilterConfig(
        method=getattr(args, "method", method),
        eta=args.eta,
        iterations=args.iterations,
        dof=args.dof,
        fallback_looks=args.fallback_looks,
        border=BorderPolicy(args.border),
        weight_threshold=args.weight_threshold,
        workers=workers,
    )


def _emit(text, output):
    if output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _cmd_filter(args):
    image = read_image(args.input)
    write_image(apply_filter(image, _config(args, workers=args.workers)), args.output)


def _cmd_simulate(args):
    situation = SITUATIONS[args.situation]
    phantom = build_phantom(situation, args.size)
    # same draw as replication 0 of `bench` with this seed
    write_image(corrupt(phantom, situation, replication_seed(args.seed, 0)), args.output)
    if args.truth:
        write_image(phantom.truth, args.truth)
    if args.annotation:
        write_annotation(phantom.annotation, args.annotation)


def _cmd_bench(args):
    result = run_protocol(
        SITUATIONS[args.situation],
        filters=args.filters,
        replications=args.replications,
        seed=args.seed,
        config=_config(args),
        size=args.size,
        workers=args.workers,
        dump_dir=args.dump_dir,
    )
    _emit(protocol_csv(result), args.output)


def _cmd_metrics(args):
    truth, test = read_image(args.truth), read_image(args.test)
    if truth.shape != test.shape:
        raise ValueError(f"shape mismatch: truth {truth.shape}, test {test.shape}")
    annotation = read_annotation(args.annotation)
    annotation.validate(test.shape)
    report = compute_metrics(test, truth, annotation)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["Image"] + [label for _, label in METRIC_COLUMNS] + ["BRISQUE"])
    writer.writerow(
        [args.test] + [repr(getattr(report, m)) for m, _ in METRIC_COLUMNS] + ["unavailable"]
    )
    _emit(buf.getvalue(), args.output)


COMMANDS = {
    "filter": _cmd_filter,
    "simulate": _cmd_simulate,
    "bench": _cmd_bench,
    "metrics": _cmd_metrics,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format=f"{PROG}: %(levelname)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except (OSError, ValueError, ArithmeticError, UndefinedMetricError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    return 0
