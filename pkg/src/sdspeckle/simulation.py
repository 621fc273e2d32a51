"""Phantom, speckle corruption and the Monte Carlo assessment protocol.

Phantom geometry for the default 256 x 256 size (rows, cols; half-open
ranges). Other sizes scale every coordinate by size / 256, with widths of
at least one pixel:

* homogeneous block    rows [0, 128) x cols [0, 128), background only
* bars                 rows [16, 112), cols [136, 144), [152, 156), [168, 170)
* vertical line        col 192, rows [16, 112); flanks at cols 189 and 195
* diagonal line        (r, r - 128) for r in [144, 240); flanks shifted by -3/+3 cols
* bright square        rows [160, 256) x cols [160, 256)
* vertical edge strips rows [176, 240), cols [157, 159) and [161, 163)
* horizontal edge      cols [176, 240), rows [157, 159) and [161, 163)

Lines, bars and the square carry the strip mean, everything else the
background mean.

Seeds: replication ``i`` of a run with master seed ``s`` draws from
``np.random.SeedSequence(s, spawn_key=(i,))``. Replications are therefore
independent of each other and of the order or process they run in.
"""

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .filters import FilterConfig, apply_filter
from .metrics import (
    EdgeAnnotation,
    LineAnnotation,
    MetricsReport,
    PhantomAnnotation,
    Rect,
    UndefinedMetricError,
    compute_metrics,
)

BASE_SIZE = 256
BASELINE = "corrupted"
FILTER_NAMES = (BASELINE, "sdnm", "sdnlm")
METRIC_COLUMNS = (
    ("enl", "ENL"),
    ("line_contrast_deviation", "Line Cont."),
    ("edge_gradient", "Edge Grad."),
    ("edge_variance", "Edge Var."),
    ("q_index", "Q Index"),
    ("beta_rho", "beta_rho Index"),
    ("homogeneous_mean", "Homogeneous Mean"),
)


@dataclass(frozen=True)
class Situation:
    id: int
    looks: float
    strip_mean: float
    background_mean: float


SITUATIONS = {
    1: Situation(1, looks=1, strip_mean=200.0, background_mean=20.0),
    2: Situation(2, looks=3, strip_mean=195.0, background_mean=55.0),
    3: Situation(3, looks=4, strip_mean=150.0, background_mean=30.0),
}


@dataclass(frozen=True)
class Phantom:
    truth: np.ndarray
    annotation: PhantomAnnotation


def _scaled(size):
    u = size / BASE_SIZE

    def at(x):
        return int(round(x * u))

    def width(w):
        return max(1, int(round(w * u)))

    return at, width


def build_phantom(situation, size=BASE_SIZE):
    if size < 64:
        raise ValueError("phantom size must be at least 64")
    at, width = _scaled(size)
    bg, fg = situation.background_mean, situation.strip_mean
    truth = np.full((size, size), bg)
    half = size // 2

    top, bottom = at(16), at(112)
    for start, w in ((136, 8), (152, 4), (168, 2)):
        c0 = at(start)
        truth[top:bottom, c0 : c0 + width(w)] = fg

    line_col, flank = at(192), 3
    truth[top:bottom, line_col] = fg
    vertical = LineAnnotation(
        line=tuple((r, line_col) for r in range(top, bottom)),
        flank1=tuple((r, line_col - flank) for r in range(top, bottom)),
        flank2=tuple((r, line_col + flank) for r in range(top, bottom)),
        reference=2.0 * fg - 2.0 * bg,
    )

    diag_rows = range(half + at(16), size - at(16))
    for r in diag_rows:
        truth[r, r - half] = fg
    diagonal = LineAnnotation(
        line=tuple((r, r - half) for r in diag_rows),
        flank1=tuple((r, r - half - flank) for r in diag_rows),
        flank2=tuple((r, r - half + flank) for r in diag_rows),
        reference=2.0 * fg - 2.0 * bg,
    )

    corner = at(160)
    truth[corner:, corner:] = fg
    strip_lo, strip_hi = at(176), at(240)
    span = strip_hi - strip_lo
    edges = (
        EdgeAnnotation(
            Rect(strip_lo, corner - 3, span, 2), Rect(strip_lo, corner + 1, span, 2), step=fg - bg
        ),
        EdgeAnnotation(
            Rect(corner - 3, strip_lo, 2, span), Rect(corner + 1, strip_lo, 2, span), step=fg - bg
        ),
    )
    annotation = PhantomAnnotation(
        homogeneous=Rect(0, 0, half, half), lines=(vertical, diagonal), edges=edges
    )
    annotation.validate(truth.shape)
    return Phantom(truth=truth, annotation=annotation)


def replication_seed(seed, index):
    return np.random.SeedSequence(seed, spawn_key=(index,))


def corrupt(phantom, situation, seed):
    """Multiply the phantom by independent unit-mean Gamma(L, L) speckle."""
    rng = np.random.default_rng(seed)
    looks = situation.looks
    return phantom.truth * rng.standard_gamma(looks, size=phantom.truth.shape) / looks


@dataclass
class ProtocolResult:
    situation: Situation
    filters: tuple
    replications: int
    seed: int
    reports: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def values(self, filter_name, metric):
        return np.array([getattr(r, metric) for r in self.reports[filter_name]])

    def summary(self, filter_name, metric):
        """(mean, std) over successful replications; std is 0 below two values."""
        v = self.values(filter_name, metric)
        if v.size == 0:
            return math.nan, math.nan
        return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def _filter_config(name, base):
    return None if name == BASELINE else replace(base, method=name, workers=1)


def _one_replication(args):
    situation, filters, base_config, seed, index, size, dump_dir = args
    phantom = build_phantom(situation, size)
    speckled = corrupt(phantom, situation, replication_seed(seed, index))
    out = {}
    for name in filters:
        config = _filter_config(name, base_config)
        image = speckled if config is None else apply_filter(speckled, config)
        if dump_dir is not None:
            from .imageio import write_image

            write_image(image, Path(dump_dir) / f"rep{index:04d}_{name}.raw")
        try:
            out[name] = compute_metrics(image, phantom.truth, phantom.annotation)
        except (UndefinedMetricError, FloatingPointError) as exc:
            out[name] = exc
    return out


def run_protocol(
    situation,
    filters=("sdnm", "sdnlm"),
    replications=100,
    seed=0,
    config=FilterConfig(),
    size=BASE_SIZE,
    workers=1,
    dump_dir=None,
):
    """Phantom -> speckle -> filters -> metrics, ``replications`` times.

    ``config`` supplies eta, dof, iterations and the other filter settings;
    its method is overridden per entry of ``filters``. Results are collected
    in replication order whatever the worker count.
    """
    if replications < 1:
        raise ValueError("need at least one replication")
    filters = tuple(filters)
    for name in filters:
        if name not in FILTER_NAMES:
            raise ValueError(f"unknown filter {name!r}; choose from {FILTER_NAMES}")
    if dump_dir is not None:
        Path(dump_dir).mkdir(parents=True, exist_ok=True)
    jobs = [
        (situation, filters, config, seed, i, size, dump_dir) for i in range(replications)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_one_replication, jobs))
    else:
        outcomes = [_one_replication(job) for job in jobs]

    result = ProtocolResult(situation, filters, replications, seed)
    for name in filters:
        per_rep = [o[name] for o in outcomes]
        result.reports[name] = [r for r in per_rep if isinstance(r, MetricsReport)]
        result.failures[name] = sum(not isinstance(r, MetricsReport) for r in per_rep)
    return result


def protocol_csv(result):
    """Table-style CSV: one row per filter, mean and sd of every metric."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["Filtered Versions", "Situation", "Replications", "Failed"]
    for _, label in METRIC_COLUMNS:
        header += [label, f"{label} (sd)"]
    writer.writerow(header)
    for name in result.filters:
        row = [name, result.situation.id, result.replications, result.failures[name]]
        for metric, _ in METRIC_COLUMNS:
            mean, sd = result.summary(name, metric)
            row += [repr(mean), repr(sd)]
        writer.writerow(row)
    return buf.getvalue()
