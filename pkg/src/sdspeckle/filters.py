"""SDNM and SDNLM despeckling filters.

Both filters work on intensity images stored as 2-D float arrays. Every
output pixel is a function of its own window only, so the image can be cut
into row bands and filtered in parallel; the result is bit-identical for any
number of workers.

Significance convention: ``eta`` is the confidence of the tests (0.9 means
the tests run at level alpha = 0.1). SDNM rejects a region when its p-value
is below alpha. SDNLM feeds the p-values to ``weight`` with threshold alpha,
unless ``weight_threshold`` overrides it.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .divergence import chi2_survival, kl_statistic_array, weight
from .gamma_model import fit_summaries, sanitize_intensities
from .neighborhoods import WINDOW_RADIUS, BorderPolicy, PatchLayout, nagao_masks, pad_image

METHODS = ("sdnm", "sdnlm")


@dataclass(frozen=True)
class FilterConfig:
    method: str = "sdnlm"
    eta: float = 0.9
    iterations: int = 1
    dof: int = 1
    fallback_looks: Optional[float] = None
    border: BorderPolicy = BorderPolicy.MIRROR
    weight_threshold: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.dof not in (1, 2):
            raise ValueError("dof must be 1 or 2")
        if self.weight_threshold is not None and not 0 < self.weight_threshold < 1:
            raise ValueError("weight_threshold must lie in (0, 1)")
        if self.fallback_looks is not None and not self.fallback_looks > 0:
            raise ValueError("fallback_looks must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def alpha(self):
        return 1.0 - self.eta

    @property
    def threshold(self):
        return self.alpha if self.weight_threshold is None else self.weight_threshold


class _Window:
    """Shifted views of a padded band, all aligned on the band's output pixels."""

    def __init__(self, padded, pad):
        self.pad = pad
        self.rows = padded.shape[0] - 2 * pad
        self.cols = padded.shape[1] - 2 * pad
        self.z = padded
        self.log_z = np.log(padded)
        self.center = self.shift(self.z, 0, 0)

    def shift(self, field, dr, dc, margin=0):
        p = self.pad
        return field[
            p + dr - margin : p + dr + self.rows + margin,
            p + dc - margin : p + dc + self.cols + margin,
        ]

    def region_sums(self, offsets, margin=0):
        # sequential accumulation keeps every pixel's arithmetic identical across bands
        n = len(offsets)
        total = np.zeros((self.rows + 2 * margin, self.cols + 2 * margin))
        total_log = np.zeros_like(total)
        total_sq = np.zeros_like(total)
        for dr, dc in offsets:
            z = self.shift(self.z, dr, dc, margin)
            total += z
            total_log += self.shift(self.log_z, dr, dc, margin)
            total_sq += z * z
        return n, total, total_log, total_sq

    def deviation_sum(self, offsets):
        total = np.zeros((self.rows, self.cols))
        for dr, dc in offsets:
            total += self.shift(self.z, dr, dc) - self.center
        return total


def _valid(looks, backscatter):
    return np.isfinite(looks) & np.isfinite(backscatter) & (backscatter > 0)


def _sdnm_band(padded, config):
    win = _Window(padded, WINDOW_RADIUS)
    masks = nagao_masks()
    fits = [fit_summaries(*win.region_sums(m.offsets), config.fallback_looks) for m in masks]
    looks0, lam0 = fits[0]
    central_ok = _valid(looks0, lam0)

    n0 = masks[0].size
    pooled_dev = win.deviation_sum(masks[0].offsets)
    pooled_n = np.full(pooled_dev.shape, float(n0))
    for mask, (looks, lam) in zip(masks[1:], fits[1:]):
        with np.errstate(invalid="ignore"):
            s = kl_statistic_array(looks0, lam0, n0, looks, lam, mask.size)
        ok = central_ok & _valid(looks, lam) & np.isfinite(s)
        p = np.zeros_like(s)
        p[ok] = chi2_survival(s[ok], config.dof)
        accept = ok & (p >= config.alpha)
        pooled_dev += np.where(accept, win.deviation_sum(mask.offsets), 0.0)
        pooled_n += np.where(accept, mask.size, 0)
    # all regions rejected leaves the central 3x3 mean, which is the prescribed fallback
    return win.center + pooled_dev / pooled_n


def _sdnlm_band(padded, config, layout=PatchLayout()):
    win = _Window(padded, layout.reach)
    margin = layout.search_radius
    n = len(layout.patch_offsets)
    looks_map, lam_map = fit_summaries(
        *win.region_sums(layout.patch_offsets, margin=margin), config.fallback_looks
    )
    valid_map = _valid(looks_map, lam_map)

    def at(field, dr, dc):
        return field[margin + dr : margin + dr + win.rows, margin + dc : margin + dc + win.cols]

    looks0, lam0, ok0 = at(looks_map, 0, 0), at(lam_map, 0, 0), at(valid_map, 0, 0)
    num = np.zeros((win.rows, win.cols))
    den = np.ones_like(num)
    for dr, dc in layout.center_offsets:
        looks, lam = at(looks_map, dr, dc), at(lam_map, dr, dc)
        with np.errstate(invalid="ignore"):
            s = kl_statistic_array(looks0, lam0, n, looks, lam, n)
        ok = ok0 & at(valid_map, dr, dc) & np.isfinite(s)
        w = np.zeros_like(s)
        w[ok] = weight(chi2_survival(s[ok], config.dof), config.threshold)
        num += w * (win.shift(win.z, dr, dc) - win.center)
        den += w

    patch_mean = win.center + win.deviation_sum(layout.patch_offsets) / n
    return np.where(den > 1.0, win.center + num / den, patch_mean)


def _run_banded(band_fn, image, reach, config):
    padded = pad_image(image, reach)
    height = image.shape[0]
    n_bands = min(config.workers, height)
    bounds = np.linspace(0, height, n_bands + 1).astype(int)
    jobs = [(padded[r0 : r1 + 2 * reach], config) for r0, r1 in zip(bounds[:-1], bounds[1:])]
    if n_bands == 1:
        bands = [band_fn(*jobs[0])]
    else:
        with ThreadPoolExecutor(max_workers=n_bands) as pool:
            bands = list(pool.map(lambda job: band_fn(*job), jobs))
    out = np.concatenate(bands, axis=0)
    if config.border is BorderPolicy.SKIP:
        keep = np.ones(image.shape, dtype=bool)
        keep[reach:-reach, reach:-reach] = False
        out[keep] = image[keep]
    return out


def _prepare(image):
    image = sanitize_intensities(image)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("expected a nonempty 2-D image")
    return image


def sdnm_filter(image, config=FilterConfig(method="sdnm")):
    """One pass of the Nagao-Matsuyama stochastic distance filter.

    For each pixel the central 3x3 region is tested against the eight
    oriented 7-pixel regions of its 5x5 window; the output pools the pixels
    of the central region and of every region that is not rejected.
    """
    return _run_banded(_sdnm_band, _prepare(image), WINDOW_RADIUS, config)


def sdnlm_filter(image, config=FilterConfig(method="sdnlm")):
    """One pass of the stochastic distance nonlocal means filter.

    The central 3x3 patch is tested against the 24 patches centred in its
    5x5 window. Each p-value becomes a soft weight for the corresponding
    centre pixel; the centre itself has weight 1 and the result is the
    normalized weighted mean. When no neighbour gets a positive weight the
    3x3 mean is returned instead.
    """
    return _run_banded(_sdnlm_band, _prepare(image), PatchLayout().reach, config)


_FILTERS = {"sdnm": sdnm_filter, "sdnlm": sdnlm_filter}


def apply_filter(image, config):
    """Run the configured filter ``config.iterations`` times."""
    out = _prepare(image)
    for _ in range(config.iterations):
        out = _FILTERS[config.method](out, config)
    return out
