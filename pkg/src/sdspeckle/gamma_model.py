"""Gamma law for multilook intensity speckle and its estimators.

An observed intensity is modelled as Z ~ Gamma(L, L/lambda): shape L (the
equivalent number of looks) and mean lambda (the backscatter). Samples are
the handful of pixels inside a filtering region, so the estimators are
written to be robust on n = 7 or n = 9 values.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .specfun import digamma, log_minus_digamma, trigamma

logger = logging.getLogger(__name__)

LOOKS_BRACKET = (0.1, 200.0)
LOOKS_CLAMP = (1.0, 100.0)
_SOLVER_TOL = 1e-12
# enough for pure bisection over the bracket down to the tolerance
_MAX_SOLVER_STEPS = 64


class NoRootError(ValueError):
    """The looks likelihood equation has no root inside the search bracket."""


@dataclass(frozen=True)
class GammaParams:
    looks: float
    backscatter: float

    def __post_init__(self):
        if not (self.looks > 0 and math.isfinite(self.looks)):
            raise ValueError(f"looks must be positive and finite, got {self.looks}")
        if not (self.backscatter > 0 and math.isfinite(self.backscatter)):
            raise ValueError(f"backscatter must be positive and finite, got {self.backscatter}")


def as_sample(values):
    """Validate a sample: a nonempty 1-D float array of positive values."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("sample values must be finite and strictly positive")
    return arr


def sanitize_intensities(image):
    """Replace zero pixels by the smallest positive value of the image.

    Negative or non-finite values are rejected. Returns a new float array.
    """
    image = np.array(image, dtype=float)
    if not np.all(np.isfinite(image)):
        raise ValueError("image contains non-finite values")
    if np.any(image < 0):
        raise ValueError("intensity image contains negative values")
    zeros = image == 0
    n_zero = int(zeros.sum())
    if n_zero:
        positive = image[~zeros]
        if positive.size == 0:
            raise ValueError("image has no positive pixels")
        image[zeros] = positive.min()
        logger.info("replaced %d zero-valued pixels by %g", n_zero, positive.min())
    return image


def gamma_density(z, params):
    """Density of Gamma(L, L/lambda) at z > 0."""
    if not z > 0:
        raise ValueError(f"density is defined for z > 0, got {z}")
    return math.exp(gamma_log_density(z, params.looks, params.backscatter))


def gamma_log_density(z, looks, backscatter):
    """Log-density, vectorized over z."""
    return (
        looks * np.log(looks / backscatter)
        - math.lgamma(looks)
        + (looks - 1.0) * np.log(z)
        - looks * z / backscatter
    )


def looks_residual(looks, mean, mean_log):
    """Left-hand side of the looks likelihood equation for a sample summary."""
    return math.log(looks) - digamma(looks) - math.log(mean) + mean_log


def solve_looks(log_spread):
    """Solve ln L - psi(L) = log_spread for L inside the looks bracket.

    ``log_spread`` is ln(mean) - mean(ln z) per sample, any array shape. The
    left side is strictly decreasing in L, so a root exists only when
    log_spread lies between its values at the bracket ends; elsewhere the
    result is NaN. Roots are not clamped here.

    Newton steps start from the closed-form approximation of the gamma
    shape MLE; any step leaving the current sign-change bracket is replaced
    by a bisection step, so the iteration cannot diverge. Each element stops
    on its own once the step is below 1e-12, which keeps results independent
    of how an image is split into blocks.
    """
    c = np.asarray(log_spread, dtype=float)
    shape = c.shape
    c = c.ravel()
    lo_bound, hi_bound = LOOKS_BRACKET
    has_root = (c <= log_minus_digamma(lo_bound)) & (c >= log_minus_digamma(hi_bound))

    root = np.full(c.shape, np.nan)
    idx = np.flatnonzero(has_root)
    target = c[idx]
    lo = np.full(idx.shape, lo_bound)
    hi = np.full(idx.shape, hi_bound)
    x = (3.0 - target + np.sqrt((target - 3.0) ** 2 + 24.0 * target)) / (12.0 * target)
    x = np.clip(x, lo_bound, hi_bound)
    for _ in range(_MAX_SOLVER_STEPS):
        if idx.size == 0:
            break
        f = log_minus_digamma(x) - target
        root_above = f > 0
        lo = np.where(root_above, x, lo)
        hi = np.where(root_above, hi, x)
        x_new = x - f / (1.0 / x - trigamma(x))
        outside = ~((x_new >= lo) & (x_new <= hi))
        x_new = np.where(outside, 0.5 * (lo + hi), x_new)
        x_new = np.where(f == 0, x, x_new)
        done = (np.abs(x_new - x) <= _SOLVER_TOL) | (hi - lo <= _SOLVER_TOL)
        root[idx[done]] = x_new[done]
        keep = ~done
        idx, target, lo, hi, x = idx[keep], target[keep], lo[keep], hi[keep], x_new[keep]
    # only reachable if bisection ran out of steps; x is then inside a tiny bracket
    root[idx] = x
    return root.reshape(shape)


def estimate_lambda(sample):
    """ML estimate of the backscatter: the sample mean."""
    return float(np.mean(as_sample(sample)))


def estimate_looks(sample, clamp=True):
    """ML estimate of the number of looks.

    Raises NoRootError when the likelihood equation has no root in the
    bracket, which is always the case for a constant sample.
    """
    z = as_sample(sample)
    mean = float(np.mean(z))
    spread = math.log(mean) - float(np.mean(np.log(z)))
    looks = float(solve_looks(spread))
    if math.isnan(looks):
        raise NoRootError(
            f"no root of the looks equation in {LOOKS_BRACKET} (log spread {spread:.3g})"
        )
    return clamp_looks(looks) if clamp else looks


def clamp_looks(looks):
    if np.ndim(looks):
        return np.clip(looks, *LOOKS_CLAMP)
    return min(max(float(looks), LOOKS_CLAMP[0]), LOOKS_CLAMP[1])


def moment_looks(sample):
    """Method-of-moments looks, (mean / std)**2 with the n-1 variance, clamped."""
    z = as_sample(sample)
    if z.size < 2:
        return LOOKS_CLAMP[1]
    std = float(np.std(z, ddof=1))
    if std == 0:
        return LOOKS_CLAMP[1]
    return clamp_looks((float(np.mean(z)) / std) ** 2)


def estimate_params(sample, fallback_looks=None):
    """Fit (L, lambda) by maximum likelihood with a fallback for degenerate samples."""
    z = as_sample(sample)
    backscatter = float(np.mean(z))
    try:
        looks = estimate_looks(z)
    except NoRootError:
        # fallback_looks is trusted as given, only data-driven values are clamped
        looks = fallback_looks if fallback_looks is not None else moment_looks(z)
    return GammaParams(float(looks), backscatter)


def fit_summaries(count, total, total_log, total_sq, fallback_looks=None):
    """Vectorized estimate_params from per-sample sums.

    Each argument is an array of per-sample statistics (or a scalar count):
    the number of values, their sum, the sum of logs and the sum of squares.
    Returns (looks, backscatter) arrays. The ML and moment estimates are
    clamped exactly as in ``estimate_params``; ``total_sq`` is only used by
    the moment fallback.
    """
    mean = total / count
    spread = np.log(mean) - total_log / count
    looks = solve_looks(spread)
    no_root = np.isnan(looks)
    if no_root.any():
        if fallback_looks is not None:
            looks = np.where(no_root, float(fallback_looks), clamp_looks(looks))
        else:
            sq_dev = np.maximum(total_sq - total * mean, 0.0)
            var = sq_dev / np.maximum(count - 1, 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                moment = np.where(var > 0, mean * mean / var, np.inf)
            looks = clamp_looks(np.where(no_root, moment, looks))
    else:
        looks = clamp_looks(looks)
    return looks, mean


def sample_gamma(params, count, rng):
    """Draw ``count`` intensities from Gamma(L, L/lambda).

    ``rng`` is a numpy Generator or anything ``default_rng`` accepts.
    """
    rng = np.random.default_rng(rng)
    if count < 1:
        raise ValueError("count must be >= 1")
    return params.backscatter * rng.standard_gamma(params.looks, size=count) / params.looks
