"""Image-quality measures for filter assessment.

ENL, line contrast and the edge measures are computed on annotated regions;
Q and beta_rho compare a whole image with a reference. For line contrast and
edge gradient the reported value is the absolute deviation from the
phantom's own value, so smaller is better for both.
"""

from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage


class UndefinedMetricError(ValueError):
    """A metric's denominator vanished (constant region, flat image...)."""


@dataclass(frozen=True)
class Rect:
    row: int
    col: int
    height: int
    width: int

    @property
    def slices(self):
        return slice(self.row, self.row + self.height), slice(self.col, self.col + self.width)

    def values(self, image):
        return np.asarray(image, dtype=float)[self.slices].ravel()

    def inside(self, shape):
        return (
            self.height > 0
            and self.width > 0
            and 0 <= self.row
            and self.row + self.height <= shape[0]
            and 0 <= self.col
            and self.col + self.width <= shape[1]
        )


@dataclass(frozen=True)
class LineAnnotation:
    """A one-pixel line and two parallel lines flanking it.

    Coordinates are tuples of (row, col) pairs; ``reference`` is the contrast
    of the noiseless phantom along these coordinates.
    """

    line: tuple
    flank1: tuple
    flank2: tuple
    reference: float = 0.0


@dataclass(frozen=True)
class EdgeAnnotation:
    """Two strips on either side of a straight edge; ``step`` is the true jump."""

    side_a: Rect
    side_b: Rect
    step: float = 0.0


@dataclass(frozen=True)
class PhantomAnnotation:
    homogeneous: Rect
    lines: tuple = ()
    edges: tuple = ()

    def validate(self, shape):
        rects = [self.homogeneous] + [r for e in self.edges for r in (e.side_a, e.side_b)]
        for rect in rects:
            if not rect.inside(shape):
                raise ValueError(f"{rect} does not fit in an image of shape {shape}")
        for line in self.lines:
            for coords in (line.line, line.flank1, line.flank2):
                rc = np.asarray(coords)
                if rc.size == 0 or np.any(rc < 0) or np.any(rc >= np.array(shape)):
                    raise ValueError("line coordinates fall outside the image")


@dataclass(frozen=True)
class MetricsReport:
    enl: float
    line_contrast_deviation: float
    edge_gradient: float
    edge_variance: float
    q_index: float
    beta_rho: float
    homogeneous_mean: float = float("nan")

    def as_dict(self):
        return asdict(self)


def enl(image, region=None):
    """Equivalent number of looks, (mean / std)^2, with the n-1 sample std."""
    values = region.values(image) if region is not None else np.asarray(image, float).ravel()
    if values.size < 2:
        raise UndefinedMetricError("ENL needs at least two pixels")
    std = np.std(values, ddof=1)
    if std == 0:
        raise UndefinedMetricError("ENL is undefined on a constant region")
    return float((np.mean(values) / std) ** 2)


def _line_mean(image, coords):
    rc = np.asarray(coords, dtype=int)
    return float(np.mean(image[rc[:, 0], rc[:, 1]]))


def line_contrast(image, annotation):
    """Mean absolute deviation of 2 x_line - (x_flank1 + x_flank2) from the phantom."""
    image = np.asarray(image, dtype=float)
    if not annotation.lines:
        raise UndefinedMetricError("annotation has no lines")
    deviations = []
    for line in annotation.lines:
        contrast = 2.0 * _line_mean(image, line.line) - (
            _line_mean(image, line.flank1) + _line_mean(image, line.flank2)
        )
        deviations.append(abs(contrast - line.reference))
    return float(np.mean(deviations))


def edge_metrics(image, annotation):
    """(gradient, variance) edge measures, averaged over annotated edges.

    gradient: | |mean_a - mean_b| - true step |
    variance: |var_a - var_b|
    """
    image = np.asarray(image, dtype=float)
    if not annotation.edges:
        raise UndefinedMetricError("annotation has no edges")
    gradients, variances = [], []
    for edge in annotation.edges:
        a, b = edge.side_a.values(image), edge.side_b.values(image)
        gradients.append(abs(abs(a.mean() - b.mean()) - edge.step))
        variances.append(abs(np.var(a, ddof=1) - np.var(b, ddof=1)))
    return float(np.mean(gradients)), float(np.mean(variances))


def _check_pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise UndefinedMetricError("need at least two pixels")
    return x.ravel(), y.ravel()


def q_index(x, y):
    """Universal image quality index of y against x.

    Product of correlation, luminance and contrast factors, with sample
    (n-1) variances and covariance over the whole image.
    """
    x, y = _check_pair(x, y)
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    n1 = x.size - 1
    vx, vy, cxy = dx @ dx / n1, dy @ dy / n1, dx @ dy / n1
    if vx == 0 or vy == 0 or mx * mx + my * my == 0:
        raise UndefinedMetricError("Q index undefined for constant images or zero means")
    sx, sy = np.sqrt(vx), np.sqrt(vy)
    correlation = cxy / (sx * sy)
    luminance = 2.0 * mx * my / (mx * mx + my * my)
    contrast = 2.0 * sx * sy / (vx + vy)
    return float(correlation * luminance * contrast)


def laplacian(image):
    """Four-neighbour Laplacian with mirror borders."""
    return ndimage.laplace(np.asarray(image, dtype=float), mode="mirror")


def beta_rho(x, y):
    """Pearson correlation between the Laplacians of x and y."""
    lx, ly = _check_pair(laplacian(x), laplacian(y))
    dx, dy = lx - lx.mean(), ly - ly.mean()
    denom = np.sqrt((dx @ dx) * (dy @ dy))
    if denom == 0:
        raise UndefinedMetricError("beta_rho undefined: a Laplacian is constant")
    return float(np.clip(dx @ dy / denom, -1.0, 1.0))


def compute_metrics(image, truth, annotation):
    gradient, variance = edge_metrics(image, annotation)
    return MetricsReport(
        enl=enl(image, annotation.homogeneous),
        line_contrast_deviation=line_contrast(image, annotation),
        edge_gradient=gradient,
        edge_variance=variance,
        q_index=q_index(truth, image),
        beta_rho=beta_rho(truth, image),
        homogeneous_mean=float(annotation.homogeneous.values(image).mean()),
    )
