"""Stochastic-distance despeckling filters for intensity SAR images."""

from .divergence import (
    DIVERGENCES,
    DivergenceSpec,
    TestResult,
    chi2_survival,
    generic_divergence,
    kl_statistic,
    scaled_statistic,
    symmetrized_distance,
    test_equal_distributions,
    weight,
)
from .filters import FilterConfig, apply_filter, sdnlm_filter, sdnm_filter
from .gamma_model import (
    GammaParams,
    NoRootError,
    estimate_lambda,
    estimate_looks,
    estimate_params,
    gamma_density,
    moment_looks,
    sample_gamma,
)
from .imageio import ImageFormatError, read_annotation, read_image, write_annotation, write_image
from .metrics import (
    MetricsReport,
    PhantomAnnotation,
    Rect,
    UndefinedMetricError,
    beta_rho,
    compute_metrics,
    edge_metrics,
    enl,
    line_contrast,
    q_index,
)
from .neighborhoods import BorderPolicy, PatchLayout, RegionMask, nagao_masks
from .simulation import SITUATIONS, Situation, build_phantom, corrupt, run_protocol

__all__ = [name for name in dir() if not name.startswith("_")]
