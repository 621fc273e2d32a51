"""Stochastic divergences between Gamma laws and the tests built on them.

The generic path integrates an (h, phi)-divergence numerically and works for
any admissible pair of functions. The filters use the closed-form
Kullback-Leibler statistic, vectorized over whole images.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .gamma_model import as_sample, estimate_params, gamma_log_density
from .specfun import gamma_q


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DivergenceSpec:
    """An (h, phi) pair plus the two derivatives that fix the scale factor k.

    ``h_prime_zero`` is h'(0) and ``phi_second_one`` is phi''(1); the test
    statistic multiplies the distance by k = 1 / (h'(0) * phi''(1)).
    ``phi_over_x`` is phi(x) / x written as a function of r = log x. It is
    only called with r > 0 and lets the integrand be evaluated where f1 / f2
    overflows; when omitted it is computed from ``phi`` directly.
    """

    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    h: Callable[[float], float]
    h_prime_zero: float
    phi_second_one: float
    phi_over_x: Optional[Callable[[float], float]] = None

    @property
    def k(self):
        return 1.0 / (self.h_prime_zero * self.phi_second_one)

    def scaled_phi(self, r):
        """phi(e^r) * e^-r for r > 0."""
        if self.phi_over_x is not None:
            return self.phi_over_x(r)
        with np.errstate(over="ignore", invalid="ignore"):
            return float(self.phi(math.exp(min(r, 700.0))) * math.exp(-min(r, 700.0)))


def _phi_kl(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(x) - x + 1.0, 1.0)


KULLBACK_LEIBLER = DivergenceSpec(
    "kullback-leibler",
    phi=_phi_kl,
    h=lambda y: y,
    h_prime_zero=1.0,
    phi_second_one=1.0,
    phi_over_x=lambda r: r - 1.0 + math.exp(-r),
)
HELLINGER = DivergenceSpec(
    "hellinger",
    phi=lambda x: (np.sqrt(x) - 1.0) ** 2,
    h=lambda y: y / 2.0,
    h_prime_zero=0.5,
    phi_second_one=0.5,
    phi_over_x=lambda r: (1.0 - math.exp(-r / 2.0)) ** 2,
)
BHATTACHARYYA = DivergenceSpec(
    "bhattacharyya",
    phi=lambda x: -np.sqrt(x) + (x + 1.0) / 2.0,
    h=lambda y: -math.log(1.0 - y),
    h_prime_zero=1.0,
    phi_second_one=0.25,
    phi_over_x=lambda r: (1.0 + math.exp(-r)) / 2.0 - math.exp(-r / 2.0),
)
TRIANGULAR = DivergenceSpec(
    "triangular",
    phi=lambda x: (x - 1.0) ** 2 / (x + 1.0),
    h=lambda y: y,
    h_prime_zero=1.0,
    phi_second_one=1.0,
    phi_over_x=lambda r: (1.0 - math.exp(-r)) ** 2 / (1.0 + math.exp(-r)),
)
DIVERGENCES = {d.name: d for d in (KULLBACK_LEIBLER, HELLINGER, BHATTACHARYYA, TRIANGULAR)}

_NEGLIGIBLE_LOG_DENSITY = math.log(1e-300)
_NEGLIGIBLE_LOG_MASS = math.log(1e-20)
# divergences are dimensionless; below this the integrand is rounding noise
_ABS_TOL = 1e-14


def _integration_limits(p1, p2):
    """(lower, upper) outside of which both laws carry negligible mass."""
    # P(Z < z) <= (L z / lambda)^L / Gamma(L + 1), solved for a mass of 1e-20
    lower = min(
        p.backscatter / p.looks * math.exp((_NEGLIGIBLE_LOG_MASS + math.lgamma(p.looks + 1)) / p.looks)
        for p in (p1, p2)
    )
    lower = min(lower, 0.5 * min(p1.backscatter, p2.backscatter))
    upper = max(p1.backscatter, p2.backscatter)
    for _ in range(200):
        if (
            gamma_log_density(upper, p1.looks, p1.backscatter) < _NEGLIGIBLE_LOG_DENSITY
            and gamma_log_density(upper, p2.looks, p2.backscatter) < _NEGLIGIBLE_LOG_DENSITY
        ):
            return lower, upper
        upper *= 2.0
    raise QuadratureError("could not bound the integration domain")


def generic_divergence(spec, p1, p2, rel_tol=1e-10):
    """D(Z1, Z2) = h( integral of phi(f1 / f2) * f2 ) by adaptive quadrature.

    The integral runs over t = log z, which removes the z^(L-1) singularity
    at the origin when L < 1.
    """

    def integrand(t):
        z = math.exp(t)
        log_f1 = float(gamma_log_density(z, p1.looks, p1.backscatter))
        log_f2 = float(gamma_log_density(z, p2.looks, p2.backscatter))
        r = log_f1 - log_f2
        if r > 0:
            # f2 phi(f1 / f2) = f1 phi(x) / x, finite even where f2 underflows
            return math.exp(log_f1 + t) * spec.scaled_phi(r)
        return math.exp(log_f2 + t) * float(spec.phi(math.exp(r)))

    lower, upper = _integration_limits(p1, p2)
    # split at the bulk of each law so quad cannot step over a narrow peak
    breaks = sorted(
        {
            math.log(b)
            for p in (p1, p2)
            for b in (
                p.backscatter * max(1.0 - 4.0 / math.sqrt(p.looks), 0.05),
                p.backscatter,
                p.backscatter * (1.0 + 4.0 / math.sqrt(p.looks)),
            )
            if lower < b < upper
        }
    )
    edges = [math.log(lower)]
    for b in [*breaks, math.log(upper)]:
        # near-coincident break points would leave zero-width pieces
        if b - edges[-1] > 1e-9:
            edges.append(b)
    edges[-1] = math.log(upper)
    total = 0.0
    abs_err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, err, *info = integrate.quad(
            integrand, a, b, epsabs=_ABS_TOL, epsrel=rel_tol, limit=200, full_output=1
        )
        if len(info) > 1:
            # quad appends a warning message only when it did not converge
            raise QuadratureError(f"quadrature on [{a:g}, {b:g}] did not converge: {info[1]}")
        total += value
        abs_err += err
    if abs_err > 1e-8 * max(abs(total), 1e-300) and abs_err > len(edges) * _ABS_TOL:
        raise QuadratureError(f"quadrature error estimate {abs_err:.3g} for value {total:.6g}")
    return spec.h(max(total, 0.0))


def symmetrized_distance(spec, p1, p2):
    """Average of the two directed divergences."""
    return (generic_divergence(spec, p1, p2) + generic_divergence(spec, p2, p1)) / 2.0


def scaled_statistic(spec, p1, m, p2, n):
    """Distance turned into a test statistic: 2 m n k / (m + n) * d(p1, p2)."""
    return 2.0 * m * n * spec.k / (m + n) * symmetrized_distance(spec, p1, p2)


def kl_statistic(p1, m, p2, n):
    """Closed-form Kullback-Leibler test statistic for two Gamma fits."""
    return float(
        kl_statistic_array(p1.looks, p1.backscatter, m, p2.looks, p2.backscatter, n)
    )


def kl_statistic_array(looks1, lambda1, m, looks2, lambda2, n):
    """Vectorized ``kl_statistic`` over arrays of parameters."""
    # (l1^2 + l2^2) / (2 l1 l2) - 1 == (l1 - l2)^2 / (2 l1 l2), which is exact at l1 == l2
    diff = lambda1 - lambda2
    bracket = diff * diff / (2.0 * lambda1 * lambda2)
    return m * n * (looks1 + looks2) / (m + n) * bracket


def chi2_survival(s, dof):
    """Pr(chi2_dof > s), vectorized over s."""
    if dof < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {dof}")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("chi-square statistic must be nonnegative")
    return gamma_q(dof / 2.0, s / 2.0)


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    statistic: float
    p_value: float
    dof: int


def test_equal_distributions(sample1, sample2, dof=1, fallback_looks=None):
    """KL test of H0: both samples come from the same Gamma law."""
    z1 = as_sample(sample1)
    z2 = as_sample(sample2)
    p1 = estimate_params(z1, fallback_looks)
    p2 = estimate_params(z2, fallback_looks)
    s = kl_statistic(p1, z1.size, p2, z2.size)
    return TestResult(statistic=s, p_value=float(chi2_survival(s, dof)), dof=dof)


# pytest would otherwise try to collect the function above
test_equal_distributions.__test__ = False


def weight(p, eta):
    """Soft-threshold weight of a p-value.

    1 at or above ``eta``, 0 at or below ``eta / 2``, linear in between.
    Vectorized over ``p``.
    """
    p = np.asarray(p, dtype=float)
    w = np.where(p >= eta, 1.0, np.where(p > eta / 2.0, 2.0 / eta * p - 1.0, 0.0))
    return float(w) if w.ndim == 0 else w
