"""Second-order corrections for squared-norm statistics of a mean vector.

``q1`` and ``q2`` are the O(1/n) corrections to the chi-square quantile of
``S'S`` (known covariance) and ``U'U`` (studentized) respectively; their
difference drives both the smoothing bandwidth and the analytic level
adjustment used by the smoothed and calibrated percentile regions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import numcore
from .errors import DomainError
from .moments import CumulantEstimates, Sample, as_sample, cumulants


class ClampWarning(UserWarning):
    """An expansion left its valid range and was clamped."""


@dataclass(frozen=True)
class QPolyCoeffs:
    """Coefficients of ``x``, ``x^2/(p+2)`` and ``x^3/((p+2)(p+4))`` in both expansions."""

    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    b3: float
    p: int

    @classmethod
    def from_cumulants(cls, c: CumulantEstimates) -> QPolyCoeffs:
        k31, k32, k4 = c.skew_mardia, c.skew_isogai, c.kurt_mardia_centered
        p = c.p
        base = p * (p + 2) / 4.0
        return cls(
            a1=k32 / 8 + k31 / 12 - k4 / 8,
            a2=k4 / 8 - k32 / 4 - k31 / 6,
            a3=k32 / 8 + k31 / 12,
            b1=base + k4 / 2 - k31 / 6,
            b2=base + k31 / 3 - k4 / 4,
            b3=k31 / 3 + k32 / 2,
            p=p,
        )


def _bracket(x: float, p: int, c1: float, c2: float, c3: float) -> float:
    # c1 x + c2 x^2/(p+2) + c3 x^3/((p+2)(p+4)), Horner form
    return x * (c1 + x / (p + 2) * (c2 + c3 * x / (p + 4)))


def _check_x(x: float) -> None:
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")


def q1(x: float, c: CumulantEstimates) -> float:
    """Quantile correction for the standardized statistic ``S'S``."""
    _check_x(x)
    k = QPolyCoeffs.from_cumulants(c)
    return 2.0 / c.p * _bracket(x, c.p, k.a1, k.a2, k.a3)


def q2(x: float, c: CumulantEstimates) -> float:
    """Quantile correction for the studentized statistic ``U'U``."""
    _check_x(x)
    k = QPolyCoeffs.from_cumulants(c)
    return 2.0 / c.p * _bracket(x, c.p, k.b1, k.b2, k.b3)


def _clamp_prob(v: float) -> float:
    if v < 0.0 or v > 1.0:
        warnings.warn(f"expansion cdf {v:.4g} clamped to [0, 1]", ClampWarning, stacklevel=3)
        return min(1.0, max(0.0, v))
    return v


def cdf_ss(x: float, c: CumulantEstimates, n: int) -> float:
    """Expansion of ``P(S'S <= x)`` to order 1/n."""
    _check_x(x)
    if n < 1:
        raise DomainError("n must be positive")
    p = c.p
    k = QPolyCoeffs.from_cumulants(c)
    v = numcore.chi2_cdf(p, x) - 2.0 / (n * p) * numcore.chi2_pdf(p, x) * _bracket(x, p, k.a1, k.a2, k.a3)
    return _clamp_prob(v)


def cdf_uu(x: float, c: CumulantEstimates, n: int) -> float:
    """Expansion of ``P(U'U <= x)`` to order 1/n."""
    _check_x(x)
    if n < 1:
        raise DomainError("n must be positive")
    p = c.p
    k = QPolyCoeffs.from_cumulants(c)
    v = numcore.chi2_cdf(p, x) - 2.0 / (n * p) * numcore.chi2_pdf(p, x) * _bracket(x, p, k.b1, k.b2, k.b3)
    return _clamp_prob(v)


def _radius(alpha: float, c: CumulantEstimates, n: int, q) -> float:
    x = numcore.chi2_quantile(c.p, alpha)
    r = x + q(x, c) / n
    if r < 0.0:
        warnings.warn(f"squared radius {r:.4g} clamped to 0", ClampWarning, stacklevel=3)
        return 0.0
    return r


def radius_s(alpha: float, c: CumulantEstimates, n: int) -> float:
    """Squared radius of the level-``alpha`` sphere for ``S``."""
    return _radius(alpha, c, n, q1)


def radius_u(alpha: float, c: CumulantEstimates, n: int) -> float:
    """Squared radius of the level-``alpha`` sphere for ``U``."""
    return _radius(alpha, c, n, q2)


def q_difference(alpha: float, c: CumulantEstimates) -> float:
    """``q2 - q1`` evaluated at the chi-square ``alpha`` quantile."""
    x = numcore.chi2_quantile(c.p, alpha)
    return q2(x, c) - q1(x, c)


@dataclass(frozen=True)
class Bandwidth:
    """Plug-in smoothing bandwidth ``scale * cov``.

    ``matrix`` holds ``|scale| * cov``; when ``expanding`` is false the
    matrix is the variance *reduction* applied in the shrinkage branch.
    """

    scale: float
    matrix: NDArray[np.float64]
    expanding: bool

    @classmethod
    def from_scale(cls, scale: float, cov: NDArray[np.float64]) -> Bandwidth:
        m = abs(scale) * np.asarray(cov, dtype=np.float64)
        m.setflags(write=False)
        return cls(float(scale), m, bool(scale > 0))


def bandwidth_matrix(s: Sample, alpha: float) -> Bandwidth:
    """Plug-in optimal bandwidth ``(n chi2_{p,alpha})^{-1} (q2 - q1) cov``."""
    s = as_sample(s)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    c = cumulants(s)
    x = numcore.chi2_quantile(s.p, alpha)
    scale = (q2(x, c) - q1(x, c)) / (s.n * x)
    return Bandwidth.from_scale(scale, s.cov)


@dataclass(frozen=True)
class LevelAdjustment:
    u_tilde: float
    alpha_prime: float

    @classmethod
    def clipped(cls, alpha: float, u_tilde: float) -> LevelAdjustment:
        return cls(float(u_tilde), max(alpha, min(1.0, alpha + u_tilde)))


def analytic_level_adjustment(s: Sample, alpha: float, n: int | None = None) -> LevelAdjustment:
    """Closed-form nominal-level shift replacing the inner bootstrap.

    ``u = n^{-1} (q2 - q1) g_p(chi2_{p,alpha})`` with sample cumulants, and
    ``alpha' = max(alpha, min(1, alpha + u))``. ``n`` defaults to the
    sample size.
    """
    s = as_sample(s)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    n = s.n if n is None else n
    c = cumulants(s)
    x = numcore.chi2_quantile(s.p, alpha)
    u = (q2(x, c) - q1(x, c)) * numcore.chi2_pdf(s.p, x) / n
    return LevelAdjustment.clipped(alpha, u)
