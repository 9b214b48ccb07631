"""Sample container, plug-in moments and multivariate cumulant estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import numcore
from .errors import DomainError


@dataclass(frozen=True, eq=False)
class Sample:
    """An ``n x p`` data matrix whose rows are i.i.d. observations.

    The array is copied and made read-only, so the cached mean and
    covariance can never go stale.
    """

    data: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        a = np.array(self.data, dtype=np.float64)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2:
            raise DomainError(f"sample must be a 2-d array, got {a.ndim} dimensions")
        n, p = a.shape
        if p < 1 or n < p + 2:
            raise DomainError(f"need n >= p + 2 observations, got n={n}, p={p}")
        if not np.all(np.isfinite(a)):
            raise DomainError("sample contains non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @cached_property
    def mean(self) -> NDArray[np.float64]:
        m = _fsum_cols(self.data) / self.n
        m.setflags(write=False)
        return m

    @cached_property
    def cov(self) -> NDArray[np.float64]:
        c = centered_cov(self.data, self.mean)
        c.setflags(write=False)
        return c

    def __repr__(self) -> str:
        return f"Sample(n={self.n}, p={self.p})"


def _fsum_cols(x: NDArray[np.float64]) -> NDArray[np.float64]:
    # exactly rounded column sums: independent of row order
    return np.array([math.fsum(col) for col in x.T], dtype=np.float64)


def centered_cov(x: NDArray[np.float64], mean: NDArray[np.float64]) -> NDArray[np.float64]:
    """Divisor-n covariance about ``mean``, invariant to row order bit for bit."""
    d = x - mean
    p = x.shape[1]
    c = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            c[i, j] = c[j, i] = math.fsum(d[:, i] * d[:, j]) / x.shape[0]
    return c


def as_sample(s: Sample | ArrayLike) -> Sample:
    return s if isinstance(s, Sample) else Sample(np.asarray(s))


def sample_mean(s: Sample | ArrayLike) -> NDArray[np.float64]:
    return as_sample(s).mean


def sample_cov(s: Sample | ArrayLike) -> NDArray[np.float64]:
    """Plug-in covariance ``n^{-1} sum (X_i - Xbar)(X_i - Xbar)'``."""
    return as_sample(s).cov



@dataclass(frozen=True)
class CumulantEstimates:
    """Affine-invariant skewness and kurtosis summaries of a sample.

    ``skew_mardia`` is Mardia's b_{1,p}, ``skew_isogai`` the squared norm of
    the mean of ``|Z|^2 Z``, and ``kurt_mardia_centered`` is Mardia's b_{2,p}
    minus its Gaussian value ``p(p+2)``; all three vanish for Gaussian data.
    """

    skew_mardia: float
    skew_isogai: float
    kurt_mardia_centered: float
    p: int

    @classmethod
    def zero(cls, p: int) -> CumulantEstimates:
        return cls(0.0, 0.0, 0.0, p)


def _rowwise_matmul(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    # elementwise accumulation in a fixed order so each row depends on that row alone
    out = a[:, 0, None] * b[0]
    for k in range(1, a.shape[1]):
        out = out + a[:, k, None] * b[k]
    return out


def standardize(s: Sample) -> NDArray[np.float64]:
    """Rows ``Z_i = cov^{-1/2} (X_i - mean)``."""
    return _rowwise_matmul(s.data - s.mean, numcore.inv_sqrt(s.cov))


def cumulants(s: Sample | ArrayLike) -> CumulantEstimates:
    """Mardia skewness, Isogai skewness and centered Mardia kurtosis.

    Raises ``SingularMatrixError`` if the sample covariance is singular.
    """
    s = as_sample(s)
    n, p = s.n, s.p
    z = standardize(s)
    # sum_ij (Z_i'Z_j)^3 = n^2 sum_abc m_abc^2 with m_abc the mean of Z_a Z_b Z_c
    skew_terms = []
    for a in range(p):
        for b in range(p):
            zab = z[:, a] * z[:, b]
            for c in range(p):
                m_abc = math.fsum(zab * z[:, c]) / n
                skew_terms.append(m_abc * m_abc)
    skew_m = math.fsum(skew_terms)
    r2 = z[:, 0] * z[:, 0]
    for k in range(1, p):
        r2 = r2 + z[:, k] * z[:, k]
    kurt = math.fsum(r2**2) / n - p * (p + 2)
    m = _fsum_cols(r2[:, None] * z) / n
    skew_i = math.fsum(m * m)
    return CumulantEstimates(max(skew_m, 0.0), skew_i, kurt, p)
