"""Ellipsoidal bootstrap confidence regions for a mean vector.

Every region has the form ``{theta : n (c - theta)' shape^{-1} (c - theta) <= r2}``
and differs only in how ``shape`` and ``r2`` are obtained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import numcore
from .edgeworth import Bandwidth, analytic_level_adjustment, bandwidth_matrix
from .errors import DomainError
from .moments import Sample, as_sample
from .resampling import (
    BootStats,
    Mode,
    SeedSpec,
    boot_quantile,
    boot_squared_norms,
)
from .resampling import covering_levels as _covering_levels

METHODS = ("BP", "BT", "SBP", "AN", "RBP")

# diagnostic flags
FLAG_SHRINK_FALLBACK = "sbp-shrink-fallback-to-bp"
FLAG_SHRINKING = "sbp-shrinking"
FLAG_LEVEL_CLIPPED_AT_ONE = "level-clipped-at-one"


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    center: NDArray[np.float64]
    shape: NDArray[np.float64]
    sq_radius: float
    n: int
    method: str
    nominal_level: float
    effective_level: float
    flags: tuple[str, ...] = ()
    info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        c = np.array(self.center, dtype=np.float64).ravel()
        sh = numcore.as_symmetric(self.shape)
        if sh.shape != (c.size, c.size):
            raise DomainError(f"shape {sh.shape} does not match center dimension {c.size}")
        if not self.sq_radius >= 0.0:
            raise DomainError(f"squared radius must be nonnegative, got {self.sq_radius}")
        c.setflags(write=False)
        sh.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", sh)
        object.__setattr__(self, "sq_radius", float(self.sq_radius))

    @property
    def p(self) -> int:
        return self.center.size

    def contains(self, theta: ArrayLike) -> bool:
        return contains(self, theta)

    def volume(self) -> float:
        return volume(self)

    def same_region(self, other: Ellipsoid) -> bool:
        """Bit-exact equality of center, shape, radius and levels."""
        return (
            np.array_equal(self.center, other.center)
            and np.array_equal(self.shape, other.shape)
            and self.sq_radius == other.sq_radius
            and self.n == other.n
            and self.effective_level == other.effective_level
        )


def contains(e: Ellipsoid, theta: ArrayLike) -> bool:
    t = np.asarray(theta, dtype=np.float64).ravel()
    if t.size != e.p:
        raise DomainError(f"theta has dimension {t.size}, region has {e.p}")
    d = e.center - t
    if not np.any(d):
        return True
    return bool(e.n * float(d @ numcore.sym_inverse(e.shape) @ d) <= e.sq_radius)


def volume(e: Ellipsoid) -> float:
    """Lebesgue volume ``V_p (r2/n)^{p/2} det(shape)^{1/2}``."""
    p = e.p
    det = float(np.prod(numcore.sym_eigen(e.shape)[0]))
    return numcore.unit_ball_volume(p) * (e.sq_radius / e.n) ** (p / 2.0) * math.sqrt(max(det, 0.0))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def _region(s: Sample, shape, stats: BootStats, level: float, method: str, alpha: float, flags=(), **info) -> Ellipsoid:
    r2 = boot_quantile(stats, level)
    if level >= 1.0:
        flags = (*flags, FLAG_LEVEL_CLIPPED_AT_ONE)
    info.setdefault("rejections", stats.rejections)
    return Ellipsoid(s.mean, shape, r2, s.n, method, alpha, float(level), tuple(flags), info)


def build_bp(s: Sample | ArrayLike, alpha: float, B: int = 1000, seed: SeedSpec | None = None) -> Ellipsoid:
    """Bootstrap percentile region."""
    s = as_sample(s)
    _check_alpha(alpha)
    stats = boot_squared_norms(s, B, Mode.PLAIN, seed=seed)
    return _region(s, s.cov, stats, alpha, "BP", alpha)


def build_bt(s: Sample | ArrayLike, alpha: float, B: int = 1000, seed: SeedSpec | None = None) -> Ellipsoid:
    """Bootstrap percentile-t region: studentized radius, sample-covariance shape."""
    s = as_sample(s)
    _check_alpha(alpha)
    stats = boot_squared_norms(s, B, Mode.STUDENTIZED, seed=seed)
    return _region(s, s.cov, stats, alpha, "BT", alpha)


def build_sbp(s: Sample | ArrayLike, alpha: float, B: int = 1000, seed: SeedSpec | None = None) -> Ellipsoid:
    """Smoothed bootstrap percentile region with the plug-in bandwidth.

    With a positive bandwidth scale the resamples are smoothed and the shape
    is ``cov + H``; otherwise the shape is shrunk to ``cov - H``. A shrink
    factor of one or more falls back to the plain percentile region.
    """
    s = as_sample(s)
    _check_alpha(alpha)
    bw = bandwidth_matrix(s, alpha)
    if not bw.expanding and abs(bw.scale) >= 1.0:
        stats = boot_squared_norms(s, B, Mode.PLAIN, seed=seed)
        return _region(s, s.cov, stats, alpha, "SBP", alpha, (FLAG_SHRINK_FALLBACK,), bandwidth_scale=bw.scale)
    stats = boot_squared_norms(s, B, Mode.SMOOTHED, bandwidth=bw, seed=seed)
    shape = s.cov + bw.matrix if bw.expanding else s.cov - bw.matrix
    flags = () if bw.expanding else (FLAG_SHRINKING,)
    return _region(s, shape, stats, alpha, "SBP", alpha, flags, bandwidth_scale=bw.scale)


def build_an(s: Sample | ArrayLike, alpha: float, B: int = 1000, seed: SeedSpec | None = None) -> Ellipsoid:
    """Percentile region at the analytically adjusted level ``alpha'``."""
    s = as_sample(s)
    _check_alpha(alpha)
    adj = analytic_level_adjustment(s, alpha)
    stats = boot_squared_norms(s, B, Mode.PLAIN, seed=seed)
    return _region(s, s.cov, stats, adj.alpha_prime, "AN", alpha, u_tilde=adj.u_tilde)


def covering_levels(
    s: Sample | ArrayLike, B: int, C: int, seed: SeedSpec | None = None
) -> tuple[NDArray[np.float64], int]:
    """Minimal inner-bootstrap levels at which each outer resample covers the sample mean."""
    s = as_sample(s)
    return _covering_levels(s.data, s.mean, B, C, seed or SeedSpec(0))


def build_rbp(
    s: Sample | ArrayLike, alpha: float, B: int = 1000, C: int = 1000, seed: SeedSpec | None = None
) -> Ellipsoid:
    """Double-bootstrap calibrated percentile region.

    The calibrated level is the ``ceil(B alpha)``-th smallest covering level,
    so that a fraction ``alpha`` of outer resamples would have covered the
    sample mean with their own inner bootstrap; the region is the plain
    percentile region at that level.
    """
    s = as_sample(s)
    _check_alpha(alpha)
    lam, rejections = covering_levels(s, B, C, seed)
    level = boot_quantile(BootStats(lam, Mode.PLAIN), alpha)
    # a zero covering level still needs the smallest statistic
    level = max(level, 1.0 / B)
    stats = boot_squared_norms(s, B, Mode.PLAIN, seed=seed)
    return _region(s, s.cov, stats, level, "RBP", alpha, outer_rejections=rejections)


BUILDERS = {"BP": build_bp, "BT": build_bt, "SBP": build_sbp, "AN": build_an, "RBP": build_rbp}
