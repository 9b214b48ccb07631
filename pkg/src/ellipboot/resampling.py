"""Seeded bootstrap resampling and squared-norm bootstrap statistics.

Three conditional laws are supported:

* ``plain``: ``n (m* - m)' cov^{-1} (m* - m)``
* ``studentized``: the same form with each resample's own covariance
* ``smoothed``: resamples perturbed by Gaussian kernel noise (expanding
  bandwidth), or plain resamples measured against a shrunken covariance
  (shrinking bandwidth)
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import numcore
from .edgeworth import Bandwidth
from .errors import BootstrapInstabilityError, DomainError
from .moments import Sample, as_sample

MIN_BOOT = 100
# rejected (singular) studentized resamples allowed per requested resample
REJECTION_FACTOR = 10

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    """Reproducible random stream identified by ``(master_seed, stream_id)``."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= v <= _MASK64:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys: int) -> SeedSpec:
        """Derive an independent stream keyed by nonnegative integers."""
        ss = np.random.SeedSequence([int(self.stream_id), *map(int, keys)])
        return SeedSpec(self.master_seed, int(ss.generate_state(1, np.uint64)[0]))


class Mode(str, Enum):
    PLAIN = "plain"
    STUDENTIZED = "studentized"
    SMOOTHED = "smoothed"


@dataclass(frozen=True, eq=False)
class BootStats:
    """Sorted bootstrap squared-norm statistics."""

    values: NDArray[np.float64] = field(repr=False)
    mode: Mode
    rejections: int = 0

    def __post_init__(self) -> None:
        v = np.sort(np.asarray(self.values, dtype=np.float64).ravel())
        if v.size == 0:
            raise DomainError("no bootstrap statistics")
        if not np.all(np.isfinite(v)) or v[0] < 0.0:
            raise DomainError("bootstrap statistics must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def B(self) -> int:
        return self.values.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BootStats):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.rejections == other.rejections
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"BootStats(B={self.B}, mode={self.mode.value}, rejections={self.rejections})"


def resample_indices(n: int, rng: np.random.Generator, size: int | None = None) -> NDArray[np.int64]:
    """Indices of one resample (or ``size`` resamples, shape ``(size, n)``)."""
    if n < 1:
        raise DomainError("n must be positive")
    shape = n if size is None else (size, n)
    return rng.integers(0, n, size=shape)


def quad_forms(diffs: NDArray[np.float64], inv: NDArray[np.float64], n: int) -> NDArray[np.float64]:
    """``n * d' inv d`` for every row ``d`` of ``diffs``."""
    v = n * np.einsum("bi,ij,bj->b", diffs, inv, diffs)
    return np.maximum(v, 0.0)


def resample_means(
    rows: NDArray[np.float64],
    idx: NDArray[np.int64],
    noise_root: NDArray[np.float64] | None = None,
    rng: np.random.Generator | None = None,
) -> NDArray[np.float64]:
    """Means of the resampled rows, optionally after adding ``N(0, root' root)`` noise.

    ``idx`` has shape ``(..., n)``; the result has shape ``(..., p)``.
    ``noise_root`` is any ``(k, p)`` factor of the noise covariance.
    """
    m = idx.shape[-1]
    noise = None
    if noise_root is not None:
        # only the mean is used: the summed per-row noise sum_i z_i'R is
        # drawn directly as sqrt(m) w'R with a single standard normal w
        noise = (math.sqrt(m) * rng.standard_normal((*idx.shape[:-1], noise_root.shape[0]))) @ noise_root
    # one gather per coordinate is much faster than reducing a (B, n, p) block
    cols = []
    for k in range(rows.shape[1]):
        v = rows[:, k][idx].sum(axis=-1)
        if noise is not None:
            v = v + noise[..., k]
        cols.append(v)
    return np.stack(cols, axis=-1) / m


def kernel_root(rows: NDArray[np.float64], center: NDArray[np.float64], scale: float) -> NDArray[np.float64]:
    """Factor ``R = sqrt(|scale|/n) (rows - center)`` with ``R'R = |scale| cov``.

    Built from the centered data rather than a matrix square root, so the
    kernel noise maps exactly under affine changes of the data.
    """
    return math.sqrt(abs(scale) / rows.shape[0]) * (rows - center)


def batch_cov(rows: NDArray[np.float64], idx: NDArray[np.int64], means: NDArray[np.float64]) -> NDArray[np.float64]:
    """Divisor-n covariance of each resample in ``idx``."""
    n, p = idx.shape[-1], rows.shape[1]
    dev = [rows[:, k][idx] - means[..., k, None] for k in range(p)]
    out = np.empty((*idx.shape[:-1], p, p))
    for i in range(p):
        for j in range(i, p):
            out[..., i, j] = out[..., j, i] = (dev[i] * dev[j]).sum(axis=-1) / n
    return out


def nonsingular(covs: NDArray[np.float64]) -> NDArray[np.bool_]:
    w = np.linalg.eigvalsh(covs)
    return (w[..., -1] > 0.0) & (w[..., 0] > numcore.SINGULAR_RTOL * w[..., -1])


# maps (means, covs) of resampled rows to (estimates, covariance estimates)
Transform = Callable[[NDArray[np.float64], NDArray[np.float64]], tuple[NDArray[np.float64], NDArray[np.float64]]]


def _identity_transform(means, covs):
    return means, covs


def studentized_draws(
    rows: NDArray[np.float64],
    B: int,
    rng: np.random.Generator,
    transform: Transform | None = None,
) -> tuple[NDArray[np.int64], NDArray[np.float64], NDArray[np.float64], int]:
    """Draw ``B`` resamples whose (transformed) covariance is nonsingular.

    Degenerate resamples are replaced by fresh draws from ``rng``, in order.
    Returns ``(idx, estimates, covs, rejections)``; raises
    ``BootstrapInstabilityError`` once more than ``10 * B`` have been rejected.
    """
    transform = transform or _identity_transform
    n = rows.shape[0]
    idx = resample_indices(n, rng, B)
    means = resample_means(rows, idx)
    est, covs = transform(means, batch_cov(rows, idx, means))
    ok = nonsingular(covs)
    rejections = 0
    cap = REJECTION_FACTOR * B
    for b in np.flatnonzero(~ok):
        while True:
            rejections += 1
            if rejections > cap:
                raise BootstrapInstabilityError(
                    f"more than {cap} singular resamples rejected (n={n}, B={B})"
                )
            one = resample_indices(n, rng, 1)
            m1 = resample_means(rows, one)
            e1, c1 = transform(m1, batch_cov(rows, one, m1))
            if nonsingular(c1)[0]:
                idx[b], est[b], covs[b] = one[0], e1[0], c1[0]
                break
    return idx, est, covs, rejections


def studentized_norms(center: NDArray[np.float64], est: NDArray[np.float64], covs: NDArray[np.float64], n: int):
    d = est - center
    v = n * np.einsum("bi,bi->b", d, np.linalg.solve(covs, d[..., None])[..., 0])
    return np.maximum(v, 0.0)


def _batched_quad(d: NDArray[np.float64], inv: NDArray[np.float64]) -> NDArray[np.float64]:
    # d: (k, C, p), inv: (k, p, p); explicit sum is faster than einsum for small p
    p = d.shape[-1]
    out = np.zeros(d.shape[:-1])
    for i in range(p):
        for j in range(p):
            out += d[..., i] * inv[:, None, i, j] * d[..., j]
    return out


# outer resamples whose inner bootstraps are evaluated together
_CHUNK = 50


def covering_levels(
    rows: NDArray[np.float64],
    center: NDArray[np.float64],
    B: int,
    C: int,
    seed: SeedSpec,
    transform: Transform | None = None,
    estimator: Callable[[NDArray[np.float64]], NDArray[np.float64]] | None = None,
) -> tuple[NDArray[np.float64], int]:
    """Double-bootstrap covering levels.

    For outer resample ``b`` with estimate ``e_b`` and covariance ``S_b``,
    ``t_b = n (center - e_b)' S_b^{-1} (center - e_b)`` and ``lambda_b`` is the
    fraction of the ``C`` inner statistics ``n (e** - e_b)' S_b^{-1} (e** - e_b)``
    not exceeding ``t_b``. Outer resamples are drawn from ``seed`` exactly as
    ``studentized_draws`` draws them; the inner resamples of outer ``b``
    come from the substream ``seed.child(1, b)``, so the result does not
    depend on evaluation order.

    ``transform``/``estimator`` map resampled means to the estimate (and its
    covariance) for non-identity models; both default to the identity.
    Returns ``(lambdas, outer_rejections)``.
    """
    if B < MIN_BOOT or C < MIN_BOOT:
        raise DomainError(f"B and C must be at least {MIN_BOOT}")
    n = rows.shape[0]
    outer, est, covs, rejections = studentized_draws(rows, B, seed.generator(), transform)
    invs = np.linalg.inv(covs)
    d0 = (center - est)[:, None, :]
    t = n * _batched_quad(d0, invs)[:, 0]
    lam = np.empty(B)
    for lo in range(0, B, _CHUNK):
        hi = min(lo + _CHUNK, B)
        inner = np.stack([resample_indices(n, seed.child(1, b).generator(), C) for b in range(lo, hi)])
        # positions within outer resample b -> rows of the original sample
        rows_idx = outer[lo:hi][np.arange(hi - lo)[:, None, None], inner]
        e2 = resample_means(rows, rows_idx)
        if estimator is not None:
            e2 = estimator(e2)
        w = n * _batched_quad(e2 - est[lo:hi, None, :], invs[lo:hi])
        lam[lo:hi] = np.count_nonzero(w <= t[lo:hi, None], axis=1) / C
    return lam, rejections


def boot_squared_norms(
    s: Sample | ArrayLike,
    B: int,
    mode: Mode | str,
    bandwidth: Bandwidth | None = None,
    seed: SeedSpec | None = None,
) -> BootStats:
    """Bootstrap distribution of a squared Mahalanobis norm of the resampled mean.

    All resamples for one call come from the single stream ``seed``; the
    resample indices are drawn first, so modes sharing a seed share their
    resamples.
    """
    s = as_sample(s)
    mode = Mode(mode)
    if B < MIN_BOOT:
        raise DomainError(f"B must be at least {MIN_BOOT}, got {B}")
    seed = seed or SeedSpec(0)
    rng = seed.generator()
    n, x, center = s.n, s.data, s.mean

    if mode is Mode.STUDENTIZED:
        _, est, covs, rej = studentized_draws(x, B, rng)
        return BootStats(studentized_norms(center, est, covs, n), mode, rej)

    if mode is Mode.PLAIN:
        idx = resample_indices(n, rng, B)
        return BootStats(quad_forms(resample_means(x, idx) - center, numcore.sym_inverse(s.cov), n), mode)

    if bandwidth is None:
        raise DomainError("smoothed mode requires a bandwidth")
    shape = smoothed_shape(s.cov, bandwidth)
    idx = resample_indices(n, rng, B)
    if bandwidth.expanding:
        means = resample_means(x, idx, kernel_root(x, center, bandwidth.scale), rng)
    else:
        means = resample_means(x, idx)
    return BootStats(quad_forms(means - center, numcore.sym_inverse(shape), n), mode)


def smoothed_shape(cov: NDArray[np.float64], bandwidth: Bandwidth) -> NDArray[np.float64]:
    """``cov + H`` when expanding, ``cov - H`` when shrinking.

    The shrinking branch requires ``|scale| < 1`` so the result stays
    positive definite.
    """
    if bandwidth.expanding:
        return cov + bandwidth.matrix
    if abs(bandwidth.scale) >= 1.0:
        raise DomainError(f"shrinking bandwidth scale {bandwidth.scale:.4g} would leave a non-PD shape")
    return cov - bandwidth.matrix


def boot_quantile(stats: BootStats, alpha: float) -> float:
    """Order statistic of rank ``ceil(B * alpha)``; ``alpha == 1`` gives the maximum."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    B = stats.B
    # guard against B*alpha landing a hair above an integer
    k = math.ceil(round(B * alpha, 9))
    return float(stats.values[min(max(k, 1), B) - 1])
