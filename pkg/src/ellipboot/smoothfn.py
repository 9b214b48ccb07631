"""Regions for smooth functions of a mean vector, ``theta = A(E g(X))``.

Bootstrap statistics are computed on the transformed rows ``Z_i = g(X_i)``;
the covariance of ``theta_hat`` is the delta-method ``C Psi C'`` with
``C`` the Jacobian of ``A`` at the mean of ``Z``.

The smoothed and analytically adjusted regions need ``q2 - q1`` for the
model, which has no general closed form here. It is estimated from the
bootstrap as ``n (r2_BT - r2_BP)``, the difference of the studentized and
plain squared radii; regions built that way carry the
``FLAG_SURROGATE`` flag.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import numcore
from .edgeworth import Bandwidth, LevelAdjustment
from .errors import DomainError, NumericFailureError, SingularMatrixError
from .moments import Sample, as_sample, centered_cov
from .regions import (
    FLAG_LEVEL_CLIPPED_AT_ONE,
    FLAG_SHRINK_FALLBACK,
    FLAG_SHRINKING,
    METHODS,
    Ellipsoid,
)
from .resampling import (
    MIN_BOOT,
    BootStats,
    Mode,
    SeedSpec,
    boot_quantile,
    covering_levels,
    kernel_root,
    quad_forms,
    resample_indices,
    resample_means,
    studentized_draws,
    studentized_norms,
)

FLAG_SURROGATE = "bootstrap-surrogate-q-difference"

Vector = NDArray[np.float64]


@dataclass(frozen=True)
class SmoothModel:
    """``theta = A(eta)`` with ``eta = E[g(X)]``.

    ``g`` maps a p-vector to a d1-vector and ``A`` a d1-vector to a
    d-vector. Without ``grad_A`` the Jacobian is taken by central
    differences. All three callables may be evaluated concurrently.
    """

    g: Callable[[Vector], ArrayLike]
    A: Callable[[Vector], ArrayLike]
    d: int
    d1: int
    grad_A: Callable[[Vector], ArrayLike] | None = None
    name: str = "model"

    def theta(self, eta: Vector) -> Vector:
        return np.asarray(self.A(eta), dtype=np.float64).reshape(self.d)

    def jacobian(self, eta: Vector) -> NDArray[np.float64]:
        if self.grad_A is not None:
            return np.asarray(self.grad_A(eta), dtype=np.float64).reshape(self.d, self.d1)
        return numeric_jacobian(self.A, eta, self.d)


def numeric_jacobian(A: Callable[[Vector], ArrayLike], eta: Vector, d: int) -> NDArray[np.float64]:
    """Central differences with step ``1e-6 (1 + |eta_j|)``."""
    eta = np.asarray(eta, dtype=np.float64)
    J = np.empty((d, eta.size))
    for j in range(eta.size):
        h = 1e-6 * (1.0 + abs(eta[j]))
        up, dn = eta.copy(), eta.copy()
        up[j] += h
        dn[j] -= h
        J[:, j] = (np.asarray(A(up), dtype=np.float64).reshape(d) - np.asarray(A(dn), dtype=np.float64).reshape(d)) / (
            up[j] - dn[j]
        )
    if not np.all(np.isfinite(J)):
        raise NumericFailureError("finite-difference Jacobian is not finite")
    return J


def identity_model(p: int) -> SmoothModel:
    """The mean vector itself, with an exact Jacobian."""
    eye = np.eye(p)
    return SmoothModel(g=lambda x: x, A=lambda e: e, d=p, d1=p, grad_A=lambda e: eye, name="identity")


def variance_model() -> SmoothModel:
    """Variance of a univariate sample: ``g(x) = (x, x^2)``, ``A(eta) = eta_2 - eta_1^2``."""
    return SmoothModel(
        g=lambda x: np.array([x[0], x[0] ** 2]),
        A=lambda e: np.array([e[1] - e[0] ** 2]),
        d=1,
        d1=2,
        grad_A=lambda e: np.array([[-2.0 * e[0], 1.0]]),
        name="variance",
    )


def correlation_model() -> SmoothModel:
    """Correlation of a bivariate sample from its first and second raw moments."""

    def A(e):
        m1, m2, s11, s22, s12 = e
        return np.array([(s12 - m1 * m2) / np.sqrt((s11 - m1**2) * (s22 - m2**2))])

    return SmoothModel(
        g=lambda x: np.array([x[0], x[1], x[0] ** 2, x[1] ** 2, x[0] * x[1]]),
        A=A,
        d=1,
        d1=5,
        name="correlation",
    )


def transform_sample(s: Sample | ArrayLike, m: SmoothModel) -> Sample:
    """Rows ``Z_i = g(X_i)`` as a new sample."""
    s = as_sample(s)
    rows = []
    for i, x in enumerate(s.data):
        z = np.asarray(m.g(x), dtype=np.float64).reshape(-1)
        if z.size != m.d1:
            raise DomainError(f"g returned {z.size} values for row {i}, expected {m.d1}")
        if not np.all(np.isfinite(z)):
            raise DomainError(f"g is not finite at row {i}")
        rows.append(z)
    return Sample(np.array(rows))


def _omega(m: SmoothModel, eta: Vector, psi: NDArray[np.float64]) -> NDArray[np.float64]:
    J = m.jacobian(eta)
    return J @ psi @ J.T


def estimate(s: Sample | ArrayLike, m: SmoothModel) -> tuple[Vector, NDArray[np.float64]]:
    """Plug-in ``theta_hat = A(Zbar)`` and ``Omega_hat = C(Zbar) Psi_hat C(Zbar)'``."""
    z = transform_sample(s, m)
    theta = m.theta(z.mean)
    omega = _omega(m, z.mean, z.cov)
    if not numcore.is_positive_definite(omega):
        raise SingularMatrixError("estimated covariance of theta is singular")
    return theta, omega


def _thetas(m: SmoothModel, etas: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.array([m.theta(e) for e in etas]).reshape(len(etas), m.d)


def _delta_transform(m: SmoothModel):
    def transform(means, covs):
        est = np.empty((len(means), m.d))
        om = np.empty((len(means), m.d, m.d))
        for b in range(len(means)):
            est[b] = m.theta(means[b])
            om[b] = _omega(m, means[b], covs[b])
        return est, om

    return transform


class _Context:
    """Per-call quantities shared by the method builders."""

    def __init__(self, s: Sample, m: SmoothModel, alpha: float, B: int, seed: SeedSpec):
        self.x = s
        self.model = m
        self.z = transform_sample(s, m)
        self.n = s.n
        self.alpha = alpha
        self.B = B
        self.seed = seed
        self.eta = self.z.mean
        self.theta = m.theta(self.eta)
        self.omega = _omega(m, self.eta, self.z.cov)
        self.jac = m.jacobian(self.eta)

    def plain(self) -> BootStats:
        rng = self.seed.generator()
        idx = resample_indices(self.n, rng, self.B)
        est = _thetas(self.model, resample_means(self.z.data, idx))
        return BootStats(quad_forms(est - self.theta, numcore.sym_inverse(self.omega), self.n), Mode.PLAIN)

    def studentized(self) -> BootStats:
        rng = self.seed.generator()
        _, est, om, rej = studentized_draws(self.z.data, self.B, rng, _delta_transform(self.model))
        return BootStats(studentized_norms(self.theta, est, om, self.n), Mode.STUDENTIZED, rej)

    def smoothed(self, bw: Bandwidth) -> tuple[BootStats, NDArray[np.float64]]:
        """Smoothing acts on the transformed rows; returns stats and region shape."""
        rng = self.seed.generator()
        idx = resample_indices(self.n, rng, self.B)
        if bw.expanding:
            means = resample_means(self.z.data, idx, kernel_root(self.z.data, self.eta, bw.scale), rng)
            shape = self.jac @ (self.z.cov + bw.matrix) @ self.jac.T
        else:
            means = resample_means(self.z.data, idx)
            shape = self.jac @ (self.z.cov - bw.matrix) @ self.jac.T
        est = _thetas(self.model, means)
        return BootStats(quad_forms(est - self.theta, numcore.sym_inverse(shape), self.n), Mode.SMOOTHED), shape

    def region(self, stats, level, method, shape=None, flags=(), **info) -> Ellipsoid:
        if level >= 1.0:
            flags = (*flags, FLAG_LEVEL_CLIPPED_AT_ONE)
        info.setdefault("rejections", stats.rejections)
        return Ellipsoid(
            self.theta,
            self.omega if shape is None else shape,
            boot_quantile(stats, level),
            self.n,
            method,
            self.alpha,
            float(level),
            tuple(flags),
            info,
        )

    def radius_difference(self) -> float:
        """Surrogate for ``(q2 - q1)/n``: studentized minus plain bootstrap radius."""
        diff = boot_quantile(self.studentized(), self.alpha) - boot_quantile(self.plain(), self.alpha)
        if not np.isfinite(diff):
            raise NumericFailureError("bootstrap radius difference is not finite")
        return diff


def _covering_levels_sf(ctx: _Context, C: int) -> NDArray[np.float64]:
    m = ctx.model

    def estimator(means):
        return _thetas(m, means.reshape(-1, m.d1)).reshape(*means.shape[:-1], m.d)

    lam, _ = covering_levels(ctx.z.data, ctx.theta, ctx.B, C, ctx.seed, _delta_transform(m), estimator)
    return lam


def build_region_sf(
    s: Sample | ArrayLike,
    m: SmoothModel,
    method: str,
    alpha: float,
    B: int = 1000,
    C: int | None = None,
    seed: SeedSpec | None = None,
) -> Ellipsoid:
    """Ellipsoidal region for ``theta = A(eta)`` by one of BP, BT, SBP, AN, RBP."""
    s = as_sample(s)
    method = method.upper()
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if B < MIN_BOOT:
        raise DomainError(f"B must be at least {MIN_BOOT}, got {B}")
    ctx = _Context(s, m, alpha, B, seed or SeedSpec(0))
    if not numcore.is_positive_definite(ctx.omega):
        raise SingularMatrixError("estimated covariance of theta is singular")

    if method == "BP":
        return ctx.region(ctx.plain(), alpha, "BP")
    if method == "BT":
        return ctx.region(ctx.studentized(), alpha, "BT")
    if method == "RBP":
        C = 1000 if C is None else C
        if C < MIN_BOOT:
            raise DomainError(f"C must be at least {MIN_BOOT}, got {C}")
        lam = _covering_levels_sf(ctx, C)
        level = max(boot_quantile(BootStats(lam, Mode.PLAIN), alpha), 1.0 / B)
        return ctx.region(ctx.plain(), level, "RBP")

    diff = ctx.radius_difference()
    d = m.d
    x = numcore.chi2_quantile(d, alpha)
    if method == "AN":
        adj = LevelAdjustment.clipped(alpha, diff * numcore.chi2_pdf(d, x))
        return ctx.region(ctx.plain(), adj.alpha_prime, "AN", flags=(FLAG_SURROGATE,), u_tilde=adj.u_tilde)

    bw = Bandwidth.from_scale(diff / x, ctx.z.cov)
    if not bw.expanding and abs(bw.scale) >= 1.0:
        return ctx.region(ctx.plain(), alpha, "SBP", flags=(FLAG_SURROGATE, FLAG_SHRINK_FALLBACK), bandwidth_scale=bw.scale)
    stats, shape = ctx.smoothed(bw)
    flags = (FLAG_SURROGATE,) if bw.expanding else (FLAG_SURROGATE, FLAG_SHRINKING)
    return ctx.region(stats, alpha, "SBP", shape=shape, flags=flags, bandwidth_scale=bw.scale)
