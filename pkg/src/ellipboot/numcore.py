"""Dense symmetric linear algebra and chi-square primitives.

Every matrix root in the package is the symmetric one obtained from an
eigendecomposition, so ``sym_sqrt(m)`` is itself symmetric and statistics
built from it do not depend on a choice of factorization.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .errors import DomainError, NumericFailureError, SingularMatrixError

# lambda_min <= SINGULAR_RTOL * lambda_max flags a (numerically) singular matrix
SINGULAR_RTOL = 1e-10


def as_symmetric(m: ArrayLike) -> NDArray[np.float64]:
    """Return ``m`` as a float array, checking that it is square and symmetric."""
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * scale):
        raise DomainError("matrix is not symmetric")
    # store exactly symmetric entries
    return 0.5 * (a + a.T)


def sym_eigen(m: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Eigendecomposition of a symmetric matrix.

    Returns ``(w, V)`` with eigenvalues ``w`` in descending order and the
    matching orthonormal eigenvectors in the columns of ``V``.
    """
    a = as_symmetric(m)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK non-convergence
        raise NumericFailureError(f"eigendecomposition did not converge: {exc}") from exc
    return w[::-1].copy(), v[:, ::-1].copy()


def _spd_eigen(m: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    w, v = sym_eigen(m)
    if w.size == 0:
        raise DomainError("empty matrix")
    if w[0] <= 0.0 or w[-1] <= SINGULAR_RTOL * w[0]:
        raise SingularMatrixError(
            f"matrix is singular to tolerance: eigenvalue range [{w[-1]:.3g}, {w[0]:.3g}]"
        )
    return w, v


def _sym_fn(w: NDArray[np.float64], v: NDArray[np.float64], fw: NDArray[np.float64]) -> NDArray[np.float64]:
    out = (v * fw) @ v.T
    return 0.5 * (out + out.T)


def sym_sqrt(m: ArrayLike) -> NDArray[np.float64]:
    """Symmetric positive definite square root."""
    w, v = _spd_eigen(m)
    return _sym_fn(w, v, np.sqrt(w))


def inv_sqrt(m: ArrayLike) -> NDArray[np.float64]:
    """Symmetric inverse square root ``m^{-1/2}``."""
    w, v = _spd_eigen(m)
    return _sym_fn(w, v, 1.0 / np.sqrt(w))


def sym_inverse(m: ArrayLike) -> NDArray[np.float64]:
    """Inverse of a symmetric positive definite matrix."""
    w, v = _spd_eigen(m)
    return _sym_fn(w, v, 1.0 / w)


def is_positive_definite(m: ArrayLike) -> bool:
    w, _ = sym_eigen(m)
    return bool(w.size and w[0] > 0.0 and w[-1] > SINGULAR_RTOL * w[0])


def _check_df(p: int) -> float:
    if int(p) != p or p < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {p!r}")
    return float(p)


def chi2_cdf(p: int, x: float) -> float:
    """Chi-square distribution function with ``p`` degrees of freedom."""
    k = _check_df(p)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    return float(special.gammainc(0.5 * k, 0.5 * x))


def chi2_pdf(p: int, x: float) -> float:
    """Chi-square density with ``p`` degrees of freedom."""
    k = _check_df(p)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        if k < 2:
            return float("inf")
        return 0.5 if k == 2 else 0.0
    h = 0.5 * k
    return float(np.exp((h - 1.0) * np.log(x) - 0.5 * x - h * np.log(2.0) - special.gammaln(h)))


def chi2_quantile(p: int, alpha: float) -> float:
    """The ``alpha`` quantile of the chi-square distribution with ``p`` degrees of freedom.

    Starts from the incomplete-gamma inverse and polishes with safeguarded
    Newton steps inside a bracket, so that ``chi2_cdf(p, q) == alpha`` to
    about 1e-12.
    """
    k = _check_df(p)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    x = 2.0 * float(special.gammaincinv(0.5 * k, alpha))
    lo, hi = 0.0, max(2.0 * x, k + 10.0 * np.sqrt(2.0 * k) + 50.0)
    while chi2_cdf(p, hi) < alpha:
        hi *= 2.0
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(100):
        f = chi2_cdf(p, x) - alpha
        if f == 0.0:
            break
        if f > 0:
            hi = x
        else:
            lo = x
        d = chi2_pdf(p, x)
        step = f / d if d > 0 and np.isfinite(d) else np.inf
        nx = x - step
        if not lo < nx < hi:
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= 1e-15 * max(1.0, x):
            x = nx
            break
        x = nx
    else:  # pragma: no cover
        raise NumericFailureError(f"chi-square quantile did not converge for p={p}, alpha={alpha}")
    return float(x)


def unit_ball_volume(p: int) -> float:
    """Volume of the unit ball in ``p`` dimensions."""
    return float(np.pi ** (p / 2.0) / special.gamma(p / 2.0 + 1.0))
