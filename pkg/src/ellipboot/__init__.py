"""Ellipsoidal bootstrap confidence regions: percentile, percentile-t,
smoothed percentile with a plug-in bandwidth, analytic level adjustment and
double-bootstrap calibration."""

from .edgeworth import (
    Bandwidth,
    LevelAdjustment,
    QPolyCoeffs,
    analytic_level_adjustment,
    bandwidth_matrix,
    cdf_ss,
    cdf_uu,
    q1,
    q2,
    radius_s,
    radius_u,
)
from .errors import (
    BootstrapInstabilityError,
    CatalogError,
    ConfigError,
    DomainError,
    EllipbootError,
    NumericFailureError,
    SingularMatrixError,
)
from .moments import CumulantEstimates, Sample, cumulants, sample_cov, sample_mean
from .regions import Ellipsoid, build_an, build_bp, build_bt, build_rbp, build_sbp, contains, volume
from .resampling import BootStats, Mode, SeedSpec, boot_quantile, boot_squared_norms, resample_indices

__version__ = "0.1.0"
