import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipboot import numcore
from ellipboot.edgeworth import Bandwidth
from ellipboot.errors import BootstrapInstabilityError, DomainError, SingularMatrixError
from ellipboot.moments import Sample
from ellipboot.resampling import (
    BootStats,
    Mode,
    SeedSpec,
    boot_quantile,
    boot_squared_norms,
    resample_indices,
)


@pytest.fixture
def sample():
    return Sample(np.random.default_rng(8).standard_normal((15, 2)))


def test_indices_n1():
    assert np.all(resample_indices(1, SeedSpec(3).generator(), 50) == 0)


def test_indices_deterministic():
    a = resample_indices(17, SeedSpec(5, 2).generator(), 100)
    b = resample_indices(17, SeedSpec(5, 2).generator(), 100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, resample_indices(17, SeedSpec(5, 3).generator(), 100))


def test_index_frequencies():
    idx = resample_indices(5, SeedSpec(0).generator(), 200_000).ravel()  # 10^6 draws
    freq = np.bincount(idx, minlength=5) / idx.size
    assert np.all(np.abs(freq - 0.2) < 0.002)


def test_seedspec_validation():
    with pytest.raises(DomainError):
        SeedSpec(-1)
    with pytest.raises(DomainError):
        SeedSpec(0, 1 << 64)
    assert SeedSpec(1).child(3, 4) == SeedSpec(1).child(3, 4)
    assert SeedSpec(1).child(3, 4) != SeedSpec(1).child(4, 3)


def test_identical_rows_error():
    with pytest.raises(SingularMatrixError):
        boot_squared_norms(np.tile([1.0, 2.0], (8, 1)), 200, "plain", seed=SeedSpec(1))


@pytest.mark.parametrize("mode", ["plain", "studentized", "smoothed"])
def test_deterministic(sample, mode):
    bw = Bandwidth.from_scale(0.3, sample.cov)
    a = boot_squared_norms(sample, 300, mode, bw, SeedSpec(9))
    b = boot_squared_norms(sample, 300, mode, bw, SeedSpec(9))
    assert a == b
    assert a.B == 300 and a.mode is Mode(mode)
    assert np.all(np.diff(a.values) >= 0) and a.values[0] >= 0


def test_validation(sample):
    with pytest.raises(DomainError):
        boot_squared_norms(sample, 99, "plain")
    with pytest.raises(DomainError):
        boot_squared_norms(sample, 100, "smoothed")
    with pytest.raises(ValueError):
        boot_squared_norms(sample, 100, "jackknife")


def test_values_read_only(sample):
    st_ = boot_squared_norms(sample, 100, "plain", seed=SeedSpec(1))
    with pytest.raises(ValueError):
        st_.values[0] = 1.0


def test_plain_matches_direct_loop(sample):
    # oracle: one resample at a time with plain numpy
    B = 120
    rng = SeedSpec(21).generator()
    idx = rng.integers(0, sample.n, size=(B, sample.n))
    inv = np.linalg.inv(sample.cov)
    want = []
    for row in idx:
        d = sample.data[row].mean(axis=0) - sample.mean
        want.append(sample.n * d @ inv @ d)
    got = boot_squared_norms(sample, B, "plain", seed=SeedSpec(21))
    np.testing.assert_allclose(got.values, np.sort(want), rtol=1e-10, atol=1e-12)


def test_studentized_matches_direct_loop(sample):
    got = boot_squared_norms(sample, 150, "studentized", seed=SeedSpec(4))
    assert got.rejections == 0
    rng = SeedSpec(4).generator()
    idx = rng.integers(0, sample.n, size=(150, sample.n))
    want = []
    for row in idx:
        xs = sample.data[row]
        d = xs.mean(axis=0) - sample.mean
        c = np.cov(xs.T, bias=True)
        want.append(sample.n * d @ np.linalg.solve(c, d))
    np.testing.assert_allclose(got.values, np.sort(want), rtol=1e-8)


def test_studentized_rejections_and_instability():
    # two distinct points repeated: many resamples are degenerate
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
    st_ = boot_squared_norms(x, 200, "studentized", seed=SeedSpec(2))
    assert st_.rejections > 0 and st_.B == 200
    # six unit vectors among zeros: a resample is nonsingular only if it hits
    # all six, which happens well under 1/11 of the time
    y = np.vstack([np.zeros((8, 6)), np.eye(6)])
    with pytest.raises(BootstrapInstabilityError):
        boot_squared_norms(y, 100, "studentized", seed=SeedSpec(2))


def test_bootstrap_consistency_large_n():
    s = Sample(np.random.default_rng(12).standard_normal((200, 2)))
    st_ = boot_squared_norms(s, 5000, "plain", seed=SeedSpec(3))
    assert abs(boot_quantile(st_, 0.9) - 4.605) < 0.25


def test_zero_expanding_bandwidth_is_plain(sample):
    bw = Bandwidth(0.0, np.zeros((2, 2)), True)
    a = boot_squared_norms(sample, 400, "smoothed", bw, SeedSpec(6))
    b = boot_squared_norms(sample, 400, "plain", seed=SeedSpec(6))
    assert np.array_equal(a.values, b.values)


def test_shrinking_uses_reduced_shape(sample):
    bw = Bandwidth.from_scale(-0.25, sample.cov)
    a = boot_squared_norms(sample, 400, "smoothed", bw, SeedSpec(6))
    b = boot_squared_norms(sample, 400, "plain", seed=SeedSpec(6))
    # shape 0.75 cov scales every statistic by 1/0.75
    np.testing.assert_allclose(a.values, b.values / 0.75, rtol=1e-10)
    with pytest.raises(DomainError):
        boot_squared_norms(sample, 400, "smoothed", Bandwidth.from_scale(-1.0, sample.cov), SeedSpec(6))


def test_smoothed_expanding_inflates_spread():
    s = Sample(np.random.default_rng(1).standard_normal((40, 2)))
    plain = boot_squared_norms(s, 4000, "plain", seed=SeedSpec(1))
    sm = boot_squared_norms(s, 4000, "smoothed", Bandwidth.from_scale(1.0, s.cov), SeedSpec(1))
    # standardized by cov+H = 2 cov with mean variance 2 cov / n: same chi2 limit
    assert abs(boot_quantile(sm, 0.9) - boot_quantile(plain, 0.9)) < 0.5


def test_quantile_examples():
    st_ = BootStats(np.arange(10, 0, -1, dtype=float), "plain")
    assert boot_quantile(st_, 0.9) == 9.0
    assert boot_quantile(st_, 0.1) == 1.0
    assert boot_quantile(st_, 0.11) == 2.0
    v = np.random.default_rng(0).uniform(size=1000)
    u = BootStats(v, "plain")
    assert boot_quantile(u, 1.0) == v.max()
    assert boot_quantile(u, 0.9999) == v.max()
    assert abs(boot_quantile(u, 0.5) - 0.5) < 0.05
    with pytest.raises(DomainError):
        boot_quantile(u, 0.0)


def test_bootstats_validation():
    with pytest.raises(DomainError):
        BootStats(np.array([1.0, -1.0]), "plain")
    with pytest.raises(DomainError):
        BootStats(np.array([1.0, np.inf]), "plain")


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=60),
    st.floats(1e-3, 1.0),
    st.floats(1e-3, 1.0),
    st.floats(1e-3, 1e3),
)
def test_quantile_monotone_and_scale_equivariant(vals, a1, a2, c):
    st_ = BootStats(np.array(vals), "plain")
    lo, hi = sorted((a1, a2))
    assert boot_quantile(st_, lo) <= boot_quantile(st_, hi)
    scaled = BootStats(np.array(vals) * c, "plain")
    assert boot_quantile(scaled, hi) == pytest.approx(c * boot_quantile(st_, hi), rel=1e-12)


def test_stream_independence():
    s = Sample(np.random.default_rng(2).standard_normal((20, 2)))
    rng_a, rng_b = SeedSpec(77, 1).generator(), SeedSpec(77, 2).generator()
    ia = resample_indices(s.n, rng_a, 10_000)
    ib = resample_indices(s.n, rng_b, 10_000)
    inv = numcore.sym_inverse(s.cov)
    qa = [s.n * (d @ inv @ d) for d in s.data[ia].mean(axis=1) - s.mean]
    qb = [s.n * (d @ inv @ d) for d in s.data[ib].mean(axis=1) - s.mean]
    assert abs(np.corrcoef(qa, qb)[0, 1]) < 0.05
    sa = boot_squared_norms(s, 10_000, "plain", seed=SeedSpec(77).child(1))
    sb = boot_squared_norms(s, 10_000, "plain", seed=SeedSpec(77).child(2))
    assert sa != sb


def test_smoothed_means_covariance():
    from ellipboot.resampling import kernel_root, resample_means

    s = Sample(np.random.default_rng(9).gamma(2.0, size=(12, 2)))
    root = kernel_root(s.data, s.mean, 0.5)
    np.testing.assert_allclose(root.T @ root, 0.5 * s.cov, atol=1e-12)
    rng = SeedSpec(0).generator()
    idx = resample_indices(s.n, rng, 200_000)
    means = resample_means(s.data, idx, root, rng)
    np.testing.assert_allclose(np.cov(means.T) * s.n, 1.5 * s.cov, rtol=0.03, atol=0.01)
    np.testing.assert_allclose(means.mean(axis=0), s.mean, atol=0.01)
