import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slelab.exponents import DomainError
from slelab.gff import (
    HarmonicFieldSample,
    covariance_exact,
    covariance_mc,
    default_modes,
    evaluate,
    sample_harmonic,
    sample_harmonic_batch,
    truncation_bound,
)

disk = st.builds(
    lambda r, t: r * complex(math.cos(t), math.sin(t)),
    st.floats(min_value=0, max_value=0.95),
    st.floats(min_value=0, max_value=2 * math.pi),
)


def test_reproducible_coefficients():
    a, b = sample_harmonic(30, 4), sample_harmonic(30, 4)
    assert np.array_equal(a.x_coeffs, b.x_coeffs) and np.array_equal(a.y_coeffs, b.y_coeffs)


def test_coefficient_statistics():
    x, y = sample_harmonic_batch(2, 100_000, 1)
    assert 0.99 <= x[:, 0].var() <= 1.01
    assert 0.99 <= y[:, 0].var() <= 1.01
    assert abs(np.corrcoef(x[:, 0], y[:, 0])[0, 1]) < 0.01


def test_field_vanishes_at_origin():
    for seed in range(5):
        assert evaluate(sample_harmonic(20, seed), 0) == 0.0


def test_linearity():
    a, b = sample_harmonic(10, 1), sample_harmonic(10, 2)
    both = HarmonicFieldSample(10, 2 * a.x_coeffs + b.x_coeffs, 2 * a.y_coeffs + b.y_coeffs)
    z = 0.3 - 0.2j
    assert evaluate(both, z) == pytest.approx(2 * evaluate(a, z) + evaluate(b, z), abs=1e-14)


def test_first_mode_basis():
    s = HarmonicFieldSample(1, np.array([1.0]), np.array([0.0]))
    assert evaluate(s, 0.5 + 0.25j) == pytest.approx(math.sqrt(2) * 0.5)


def test_exact_covariance_values():
    assert covariance_exact(0, 0.7j) == 0.0
    assert covariance_exact(0.5, 0.5) == pytest.approx(-2 * math.log(0.75), abs=1e-15)
    assert covariance_exact(0.3, -0.3) == pytest.approx(-2 * math.log(1.09), abs=1e-15)
    with pytest.raises(DomainError):
        covariance_exact(1.0, 0)


@given(disk, disk)
def test_exact_covariance_symmetric(z, w):
    assert covariance_exact(z, w) == pytest.approx(covariance_exact(w, z), abs=1e-14)


@given(disk, disk, st.integers(min_value=1, max_value=60))
def test_truncated_series_within_bound(z, w, n):
    r = abs(z * w.conjugate())
    partial = math.fsum(2 * r**k / k * math.cos(k * np.angle(z * w.conjugate())) for k in range(1, n + 1))
    assert abs(partial - covariance_exact(z, w)) <= truncation_bound(n, z, w) + 1e-12


def test_default_modes_rule():
    n = default_modes(0.5, 1e-6)
    assert n == math.ceil(math.log(1e-6 * 0.5) / math.log(0.5))
    assert truncation_bound(n, 0.5**0.5, 0.5**0.5) <= 1e-6 * 2
    with pytest.raises(DomainError):
        default_modes(1.0)


@pytest.mark.parametrize("z,w", [(0.5, 0.5), (0.3, -0.3)])
def test_monte_carlo_covariance(z, w):
    n = 200 if z == 0.5 else default_modes(0.3)
    est, se = covariance_mc(n, 100_000, z, w, 5)
    assert abs(est - covariance_exact(z, w)) < 4 * se + truncation_bound(n, z, w)


def test_variance_at_a_point():
    z = 0.4 + 0.3j
    est, se = covariance_mc(default_modes(abs(z)), 100_000, z, z, 6)
    assert abs(est - (-2 * math.log(1 - abs(z) ** 2))) < 4 * se
