import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from slelab.drivers import (
    SdeConfig,
    bessel_process,
    brownian_driver,
    coupled_bessel_xy,
    default_bessel_dimension,
    make_rng,
    parse_seed,
    reverse_force_batch,
    reverse_sle_kappa_rho_driver,
    sle_kappa_rho_driver,
    theta_process,
    theta_stationary_cdf,
    theta_stationary_density,
    xy_process,
)
from slelab.exponents import DomainError
from slelab.loewner import DrivingFunction, inverse_map, step_inverse


# --- seeds and Brownian drivers ----------------------------------------------------


def test_parse_seed_forms():
    assert parse_seed("0x10") == 16
    assert parse_seed("255") == 255
    assert parse_seed(7) == 7
    with pytest.raises(ValueError):
        parse_seed(-1)
    with pytest.raises(ValueError):
        parse_seed(2**64)


def test_streams_are_distinct():
    a = make_rng(5, 0).standard_normal(4)
    b = make_rng(5, 1).standard_normal(4)
    c = make_rng(5, 0).standard_normal(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_brownian_variance():
    kappa, horizon = 2.0, 1.5
    ends = np.array([brownian_driver(kappa, horizon, 8, s).values[-1] for s in range(10_000)])
    ratio = np.mean(ends**2) / (kappa * horizon)
    assert 0.97 <= ratio <= 1.03


def test_brownian_is_reproducible():
    a = brownian_driver(3.0, 1.0, 1000, "0xabc")
    b = brownian_driver(3.0, 1.0, 1000, 2748)
    assert np.array_equal(a.values, b.values)


def test_increment_skewness():
    d = brownian_driver(2.0, 1.0, 1_000_000, 12345)
    assert abs(stats.skew(np.diff(d.values))) < 0.05


# --- SLE_kappa(rho) drivers -------------------------------------------------------------


def test_zero_weights_reduce_to_brownian():
    base = brownian_driver(2.0, 1.0, 500, 42)
    cfg = SdeConfig(2.0, (0.0,), (1.0,), 1.0, 500, 42)
    fwd = sle_kappa_rho_driver(cfg)
    assert np.array_equal(fwd.driver.values, base.values)
    rev = reverse_sle_kappa_rho_driver(SdeConfig(2.0, (0.0,), (0.5 + 0.2j,), 1.0, 500, 42))
    assert np.array_equal(rev.driver.values, base.values)


def test_boundary_force_point_stays_real_and_repels():
    blowups = 0
    for seed in range(100):
        r = sle_kappa_rho_driver(SdeConfig(2.0, (6.0,), (0.3,), 1.0, 500, seed))
        assert np.all(r.force_paths.imag == 0)
        blowups += r.blow_up is not None
    assert blowups == 0


def test_config_validation():
    with pytest.raises(DomainError):
        SdeConfig(2.0, (1.0,), ())
    with pytest.raises(DomainError):
        SdeConfig(2.0, (1.0,), (0.0,))
    with pytest.raises(DomainError):
        SdeConfig(2.0, (1.0,), (1 - 1j,))


def test_reverse_driver_imaginary_part_increases():
    r = reverse_sle_kappa_rho_driver(SdeConfig(2.0, (2.0,), (0.5 + 0.01j,), 1.0, 2000, 3))
    z = r.force_paths[0] - r.driver.values
    assert np.all(np.diff(z.imag) > 0)
    y = z.imag
    assert np.all(y**2 - y[0] ** 2 <= 4 * r.driver.times + 1e-12)


def test_reverse_batch_single_path_shapes():
    b = reverse_force_batch(2.0, 0.0, 0.3 + 0.4j, 1.0, 1, 200, 9, stream=0)
    single = reverse_sle_kappa_rho_driver(SdeConfig(2.0, (0.0,), (0.3 + 0.4j,), 1.0, 200, 9))
    # both integrate the same reverse flow, but draw noise from different streams
    assert b.z.shape == (1,) and single.log_derivatives.shape == (1, 201)
    assert b.z[0].imag > 0.4


def test_reverse_batch_deterministic():
    a = reverse_force_batch(2.0, 2.0, 0.5 + 0.1j, 1.0, 64, 100, 1, stream=3, adaptive=0.05)
    b = reverse_force_batch(2.0, 2.0, 0.5 + 0.1j, 1.0, 64, 100, 1, stream=3, adaptive=0.05)
    assert np.array_equal(a.z, b.z) and np.array_equal(a.log_derivative, b.log_derivative)
    assert np.allclose(a.tau, 1.0)


def test_reverse_flow_has_the_law_of_the_inverse_map():
    # marginal of g_t'(z) under the reverse flow vs (f_t^{-1})'(z) from forward drivers
    kappa, t, n, steps, z = 2.0, 1.0, 10_000, 200, 0.4 + 0.3j
    rev = reverse_force_batch(kappa, 0.0, z, t, n, steps, 101)
    dw = math.sqrt(kappa * t / steps) * make_rng(202).standard_normal((n, steps))
    w = np.full(n, z)
    logd = np.zeros(n)
    for k in range(steps - 1, -1, -1):
        w, ld = step_inverse(w, t / steps, dw[:, k])
        logd += ld.real
    # spot-check the vectorised composition against the library inverse map
    for i in range(3):
        d = DrivingFunction(np.linspace(0, t, steps + 1), np.concatenate([[0.0], np.cumsum(dw[i])]))
        assert inverse_map(d, z).log_abs_derivative == pytest.approx(logd[i], abs=1e-9)
    ks = stats.ks_2samp(rev.log_derivative, logd).statistic
    assert ks < 0.03


# --- theta process ---------------------------------------------------------------


def test_theta_density_normalisation():
    assert theta_stationary_density(2.0, 4.0, 1.0) == pytest.approx(1 / math.pi, abs=1e-12)
    assert theta_stationary_density(2.0, 2.0, math.pi / 2) == pytest.approx(2 / math.pi, abs=1e-10)
    for rho in [0.0, 2.0, 3.0, 4.5]:
        val, _ = integrate.quad(lambda th: theta_stationary_density(2.0, rho, th), 0, math.pi)
        assert val == pytest.approx(1.0, abs=1e-8)
    assert theta_stationary_cdf(2.0, 2.0, math.pi / 2) == pytest.approx(0.5, abs=1e-9)


def test_theta_stays_inside_and_is_symmetric():
    path = theta_process(2.0, 0.0, math.pi / 2, 2000.0, 250_000, 5)
    th = path.post_burn_in()
    assert 0 < th.min() and th.max() < math.pi
    assert abs(np.mean(np.cos(th))) < 0.02


def test_theta_starting_at_midpoint_has_no_drift():
    # sin(2 theta) vanishes at pi/2, so one step is pure noise
    p = theta_process(2.0, 2.0, math.pi / 2, 1e-6, 1, 8)
    noise = math.sqrt(1e-6) * make_rng(8).standard_normal(1)[0]
    assert p.theta[1] == pytest.approx(math.pi / 2 + math.sqrt(2.0) * noise, abs=1e-15)


def test_theta_short_run_ks():
    p = theta_process(2.0, 2.0, math.pi / 2, 1000.0, 125_000, 17)
    th = np.sort(p.post_burn_in())
    assert stats.kstest(th, lambda x: theta_stationary_cdf(2.0, 2.0, x)).statistic < 0.03


def test_theta_rejects_bad_start():
    with pytest.raises(DomainError):
        theta_process(2.0, 2.0, 0.0, 1.0, 10, 0)


# --- Bessel and (X, Y) ----------------------------------------------------------------


def test_bessel_three_never_hits_zero():
    hits = sum(bessel_process(3.0, 1.0, 1.0, 500, s).hit_time is not None for s in range(1000))
    assert hits == 0


def test_bessel_one_second_moment():
    v = np.array([bessel_process(1.0, 1.0, 1.0, 500, s).values[-1] ** 2 for s in range(2000)])
    se = v.std(ddof=1) / math.sqrt(v.size)
    assert abs(v.mean() - 2.0) < 3 * se


def test_bessel_small_dimension_can_hit():
    hits = sum(bessel_process(0.5, 0.2, 1.0, 500, s).hit_time is not None for s in range(200))
    assert hits > 0


def test_xy_properties():
    p = xy_process(2.0, 1.0, 0.5 + 0.01j, 1.0, 2000, 4, n_paths=50)
    assert np.all(p.y > 0)
    assert np.all(np.diff(p.y, axis=1) > 0)
    assert np.all(p.y**2 - p.y[:, :1] ** 2 <= 4 * p.times + 1e-12)


def test_xy_rho_two_is_brownian():
    p = xy_process(3.0, 2.0, 0.5 + 0.2j, 1.0, 500, 6, n_paths=5)
    expect = 0.5 - math.sqrt(3.0) * np.concatenate([np.zeros((5, 1)), np.cumsum(p.dB, axis=1)], axis=1)
    assert np.max(np.abs(p.x - expect)) < 1e-12


def test_bessel_domination_small():
    p = coupled_bessel_xy(2.0, 2.0, 0.5 + 0.1j, 1.0, 2000, 1, n_paths=200)
    for x, xt in zip(p.x, p.x_tilde):
        zero = np.nonzero(x <= 0)[0]
        end = zero[0] if zero.size else x.size
        assert np.all(xt[:end] >= x[:end])


def test_default_bessel_dimension():
    assert default_bessel_dimension(2.0, 2.0) == 1.5
    assert default_bessel_dimension(2.0, 4.0) == 3.5
    with pytest.raises(DomainError):
        coupled_bessel_xy(2.0, 2.0, 0.5 + 0.1j, 1.0, 10, 0, n_paths=2, nu=0.9)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**63), st.integers(min_value=1, max_value=50))
def test_driver_reproducible_property(seed, steps):
    a = brownian_driver(2.0, 1.0, steps, seed)
    b = brownian_driver(2.0, 1.0, steps, str(seed))
    assert np.array_equal(a.values, b.values)
