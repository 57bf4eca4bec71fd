import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slelab.drivers import brownian_driver
from slelab.loewner import (
    PIECEWISE_CONSTANT,
    PIECEWISE_SQRT,
    DrivingFunction,
    LoewnerChain,
    LoewnerError,
    Trace,
    disk_halfplane_derivative,
    disk_halfplane_map,
    forward_flow,
    forward_flow_many,
    halfplane_disk_derivative,
    halfplane_disk_map,
    inverse_map,
    inverse_map_many,
    koebe_bounds,
    read_driver_csv,
    read_trace_csv,
    reverse_flow_centered,
    step_forward,
    step_inverse,
    trace,
    write_driver_csv,
    write_trace_csv,
)


def upper_sqrt(x):
    r = cmath.sqrt(x)
    return r if r.imag > 0 or (r.imag == 0 and r.real >= 0) else -r


def grid_points():
    xs = np.linspace(-2.0, 2.0, 10)
    ys = np.linspace(0.1, 3.0, 10)
    return [complex(x, y) for x in xs for y in ys]


MODES = [PIECEWISE_CONSTANT, PIECEWISE_SQRT]


# --- driving function ------------------------------------------------------------


def test_driver_validation():
    with pytest.raises(LoewnerError):
        DrivingFunction(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    with pytest.raises(LoewnerError):
        DrivingFunction(np.array([0.0, 0.0]), np.array([0.0, 0.0]))
    with pytest.raises(LoewnerError):
        DrivingFunction(np.array([0.0, 1.0]), np.array([0.0, 1.0]), "cubic")


def test_driver_interpolation():
    d = DrivingFunction(np.array([0.0, 1.0]), np.array([0.0, 2.0]), PIECEWISE_SQRT)
    assert d(0.25) == pytest.approx(1.0)
    c = DrivingFunction(np.array([0.0, 1.0]), np.array([0.0, 2.0]), PIECEWISE_CONSTANT)
    assert c(0.25) == 2.0
    dt, dw = d.steps_until(0.25)
    assert dt.tolist() == [0.25] and dw.tolist() == [1.0]


# --- slit oracle ---------------------------------------------------------------


@pytest.mark.parametrize("mode", MODES)
def test_forward_slit_oracle(mode):
    d = DrivingFunction.zero(1.0, 50, mode)
    z = np.array(grid_points())
    g, la, ar, sw = forward_flow_many(d, z)
    assert np.all(np.isnan(sw))
    exact = np.array([upper_sqrt(x * x + 4) for x in z])
    assert np.max(np.abs(g - exact) / np.abs(exact)) <= 1e-8
    assert np.max(np.abs(np.exp(la + 1j * ar) - z / exact) / np.abs(z / exact)) <= 1e-8
    res = forward_flow(d, z[7])
    assert res.point == pytest.approx(g[7], abs=1e-14)


def test_forward_slit_values():
    d = DrivingFunction.zero(1.0, 64)
    res = forward_flow(d, 3j)
    assert res.point == pytest.approx(1j * math.sqrt(5), abs=1e-12)
    assert abs(res.derivative) == pytest.approx(3 / math.sqrt(5), abs=1e-12)
    hit = forward_flow(DrivingFunction.zero(2.0, 64), 2j)
    assert hit.swallow_time == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("mode", MODES)
def test_reverse_slit_oracle(mode):
    d = DrivingFunction.zero(1.0, 50, mode)
    for z in grid_points():
        res = reverse_flow_centered(d, z)
        g = upper_sqrt(z * z - 4)
        assert abs(res.point - g) <= 1e-8 * abs(g)
        gp = z / g
        assert abs(res.derivative - gp) <= 1e-8 * abs(gp)


def test_reverse_near_axis():
    res = reverse_flow_centered(DrivingFunction.zero(1.0, 100), 1 + 1e-4j)
    assert res.point == pytest.approx(1j * math.sqrt(3), abs=1e-3)


def test_reverse_at_time_zero():
    d = brownian_driver(2.0, 1.0, 100, 3)
    res = reverse_flow_centered(d, 0.3 + 0.4j, 0.0)
    assert res.point == 0.3 + 0.4j
    assert res.log_abs_derivative == 0.0


def test_reverse_imaginary_part_increases():
    d = brownian_driver(2.0, 1.0, 2000, 11)
    z = np.array([0.2 + 0.05j, -1 + 0.01j, 3 + 2j])
    dt, dw = np.diff(d.times), np.diff(d.values)
    for k in range(dt.size):
        new, _ = step_inverse(z, dt[k], -dw[k])
        assert np.all(new.imag > z.imag)
        z = new
    reverse_flow_centered(d, 0.2 + 0.05j)  # monotonicity check raises on failure


def test_inverse_slit_value():
    d = DrivingFunction.zero(1.0, 32)
    res = inverse_map(d, 1j)
    assert res.point == pytest.approx(1j * math.sqrt(5), abs=1e-12)


# --- round trips ------------------------------------------------------------------


@pytest.mark.parametrize("method", ["naive", "blocked"])
def test_round_trip_and_reciprocity(method):
    d = brownian_driver(2.0, 1.0, 1000, 5)
    wt = d.values[-1]
    z = np.array([0.3 + 0.1j, -0.7 + 0.4j, 1.5 + 1.0j, 0.05 + 2.0j, -2 + 0.1j, 0.8 + 0.15j])
    g, la, ar, sw = forward_flow_many(d, z)
    assert np.all(np.isnan(sw))
    back, lb, ab = inverse_map_many(d, g - wt, method=method)
    assert np.max(np.abs(back - z)) < 1e-6
    assert np.max(np.abs(np.exp(la + lb + 1j * (ar + ab)) - 1)) < 1e-6


def test_blocked_matches_naive():
    d = brownian_driver(2.0, 1.0, 3000, 8)
    rng = np.random.default_rng(0)
    w = rng.uniform(-2, 2, 200) + 1j * rng.uniform(1e-3, 2, 200)
    a = inverse_map_many(d, w, method="naive")
    b = inverse_map_many(d, w, method="blocked")
    assert np.max(np.abs(a[0] - b[0])) < 1e-8
    assert np.max(np.abs(a[1] - b[1])) < 1e-7


def test_reverse_flow_is_inverse_of_reversed_driver():
    # reverse flow of W equals the inverse map of the time-reversed driver W(t-s) - W(t)
    d = brownian_driver(2.0, 1.0, 500, 21)
    rev = DrivingFunction(d.times, d.values[::-1] - d.values[-1], d.interpolation)
    for z in [0.4 + 0.2j, -1 + 0.5j]:
        a = reverse_flow_centered(d, z)
        b = inverse_map(rev, z)
        assert abs(a.point - b.point) < 1e-10
        assert a.log_abs_derivative == pytest.approx(b.log_abs_derivative, abs=1e-10)


# --- refinement and capacity ----------------------------------------------------------


def test_constant_mode_refinement_is_exact():
    d = brownian_driver(2.0, 1.0, 400, 4, PIECEWISE_CONSTANT)
    fine_t = np.linspace(0, 1, 801)
    fine_w = np.empty(801)
    fine_w[0::2] = d.values
    fine_w[1::2] = d.values[1:]  # the jump happens at the start of each step
    fine = DrivingFunction(fine_t, fine_w, PIECEWISE_CONSTANT)
    z = 0.5 + 0.7j
    a, b = forward_flow(d, z), forward_flow(fine, z)
    assert abs(abs(a.derivative) / abs(b.derivative) - 1) < 1e-10


def test_halved_step_reintegration():
    d = brownian_driver(2.0, 1.0, 1000, 9)
    fine_t = np.linspace(0, 1, 2001)
    fine = DrivingFunction(fine_t, np.array([d(t) for t in fine_t]))
    z = 0.5 + 1.0j
    a, b = forward_flow(d, z), forward_flow(fine, z)
    assert abs(abs(a.derivative) / abs(b.derivative) - 1) < 1e-4
    assert abs(a.point - b.point) < 1e-4


def test_half_plane_capacity():
    d = brownian_driver(2.0, 1.0, 1000, 2)
    wt = d.values[-1]
    y = 1e4
    f = inverse_map(d, 1j * y).point
    cap = -(f - 1j * y - wt) * (1j * y + wt)
    assert cap.real == pytest.approx(2.0, rel=1e-3)


def test_step_forward_inverts_step_inverse():
    rng = np.random.default_rng(1)
    for mode in MODES:
        w = rng.uniform(-1, 1, 50) + 1j * rng.uniform(0.01, 1, 50)
        dt, dw = 1e-3, 0.05
        z, ld = step_inverse(w, dt, dw, mode)
        back, lf = step_forward(z, dt, dw, mode)
        assert np.max(np.abs(back - w)) < 1e-10
        assert np.max(np.abs(ld.real + lf.real)) < 1e-8


# --- trace -----------------------------------------------------------------------


def test_zero_driver_trace_is_vertical_segment():
    d = DrivingFunction.zero(1.0, 200)
    tr = trace(d, 1e-4)
    expect = 2j * np.sqrt(d.times)
    assert np.max(np.abs(tr.points - expect)) < 1e-3
    assert tr.points[0] == 0 and np.all(tr.points[1:].imag > 0)


def test_trace_blocked_matches_naive():
    d = brownian_driver(2.0, 1.0, 2000, 13)
    a = trace(d, method="naive")
    b = trace(d, method="blocked")
    assert np.max(np.abs(a.points - b.points)) < 1e-8
    assert np.all(a.points[1:].imag > 0)


def test_trace_scaling():
    d = brownian_driver(2.0, 1.0, 500, 17)
    lam = 2.0
    a = trace(d, 1e-6)
    b = trace(d.scaled(lam), lam * 1e-6)
    assert np.max(np.abs(b.points - lam * a.points)) < 1e-8


# --- disk maps and Koebe -------------------------------------------------------------


def test_disk_maps():
    assert disk_halfplane_map(-1j) == 0
    assert disk_halfplane_map(0) == pytest.approx(1j)
    d = disk_halfplane_derivative(-1j)
    assert d.imag == 0 and d.real > 0
    rng = np.random.default_rng(3)
    w = rng.uniform(-5, 5, 100) + 1j * rng.uniform(0.01, 5, 100)
    assert np.max(np.abs(disk_halfplane_map(halfplane_disk_map(w)) - w)) < 1e-12
    theta = rng.uniform(0, 2 * np.pi, 100)
    theta = theta[np.abs(theta - np.pi / 2) > 1e-2]
    assert np.max(np.abs(disk_halfplane_map(np.exp(1j * theta)).imag)) < 1e-12
    # chain rule between the pair
    z = halfplane_disk_map(w)
    assert np.max(np.abs(disk_halfplane_derivative(z) * halfplane_disk_derivative(w) - 1)) < 1e-10
    with pytest.raises(LoewnerError):
        disk_halfplane_map(1j)
    with pytest.raises(LoewnerError):
        halfplane_disk_map(-1j)


def test_trace_to_disk():
    tr = Trace(np.array([0, 1j]), np.array([0.0, 0.25]))
    disk = tr.to_disk()
    assert disk.coordinate_frame == "disk"
    assert disk.points[0] == pytest.approx(-1j) and disk.points[1] == pytest.approx(0)


def test_koebe_bounds():
    assert koebe_bounds(1.0, 1.0) == (0.25, 4.0)
    lo1, hi1 = koebe_bounds(1.0, 1.0)
    lo2, hi2 = koebe_bounds(2.0, 1.0)
    lo3, hi3 = koebe_bounds(1.0, 2.0)
    assert lo2 > lo1 and hi2 > hi1 and lo3 > lo1 and hi3 > hi1


def test_koebe_bracket_on_slit_map():
    # phi = g_1^{-1} maps H onto H minus the slit [0, 2i]
    for z in grid_points():
        w = upper_sqrt(z * z - 4)
        deriv = abs(z / w)
        seg = 1j * min(max(w.imag, 0.0), 2.0)
        dist = min(w.imag, abs(w - seg))
        lo, hi = koebe_bounds(deriv, z.imag)
        assert lo <= dist <= hi


# --- CSV -------------------------------------------------------------------------------


def test_csv_round_trips(tmp_path):
    d = brownian_driver(2.0, 1.0, 50, 1)
    write_driver_csv(d, tmp_path / "d.csv")
    back = read_driver_csv(tmp_path / "d.csv")
    assert np.array_equal(back.times, d.times) and np.array_equal(back.values, d.values)
    tr = trace(d)
    write_trace_csv(tr, tmp_path / "t.csv")
    tb = read_trace_csv(tmp_path / "t.csv")
    assert np.array_equal(tb.points, tr.points)


@settings(max_examples=15, deadline=None)
@given(
    st.floats(min_value=-3, max_value=3),
    st.floats(min_value=0.05, max_value=3),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_round_trip_property(x, y, seed):
    d = brownian_driver(2.0, 0.5, 100, seed)
    z = complex(x, y)
    fwd = forward_flow(d, z)
    if fwd.swallow_time is not None:
        return
    back = inverse_map(d, fwd.point - d.values[-1])
    assert abs(back.point - z) < 1e-6 * max(1.0, abs(z))


def test_chain_composition_is_associative():
    d = brownian_driver(2.0, 1.0, 300, 6)
    ch = LoewnerChain.from_driver(d)
    w = np.array([0.1 + 0.3j, -0.5 + 0.05j])
    whole, la, _ = ch.apply_inverse(w, 0, 300)
    part, lb, _ = ch.apply_inverse(w, 150, 300)
    rest, lc, _ = ch.apply_inverse(part, 0, 150)
    assert np.max(np.abs(whole - rest)) < 1e-12
    assert np.max(np.abs(la - (lb + lc))) < 1e-10
