"""Deterministic chordal Loewner flows for sampled driving functions.

Every grid step ``[t_k, t_{k+1}]`` is integrated with the exact conformal map
of the step's interpolated driver:

* ``piecewise-square-root``: ``W(t) = W_k + dW sqrt((t - t_k)/dt)``.  The hull
  grown during the step is a straight segment from the driver at angle
  ``pi * a`` where ``dW / sqrt(dt) = 2 (1 - 2a) / sqrt(a (1 - a))``, and the
  centred inverse map of the step is
  ``F(w) = (w - x_l)^(1-a) (w - x_r)^a``.
* ``piecewise-constant``: the driver jumps to ``W_{k+1}`` at ``t_k`` and a
  vertical slit is grown, ``F(w) = sqrt(w^2 - 4 dt) + dW``.

In both cases ``F(w) = w + dW - 2 dt / w + O(w^-2)``.  The forward flow inverts
``F`` step by step (Newton for the tilted slit), the inverse map and the trace
compose ``F`` backwards in time, and the centred reverse flow composes ``F``
forwards in time with the sign of ``dW`` flipped.

All complex square roots and powers use the branch that maps the upper
half-plane into itself.  Derivatives are accumulated as ``log|F'|`` plus an
argument so the modulus never overflows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PIECEWISE_CONSTANT",
    "PIECEWISE_SQRT",
    "LoewnerError",
    "DrivingFunction",
    "FlowResult",
    "Trace",
    "LoewnerChain",
    "forward_flow",
    "forward_flow_many",
    "reverse_flow_centered",
    "inverse_map",
    "trace",
    "disk_halfplane_map",
    "disk_halfplane_derivative",
    "halfplane_disk_map",
    "halfplane_disk_derivative",
    "koebe_bounds",
    "read_driver_csv",
    "write_driver_csv",
    "write_trace_csv",
    "read_trace_csv",
]

PIECEWISE_CONSTANT = "piecewise-constant"
PIECEWISE_SQRT = "piecewise-square-root"
_MODES = (PIECEWISE_CONSTANT, PIECEWISE_SQRT)

SWALLOW_FACTOR = 1e-7
DEFAULT_TRACE_OFFSET = 1e-4


class LoewnerError(ValueError):
    pass


@dataclass(frozen=True)
class DrivingFunction:
    times: np.ndarray
    values: np.ndarray
    interpolation: str = PIECEWISE_SQRT

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=float)
        values = np.ascontiguousarray(self.values, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise LoewnerError("driving function needs at least two grid times")
        if times.shape != values.shape:
            raise LoewnerError("times and values must have equal length")
        if times[0] != 0.0:
            raise LoewnerError("time grid must start at 0")
        if values[0] != 0.0:
            raise LoewnerError("driving function must start at W(0) = 0")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise LoewnerError("driving function must be finite")
        if np.any(np.diff(times) <= 0):
            raise LoewnerError("time grid must be strictly increasing")
        if self.interpolation not in _MODES:
            raise LoewnerError(f"unknown interpolation {self.interpolation!r}")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, horizon: float, steps: int, interpolation: str = PIECEWISE_SQRT):
        times = np.linspace(0.0, horizon, steps + 1)
        return cls(times, np.zeros_like(times), interpolation)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    def __call__(self, t: float) -> float:
        """Interpolated driver value at time ``t``."""
        k, frac = self._locate(t)
        if frac == 0.0:
            return float(self.values[k])
        w0, w1 = self.values[k], self.values[k + 1]
        if self.interpolation == PIECEWISE_CONSTANT:
            return float(w1)
        return float(w0 + (w1 - w0) * math.sqrt(frac))

    def _locate(self, t: float) -> tuple[int, float]:
        if t < 0 or t > self.horizon * (1 + 1e-14):
            raise LoewnerError(f"time {t} outside [0, {self.horizon}]")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(k, self.n_steps)
        if k == self.n_steps or self.times[k] == t:
            return k, 0.0
        return k, (t - self.times[k]) / (self.times[k + 1] - self.times[k])

    def steps_until(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Per-step ``(dt, dW)`` covering ``[0, t]``; a trailing partial step is exact."""
        k, frac = self._locate(t)
        dt = np.diff(self.times[: k + 1])
        dw = np.diff(self.values[: k + 1])
        if frac > 0.0:
            dt = np.append(dt, t - self.times[k])
            dw = np.append(dw, self(t) - self.values[k])
        return dt, dw

    def scaled(self, lam: float) -> "DrivingFunction":
        """Brownian rescaling ``(t, W) -> (lam^2 t, lam W)``."""
        return DrivingFunction(self.times * lam * lam, self.values * lam, self.interpolation)


@dataclass
class FlowResult:
    point: complex
    derivative: complex
    log_abs_derivative: float
    swallow_time: float | None = None
    time: float = 0.0


@dataclass
class Trace:
    points: np.ndarray
    capacity_times: np.ndarray
    coordinate_frame: str = "half-plane"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        self.capacity_times = np.asarray(self.capacity_times, dtype=float)
        if self.points.shape != self.capacity_times.shape:
            raise LoewnerError("trace points and times must align")
        if self.coordinate_frame not in ("half-plane", "disk"):
            raise LoewnerError(f"unknown frame {self.coordinate_frame!r}")

    def to_disk(self) -> "Trace":
        if self.coordinate_frame == "disk":
            return self
        return Trace(halfplane_disk_map(self.points), self.capacity_times, "disk")


# --- single-step maps -------------------------------------------------------


def _tilt_params(dt, dw):
    """Angle fraction and base points of the segment hull for ``W = c sqrt(t)``."""
    c = dw / np.sqrt(dt)
    a = 0.5 - c / (2.0 * np.sqrt(c * c + 16.0))
    sdt = np.sqrt(dt)
    x_l = -2.0 * sdt * np.sqrt((1.0 - a) / a)
    x_r = 2.0 * sdt * np.sqrt(a / (1.0 - a))
    return a, x_l, x_r


def _fix_branch(r, like):
    """Pick the square root sign that keeps the image in the closed upper half-plane."""
    flip = (r.imag < 0) | ((r.imag == 0) & (r.real * like.real < 0))
    return np.where(flip, -r, r)


def step_inverse(w, dt, dw, mode=PIECEWISE_SQRT):
    """Centred inverse map ``F`` of one step and ``log F'`` (complex log).

    ``w`` lives in the frame centred at the driver value at the end of the
    step; the output is centred at the driver value at its start.
    """
    w = np.asarray(w, dtype=complex)
    if mode == PIECEWISE_CONSTANT:
        h = 2.0 * np.sqrt(dt)
        r = np.sqrt(w - h) * np.sqrt(w + h)
        r = _fix_branch(r, w)
        logd = np.log(w) - np.log(r)
        return r + dw, logd
    a, x_l, x_r = _tilt_params(dt, dw)
    l1 = np.log(w - x_l)
    l2 = np.log(w - x_r)
    out = np.exp((1.0 - a) * l1 + a * l2)
    logd = (1.0 - a) * l1 + a * l2 + np.log((1.0 - a) / (w - x_l) + a / (w - x_r))
    return out, logd


def step_forward(z, dt, dw, mode=PIECEWISE_SQRT, *, stages=48, newton=6):
    """Inverse of :func:`step_inverse`: the centred forward map of one step.

    The tilted case tracks the preimage along a horizontal path ``z + s_j``
    that moves away from the straight hull, from far out back to ``z``, with a
    few Newton steps per stage.
    """
    z = np.asarray(z, dtype=complex)
    u = z - dw
    h = 2.0 * np.sqrt(dt)
    if mode == PIECEWISE_CONSTANT:
        w = np.sqrt(u - 1j * h) * np.sqrt(u + 1j * h)
        w = _fix_branch(w, u)
        return w, np.log(u) - np.log(w)
    a, x_l, x_r = _tilt_params(dt, dw)
    side = np.where((z * np.exp(-1j * np.pi * a)).imag < 0, 1.0, -1.0)
    lift = side * 16.0 * (np.abs(z) + h)
    ratio = np.exp(np.log(1e-18) / stages)
    w = z + lift - dw
    for j in range(stages + 1):
        zj = z + lift * ratio ** (j + 1) if j < stages else z
        target = np.log(zj)
        for _ in range(newton):
            p = (1.0 - a) / (w - x_l) + a / (w - x_r)
            f = (1.0 - a) * np.log(w - x_l) + a * np.log(w - x_r) - target
            step = f / p
            cand = w - step
            for _ in range(60):
                bad = cand.imag <= 0
                if not np.any(bad):
                    break
                step = np.where(bad, 0.5 * step, step)
                cand = w - step
            w = np.where(cand.imag > 0, cand, w)
    l1 = np.log(w - x_l)
    l2 = np.log(w - x_r)
    logd = -((1.0 - a) * l1 + a * l2 + np.log((1.0 - a) / (w - x_l) + a / (w - x_r)))
    return w, logd


def _wrap(theta):
    return (theta + np.pi) % (2.0 * np.pi) - np.pi


# --- composition ------------------------------------------------------------


@dataclass
class LoewnerChain:
    """Step data ``(dt_k, dW_k)`` of a driver, with composition helpers.

    The blocked evaluator arranges the steps in a tree (leaves of ``block``
    steps, ``branch`` children per node).  Each node stores the Laurent series
    ``w + sum_n a_n w^-n`` of its composed map, used for points at distance at
    least ``far`` times the node's singular-interval radius; closer points
    descend to the children.  Coefficients are read off an FFT of evaluations
    on a circle of 1.5 radii.
    """

    dt: np.ndarray
    dw: np.ndarray
    mode: str = PIECEWISE_SQRT
    block: int = 8
    branch: int = 8
    n_terms: int = 32
    far: float = 3.0
    _tree: object = field(default=None, repr=False)

    @classmethod
    def from_driver(cls, driver: DrivingFunction, t: float | None = None, **kw):
        t = driver.horizon if t is None else t
        dt, dw = driver.steps_until(t)
        return cls(dt, dw, driver.interpolation, **kw)

    @property
    def n(self) -> int:
        return self.dt.size

    def apply_inverse(self, w, start: int, stop: int):
        """Compose ``F_start o ... o F_{stop-1}`` on ``w``; returns value, log|d|, arg d."""
        w = np.array(w, dtype=complex, copy=True)
        la = np.zeros(w.shape)
        ar = np.zeros(w.shape)
        for k in range(stop - 1, start - 1, -1):
            w, ld = step_inverse(w, self.dt[k], self.dw[k], self.mode)
            la += ld.real
            ar += ld.imag
        return w, la, _wrap(ar)

    def apply_reverse(self, z, start: int = 0, stop: int | None = None):
        """Centred reverse flow: compose ``F~_{stop-1} o ... o F~_start`` with ``dW -> -dW``."""
        stop = self.n if stop is None else stop
        z = np.array(z, dtype=complex, copy=True)
        la = np.zeros(z.shape)
        ar = np.zeros(z.shape)
        for k in range(start, stop):
            z, ld = step_inverse(z, self.dt[k], -self.dw[k], self.mode)
            la += ld.real
            ar += ld.imag
        return z, la, _wrap(ar)

    # blocked evaluation

    def _build_tree(self):
        if self._tree is not None:
            return
        wcum = np.concatenate([[0.0], np.cumsum(self.dw)])
        tcum = np.concatenate([[0.0], np.cumsum(self.dt)])
        self._wcum, self._tcum = wcum, tcum
        leaf = max(1, self.block)
        level = [_Node(lo, min(lo + leaf, self.n)) for lo in range(0, self.n, leaf)]
        for node in level:
            self._fit(node)
        while len(level) > 1:
            parents = []
            for i in range(0, len(level), self.branch):
                kids = level[i : i + self.branch]
                node = _Node(kids[0].lo, kids[-1].hi, kids)
                self._fit(node)
                parents.append(node)
            level = parents
        self._tree = level[0]

    def _fit(self, node):
        """Laurent coefficients of the node's composed map from circle samples."""
        seg = self._wcum[node.lo : node.hi + 1]
        w_end = seg[-1]
        node.radius = max(w_end - seg.min(), seg.max() - w_end) + 2.0 * math.sqrt(
            self._tcum[node.hi] - self._tcum[node.lo]
        )
        m = _CIRCLE_NODES
        theta = (np.arange(m) + 0.5) * 2.0 * np.pi / m
        r = 1.5 * node.radius
        circle = r * np.exp(1j * theta)
        upper = circle[: m // 2].copy()
        state = _State(upper, np.full(upper.shape, node.hi))
        if node.children is None:
            self._exact(node, state, np.arange(upper.size))
        else:
            for kid in reversed(node.children):
                self._descend(kid, state, np.arange(upper.size))
        vals = np.concatenate([state.w, np.conj(state.w[::-1])])  # Schwarz reflection
        nn = np.arange(self.n_terms + 1)
        coef = np.fft.ifft(vals - circle)[: self.n_terms + 1] * np.exp(1j * nn * np.pi / m) * r**nn
        node.coef = coef.real.copy()

    def _exact(self, node, st, idx):
        wn, cn = st.w[idx], st.cur[idx]
        ln, an = st.la[idx], st.ar[idx]
        for k in range(node.hi - 1, node.lo - 1, -1):
            act = cn > k
            if act.all():
                wn, ld = step_inverse(wn, self.dt[k], self.dw[k], self.mode)
                ln = ln + ld.real
                an = an + ld.imag
            elif act.any():
                sel = np.nonzero(act)[0]
                v, ld = step_inverse(wn[sel], self.dt[k], self.dw[k], self.mode)
                wn[sel] = v
                ln[sel] += ld.real
                an[sel] += ld.imag
        st.w[idx], st.la[idx], st.ar[idx] = wn, ln, an
        st.cur[idx] = node.lo

    def _descend(self, node, st, idx):
        idx = idx[st.cur[idx] > node.lo]
        if idx.size == 0:
            return
        if node.coef is not None:
            far = (st.cur[idx] == node.hi) & (np.abs(st.w[idx]) >= self.far * node.radius)
            if far.any():
                sel = idx[far]
                v, d = self._series(node.coef, st.w[sel])
                st.w[sel] = v
                st.la[sel] += np.log(np.abs(d))
                st.ar[sel] += np.angle(d)
                st.cur[sel] = node.lo
                idx = idx[~far]
                if idx.size == 0:
                    return
        if node.children is None:
            self._exact(node, st, idx)
        else:
            for kid in reversed(node.children):
                self._descend(kid, st, idx)

    def _series(self, coef, w):
        inv = 1.0 / w
        val = np.zeros_like(w)
        der = np.zeros_like(w)
        for n in range(coef.size - 1, 0, -1):
            val = (val + coef[n]) * inv
            der = (der + n * coef[n]) * inv
        val = val + coef[0] + w
        der = 1.0 - der * inv
        return val, der

    def compose_blocked(self, w, cur):
        """Apply ``F_0 o ... o F_{cur-1}`` to each ``w`` (per-point ``cur``)."""
        self._build_tree()
        st = _State(np.array(w, dtype=complex, copy=True), np.array(cur, dtype=np.int64, copy=True))
        self._descend(self._tree, st, np.arange(st.w.size))
        return st.w, st.la, _wrap(st.ar)


_CIRCLE_NODES = 128


class _Node:
    __slots__ = ("lo", "hi", "children", "radius", "coef")

    def __init__(self, lo, hi, children=None):
        self.lo, self.hi, self.children = lo, hi, children
        self.radius = 0.0
        self.coef = None


class _State:
    __slots__ = ("w", "cur", "la", "ar")

    def __init__(self, w, cur):
        self.w, self.cur = w, cur
        self.la = np.zeros(w.shape)
        self.ar = np.zeros(w.shape)


def _result(point, la, ar, swallow=None, time=0.0) -> FlowResult:
    la = float(la)
    with np.errstate(over="ignore"):
        deriv = complex(np.exp(la) * np.exp(1j * ar))
    return FlowResult(complex(point), deriv, la, swallow, time)


def _check_point(z0):
    z0 = complex(z0)
    if not (math.isfinite(z0.real) and math.isfinite(z0.imag)):
        raise LoewnerError("point must be finite")
    if z0.imag <= 0:
        raise LoewnerError(f"point must lie in the open upper half-plane, got {z0}")
    return z0


def _on_segment(u, dt, dw, mode, rtol=1e-9):
    """Mask of centred points ``u`` on the hull grown during the step, and the hit fraction."""
    u = np.asarray(u, dtype=complex)
    if mode == PIECEWISE_CONSTANT:
        u = u - dw
        h = 2.0 * math.sqrt(dt)
        hit = (np.abs(u.real) <= rtol * h) & (u.imag > 0) & (u.imag <= h * (1 + rtol))
        return hit, (u.imag / h) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        tip, _ = step_inverse(np.array([0j]), dt, dw, mode)
    tip = complex(tip[0])
    length = abs(tip)
    if length == 0.0:
        return np.zeros(u.shape, dtype=bool), np.zeros(u.shape)
    rel = u * tip.conjugate() / length
    hit = (np.abs(rel.imag) <= rtol * length) & (rel.real > 0) & (rel.real <= length * (1 + rtol))
    return hit, (rel.real / length) ** 2


def forward_flow_many(driver: DrivingFunction, z0, t_end: float | None = None):
    """Vectorised forward flow; returns ``(g, log|g'|, arg g', swallow_time)``.

    ``swallow_time`` is NaN for points still in the domain at ``t_end``; for
    swallowed points ``g`` and the derivative are those of the last step
    before the hit.
    """
    return _forward(driver, z0, t_end)[:4]


def _forward(driver, z0, t_end):
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
    if not (np.all(np.isfinite(z0)) and np.all(z0.imag > 0)):
        raise LoewnerError("points must be finite and lie in the open upper half-plane")
    t_end = driver.horizon if t_end is None else float(t_end)
    dt, dw = driver.steps_until(t_end)
    w = z0.copy()  # centred at W_0 = 0
    la = np.zeros(z0.shape)
    ar = np.zeros(z0.shape)
    wk = np.zeros(z0.shape)
    swallow = np.full(z0.shape, np.nan)
    reached = np.zeros(z0.shape)
    alive = np.ones(z0.shape, dtype=bool)
    time = 0.0
    for k in range(dt.size):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        hit, frac = _on_segment(w[idx], dt[k], dw[k], driver.interpolation)
        swallow[idx[hit]] = time + frac[hit] * dt[k]
        idx = idx[~hit]
        new, ld = step_forward(w[idx], dt[k], dw[k], driver.interpolation)
        gone = (np.abs(new) < SWALLOW_FACTOR * math.sqrt(dt[k])) | (new.imag <= 0)
        swallow[idx[gone]] = time + dt[k]
        ok = idx[~gone]
        w[ok] = new[~gone]
        la[ok] += ld.real[~gone]
        ar[ok] += ld.imag[~gone]
        wk[ok] += dw[k]
        alive[:] = np.isnan(swallow)
        time += dt[k]
        reached[ok] = time
    return w + wk, la, _wrap(ar), swallow, reached


def forward_flow(driver: DrivingFunction, z0: complex, t_end: float | None = None) -> FlowResult:
    """``g_t(z0)`` and ``g_t'(z0)`` for the chordal Loewner flow (uncentred)."""
    z0 = _check_point(z0)
    t_end = driver.horizon if t_end is None else float(t_end)
    g, la, ar, sw, reached = _forward(driver, [z0], t_end)
    swallow = None if np.isnan(sw[0]) else float(sw[0])
    return _result(g[0], la[0], ar[0], swallow, float(reached[0]))


def reverse_flow_centered(
    driver: DrivingFunction, z0: complex, t_end: float | None = None, *, check_monotone: bool = True
) -> FlowResult:
    """Centred reverse flow ``dg = -2/g dt - dW`` started from ``z0``."""
    z0 = _check_point(z0)
    t_end = driver.horizon if t_end is None else float(t_end)
    dt, dw = driver.steps_until(t_end)
    z = np.array([z0])
    la, ar = 0.0, 0.0
    for k in range(dt.size):
        new, ld = step_inverse(z, dt[k], -dw[k], driver.interpolation)
        if check_monotone and not new[0].imag > z[0].imag:
            raise LoewnerError(f"Im g_t decreased at step {k}")
        z = new
        la += float(ld[0].real)
        ar += float(ld[0].imag)
    return _result(z[0], la, _wrap(ar), None, t_end)


def inverse_map(
    driver: DrivingFunction, w: complex, t: float | None = None, *, method: str = "naive", block: int = 0
) -> FlowResult:
    """``f_t^{-1}(w)`` and its derivative for the same driver realisation.

    ``w`` is in the frame centred at ``W(t)``; the result is in the original
    coordinates (``W(0) = 0``).
    """
    t = driver.horizon if t is None else float(t)
    w = _check_point(w) if np.ndim(w) == 0 else np.asarray(w, dtype=complex)
    values, la, ar = inverse_map_many(driver, np.atleast_1d(w), t, method=method, block=block)
    return _result(values[0], la[0], ar[0], None, t)


def inverse_map_many(driver, w, t=None, *, method="naive", block=0):
    """Vectorised :func:`inverse_map` for an array of points; returns value, log|d|, arg d."""
    t = driver.horizon if t is None else float(t)
    w = np.asarray(w, dtype=complex)
    if np.any(w.imag < 0):
        raise LoewnerError("points must lie in the closed upper half-plane")
    if method == "blocked":
        chain = LoewnerChain.from_driver(driver, t, block=block or 8)
        return chain.compose_blocked(w, np.full(w.shape, chain.n))
    if method != "naive":
        raise LoewnerError(f"unknown method {method!r}")
    chain = LoewnerChain.from_driver(driver, t)
    return chain.apply_inverse(w, 0, chain.n)


def trace(
    driver: DrivingFunction,
    offset: float = DEFAULT_TRACE_OFFSET,
    *,
    method: str = "naive",
    block: int = 0,
) -> Trace:
    """Curve samples ``eta(t_k) ~ f_{t_k}^{-1}(i * offset)`` at every grid time.

    ``method="naive"`` composes all earlier steps for every tip (O(N^2));
    ``method="blocked"`` reuses Laurent expansions of block compositions far
    from each block's hull.
    """
    if not offset > 0:
        raise LoewnerError("trace offset must be positive")
    n = driver.n_steps
    chain = LoewnerChain(
        np.diff(driver.times), np.diff(driver.values), driver.interpolation,
        block=block or 8,
    )
    pts = np.empty(n + 1, dtype=complex)
    pts[0] = 0.0
    start = np.full(n, 1j * offset)
    cur = np.arange(1, n + 1)
    if method == "naive":
        w = start.copy()
        for k in range(n - 1, -1, -1):
            act = slice(k, n)  # tips with index > k still need step k
            w[act], _ = step_inverse(w[act], chain.dt[k], chain.dw[k], chain.mode)
        pts[1:] = w
    elif method == "blocked":
        pts[1:], _, _ = chain.compose_blocked(start, cur)
    else:
        raise LoewnerError(f"unknown method {method!r}")
    return Trace(pts, driver.times.copy(), "half-plane")


# --- disk <-> half-plane ----------------------------------------------------


def disk_halfplane_map(z):
    """Mobius map D -> H with -i -> 0, i -> infinity, 0 -> i."""
    z = np.asarray(z, dtype=complex)
    den = 1.0 + 1j * z
    if np.any(den == 0):
        raise LoewnerError("disk_halfplane_map has a pole at z = i")
    out = 1j * (1.0 - 1j * z) / den
    return complex(out) if out.ndim == 0 else out


def disk_halfplane_derivative(z):
    z = np.asarray(z, dtype=complex)
    den = 1.0 + 1j * z
    if np.any(den == 0):
        raise LoewnerError("disk_halfplane_derivative has a pole at z = i")
    out = 2.0 / den**2
    return complex(out) if out.ndim == 0 else out


def halfplane_disk_map(w):
    """Inverse of :func:`disk_halfplane_map`."""
    w = np.asarray(w, dtype=complex)
    den = 1.0 - 1j * w
    if np.any(den == 0):
        raise LoewnerError("halfplane_disk_map has a pole at w = -i")
    out = (w - 1j) / den
    return complex(out) if out.ndim == 0 else out


def halfplane_disk_derivative(w):
    w = np.asarray(w, dtype=complex)
    den = 1.0 - 1j * w
    if np.any(den == 0):
        raise LoewnerError("halfplane_disk_derivative has a pole at w = -i")
    out = 2.0 / den**2
    return complex(out) if out.ndim == 0 else out


def koebe_bounds(flow_derivative: float, height: float) -> tuple[float, float]:
    """Koebe bracket ``[h |phi'| / 4, 4 h |phi'|]`` for the boundary distance of ``phi(z)``."""
    d = abs(float(flow_derivative))
    h = float(height)
    if d <= 0 or h <= 0:
        raise LoewnerError("koebe_bounds needs positive inputs")
    return 0.25 * h * d, 4.0 * h * d


# --- CSV --------------------------------------------------------------------


def write_driver_csv(driver: DrivingFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "w"])
        for t, w in zip(driver.times, driver.values):
            out.writerow([repr(float(t)), repr(float(w))])


def read_driver_csv(path, interpolation: str = PIECEWISE_SQRT) -> DrivingFunction:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    if not rows:
        raise LoewnerError(f"{path}: empty driver file")
    t = np.array([float(r["t"]) for r in rows])
    w = np.array([float(r["w"]) for r in rows])
    return DrivingFunction(t, w, interpolation)


def write_trace_csv(tr: Trace, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "re", "im"])
        for t, p in zip(tr.capacity_times, tr.points):
            out.writerow([repr(float(t)), repr(float(p.real)), repr(float(p.imag))])


def read_trace_csv(path, frame: str = "half-plane") -> Trace:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    t = np.array([float(r["t"]) for r in rows])
    pts = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
    return Trace(pts, t, frame)
