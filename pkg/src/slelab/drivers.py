"""Stochastic samplers: SLE drivers, force-point dynamics and auxiliary diffusions.

Every sampler is a pure function of its parameters and a seed.  Seeds are
turned into independent streams with :class:`numpy.random.SeedSequence`
spawn keys, so replica ``r`` of master seed ``m`` always sees the same stream
regardless of how replicas are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exponents import DomainError, bessel_beta, check_kappa
from .loewner import PIECEWISE_SQRT, DrivingFunction, step_inverse

__all__ = [
    "SdeConfig",
    "PathRealization",
    "ThetaPath",
    "BesselPath",
    "XYPath",
    "ReverseBatch",
    "parse_seed",
    "make_rng",
    "brownian_driver",
    "sle_kappa_rho_driver",
    "reverse_sle_kappa_rho_driver",
    "reverse_force_batch",
    "theta_process",
    "theta_stationary_density",
    "theta_stationary_cdf",
    "bessel_process",
    "xy_process",
    "coupled_bessel_xy",
    "default_bessel_dimension",
]

DRIFT_CAP = 10.0  # drift magnitude is capped at DRIFT_CAP / sqrt(dt)
INTERACTION_FLOOR = 1e-9


def parse_seed(seed) -> int:
    """Accept ints or decimal/hex strings; return a 64-bit unsigned integer."""
    if isinstance(seed, str):
        seed = int(seed, 0)
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def make_rng(seed, *key: int) -> np.random.Generator:
    """Independent generator for stream ``key`` of master ``seed``."""
    ss = np.random.SeedSequence(parse_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _grid(horizon: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise DomainError("steps must be >= 1")
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    return np.linspace(0.0, float(horizon), int(steps) + 1)


def brownian_driver(kappa, horizon, steps, seed, interpolation=PIECEWISE_SQRT) -> DrivingFunction:
    kappa = check_kappa(kappa)
    t = _grid(horizon, steps)
    rng = make_rng(seed)
    dw = math.sqrt(kappa) * np.sqrt(np.diff(t)) * rng.standard_normal(int(steps))
    return DrivingFunction(t, np.concatenate([[0.0], np.cumsum(dw)]), interpolation)


@dataclass(frozen=True)
class SdeConfig:
    kappa: float
    weights: tuple = ()
    force_points: tuple = ()
    horizon: float = 1.0
    steps: int = 1000
    seed: int = 0
    interpolation: str = PIECEWISE_SQRT

    def __post_init__(self):
        check_kappa(self.kappa)
        object.__setattr__(self, "weights", tuple(float(r) for r in self.weights))
        object.__setattr__(self, "force_points", tuple(complex(v) for v in self.force_points))
        object.__setattr__(self, "seed", parse_seed(self.seed))
        if len(self.weights) != len(self.force_points):
            raise DomainError("weights and force_points must have equal length")
        if self.steps < 1:
            raise DomainError("steps must be >= 1")
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")
        if any(v.imag < 0 for v in self.force_points):
            raise DomainError("force points must lie in the closed upper half-plane")
        if any(v == 0 for v in self.force_points):
            raise DomainError("force points must differ from W(0) = 0")


@dataclass
class PathRealization:
    driver: DrivingFunction
    force_paths: np.ndarray  # shape (n_force, n_times), uncentred V^i(t_k)
    blow_up: int | None = None
    clipped: bool = False
    log_derivatives: np.ndarray | None = None  # log|g_t'(V^i_0)| for interior points


def sle_kappa_rho_driver(config: SdeConfig) -> PathRealization:
    """Forward SLE_kappa(rho): Euler-Maruyama for the driver and force points."""
    k = config.kappa
    t = _grid(config.horizon, config.steps)
    dt = np.diff(t)
    noise = math.sqrt(k) * np.sqrt(dt) * make_rng(config.seed).standard_normal(config.steps)
    rho = np.array(config.weights)
    v = np.array(config.force_points, dtype=complex)
    boundary = v.imag == 0
    w_path = np.zeros(t.size)
    v_path = np.zeros((v.size, t.size), dtype=complex)
    v_path[:, 0] = v
    w, clipped, blow = 0.0, False, None
    for i in range(config.steps):
        if v.size:
            gap = w - v
            if np.min(np.abs(gap)) < INTERACTION_FLOOR:
                blow = i
                break
            drift = float(np.sum(np.real(rho / gap)))
            cap = DRIFT_CAP / math.sqrt(dt[i])
            if abs(drift) > cap:
                drift = math.copysign(cap, drift)
                clipped = True
            v = v + 2.0 / (v - w) * dt[i]
            v[boundary] = v[boundary].real
        else:
            drift = 0.0
        w = w + drift * dt[i] + noise[i]
        w_path[i + 1] = w
        v_path[:, i + 1] = v
    if blow is not None:
        keep = max(blow + 1, 2)
        t, w_path, v_path = t[:keep], w_path[:keep], v_path[:, :keep]
    assert np.all(v_path[boundary].imag == 0), "boundary force points left the real line"
    driver = DrivingFunction(t, w_path, config.interpolation)
    return PathRealization(driver, v_path, blow, clipped)


def reverse_sle_kappa_rho_driver(config: SdeConfig) -> PathRealization:
    """Reverse SLE_kappa(rho) driver with the force state evolved by the reverse flow.

    The centred force states ``Z^i = g_t(V^i_0) - W_t`` are advanced with the
    exact per-step reverse maps of the loewner module, and the driver follows
    ``dW = sum_i Re(rho^i / (W - V^i)) dt + sqrt(kappa) dB`` where
    ``W - V^i = -Z^i``.
    """
    k = config.kappa
    t = _grid(config.horizon, config.steps)
    dt = np.diff(t)
    noise = math.sqrt(k) * np.sqrt(dt) * make_rng(config.seed).standard_normal(config.steps)
    rho = np.array(config.weights)
    z = np.array(config.force_points, dtype=complex)
    boundary = z.imag == 0
    w_path = np.zeros(t.size)
    v_path = np.zeros((z.size, t.size), dtype=complex)
    v_path[:, 0] = z
    logd = np.zeros((z.size, t.size))
    w, clipped, blow = 0.0, False, None
    for i in range(config.steps):
        drift = 0.0
        if z.size:
            if np.min(np.abs(z)) < INTERACTION_FLOOR:
                blow = i
                break
            drift = float(np.sum(np.real(-rho / z)))
            cap = DRIFT_CAP / math.sqrt(dt[i])
            if abs(drift) > cap:
                drift = math.copysign(cap, drift)
                clipped = True
        dw = drift * dt[i] + noise[i]
        if z.size:
            z_new, ld = step_inverse(z, dt[i], -dw, config.interpolation)
            z_new = np.where(boundary, z_new.real, z_new)
            inner = ~boundary
            assert np.all(z_new.imag[inner] > z.imag[inner]), "Im g_t(z) must increase"
            logd[:, i + 1] = logd[:, i] + np.where(boundary, 0.0, ld.real)
            z = z_new
        w = w + dw
        w_path[i + 1] = w
        v_path[:, i + 1] = z + w
    if blow is not None:
        keep = max(blow + 1, 2)
        t, w_path, v_path, logd = t[:keep], w_path[:keep], v_path[:, :keep], logd[:, :keep]
    driver = DrivingFunction(t, w_path, config.interpolation)
    return PathRealization(driver, v_path, blow, clipped, logd)


@dataclass
class ReverseBatch:
    """Terminal states of many reverse flows started from one interior point."""

    z0: complex
    z: np.ndarray  # centred g_tau(z0)
    log_derivative: np.ndarray  # log|g_tau'(z0)|
    tau: np.ndarray  # stopping times
    clipped: np.ndarray  # bool mask
    n_steps: np.ndarray  # steps taken per path


def reverse_force_batch(
    kappa: float,
    rho: float,
    z0: complex,
    t: float,
    n_paths: int,
    steps: int,
    seed,
    *,
    stream: int = 0,
    adaptive: float | None = None,
    stop_height: float | None = None,
    interpolation: str = PIECEWISE_SQRT,
) -> ReverseBatch:
    """Vectorised reverse SLE_kappa(rho) with one interior force point at ``z0``.

    Paths advance with base step ``h = t / steps``.  With ``adaptive = eta`` the
    step of each path is ``min(h, eta |Z|^2)`` so the force-point interaction
    is resolved while ``|Z|`` is small.  With ``stop_height = r`` a path stops
    at ``tau = min(T_r, t)`` where ``T_r`` is the first time ``Im Z >= r``
    (detected on the grid).  ``rho = 0`` gives the plain reverse SLE_kappa.
    """
    kappa = check_kappa(kappa)
    z0 = complex(z0)
    if z0.imag <= 0:
        raise DomainError("z0 must lie in the upper half-plane")
    h = t / steps
    rng = make_rng(seed, stream)
    z = np.full(n_paths, z0)
    logd = np.zeros(n_paths)
    time = np.zeros(n_paths)
    clipped = np.zeros(n_paths, dtype=bool)
    taken = np.zeros(n_paths, dtype=np.int64)
    active = np.ones(n_paths, dtype=bool)
    sk = math.sqrt(kappa)
    while True:
        if stop_height is not None:
            active &= z.imag < stop_height
        active &= time < t * (1 - 1e-13)
        idx = np.nonzero(active)[0]
        noise = rng.standard_normal(n_paths)  # drawn for every path: stream layout is fixed
        if idx.size == 0:
            break
        zi = z[idx]
        dt = np.minimum(h, t - time[idx])
        if adaptive is not None:
            dt = np.minimum(dt, adaptive * (zi.real**2 + zi.imag**2))
        drift = -rho * (1.0 / zi).real
        cap = DRIFT_CAP / np.sqrt(dt)
        over = np.abs(drift) > cap
        if np.any(over):
            drift = np.where(over, np.sign(drift) * cap, drift)
            clipped[idx[over]] = True
        dw = drift * dt + sk * np.sqrt(dt) * noise[idx]
        z_new, ld = step_inverse(zi, dt, -dw, interpolation)
        z[idx] = z_new
        logd[idx] += ld.real
        time[idx] += dt
        taken[idx] += 1
    return ReverseBatch(z0, z, logd, time, clipped, taken)


# --- theta process ----------------------------------------------------------


@dataclass
class ThetaPath:
    s_grid: np.ndarray
    theta: np.ndarray
    kappa: float
    rho: float
    reflections: int = 0

    def post_burn_in(self, fraction: float = 0.2) -> np.ndarray:
        return self.theta[int(round(fraction * self.theta.size)) :]


def theta_process(kappa, rho, theta0, s_horizon, steps, seed, *, max_halvings: int = 20) -> ThetaPath:
    """Euler scheme for ``d theta = sqrt(k) sin(theta) dB + (2 + k/2 - rho/2) sin(2 theta) ds``.

    A step that would leave ``(0, pi)`` is split into two halves with a
    Brownian-bridge refinement of its increment, recursively up to
    ``max_halvings`` levels; a step still leaving the interval is reflected.
    """
    kappa = check_kappa(kappa)
    if not 0 < theta0 < math.pi:
        raise DomainError("theta0 must lie in (0, pi)")
    s = _grid(s_horizon, steps)
    ds = float(s[1] - s[0])
    rng = make_rng(seed)
    db = rng.standard_normal(int(steps)) * math.sqrt(ds)
    sk = math.sqrt(kappa)
    drift_c = 2.0 + kappa / 2.0 - rho / 2.0
    out = np.empty(s.size)
    out[0] = theta = float(theta0)
    sin, pi = math.sin, math.pi
    counter = [0]

    def advance(th, h, b, depth):
        new = th + sk * sin(th) * b + drift_c * sin(2.0 * th) * h
        if 0.0 < new < pi:
            return new
        if depth < max_halvings:
            b1 = 0.5 * b + 0.5 * math.sqrt(h) * rng.standard_normal()
            mid = advance(th, 0.5 * h, b1, depth + 1)
            return advance(mid, 0.5 * h, b - b1, depth + 1)
        counter[0] += 1
        new = -new if new <= 0.0 else 2.0 * pi - new
        return min(max(new, 1e-300), pi - 1e-16)

    for i in range(int(steps)):
        b = db[i]
        new = theta + sk * sin(theta) * b + drift_c * sin(2.0 * theta) * ds
        theta = new if 0.0 < new < pi else advance(theta, ds, b, 0)
        out[i + 1] = theta
    return ThetaPath(s, out, kappa, float(rho), counter[0])


def _theta_norm(beta: float) -> float:
    if beta <= -1:
        raise DomainError(f"sin^beta is not integrable for beta = {beta} <= -1")
    val, _ = integrate.quad(lambda th: math.sin(th) ** beta, 0.0, math.pi, epsabs=1e-13, epsrel=1e-12, limit=200)
    return 1.0 / val


def theta_stationary_density(kappa, rho, theta):
    """Normalised stationary density ``C sin(theta)^beta`` with ``beta = (8 - 2 rho)/kappa``."""
    beta = bessel_beta(kappa, rho)
    c = _theta_norm(beta)
    th = np.asarray(theta, dtype=float)
    if np.any((th <= 0) | (th >= np.pi)):
        raise DomainError("theta must lie in (0, pi)")
    out = c * np.sin(th) ** beta
    return float(out) if out.ndim == 0 else out


def theta_stationary_cdf(kappa, rho, theta):
    beta = bessel_beta(kappa, rho)
    c = _theta_norm(beta)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    # integrate on a fine grid and interpolate; exact enough for KS statistics
    grid = np.linspace(0.0, np.pi, 20001)
    dens = c * np.sin(grid) ** beta if beta >= 0 else np.concatenate([[0.0], c * np.sin(grid[1:-1]) ** beta, [0.0]])
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    cdf /= cdf[-1]
    out = np.interp(th, grid, cdf)
    return float(out[0]) if np.ndim(theta) == 0 else out


# --- Bessel and (X, Y) --------------------------------------------------------


@dataclass
class BesselPath:
    times: np.ndarray
    values: np.ndarray
    nu: float
    hit_time: float | None = None


def bessel_process(nu, x0, horizon, steps, seed) -> BesselPath:
    """Bessel(nu) path from ``x0``.

    For ``nu < 2`` the squared process is integrated with full-truncation
    Euler and the first grid time with ``Q <= 0`` is recorded.  For ``nu >= 2``,
    where 0 is polar, the drift-implicit step for ``R = sqrt(Q)``,
    ``R' = (R + dB + sqrt((R + dB)^2 + 2 (nu - 1) dt)) / 2``, is used; it is
    positive by construction, so no spurious hits occur.
    """
    if not nu > 0:
        raise DomainError("Bessel dimension must be positive")
    if x0 < 0:
        raise DomainError("x0 must be nonnegative")
    t = _grid(horizon, steps)
    dt = np.diff(t)
    db = np.sqrt(dt) * make_rng(seed).standard_normal(int(steps))
    if nu >= 2:
        r = np.empty(t.size)
        r[0] = x0
        for i in range(int(steps)):
            b = r[i] + db[i]
            r[i + 1] = 0.5 * (b + math.sqrt(b * b + 2.0 * (nu - 1.0) * dt[i]))
        return BesselPath(t, r, float(nu), None)
    q = np.empty(t.size)
    q[0] = x0 * x0
    hit = None
    for i in range(int(steps)):
        qp = max(q[i], 0.0)
        q[i + 1] = q[i] + nu * dt[i] + 2.0 * math.sqrt(qp) * db[i]
        if hit is None and q[i + 1] <= 0.0:
            hit = float(t[i + 1])
    return BesselPath(t, np.sqrt(np.maximum(q, 0.0)), float(nu), hit)


@dataclass
class XYPath:
    times: np.ndarray
    x: np.ndarray  # shape (n_paths, n_times)
    y: np.ndarray
    dB: np.ndarray  # shared standard Brownian increments, shape (n_paths, steps)
    x_tilde: np.ndarray | None = None
    nu: float | None = None


def _xy_arrays(kappa, rho, z0, t, n_paths, steps, rng):
    z0 = complex(z0)
    if z0.imag <= 0:
        raise DomainError("z0 must lie in the upper half-plane")
    dt = np.diff(t)
    db = rng.standard_normal((n_paths, int(steps))) * np.sqrt(dt)
    x = np.empty((n_paths, t.size))
    y = np.empty((n_paths, t.size))
    x[:, 0], y[:, 0] = z0.real, z0.imag
    sk = math.sqrt(kappa)
    for i in range(int(steps)):
        xi, yi = x[:, i], y[:, i]
        r2 = xi * xi + yi * yi
        x[:, i + 1] = xi + (rho - 2.0) * xi / r2 * dt[i] - sk * db[:, i]
        # Euler step for Y^2 keeps Y increasing and Y^2 <= Y_0^2 + 4t exactly
        y[:, i + 1] = yi * np.sqrt(1.0 + 4.0 * dt[i] / r2)
    return x, y, db


def xy_process(kappa, rho, z0, horizon, steps, seed, n_paths: int = 1) -> XYPath:
    """``dX = (rho-2) X/|Z|^2 dt - sqrt(k) dB``, ``dY = 2Y/|Z|^2 dt``."""
    kappa = check_kappa(kappa)
    t = _grid(horizon, steps)
    x, y, db = _xy_arrays(kappa, rho, z0, t, n_paths, steps, make_rng(seed))
    return XYPath(t, x, y, db)


def default_bessel_dimension(kappa: float, rho: float) -> float:
    """A dimension above ``max(1, 2(rho-2)/kappa + 1)``, inside ``(0, 2)`` when possible."""
    lower = max(1.0, 2.0 * (rho - 2.0) / kappa + 1.0)
    return 0.5 * (lower + 2.0) if lower < 2.0 else lower + 0.5


def coupled_bessel_xy(kappa, rho, z0, horizon, steps, seed, n_paths=1000, nu=None) -> XYPath:
    """(X, Y) together with ``X~ = sqrt(k) R``, ``R`` a Bessel(nu) driven by ``-B``.

    ``R`` uses a plain Euler step ``dR = (nu-1)/(2R) dt - dB`` with the same
    increments as ``X`` (reflected at 0), which keeps the comparison pathwise.
    """
    kappa = check_kappa(kappa)
    nu = default_bessel_dimension(kappa, rho) if nu is None else float(nu)
    lower = max(1.0, 2.0 * (rho - 2.0) / kappa + 1.0)
    if not nu > lower:
        raise DomainError(f"nu must exceed {lower} for the comparison to hold")
    t = _grid(horizon, steps)
    x, y, db = _xy_arrays(kappa, rho, z0, t, n_paths, steps, make_rng(seed))
    dt = np.diff(t)
    r = np.empty_like(x)
    r[:, 0] = abs(complex(z0).real) / math.sqrt(kappa)
    for i in range(int(steps)):
        ri = r[:, i]
        with np.errstate(divide="ignore"):
            drift = np.where(ri > 0, (nu - 1.0) / (2.0 * ri), 0.0)
        r[:, i + 1] = np.abs(ri + drift * dt[i] - db[:, i])
    return XYPath(t, x, y, db, math.sqrt(kappa) * r, nu)
