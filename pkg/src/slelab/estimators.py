"""Spectrum estimators and the shared log-log regression.

* :func:`ims_bulk_estimate` integrates ``|phi'|^a`` over circles ``|z| = 1 - eps``
  for the disk map ``phi = psi^-1 o f_t^-1 o psi`` of one SLE realisation and
  fits the growth exponent in ``eps``.
* :func:`mf_spectrum_estimate` wraps the one-point exponent fits of the
  martingale module into a curve over ``s``.
* :func:`box_counting_dimension` counts occupied grid cells of a polyline.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from .drivers import brownian_driver, parse_seed
from .exponents import DomainError, a_bounds, check_kappa, ims_star, s_bounds, tilde_xi
from .loewner import (
    LoewnerChain,
    Trace,
    disk_halfplane_derivative,
    disk_halfplane_map,
    halfplane_disk_derivative,
    halfplane_disk_map,
)
from .parallel import pmap

__all__ = [
    "SCHEMA_VERSION",
    "FlaggedEstimateError",
    "LogLogFit",
    "SpectrumCurve",
    "BoxCountResult",
    "ImsRealization",
    "loglog_fit",
    "ims_realization",
    "ims_bulk_estimate",
    "ims_default_range",
    "mf_spectrum_estimate",
    "box_counting_dimension",
    "koch_curve",
    "atomic_write",
    "write_json",
    "write_csv",
]

SCHEMA_VERSION = 1


class FlaggedEstimateError(DomainError):
    """A statistical guard tripped; ``result`` holds what was computed."""

    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    n_points: int


def loglog_fit(xs, ys) -> LogLogFit:
    """Ordinary least squares of ``log y`` on ``log x``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("xs and ys must be 1-d arrays of equal length")
    if x.size < 3:
        raise DomainError("loglog_fit needs at least 3 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("loglog_fit needs positive inputs")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    if sxx == 0:
        raise DomainError("xs must not all be equal")
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    intercept = float(my - slope * mx)
    resid = ly - (intercept + slope * lx)
    sse = float(np.sum(resid**2))
    syy = float(np.sum((ly - my) ** 2))
    r2 = 1.0 if syy <= 1e-300 else 1.0 - sse / syy
    se = math.sqrt(sse / (x.size - 2) / sxx)
    return LogLogFit(slope, intercept, se, r2, int(x.size))


@dataclass
class SpectrumCurve:
    parameter: str
    grid: list
    estimated: list
    stderr: list
    predicted: list
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parameter not in ("s", "q", "a"):
            raise DomainError(f"unknown spectrum parameter {self.parameter!r}")
        n = len(self.grid)
        if not (len(self.estimated) == len(self.stderr) == len(self.predicted) == n):
            raise DomainError("spectrum columns must align")

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "spectrum_curve", **asdict(self)}


@dataclass
class BoxCountResult:
    meshes: list
    counts: list
    dimension: float
    stderr: float

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "box_count", **asdict(self)}


# --- integral means ---------------------------------------------------------


@dataclass
class ImsRealization:
    eps: np.ndarray
    log_integrals: np.ndarray  # shape (n_a, n_eps)
    kept_fraction: float


def _check_grid(eps, min_decades):
    eps = np.asarray(eps, dtype=float)
    if eps.size < 3 or np.any(eps <= 0) or np.any(eps >= 1):
        raise DomainError("eps grid needs >= 3 values in (0, 1)")
    if math.log10(eps.max() / eps.min()) < min_decades - 1e-9:
        raise DomainError(f"eps grid must span at least {min_decades} decades")
    return np.sort(eps)[::-1]


def ims_default_range(kappa: float) -> tuple[float, float]:
    a_minus, a_plus = a_bounds(kappa)
    return a_minus + 0.1, min(a_plus, (4.0 + kappa) ** 2 / (8.0 * kappa)) - 0.1


def ims_realization(
    kappa, a_values, t, eps_grid, *, zeta=0.2, steps=10_000, seed=0, n_nodes=2048, min_decades=1.5
) -> ImsRealization:
    """``log`` of the bulk integral of ``|phi'|^a`` for one SLE realisation.

    The integral uses the angular measure ``d theta`` on ``|z| = 1 - eps`` and
    the midpoint rule.  A node is kept when the image of its radial projection
    ``phi(e^{i theta})`` lies on the curve at distance at least ``zeta`` from
    the tip and from the unit circle (the base point lies on the circle).
    """
    kappa = check_kappa(kappa)
    eps = _check_grid(eps_grid, min_decades)
    a_values = np.atleast_1d(np.asarray(a_values, dtype=float))
    driver = brownian_driver(kappa, t, steps, seed)
    chain = LoewnerChain(np.diff(driver.times), np.diff(driver.values), driver.interpolation)
    theta = (np.arange(n_nodes) + 0.5) * 2.0 * np.pi / n_nodes

    # boundary correspondence: which arcs map to the bulk of the curve
    bnd = np.exp(1j * theta)
    w_b = disk_halfplane_map(bnd).real + 0j
    tip_h, _, _ = chain.compose_blocked(np.array([1e-12j]), np.array([chain.n]))
    img_b, _, _ = chain.compose_blocked(w_b, np.full(w_b.shape, chain.n))
    on_curve = img_b.imag > 0
    img_disk = halfplane_disk_map(np.where(on_curve, img_b, 1j))
    tip_disk = halfplane_disk_map(tip_h[0])
    keep = on_curve & (np.abs(img_disk - tip_disk) >= zeta) & (1.0 - np.abs(img_disk) >= zeta)
    if not np.any(keep):
        raise DomainError("no quadrature nodes survive the exclusion; lower zeta or raise t")
    sel = theta[keep]

    # nodes on every circle at once
    z = ((1.0 - eps)[:, None] * np.exp(1j * sel)[None, :]).ravel()
    w = disk_halfplane_map(z)
    img, la, _ = chain.compose_blocked(w, np.full(w.shape, chain.n))
    log_dphi = (
        la
        + np.log(np.abs(disk_halfplane_derivative(z)))
        + np.log(np.abs(halfplane_disk_derivative(img)))
    ).reshape(eps.size, sel.size)
    d_theta = 2.0 * np.pi / n_nodes
    out = np.empty((a_values.size, eps.size))
    for i, a in enumerate(a_values):
        x = a * log_dphi
        m = x.max(axis=1, keepdims=True)
        out[i] = m[:, 0] + np.log(np.exp(x - m).sum(axis=1) * d_theta)
    return ImsRealization(eps, out, float(keep.mean()))


def ims_bulk_estimate(
    kappa, a_values, t, eps_grid, *, zeta=0.2, steps=10_000, seed=0, n_realizations=20,
    n_nodes=2048, min_decades=1.5, threads=1,
) -> SpectrumCurve:
    """Bulk integral means exponents averaged over independent realisations."""
    a_values = np.atleast_1d(np.asarray(a_values, dtype=float))
    master = parse_seed(seed)

    def one(r):
        sub = int(np.random.SeedSequence(master, spawn_key=(r,)).generate_state(1, np.uint64)[0])
        res = ims_realization(
            kappa, a_values, t, eps_grid, zeta=zeta, steps=steps, seed=sub, n_nodes=n_nodes,
            min_decades=min_decades,
        )
        return [
            loglog_fit(1.0 / res.eps, np.exp(res.log_integrals[i] - res.log_integrals[i].max())).slope
            for i in range(a_values.size)
        ]

    slopes = np.array(pmap(one, range(n_realizations), threads))  # (R, n_a)
    mean = [math.fsum(col) / col.size for col in slopes.T]
    se = [float(np.std(col, ddof=1) / math.sqrt(col.size)) if col.size > 1 else math.nan for col in slopes.T]
    pred = [float(ims_star(kappa, a)) for a in a_values]
    return SpectrumCurve(
        "a", a_values.tolist(), mean, se, pred,
        {"slopes": slopes.tolist(), "kappa": kappa, "t": t, "eps_grid": list(map(float, eps_grid)), "zeta": zeta},
    )


# --- multifractal spectrum --------------------------------------------------


def mf_spectrum_estimate(kappa, s_grid, eps_grid, **settings) -> SpectrumCurve:
    """One-point exponent fits over ``s_grid``; reports alpha-hat and ``1 - alpha-hat``."""
    from .martingale import alpha_slope_fit

    s_minus, s_plus = s_bounds(kappa)
    s_grid = [float(s) for s in s_grid]
    if any(not s_minus < s < s_plus for s in s_grid):
        raise DomainError("s grid must lie inside (s_-, s_+)")
    master = parse_seed(settings.pop("seed", 0))
    fits = []
    for i, s in enumerate(s_grid):
        sub = int(np.random.SeedSequence(master, spawn_key=(i,)).generate_state(1, np.uint64)[0])
        fits.append(alpha_slope_fit(kappa, s, eps_grid, seed=sub, **settings))
    curve = SpectrumCurve(
        "s",
        s_grid,
        [f.alpha_hat for f in fits],
        [f.stderr for f in fits],
        [f.predicted for f in fits],
        {
            "xi_tilde_hat": [1.0 - f.alpha_hat for f in fits],
            "xi_tilde_pred": [float(tilde_xi(kappa, s)) for s in s_grid],
            "rows": [[asdict(r) for r in f.rows] for f in fits],
            "flagged": [f.flagged for f in fits],
        },
    )
    if any(f.flagged for f in fits):
        raise FlaggedEstimateError("a one-point fit was flagged (low effective sample size)", curve)
    return curve


# --- box counting -----------------------------------------------------------


def _supersample(points: np.ndarray, mesh: float) -> np.ndarray:
    seg = np.diff(points)
    n_sub = np.maximum(1, np.ceil(np.abs(seg) / (0.5 * mesh)).astype(np.int64))
    if np.all(n_sub == 1):
        return points
    starts = np.repeat(points[:-1], n_sub)
    steps = np.repeat(seg / n_sub, n_sub)
    offs = np.arange(n_sub.sum()) - np.repeat(np.cumsum(n_sub) - n_sub, n_sub)
    return np.concatenate([starts + offs * steps, points[-1:]])


def box_counting_dimension(trace, meshes, *, min_decades: float = 1.5) -> BoxCountResult:
    """Occupied-cell counts of the polyline on square grids of the given meshes."""
    pts = trace.points if isinstance(trace, Trace) else np.asarray(trace, dtype=complex)
    meshes = np.sort(np.asarray(meshes, dtype=float))[::-1]
    if meshes.size < 4 or np.any(meshes <= 0):
        raise DomainError("need at least 4 positive meshes")
    if math.log10(meshes[0] / meshes[-1]) < min_decades - 1e-9:
        raise DomainError(f"meshes must span at least {min_decades} decades")
    extent = max(np.ptp(pts.real), np.ptp(pts.imag))
    if extent < meshes[0]:
        raise DomainError("trace is smaller than the coarsest mesh")
    counts = []
    for m in meshes:
        p = _supersample(pts, m)
        ix = np.floor(p.real / m).astype(np.int64)
        iy = np.floor(p.imag / m).astype(np.int64)
        cells = np.unique(np.stack([ix, iy], axis=1), axis=0)
        counts.append(int(cells.shape[0]))
    fit = loglog_fit(1.0 / meshes, np.array(counts, dtype=float))
    return BoxCountResult(meshes.tolist(), counts, fit.slope, fit.slope_stderr)


def koch_curve(level: int) -> np.ndarray:
    """Vertices of the Koch curve on ``[0, 1]`` after ``level`` refinements."""
    pts = np.array([0.0, 1.0], dtype=complex)
    rot = np.exp(1j * np.pi / 3)
    for _ in range(level):
        a, b = pts[:-1], pts[1:]
        d = (b - a) / 3.0
        p1, p3 = a + d, a + 2 * d
        p2 = p1 + d * rot
        new = np.stack([a, p1, p2, p3], axis=1).ravel()
        pts = np.concatenate([new, pts[-1:]])
    return pts


# --- serialisation ----------------------------------------------------------


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(obj, path, config: dict | None = None, version: str | None = None) -> None:
    data = obj.to_dict() if hasattr(obj, "to_dict") else dict(obj)
    if config is not None:
        data["config"] = config
    if version is not None:
        data["version"] = version
    atomic_write(path, json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x)}")


def write_csv(header, rows, path, comments: list[str] | None = None) -> None:
    """CSV with optional leading ``#`` comment lines; floats are written round-trip exact."""
    buf = io.StringIO()
    for line in comments or []:
        buf.write(f"# {line}\n")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for r in rows:
        out.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    atomic_write(path, buf.getvalue())
