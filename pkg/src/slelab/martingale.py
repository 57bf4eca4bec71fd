"""The reverse-flow martingale and importance sampling of derivative events.

For reverse SLE_kappa started at an interior point ``z``,

    M_t = |g_t'(z)|^{(8+2k-rho) rho/(8k)} (Im g_t(z))^{-rho^2/(8k)} |g_t(z)|^{rho/k}

is a martingale, and weighting by ``M_t / M_0`` turns the plain reverse flow
into a reverse SLE_kappa(rho) with force point at ``z``.  Sampling under the
tilted law with ``rho = rho_opt(s)`` makes ``|g_t'(z)| ~ eps^{-s}`` typical, so
the event probability is estimated as the mean of ``(M_0 / M_t) 1_E``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .drivers import parse_seed, reverse_force_batch
from .exponents import DomainError, alpha, check_kappa, rho_opt, s_bounds
from .parallel import pmap

__all__ = [
    "MartingaleParams",
    "WeightedIndicator",
    "TailEstimate",
    "AlphaFit",
    "martingale_value",
    "measure_exponent",
    "check_martingale",
    "weighted_indicators",
    "tail_probability",
    "tail_probability_is",
    "tail_probability_mc",
    "default_slack",
    "alpha_slope_fit",
    "parse_key",
]

CHUNK = 1024
ESS_MIN = 50.0


@dataclass(frozen=True)
class MartingaleParams:
    kappa: float
    rho: float
    z: complex

    def __post_init__(self):
        check_kappa(self.kappa)
        object.__setattr__(self, "z", complex(self.z))
        if not self.z.imag > 0:
            raise DomainError("z must lie in the upper half-plane")

    @property
    def exponents(self) -> tuple[float, float, float]:
        k, r = self.kappa, self.rho
        return (8.0 + 2.0 * k - r) * r / (8.0 * k), r * r / (8.0 * k), r / k

    @property
    def log_m0(self) -> float:
        return float(martingale_value(self, self.z, 0.0))


@dataclass
class WeightedIndicator:
    weight: np.ndarray
    indicator: np.ndarray
    log_deriv: np.ndarray
    log_weight: np.ndarray


def martingale_value(params: MartingaleParams, g_val, g_deriv_log):
    """``log M`` from the centred state ``g`` and ``log|g'|``."""
    g = np.asarray(g_val, dtype=complex)
    if np.any(g.imag <= 0):
        raise DomainError("martingale_value needs Im g > 0")
    e_d, e_im, e_abs = params.exponents
    out = e_d * np.asarray(g_deriv_log, dtype=float) - e_im * np.log(g.imag) + e_abs * np.log(np.abs(g))
    return float(out) if out.ndim == 0 else out


def measure_exponent(kappa: float, s: float, rho):
    """Exponent of ``eps`` in ``M`` on the event ``|g'| = eps^{-s}``, up to the ``|g|`` factor."""
    kappa = check_kappa(kappa)
    rho = np.asarray(rho, dtype=float)
    return s * (8.0 + 2.0 * kappa - rho) * rho / (8.0 * kappa) - rho * rho / (8.0 * kappa)


def _chunks(n: int) -> list[tuple[int, int]]:
    return [(i, min(CHUNK, n - i * CHUNK)) for i in range((n + CHUNK - 1) // CHUNK)]


def check_martingale(
    params: MartingaleParams, t: float, steps: int, n_samples: int, seed, *, threads: int = 1
) -> tuple[float, float]:
    """Mean and standard error of ``M_t / M_0`` under the plain reverse flow."""
    if params.rho == 0:
        return 1.0, 0.0

    def run(chunk):
        idx, n = chunk
        b = reverse_force_batch(params.kappa, 0.0, params.z, t, n, steps, seed, stream=idx)
        return np.exp(martingale_value(params, b.z, b.log_derivative) - params.log_m0)

    ratios = np.concatenate(pmap(run, _chunks(n_samples), threads))
    mean = math.fsum(ratios) / ratios.size
    var = math.fsum((ratios - mean) ** 2) / (ratios.size - 1)
    return mean, math.sqrt(var / ratios.size)


def default_slack(eps: float) -> float:
    return 0.4 / math.log(1.0 / eps)


@dataclass
class TailEstimate:
    eps: float
    p_hat: float
    stderr: float
    ess: float
    n_clipped: int
    n_samples: int
    flagged: bool
    rho: float

    @property
    def rel_err(self) -> float:
        return self.stderr / self.p_hat if self.p_hat > 0 else math.inf


def weighted_indicators(
    kappa, s, z, t, u, c, n_samples, seed, *, rho=None, steps=1000, adaptive=0.05,
    stop_height=None, min_height=None, threads=1,
) -> tuple[WeightedIndicator, np.ndarray]:
    """Per-path weights and event indicators; also returns the clipped mask."""
    kappa = check_kappa(kappa)
    z = complex(z)
    eps = z.imag
    rho = rho_opt(kappa, s) if rho is None else float(rho)
    params = MartingaleParams(kappa, rho, z)
    lo = -math.log(c) + (-s + u) * math.log(eps)
    hi = math.log(c) + (-s - u) * math.log(eps)

    def run(chunk):
        idx, n = chunk
        return reverse_force_batch(
            kappa, rho, z, t, n, steps, seed, stream=idx, adaptive=adaptive, stop_height=stop_height
        )

    batches = pmap(run, _chunks(n_samples), threads)
    gz = np.concatenate([b.z for b in batches])
    ld = np.concatenate([b.log_derivative for b in batches])
    clipped = np.concatenate([b.clipped for b in batches])
    logw = params.log_m0 - martingale_value(params, gz, ld)
    ind = (ld >= lo) & (ld <= hi)
    if min_height is not None:
        ind &= gz.imag >= min_height
    return WeightedIndicator(np.exp(logw), ind, ld, logw), clipped


def tail_probability(
    kappa, s, z, t=1.0, u=None, c=4.0, n_samples=10_000, seed=0, *, rho=None, steps=1000,
    adaptive=0.05, stop_height=None, min_height=None, threads=1,
) -> TailEstimate:
    """Estimate ``P(c^-1 eps^{-s+u} <= |g_t'(z)| <= c eps^{-s-u})`` by weighting.

    ``rho`` selects the sampling law (reverse SLE_kappa(rho)); the default is
    ``rho_opt(s)``.  ``rho = 0`` is plain Monte Carlo.  Clipped paths are
    dropped and counted.
    """
    z = complex(z)
    eps = z.imag
    if not 0 < eps < 1:
        raise DomainError("Im z must lie in (0, 1)")
    lo_s, hi_s = -1.0, 1.0
    if not lo_s < s < hi_s:
        raise DomainError("s must lie in (-1, 1)")
    u = default_slack(eps) if u is None else float(u)
    wi, clipped = weighted_indicators(
        kappa, s, z, t, u, c, n_samples, seed, rho=rho, steps=steps, adaptive=adaptive,
        stop_height=stop_height, min_height=min_height, threads=threads,
    )
    keep = ~clipped
    w = wi.weight[keep]
    x = np.where(wi.indicator[keep], w, 0.0)
    n = x.size
    p = math.fsum(x) / n
    se = math.sqrt(math.fsum((x - p) ** 2) / (n - 1) / n) if n > 1 else math.inf
    wsum = math.fsum(x)
    ess = wsum * wsum / math.fsum(x * x) if wsum > 0 else 0.0
    used_rho = rho_opt(kappa, s) if rho is None else float(rho)
    return TailEstimate(eps, p, se, ess, int(clipped.sum()), n, ess < ESS_MIN, used_rho)


def tail_probability_is(kappa, s, z, t=1.0, u=None, c=4.0, n_samples=10_000, seed=0, **kw) -> TailEstimate:
    return tail_probability(kappa, s, z, t, u, c, n_samples, seed, rho=None, **kw)


def tail_probability_mc(kappa, s, z, t=1.0, u=None, c=4.0, n_samples=10_000, seed=0, **kw) -> TailEstimate:
    return tail_probability(kappa, s, z, t, u, c, n_samples, seed, rho=0.0, **kw)


@dataclass
class AlphaFit:
    alpha_hat: float
    stderr: float
    predicted: float
    rows: list = field(default_factory=list)
    flagged: bool = False


def alpha_slope_fit(
    kappa, s, eps_grid, *, re_z=1.0, t=1.0, c=4.0, n_samples=10_000, seed=0, steps=1000,
    adaptive=0.05, stop_height=None, min_height=None, min_decades=0.9, threads=1,
) -> AlphaFit:
    """Slope of ``-log p(eps)`` against ``-log eps`` over ``eps_grid``.

    The standard error combines the regression residual variance with the
    Monte Carlo error of each ``log p`` propagated through the fit.
    """
    from .estimators import loglog_fit

    eps = np.asarray(eps_grid, dtype=float)
    if eps.size < 4:
        raise DomainError("need at least 4 grid points")
    if np.any(np.diff(eps) >= 0):
        raise DomainError("eps_grid must be decreasing")
    if math.log10(eps[0] / eps[-1]) < min_decades - 1e-9:
        raise DomainError(f"eps_grid must span at least {min_decades} decades")
    s_lo, s_hi = s_bounds(kappa)
    if not s_lo < s < s_hi:
        raise DomainError("s must lie in (s_-, s_+)")
    rows = []
    for i, e in enumerate(eps):
        est = tail_probability_is(
            kappa, s, complex(re_z, e), t, None, c, n_samples, parse_key((parse_seed(seed), i)),
            steps=steps, adaptive=adaptive, stop_height=stop_height, min_height=min_height, threads=threads,
        )
        rows.append(est)
    predicted = float(alpha(kappa, s))
    if any(r.flagged or r.p_hat <= 0 for r in rows):
        return AlphaFit(math.nan, math.nan, predicted, rows, True)
    p = np.array([r.p_hat for r in rows])
    fit = loglog_fit(1.0 / eps, 1.0 / p)
    x = np.log(1.0 / eps)
    cx = (x - x.mean()) / np.sum((x - x.mean()) ** 2)
    rel = np.array([r.rel_err for r in rows])
    mc_var = float(np.sum(cx * cx * rel * rel))
    return AlphaFit(fit.slope, math.sqrt(fit.slope_stderr**2 + mc_var), predicted, rows, False)


def parse_key(seed):
    """Seeds for sub-experiments: ints pass through, tuples are hashed into a seed."""
    if isinstance(seed, tuple):
        ss = np.random.SeedSequence(int(seed[0]), spawn_key=tuple(int(k) for k in seed[1:]))
        return int(ss.generate_state(1, dtype=np.uint64)[0])
    return seed
