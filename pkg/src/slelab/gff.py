"""Harmonic part of a free-boundary Gaussian free field on the unit disk.

The field is the random series

    h(z) = sum_{n>=1} sqrt(2/n) (X_n Re z^n + Y_n Im z^n)

with i.i.d. standard Gaussians ``X_n, Y_n``.  Its covariance is
``-2 log|1 - z conj(w)|``, which serves as the exact oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drivers import make_rng
from .exponents import DomainError

__all__ = [
    "HarmonicFieldSample",
    "sample_harmonic",
    "sample_harmonic_batch",
    "evaluate",
    "covariance_exact",
    "covariance_mc",
    "truncation_bound",
    "default_modes",
]


@dataclass(frozen=True)
class HarmonicFieldSample:
    n_modes: int
    x_coeffs: np.ndarray
    y_coeffs: np.ndarray

    def __post_init__(self):
        if self.x_coeffs.shape != (self.n_modes,) or self.y_coeffs.shape != (self.n_modes,):
            raise DomainError("coefficient arrays must have length n_modes")


def sample_harmonic(n_modes: int, seed) -> HarmonicFieldSample:
    if n_modes < 1:
        raise DomainError("n_modes must be >= 1")
    g = make_rng(seed).standard_normal((2, n_modes))
    return HarmonicFieldSample(n_modes, g[0].copy(), g[1].copy())


def sample_harmonic_batch(n_modes: int, n_samples: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """``(X, Y)`` coefficient matrices of shape ``(n_samples, n_modes)``."""
    if n_modes < 1:
        raise DomainError("n_modes must be >= 1")
    g = make_rng(seed).standard_normal((n_samples, 2, n_modes))
    return g[:, 0, :], g[:, 1, :]


def _basis(n_modes: int, z: complex) -> tuple[np.ndarray, np.ndarray]:
    z = complex(z)
    if abs(z) >= 1:
        raise DomainError("evaluation point must lie in the open unit disk")
    powers = np.empty(n_modes, dtype=complex)
    p = 1.0 + 0.0j
    for n in range(n_modes):
        p = p * z
        powers[n] = p
    scale = np.sqrt(2.0 / np.arange(1, n_modes + 1))
    return scale * powers.real, scale * powers.imag


def evaluate(sample: HarmonicFieldSample, z: complex) -> float:
    re, im = _basis(sample.n_modes, z)
    return float(sample.x_coeffs @ re + sample.y_coeffs @ im)


def covariance_exact(z: complex, w: complex) -> float:
    z, w = complex(z), complex(w)
    if abs(z) >= 1 or abs(w) >= 1:
        raise DomainError("points must lie in the open unit disk")
    return -2.0 * math.log(abs(1.0 - z * w.conjugate()))


def truncation_bound(n_modes: int, z: complex, w: complex) -> float:
    """Bound on ``|cov_N - cov|``: ``2 r^{N+1} / ((N+1)(1-r))`` with ``r = |z||w|``."""
    r = abs(z) * abs(w)
    return 2.0 * r ** (n_modes + 1) / ((n_modes + 1) * (1.0 - r))


def default_modes(r_max: float, tol: float = 1e-6) -> int:
    """Smallest ``N`` from the rule ``ceil(log(tol (1 - r)) / log r)``."""
    if not 0 < r_max < 1:
        raise DomainError("r_max must lie in (0, 1)")
    return max(1, math.ceil(math.log(tol * (1.0 - r_max)) / math.log(r_max)))


def covariance_mc(n_modes: int, n_samples: int, z: complex, w: complex, seed) -> tuple[float, float]:
    """Sample covariance of ``h(z), h(w)`` and its standard error."""
    x, y = sample_harmonic_batch(n_modes, n_samples, seed)
    rz, iz = _basis(n_modes, z)
    rw, iw = _basis(n_modes, w)
    hz = x @ rz + y @ iz
    hw = x @ rw + y @ iw
    prod = (hz - hz.mean()) * (hw - hw.mean())
    est = float(prod.sum() / (n_samples - 1))
    se = float(prod.std(ddof=1) / math.sqrt(n_samples))
    return est, se
