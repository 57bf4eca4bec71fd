"""Closed-form exponents for SLE_kappa multifractal and integral means spectra.

Every function here is a pure evaluation of an algebraic formula in double
precision.  They serve as the predictions that the Monte Carlo estimators are
checked against.  Points where a formula has a pole or leaves its real domain
raise :class:`DomainError` instead of returning NaN.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "ExponentSet",
    "check_kappa",
    "tilde_xi",
    "xi",
    "s_bounds",
    "alpha",
    "alpha0",
    "gamma",
    "gamma0",
    "gamma_star",
    "rho_opt",
    "s_star",
    "a_bounds",
    "a_bounds_rootfind",
    "ims_star",
    "central_charge",
    "duplantier_f",
    "coupling_constants",
    "bessel_beta",
    "exponent_set",
]


class DomainError(ValueError):
    """Raised when a formula is evaluated outside its domain."""


def check_kappa(kappa: float, *, max_kappa: float | None = None) -> float:
    kappa = float(kappa)
    if not math.isfinite(kappa) or kappa <= 0:
        raise DomainError(f"kappa must be positive and finite, got {kappa}")
    if max_kappa is not None and kappa > max_kappa:
        raise DomainError(f"kappa must be <= {max_kappa}, got {kappa}")
    return kappa


def _arr(x):
    a = np.asarray(x, dtype=float)
    return a


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def _require(cond, msg: str) -> None:
    if not np.all(cond):
        raise DomainError(msg)


def _k2(kappa: float) -> float:
    # (4 + kappa)^2 / (8 kappa), invariant under kappa -> 16 / kappa
    return (4.0 + kappa) ** 2 / (8.0 * kappa)


def tilde_xi(kappa: float, s):
    """Dimension of the preimage set: ``1 - (4+k)^2 s^2 / (8 k (1+s))``."""
    kappa = check_kappa(kappa)
    s = _arr(s)
    _require(s > -1, "tilde_xi requires s > -1")
    return _out(1.0 - _k2(kappa) * s * s / (1.0 + s))


def xi(kappa: float, s):
    """Dimension of the image set on the curve; equals ``tilde_xi(s) / (1 - s)``."""
    kappa = check_kappa(kappa)
    s = _arr(s)
    _require(np.abs(s) < 1, "xi requires |s| < 1")
    num = 8.0 * kappa * (1.0 + s) - (4.0 + kappa) ** 2 * s * s
    return _out(num / (8.0 * kappa * (1.0 - s * s)))


def s_bounds(kappa: float) -> tuple[float, float]:
    """Roots ``(s_-, s_+)`` of :func:`tilde_xi`."""
    kappa = check_kappa(kappa)
    root = 2.0 * math.sqrt(2.0) * math.sqrt(kappa * (2.0 + kappa) * (8.0 + kappa))
    den = (4.0 + kappa) ** 2
    s_minus = (4.0 * kappa - root) / den
    s_plus = (4.0 * kappa + root) / den
    if kappa == 4.0:
        s_plus = 1.0  # root evaluates to exactly 48, but keep the identity exact
    return s_minus, s_plus


def alpha(kappa: float, s):
    """One-point exponent for ``|(f_t^{-1})'(z)| ~ eps^{-s}`` at ``Im z = eps``."""
    kappa = check_kappa(kappa)
    s = _arr(s)
    _require(s > -1, "alpha requires s > -1")
    return _out(_k2(kappa) * s * s / (1.0 + s))


def alpha0(kappa: float, s):
    """Sensitivity of :func:`alpha` to the slack ``u``: ``(4+k)^2 s(2+s)/(8k(1+s)^2)``."""
    kappa = check_kappa(kappa)
    s = _arr(s)
    _require(s > -1, "alpha0 requires s > -1")
    return _out(_k2(kappa) * s * (2.0 + s) / (1.0 + s) ** 2)


def gamma(kappa: float, s):
    return _out(_arr(alpha(kappa, s)) - 2.0 * _arr(s) + 1.0)


def gamma0(kappa: float, s):
    return _out(2.0 * _arr(alpha0(kappa, s)) + 2.0)


def gamma_star(kappa: float, q):
    """Exponent at the hitting scale, parametrised by ``q = s / (1 - s)``."""
    kappa = check_kappa(kappa)
    q = _arr(q)
    _require(q > -0.5, "gamma_star requires q > -1/2")
    num = 8.0 * kappa + 8.0 * kappa * q + (4.0 - kappa) ** 2 * q * q
    return _out(num / (8.0 * (kappa + 2.0 * kappa * q)))


def rho_opt(kappa: float, s):
    """Force-point weight of the tilted law that makes ``|g'| ~ eps^{-s}`` typical."""
    kappa = check_kappa(kappa)
    s = _arr(s)
    _require(s > -1, "rho_opt requires s > -1")
    return _out((4.0 + kappa) * s / (1.0 + s))


def _a_max(kappa: float) -> float:
    return (4.0 + kappa) ** 2 / (8.0 * kappa)


def s_star(kappa: float, a):
    """Maximiser of ``tilde_xi(s) + a s - 1``; requires ``a < (4+k)^2/(8k)``."""
    kappa = check_kappa(kappa)
    a = _arr(a)
    _require(a < _a_max(kappa), "s_star requires a < (4+kappa)^2/(8 kappa)")
    return _out(-1.0 + (4.0 + kappa) / np.sqrt((4.0 + kappa) ** 2 - 8.0 * a * kappa))


def _a_from_s(kappa: float, s: float) -> float:
    return (4.0 + kappa) ** 2 * (1.0 - (1.0 + s) ** -2) / (8.0 * kappa)


def a_bounds(kappa: float) -> tuple[float, float]:
    """Values ``(a_-, a_+)`` where :func:`s_star` reaches ``s_-`` and ``s_+``."""
    kappa = check_kappa(kappa)
    s_minus, s_plus = s_bounds(kappa)
    return _a_from_s(kappa, s_minus), _a_from_s(kappa, s_plus)


def a_bounds_rootfind(kappa: float, xtol: float = 1e-14) -> tuple[float, float]:
    """Same as :func:`a_bounds` but by bracketing ``s_star(a) = s_pm`` numerically."""
    from scipy.optimize import brentq

    kappa = check_kappa(kappa)
    s_minus, s_plus = s_bounds(kappa)
    amax = _a_max(kappa)
    hi = amax * (1.0 - 1e-15)
    lo = -1.0
    while s_star(kappa, lo) > s_minus:
        lo *= 2.0
    a_lo = brentq(lambda a: s_star(kappa, a) - s_minus, lo, 0.0, xtol=xtol, rtol=1e-15)
    a_hi = brentq(lambda a: s_star(kappa, a) - s_plus, 0.0, hi, xtol=xtol, rtol=1e-15)
    return a_lo, a_hi


def ims_star(kappa: float, a):
    """Almost sure bulk integral means spectrum (three-branch, continuous at ``a_pm``)."""
    kappa = check_kappa(kappa)
    a = _arr(a)
    s_minus, s_plus = s_bounds(kappa)
    a_minus, a_plus = a_bounds(kappa)
    k4 = 4.0 + kappa
    mid = a.copy()
    inside = (a >= a_minus) & (a <= a_plus)
    if np.any(inside):
        am = a[inside]
        mid[inside] = -am + k4 * (k4 - np.sqrt(k4**2 - 8.0 * am * kappa)) / (4.0 * kappa)
    out = np.where(a < a_minus, -1.0 + s_minus * a, np.where(a > a_plus, -1.0 + s_plus * a, mid))
    return _out(out)


def central_charge(kappa: float) -> float:
    kappa = check_kappa(kappa)
    return (6.0 - kappa) * (6.0 - 16.0 / kappa) / 4.0


def duplantier_f(kappa: float, alpha_hm):
    """Duplantier's harmonic measure spectrum ``f(alpha)`` for ``alpha > 1/2``."""
    c = central_charge(kappa)
    x = _arr(alpha_hm)
    _require(x > 0.5, "duplantier_f requires alpha > 1/2")
    y = 2.0 * x - 1.0
    return _out(x + (25.0 - c) / 24.0 * (1.0 - 0.5 * (y + 1.0 / y)))


def coupling_constants(kappa: float) -> tuple[float, float, float]:
    """``(Q, chi, lambda_c)`` of the GFF couplings."""
    kappa = check_kappa(kappa)
    rk = math.sqrt(kappa)
    return 2.0 / rk + rk / 2.0, 2.0 / rk - rk / 2.0, math.pi / rk


def bessel_beta(kappa: float, rho: float) -> float:
    """Exponent of the stationary ``sin^beta`` density of the angle process."""
    kappa = check_kappa(kappa)
    return (8.0 - 2.0 * rho) / kappa


@dataclass(frozen=True)
class ExponentSet:
    kappa: float
    s_minus: float
    s_plus: float
    a_minus: float
    a_plus: float


def exponent_set(kappa: float) -> ExponentSet:
    s_minus, s_plus = s_bounds(kappa)
    a_minus, a_plus = a_bounds(kappa)
    return ExponentSet(float(kappa), s_minus, s_plus, a_minus, a_plus)
