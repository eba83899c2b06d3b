"""Special functions, quantiles, adaptive quadrature and bisection.

Everything here is a pure function. The special functions are thin, domain
checked wrappers around :mod:`scipy.special`; the quadrature is a small
vector-valued adaptive Gauss-Kronrod scheme so that a whole array of
statistic values can be pushed through one adaptive run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import BracketError, ConvergenceError, DomainError

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUADRATURE",
    "erf",
    "log_bessel_i0",
    "log_cosh",
    "normal_cdf",
    "normal_quantile",
    "chi2_2_upper_quantile",
    "integrate",
    "bisect",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`integrate`.

    ``max_subdivisions`` bounds the number of interval bisections performed
    by the adaptive driver.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 60

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be a positive integer")


DEFAULT_QUADRATURE = QuadratureSpec()


def _finite(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _unwrap(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def erf(x):
    """Error function, accepting scalars or arrays."""
    return _unwrap(special.erf(_finite(x)))


def log_bessel_i0(x):
    """Natural log of the modified Bessel function I0 for ``x >= 0``.

    Evaluated as ``log(i0e(x)) + x`` so it stays finite far beyond the point
    where I0 itself overflows.
    """
    arr = _finite(x)
    if np.any(arr < 0):
        raise DomainError("log_bessel_i0 requires x >= 0")
    return _unwrap(np.log(special.i0e(arr)) + arr)


def log_cosh(x):
    """log(cosh(x)) without overflow."""
    ax = np.abs(np.asarray(x, dtype=float))
    return _unwrap(ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0))


def normal_cdf(x):
    return _unwrap(special.ndtr(_finite(x)))


def normal_quantile(p):
    """Inverse of the standard normal CDF on the open interval (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0) & (arr < 1)):
        raise DomainError("normal_quantile requires 0 < p < 1")
    return _unwrap(special.ndtri(arr))


def chi2_2_upper_quantile(alpha):
    """Upper-``alpha`` quantile of chi-square with two degrees of freedom.

    The survival function is ``exp(-x/2)``, so the quantile is ``-2 log(alpha)``.
    """
    arr = np.asarray(alpha, dtype=float)
    if not np.all((arr > 0) & (arr < 1)):
        raise DomainError("chi2_2_upper_quantile requires 0 < alpha < 1")
    return _unwrap(-2.0 * np.log(arr))


# 21-point Kronrod extension of the 10-point Gauss-Legendre rule (QUADPACK qk21).
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208932299624,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(21)
_GAUSS_W[1:10:2] = _WG
_GAUSS_W[11:20:2] = _WG[::-1]


def _smoothstep(s):
    # Quintic map [0,1] -> [0,1] with vanishing first and second derivatives at
    # both ends; absorbs integrable power and log singularities at the endpoints.
    x = s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    dx = 30.0 * s * s * (1.0 - s) * (1.0 - s)
    return x, dx


def _gk21(g, a: float, b: float):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = np.asarray(g(mid + half * _NODES))
    kron = half * np.tensordot(_KRONROD_W, vals, axes=(0, 0))
    gauss = half * np.tensordot(_GAUSS_W, vals, axes=(0, 0))
    return kron, np.abs(kron - gauss)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[lo, hi]``.

    Parameters
    ----------
    f : callable
        Vectorised integrand. Called with a 1-D array of nodes of length k and
        must return an array whose leading axis has length k; trailing axes are
        integrated componentwise, so one call can integrate a whole family.
    lo, hi : float
        Finite limits with ``lo < hi``. ``f`` is never evaluated at the limits
        themselves, and integrable endpoint singularities are tolerated.
    spec : QuadratureSpec
        Every component must satisfy ``err <= max(abs_tol, rel_tol * |I|)``.

    Returns
    -------
    float or ndarray
        The integral, shaped like the trailing axes of ``f``'s output.

    Raises
    ------
    ConvergenceError
        If the tolerance is not met after ``spec.max_subdivisions`` bisections.
        The best estimate is attached to the exception.
    """
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise DomainError("integrate requires finite limits with lo < hi")
    width = hi - lo

    def g(s):
        x, dx = _smoothstep(s)
        vals = np.asarray(f(lo + width * x), dtype=float)
        w = width * dx
        return vals * w.reshape((-1,) + (1,) * (vals.ndim - 1))

    pieces = [(0.0, 1.0, *_gk21(g, 0.0, 1.0))]
    for _ in range(int(spec.max_subdivisions) + 1):
        total = np.sum([p[2] for p in pieces], axis=0)
        error = np.sum([p[3] for p in pieces], axis=0)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if not np.all(np.isfinite(total)):
            raise ConvergenceError("integrand produced non-finite values", _unwrap(total))
        if np.all(error <= tol):
            return _unwrap(total)
        if len(pieces) > spec.max_subdivisions:
            break
        worst = int(np.argmax([np.max(p[3] / tol) for p in pieces]))
        a, b, _, _ = pieces.pop(worst)
        m = 0.5 * (a + b)
        pieces[worst:worst] = [(a, m, *_gk21(g, a, m)), (m, b, *_gk21(g, m, b))]
    raise ConvergenceError(
        f"quadrature did not converge within {spec.max_subdivisions} subdivisions "
        f"(max error {float(np.max(error)):.3g})",
        _unwrap(total),
    )


def bisect(g: Callable[[float], float], lo: float, hi: float, target: float,
           max_iter: int = 200) -> float:
    """Solve ``g(x) = target`` for monotone ``g`` on ``[lo, hi]``.

    Stops once ``|g(x) - target| <= 1e-10 * max(1, |target|)`` or the bracket
    has collapsed to adjacent floats.
    """
    tol = 1e-10 * max(1.0, abs(target))
    g_lo, g_hi = g(lo) - target, g(hi) - target
    if abs(g_lo) <= tol:
        return lo
    if abs(g_hi) <= tol:
        return hi
    if g_lo * g_hi > 0:
        raise BracketError(f"target {target!r} not bracketed by g on [{lo}, {hi}]")
    increasing = g_hi > 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        g_mid = g(mid) - target
        if abs(g_mid) <= tol:
            return mid
        if (g_mid > 0) == increasing:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
