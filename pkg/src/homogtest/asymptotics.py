"""Limit distributions of the marginal likelihood ratio.

Three alternative priors are covered, each shrinking toward the null at the
critical n^-1/2 rate:

* ``Case1(beta0)``: mixture ratio a ~ U(0, 1), mean fixed at beta0 / sqrt(n).
* ``Case2(B0)``:    a ~ U(0, 1), mean b ~ U(0, B0 / sqrt(n)).
* ``Case3(R0)``:    a ~ U(0, 1), (b, c) uniform on the ellipse
  b^2 + (c - 1)^2 / 2 <= R0^2 / n.

In the limit the ratio depends on the data only through ``xi`` (cases 1 and
2) or ``Xi`` (case 3). All statistic functions accept scalars or arrays and
return the matching shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .errors import DomainError
from .numerics import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    _finite,
    _unwrap,
    integrate,
    log_bessel_i0,
    log_cosh,
)

__all__ = [
    "Case1",
    "Case2",
    "Case3",
    "CaseSpec",
    "case_from_name",
    "case1_L_closed",
    "case1_L_integral",
    "case2_L",
    "case2_L_one_sided",
    "case3_L",
    "log_bayes_factor",
    "case2_L_scaled",
    "rlct_correspondence",
    "kl_leading",
    "statistic_variable",
    "asymptotic_L",
    "exact_scale_limit",
]


def _positive(value: float, name: str) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class Case1:
    """Only the mixture ratio is unknown; the shifted mean is beta0 / sqrt(n)."""

    beta0: float
    name = "ratio"

    def __post_init__(self):
        if not (math.isfinite(self.beta0) and self.beta0 != 0):
            raise DomainError("beta0 must be a nonzero finite number")

    @property
    def hyper(self) -> float:
        return self.beta0


@dataclass(frozen=True)
class Case2:
    """Mixture ratio and mean unknown; b ~ U(0, B0 / sqrt(n))."""

    B0: float
    name = "ratio-mean"

    def __post_init__(self):
        _positive(self.B0, "B0")

    @property
    def hyper(self) -> float:
        return self.B0


@dataclass(frozen=True)
class Case3:
    """Mixture ratio, mean and variance unknown; (b, c) uniform on an ellipse of radius R0."""

    R0: float
    name = "full"

    def __post_init__(self):
        _positive(self.R0, "R0")

    @property
    def hyper(self) -> float:
        return self.R0


CaseSpec = Union[Case1, Case2, Case3]

_CASES = {"ratio": Case1, "ratio-mean": Case2, "full": Case3}


def case_from_name(name: str, hyper: float) -> CaseSpec:
    try:
        cls = _CASES[name]
    except KeyError:
        raise DomainError(f"unknown case {name!r}; expected one of {sorted(_CASES)}") from None
    return cls(float(hyper))


# -- Case 1 -----------------------------------------------------------------

def case1_L_closed(xi, beta0: float):
    """Closed erf form of the case-1 limit.

    ``sqrt(2 pi) / (2 beta0) * [erf((beta0 - xi)/sqrt 2) + erf(xi/sqrt 2)] * exp(xi^2 / 2)``,
    rewritten with the scaled complementary error function so that neither
    the bracket nor the exponential lose precision for large ``|xi|``.
    """
    beta0 = float(beta0)
    if not math.isfinite(beta0) or beta0 == 0:
        raise DomainError("beta0 must be nonzero; the beta0 -> 0 limit is 1")
    x = _finite(xi, "xi")
    # The integrand exp(-b^2 a^2/2 + b x a) is invariant under (b, x) -> (-b, -x).
    if beta0 < 0:
        x, beta0 = -x, -beta0
    r2 = math.sqrt(2.0)
    # Both branches are evaluated; only the selected one is finite everywhere.
    with np.errstate(over="ignore", invalid="ignore"):
        tilt = np.exp(beta0 * x - 0.5 * beta0 * beta0)
        upper = special.erfcx((x - beta0) / r2) * tilt - special.erfcx(x / r2)
        lower = special.erfcx(-x / r2) - special.erfcx((beta0 - x) / r2) * tilt
    bracket = np.where(x >= 0.5 * beta0, upper, lower)
    return _unwrap(math.sqrt(2.0 * math.pi) / (2.0 * beta0) * bracket)


def case1_L_integral(xi, beta0: float, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Quadrature of int_0^1 exp(-beta0^2 a^2 / 2 + beta0 xi a) da."""
    beta0 = float(beta0)
    if not math.isfinite(beta0) or beta0 == 0:
        raise DomainError("beta0 must be nonzero")
    x = np.atleast_1d(_finite(xi, "xi"))

    def f(a):
        return np.exp(-0.5 * (beta0 * a[:, None]) ** 2 + beta0 * np.outer(a, x))

    out = integrate(f, 0.0, 1.0, spec)
    return _unwrap(np.reshape(out, np.shape(xi)))


# -- Case 2 -----------------------------------------------------------------

def case2_L(xi, B0: float, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Case-2 limit, even in ``xi``.

    Evaluated after t = u^2 as
    ``(2/B0) int_0^B0 log(B0/u) exp(-u^2/2) cosh(xi u) du`` with cosh taken in
    the log domain. Tends to 2 as B0 -> 0.
    """
    B0 = _positive(B0, "B0")
    x = np.atleast_1d(_finite(xi, "xi"))

    def f(u):
        weight = (2.0 / B0) * np.log(B0 / u)
        return weight[:, None] * np.exp(log_cosh(np.outer(u, x)) - 0.5 * (u * u)[:, None])

    out = integrate(f, 0.0, B0, spec)
    return _unwrap(np.reshape(out, np.shape(xi)))


def case2_L_one_sided(xi, B0: float, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Limit of the exact case-2 ratio before symmetrisation in ``xi``.

    ``(1/B0) int_0^B0 log(B0/t) exp(-t^2/2 + xi t) dt``, which equals the
    double integral over the U(0,1) x U(0, B0) prior. It is increasing in
    ``xi`` and tends to 1 as B0 -> 0; ``case2_L`` is twice its even part.
    """
    B0 = _positive(B0, "B0")
    x = np.atleast_1d(_finite(xi, "xi"))

    def f(t):
        weight = np.log(B0 / t) / B0
        return weight[:, None] * np.exp(np.outer(t, x) - 0.5 * (t * t)[:, None])

    out = integrate(f, 0.0, B0, spec)
    return _unwrap(np.reshape(out, np.shape(xi)))


def log_bayes_factor(L):
    """F = -log L."""
    arr = np.asarray(L, dtype=float)
    if not np.all(arr > 0):
        raise DomainError("log_bayes_factor requires L > 0")
    return _unwrap(-np.log(arr))


def case2_L_scaled(xi, B0: float, n: int, alpha: float,
                   spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Case-2 statistic when the mean prior shrinks like n^-alpha instead of n^-1/2.

    With the same 1/(2 sqrt t) normalisation as ``case2_L`` the whole effect
    of the scaling is the effective width B0 * n^(1/2 - alpha), so
    ``alpha = 1/2`` returns ``case2_L`` exactly.
    """
    alpha = float(alpha)
    if not 0 < alpha <= 0.5:
        raise DomainError("alpha must lie in (0, 1/2]")
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    B0 = _positive(B0, "B0")
    return case2_L(xi, B0 * float(n) ** (0.5 - alpha), spec)


def rlct_correspondence(alpha: float) -> tuple[float, float]:
    """(lambda, m) = (1/2 - alpha, 2 - 2 alpha) for the n^-alpha prior scaling."""
    alpha = float(alpha)
    if not 0 < alpha <= 0.5:
        raise DomainError("alpha must lie in (0, 1/2]")
    return 0.5 - alpha, 2.0 - 2.0 * alpha


def kl_leading(a: float, b: float) -> float:
    """Leading-order KL(null || mixture at (a, b, c=1)) = a^2 b^2 / 2."""
    if not 0.0 <= a <= 1.0:
        raise DomainError("a must lie in [0, 1]")
    return 0.5 * a * a * b * b


# -- Case 3 -----------------------------------------------------------------

def case3_L(Xi, R0: float, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Case-3 limit, increasing in ``Xi``.

    Evaluated after t = u^2 as
    ``(1/R0^2) int_0^R0 (R0 - u) exp(-u^2/2) I0(u Xi) du``, using log I0.
    Tends to 1/2 as R0 -> 0.
    """
    R0 = _positive(R0, "R0")
    X = np.atleast_1d(_finite(Xi, "Xi"))
    if np.any(X < 0):
        raise DomainError("Xi must be nonnegative")

    def f(u):
        weight = (R0 - u) / (R0 * R0)
        return weight[:, None] * np.exp(log_bessel_i0(np.outer(u, X)) - 0.5 * (u * u)[:, None])

    out = integrate(f, 0.0, R0, spec)
    return _unwrap(np.reshape(out, np.shape(Xi)))


# -- dispatch ---------------------------------------------------------------

def statistic_variable(case: CaseSpec, stats) -> float:
    """The scalar the limit depends on: xi for cases 1-2, Xi for case 3."""
    return stats.Xi if isinstance(case, Case3) else stats.xi


def asymptotic_L(case: CaseSpec, stat, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Limit statistic for ``case`` evaluated at ``stat`` (xi or Xi)."""
    if isinstance(case, Case1):
        return case1_L_closed(stat, case.beta0)
    if isinstance(case, Case2):
        return case2_L(stat, case.B0, spec)
    if isinstance(case, Case3):
        return case3_L(stat, case.R0, spec)
    raise DomainError(f"unknown case {case!r}")


def exact_scale_limit(case: CaseSpec, stat, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Large-n limit of the exact marginal likelihood ratio itself.

    Differs from :func:`asymptotic_L` in normalisation: for case 2 it is the
    one-sided integral (the prior only covers b > 0), and for case 3 it is
    ``2 * case3_L`` because the angular average of exp(x sin theta) is I0(x).
    Case 1 is unchanged.
    """
    if isinstance(case, Case1):
        return case1_L_closed(stat, case.beta0)
    if isinstance(case, Case2):
        return case2_L_one_sided(stat, case.B0, spec)
    if isinstance(case, Case3):
        return _unwrap(2.0 * np.asarray(case3_L(stat, case.R0, spec)))
    raise DomainError(f"unknown case {case!r}")
