"""Finite-sample marginal likelihood ratio L(X^n) by tensor quadrature.

All three priors put a ~ U(0, 1) on the mixture ratio and some distribution
on (b, c). ``log_marginal_over_nodes`` takes that (b, c) distribution as a
weighted node set, integrates a with Gauss-Legendre, and works in the log
domain throughout (the grid maximum of the log likelihood ratio is shifted
out before exponentiating).
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from .asymptotics import Case1, Case2, Case3, CaseSpec
from .errors import ConvergenceError, DomainError
from .sampling import Sample

__all__ = [
    "log_density_ratio",
    "log_likelihood_ratio_case1",
    "log_marginal_over_nodes",
    "log_marginal_L",
    "marginal_L",
    "marginal_L_case1",
    "marginal_L_case2",
    "marginal_L_case3",
    "surrogate_L_case3",
]

REL_TOL = 1e-6
MAX_DOUBLINGS = 3
_BLOCK_ELEMENTS = 2_000_000


def _unit_gauss(order: int, lo: float = 0.0, hi: float = 1.0):
    x, w = leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _log_shift(x: np.ndarray, b, c) -> np.ndarray:
    """log(sqrt(c) exp(g(x, b, c))) for every (node, observation) pair."""
    b = np.asarray(b, dtype=float)[:, None]
    c = np.asarray(c, dtype=float)[:, None]
    return 0.5 * np.log(c) - 0.5 * (c - 1.0) * x * x + b * c * x - 0.5 * b * b * c


def _log_mix(z: np.ndarray, a: float) -> np.ndarray:
    """log((1 - a) + a exp(z)), accurate for small a*z and free of overflow for large z."""
    if a == 0.0:
        return np.zeros_like(z)
    out = np.log1p(a * np.expm1(np.minimum(z, 1.0)))
    big = z > 1.0
    if np.any(big):
        out[big] = np.logaddexp(math.log1p(-a) if a < 1 else -np.inf, math.log(a) + z[big])
    return out


def log_density_ratio(x, a: float, b: float, c: float) -> np.ndarray:
    """Per-observation log p(x | a, b, c) / p(x | 0, 0, 1)."""
    if not 0.0 <= a <= 1.0:
        raise DomainError("a must lie in [0, 1]")
    if not c > 0:
        raise DomainError("c must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if a == 0.0:
        return np.zeros_like(x)
    return _log_mix(_log_shift(x, [b], [c])[0], a)


def log_likelihood_ratio_case1(sample: Sample, a: float, beta: float) -> float:
    """H(a) = sum_i log{(1 - a) + a exp(beta X_i - beta^2 / 2)}."""
    if not 0.0 <= a <= 1.0:
        raise DomainError("a must lie in [0, 1]")
    if a == 0.0 or beta == 0.0:
        return 0.0
    z = beta * sample.values - 0.5 * beta * beta
    return float(np.sum(_log_mix(z, a)))


def _grid_log_marginal(x, b, c, log_w, a_nodes, a_log_w) -> float:
    block = max(1, _BLOCK_ELEMENTS // x.size)
    H = np.empty((a_nodes.size, b.size))
    for start in range(0, b.size, block):
        stop = start + block
        z = _log_shift(x, b[start:stop], c[start:stop])
        for k, a in enumerate(a_nodes):
            H[k, start:stop] = _log_mix(z, a).sum(axis=1)
    # logsumexp subtracts the grid maximum before exponentiating.
    return float(logsumexp(H + a_log_w[:, None] + log_w[None, :]))


def log_marginal_over_nodes(sample: Sample, b, c, weights, a_order: int = 32) -> float:
    """log of sum_j w_j int_0^1 exp(sum_i f(X_i, a, b_j, c_j)) da.

    ``weights`` are the prior masses of the (b_j, c_j) nodes and should sum
    to one. A single node with weight 1 gives a point-mass prior on (b, c).
    """
    b = np.atleast_1d(np.asarray(b, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if not (b.shape == c.shape == w.shape):
        raise DomainError("b, c and weights must have the same shape")
    if np.any(c <= 0):
        raise DomainError("c must be positive at every node")
    a_nodes, a_w = _unit_gauss(a_order)
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    return _grid_log_marginal(sample.values, b, c, log_w, a_nodes, np.log(a_w))


def _refine(evaluate, orders: tuple[int, ...]) -> float:
    """Double every grid order until log L moves by less than REL_TOL."""
    previous = evaluate(*orders)
    for _ in range(MAX_DOUBLINGS):
        orders = tuple(2 * o for o in orders)
        current = evaluate(*orders)
        if abs(current - previous) <= REL_TOL:
            return current
        previous = current
    raise ConvergenceError(
        f"marginal likelihood grid not converged at orders {orders}", math.exp(previous)
    )


def _case1_log(sample: Sample, beta0: float, order: int) -> float:
    beta = beta0 / math.sqrt(sample.n)
    return log_marginal_over_nodes(sample, [beta], [1.0], [1.0], a_order=order)


def _case2_log(sample: Sample, B0: float, a_order: int, b_order: int) -> float:
    B = B0 / math.sqrt(sample.n)
    b, wb = _unit_gauss(b_order, 0.0, B)
    return log_marginal_over_nodes(sample, b, np.ones_like(b), wb / B, a_order=a_order)


def _case3_nodes(n: int, R0: float, r_order: int, t_order: int):
    R = R0 / math.sqrt(n)
    r, wr = _unit_gauss(r_order, 0.0, R)
    # Trapezoid in theta is spectrally accurate for periodic integrands.
    theta = 2.0 * math.pi * (np.arange(t_order) + 0.5) / t_order
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    w = np.outer(2.0 * r * wr / (R * R), np.full(t_order, 1.0 / t_order))
    return rr.ravel(), tt.ravel(), w.ravel()


def _check_case3_domain(n: int, R0: float) -> None:
    if math.sqrt(2.0) * R0 / math.sqrt(n) >= 1.0:
        raise DomainError(
            f"ellipse prior reaches c <= 0 at n={n}, R0={R0}; need sqrt(2) R0 / sqrt(n) < 1"
        )


def _case3_log(sample: Sample, R0: float, a_order: int, r_order: int, t_order: int) -> float:
    r, theta, w = _case3_nodes(sample.n, R0, r_order, t_order)
    b = r * np.cos(theta)
    c = 1.0 + math.sqrt(2.0) * r * np.sin(theta)
    return log_marginal_over_nodes(sample, b, c, w, a_order=a_order)


def log_marginal_L(sample: Sample, case: CaseSpec) -> float:
    """log L(X^n) for the alternative prior of ``case``."""
    if isinstance(case, Case1):
        return _refine(lambda o: _case1_log(sample, case.beta0, o), (32,))
    if isinstance(case, Case2):
        return _refine(lambda oa, ob: _case2_log(sample, case.B0, oa, ob), (16, 16))
    if isinstance(case, Case3):
        _check_case3_domain(sample.n, case.R0)
        return _refine(
            lambda oa, orr, ot: _case3_log(sample, case.R0, oa, orr, ot), (16, 8, 16)
        )
    raise DomainError(f"unknown case {case!r}")


def marginal_L(sample: Sample, case: CaseSpec) -> float:
    return math.exp(log_marginal_L(sample, case))


def marginal_L_case1(sample: Sample, beta0: float) -> float:
    """L(X^n) = int_0^1 exp(H(a)) da with beta = beta0 / sqrt(n)."""
    return marginal_L(sample, Case1(beta0))


def marginal_L_case2(sample: Sample, B0: float) -> float:
    """L(X^n) over a ~ U(0, 1), b ~ U(0, B0 / sqrt(n)), c = 1."""
    return marginal_L(sample, Case2(B0))


def marginal_L_case3(sample: Sample, R0: float) -> float:
    """L(X^n) over a ~ U(0, 1) and (b, c) uniform on the radius-R0/sqrt(n) ellipse.

    Integrated in polar form b = r cos(theta), c = 1 + sqrt(2) r sin(theta).
    Raises DomainError when the ellipse reaches c <= 0.
    """
    return marginal_L(sample, Case3(R0))


def surrogate_L_case3(xi: float, eta: float, n: int, R0: float,
                      orders: tuple[int, int, int] = (32, 32, 64)) -> float:
    """Case-3 ratio with the log likelihood replaced by its quadratic expansion.

    Uses -(n/2) a^2 r^2 + sqrt(n) a r (xi cos(theta) + eta sin(theta)) on the
    same polar grid as ``marginal_L_case3``; depends on (xi, eta) only
    through their radius.
    """
    a_order, r_order, t_order = orders
    r, theta, w = _case3_nodes(n, R0, r_order, t_order)
    a, wa = _unit_gauss(a_order)
    ar = np.outer(a, r)
    H = -0.5 * n * ar * ar + math.sqrt(n) * ar * (xi * np.cos(theta) + eta * np.sin(theta))
    return float(math.exp(logsumexp(H + np.log(wa)[:, None] + np.log(w)[None, :])))
