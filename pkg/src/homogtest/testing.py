"""Level-alpha calibration, test decisions and Monte Carlo level/power estimates.

Under the null, xi is standard normal and Xi^2 is chi-square with two
degrees of freedom, and each limit statistic is monotone in its variable
(case 1 increasing in xi for beta0 > 0, case 2 increasing in |xi|, case 3
increasing in Xi). Thresholds therefore follow from normal and chi-square
quantiles pushed through the statistic.

Two statistic scales exist. ``"asymptotic"`` compares the limit formula at
the observed xi / Xi with thresholds on that formula's scale. ``"exact"``
compares the finite-sample ratio L(X^n) with thresholds taken from the limit
of L(X^n) itself (see :func:`homogtest.asymptotics.exact_scale_limit`); for
case 2 that limit is one-sided in xi, so the exact-mode test is one-sided.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Literal, Optional

import numpy as np

from .asymptotics import (
    Case1,
    Case2,
    Case3,
    CaseSpec,
    asymptotic_L,
    exact_scale_limit,
    statistic_variable,
)
from .errors import DomainError
from .exact import marginal_L
from .numerics import bisect, chi2_2_upper_quantile, normal_quantile
from .sampling import (
    Sample,
    StreamKey,
    SufficientStats,
    _open_uniforms,
    sample_alternative_prior,
    sample_mixture,
    sample_null,
    sufficient_stats,
)

__all__ = [
    "TestReport",
    "McEstimate",
    "critical_statistic",
    "calibrate_threshold",
    "calibrate_threshold_mc",
    "level_for_threshold",
    "run_test",
    "estimate_level",
    "estimate_power",
]

Mode = Literal["asymptotic", "exact"]
_MODES = ("asymptotic", "exact")


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class

    case: CaseSpec
    n: int
    statistic_mode: str
    stat_value: float
    threshold: float
    nominal_level: float
    decision: str
    stats: SufficientStats
    xi_equivalent: Optional[float] = None

    def __post_init__(self):
        expected = "reject_null" if self.stat_value > self.threshold else "retain_null"
        if self.decision != expected:
            raise DomainError(f"decision {self.decision!r} inconsistent with statistic")

    @property
    def rejected(self) -> bool:
        return self.decision == "reject_null"

    def as_dict(self) -> dict:
        return {
            "case": self.case.name,
            "hyper": self.case.hyper,
            "n": self.n,
            "statistic_mode": self.statistic_mode,
            "stat_value": self.stat_value,
            "threshold": self.threshold,
            "nominal_level": self.nominal_level,
            "decision": self.decision,
            "stats": self.stats.as_dict(),
            "xi_equivalent": self.xi_equivalent,
        }


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    se: float
    reps: int
    seed: int

    @classmethod
    def from_count(cls, hits: int, reps: int, seed: int) -> "McEstimate":
        p = hits / reps
        return cls(p_hat=p, se=math.sqrt(p * (1.0 - p) / reps), reps=reps, seed=seed)

    def as_dict(self) -> dict:
        return asdict(self)


def _check_level(level: float) -> float:
    level = float(level)
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level!r}")
    return level


def _check_mode(mode: str) -> str:
    if mode not in _MODES:
        raise DomainError(f"mode must be one of {_MODES}, got {mode!r}")
    return mode


def _scale_fn(mode: str):
    return asymptotic_L if mode == "asymptotic" else exact_scale_limit


def _two_sided(case: CaseSpec, mode: str) -> bool:
    return isinstance(case, Case2) and mode == "asymptotic"


def critical_statistic(case: CaseSpec, level: float, mode: Mode = "asymptotic") -> float:
    """Null quantile of xi (or Xi) beyond which the test rejects."""
    level = _check_level(level)
    _check_mode(mode)
    if isinstance(case, Case3):
        return math.sqrt(chi2_2_upper_quantile(level))
    if _two_sided(case, mode):
        return normal_quantile(1.0 - 0.5 * level)
    z = normal_quantile(1.0 - level)
    if isinstance(case, Case1) and case.beta0 < 0:
        return -z
    return z


def calibrate_threshold(case: CaseSpec, level: float, mode: Mode = "asymptotic") -> float:
    """Threshold t with asymptotic null probability ``level`` of L > t."""
    return float(_scale_fn(mode)(case, critical_statistic(case, level, mode)))


def _null_stat_draws(case: CaseSpec, draws: int, seed: int) -> np.ndarray:
    rng = StreamKey(seed, 0).generator()
    if isinstance(case, Case3):
        u = _open_uniforms(rng, 2 * draws).reshape(2, draws)
        xi, eta = normal_quantile(u[0]), normal_quantile(u[1])
        return np.hypot(xi, eta)
    return np.asarray(normal_quantile(_open_uniforms(rng, draws)))


def calibrate_threshold_mc(case: CaseSpec, level: float, draws: int, seed: int,
                           mode: Mode = "asymptotic") -> float:
    """Empirical (1 - level) quantile of the statistic under simulated null draws.

    Independent of the quantile-function route in :func:`calibrate_threshold`:
    the statistic is evaluated at every draw and the sample quantile taken.
    """
    level = _check_level(level)
    _check_mode(mode)
    if int(draws) != draws or draws < 100:
        raise DomainError("draws must be an integer >= 100")
    values = np.asarray(_scale_fn(mode)(case, _null_stat_draws(case, int(draws), seed)))
    return float(np.quantile(values, 1.0 - level))


def level_for_threshold(case: CaseSpec, threshold: float, mode: Mode = "asymptotic",
                        bound: float = 40.0) -> float:
    """Asymptotic null probability that the statistic exceeds ``threshold``.

    Inverts the monotone statistic by bisection on ``[-bound, bound]`` (or
    ``[0, bound]`` for Xi) and reads off the normal / chi-square tail.
    """
    _check_mode(mode)
    fn = _scale_fn(mode)

    def g(s):
        return float(fn(case, s))

    if isinstance(case, Case3):
        lo, hi = 0.0, bound
    elif _two_sided(case, mode):
        lo, hi = 0.0, bound
    else:
        lo, hi = -bound, bound
    sign = -1.0 if isinstance(case, Case1) and case.beta0 < 0 else 1.0
    g_lo, g_hi = g(sign * lo), g(sign * hi)
    if threshold < g_lo:
        return 1.0
    if threshold >= g_hi:
        return 0.0
    s = bisect(lambda v: g(sign * v), lo, hi, threshold)
    if isinstance(case, Case3):
        return math.exp(-0.5 * s * s)
    if _two_sided(case, mode):
        return math.erfc(s / math.sqrt(2.0))
    return 0.5 * math.erfc(s / math.sqrt(2.0))


def _decide(stat_value: float, threshold: float) -> str:
    return "reject_null" if stat_value > threshold else "retain_null"


def run_test(sample: Sample, case: CaseSpec, level: float, mode: Mode = "asymptotic",
             threshold: Optional[float] = None) -> TestReport:
    """Test homogeneity of ``sample`` against the alternative of ``case``.

    ``threshold`` overrides calibration, e.g. to reuse a precomputed value.
    """
    level = _check_level(level)
    _check_mode(mode)
    stats = sufficient_stats(sample)
    var = statistic_variable(case, stats)
    if mode == "asymptotic":
        value = float(asymptotic_L(case, var))
    else:
        value = marginal_L(sample, case)
    if threshold is None:
        threshold = calibrate_threshold(case, level, mode)
    return TestReport(
        case=case,
        n=sample.n,
        statistic_mode=mode,
        stat_value=value,
        threshold=float(threshold),
        nominal_level=level,
        decision=_decide(value, threshold),
        stats=stats,
        xi_equivalent=float(var),
    )


def _statistic_values(samples, case: CaseSpec, mode: str) -> np.ndarray:
    if mode == "exact":
        return np.array([marginal_L(s, case) for s in samples])
    var = np.array([statistic_variable(case, sufficient_stats(s)) for s in samples])
    return np.atleast_1d(asymptotic_L(case, var))


def _run_reps(make_sample, reps: int, case: CaseSpec, mode: str, workers: int) -> np.ndarray:
    def chunk(bounds):
        start, stop = bounds
        return _statistic_values([make_sample(r) for r in range(start, stop)], case, mode)

    size = max(1, math.ceil(reps / max(1, workers)))
    spans = [(s, min(reps, s + size)) for s in range(0, reps, size)]
    if workers <= 1:
        parts = [chunk(sp) for sp in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(chunk, spans))
    return np.concatenate(parts)


def _check_reps(reps) -> int:
    if int(reps) != reps or reps < 100:
        raise DomainError("reps must be an integer >= 100")
    return int(reps)


def estimate_level(case: CaseSpec, n: int, level: float, reps: int, seed: int,
                   mode: Mode = "asymptotic", threshold: Optional[float] = None,
                   workers: int = 1) -> McEstimate:
    """Fraction of null samples on which the test rejects.

    Replication r draws its sample from stream r of ``seed``, so the result
    does not depend on ``workers``.
    """
    level = _check_level(level)
    _check_mode(mode)
    reps = _check_reps(reps)
    if threshold is None:
        threshold = calibrate_threshold(case, level, mode)
    values = _run_reps(lambda r: sample_null(n, StreamKey(seed, r)), reps, case, mode, workers)
    return McEstimate.from_count(int(np.count_nonzero(values > threshold)), reps, seed)


def estimate_power(case: CaseSpec, n: int, level: float, reps: int, seed: int,
                   mode: Mode = "asymptotic", threshold: Optional[float] = None,
                   workers: int = 1) -> McEstimate:
    """Fraction of alternative samples on which the test rejects.

    Replication r draws (a, b, c) from the case's prior on stream 2r and the
    data from stream 2r + 1.
    """
    level = _check_level(level)
    _check_mode(mode)
    reps = _check_reps(reps)
    if threshold is None:
        threshold = calibrate_threshold(case, level, mode)

    def make(r):
        params = sample_alternative_prior(case, n, StreamKey(seed, 2 * r))
        return sample_mixture(n, params, StreamKey(seed, 2 * r + 1))

    values = _run_reps(make, reps, case, mode, workers)
    return McEstimate.from_count(int(np.count_nonzero(values > threshold)), reps, seed)
