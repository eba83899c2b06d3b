"""Seeded sample generation and the normalised moment statistics.

Random streams are keyed by ``(seed, stream)`` through the Philox
counter-based generator, so replication ``r`` of a Monte Carlo run always
sees the same numbers no matter how the replications are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DomainError
from .numerics import normal_quantile

__all__ = [
    "Sample",
    "SufficientStats",
    "MixtureParams",
    "StreamKey",
    "SampleFormatError",
    "sample_null",
    "sample_mixture",
    "sample_alternative_prior",
    "sufficient_stats",
    "read_sample",
    "write_sample",
    "parse_sample",
]

_U64 = 2**64


@dataclass(frozen=True, eq=False)
class Sample:
    """Ordered observations X_1..X_n."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size < 1:
            raise DomainError("a sample needs at least one observation")
        if not np.all(np.isfinite(vals)):
            raise DomainError("sample values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class SufficientStats:
    """xi = sum(X)/sqrt(n), eta = sum(X^2 - 1)/sqrt(2n) and their radius Xi."""

    xi: float
    eta: float
    Xi: float
    n: int

    def as_dict(self) -> dict:
        return {"xi": self.xi, "eta": self.eta, "Xi": self.Xi, "n": self.n}


@dataclass(frozen=True)
class MixtureParams:
    """Parameters of (1 - a) N(0, 1) + a N(b, 1/c)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0):
            raise DomainError(f"mixture ratio a={self.a} outside [0, 1]")
        if not math.isfinite(self.b):
            raise DomainError("mean b must be finite")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise DomainError(f"inverse variance c={self.c} must be positive")


@dataclass(frozen=True)
class StreamKey:
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v < _U64:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _open_uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    # 53-bit uniforms on the open interval (0, 1); one raw draw per variate.
    raw = rng.bit_generator.random_raw(size) >> np.uint64(11)
    return (raw.astype(float) + 0.5) * 2.0**-53


def _standard_normals(rng: np.random.Generator, size: int) -> np.ndarray:
    return np.atleast_1d(normal_quantile(_open_uniforms(rng, size)))


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n!r}")
    return int(n)


def sample_null(n: int, key: StreamKey) -> Sample:
    """n i.i.d. standard normal draws, deterministic given ``key``."""
    n = _check_n(n)
    return Sample(_standard_normals(key.generator(), n))


def sample_mixture(n: int, params: MixtureParams, key: StreamKey) -> Sample:
    """n draws from (1 - a) N(0, 1) + a N(b, 1/c).

    The n component coins are drawn first, then n normals, whatever ``a`` is.
    """
    n = _check_n(n)
    rng = key.generator()
    coins = _open_uniforms(rng, n)
    z = _standard_normals(rng, n)
    mixed = coins < params.a
    x = np.where(mixed, params.b + z / math.sqrt(params.c), z)
    return Sample(x)


def sample_alternative_prior(case, n: int, key: StreamKey) -> MixtureParams:
    """Draw (a, b, c) from the alternative prior of ``case`` at sample size n."""
    from .asymptotics import Case1, Case2, Case3

    n = _check_n(n)
    u = _open_uniforms(key.generator(), 3)
    a = float(u[0])
    root_n = math.sqrt(n)
    if isinstance(case, Case1):
        return MixtureParams(a, case.beta0 / root_n, 1.0)
    if isinstance(case, Case2):
        return MixtureParams(a, float(u[1]) * case.B0 / root_n, 1.0)
    if isinstance(case, Case3):
        # Area-uniform point on the ellipse b^2 + (c-1)^2 / 2 <= R0^2 / n.
        r = case.R0 / root_n * math.sqrt(u[1])
        theta = 2.0 * math.pi * u[2]
        c = 1.0 + math.sqrt(2.0) * r * math.sin(theta)
        if c <= 0:
            raise DomainError("ellipse prior reaches c <= 0; need sqrt(2) R0 / sqrt(n) < 1")
        return MixtureParams(a, r * math.cos(theta), c)
    raise DomainError(f"unknown case {case!r}")


def sufficient_stats(sample: Sample) -> SufficientStats:
    x = sample.values
    n = sample.n
    # fsum is exact-rounded, so the statistics do not depend on summation order.
    xi = math.fsum(x) / math.sqrt(n)
    eta = math.fsum(x * x - 1.0) / math.sqrt(2 * n)
    return SufficientStats(xi=xi, eta=eta, Xi=math.hypot(xi, eta), n=n)


class SampleFormatError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(message if lineno is None else f"line {lineno}: {message}")
        self.lineno = lineno


def parse_sample(lines: Iterable[str]) -> Sample:
    """Parse newline-delimited decimals, with an optional leading ``x`` header."""
    values = []
    seen_content = False
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if not seen_content and text == "x":
            seen_content = True
            continue
        seen_content = True
        try:
            v = float(text)
        except ValueError:
            raise SampleFormatError(f"cannot parse {text!r} as a number", lineno) from None
        if not math.isfinite(v):
            raise SampleFormatError(f"non-finite value {text!r}", lineno)
        values.append(v)
    if not values:
        raise SampleFormatError("no observations found")
    return Sample(np.array(values))


def read_sample(path) -> Sample:
    with open(Path(path), encoding="utf-8") as fh:
        return parse_sample(fh)


def write_sample(path, sample: Sample, header: bool = True) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        if header:
            fh.write("x\n")
        for v in sample.values:
            fh.write(f"{float(v)!r}\n")
