"""Proof-of-work delay distributions.

Each attaching transaction waits a random time drawn from one of these
distributions before it joins the ledger. The solvers need three things
from a distribution: a sampler, the CDF ``P(H <= v)``, and the running
integral of the CDF, ``integral_0^v P(H <= u) du``. All three are closed
form for the shipped variants; new distributions can be added by
subclassing :class:`DelayModel`.

Sampling is inverse-CDF throughout: one uniform draw maps to one delay,
which keeps trajectories reproducible no matter which kernel backend
consumes the draws.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


class DegenerateDelayError(ValueError):
    """Raised for zero-width delays: the equilibrium collapses to zero tips."""


def _check_age(v):
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0):
        raise ValueError("delay age must be nonnegative")
    return arr


class DelayModel(ABC):
    """A delay distribution with closed-form CDF and integrated CDF."""

    @abstractmethod
    def mean(self) -> float:
        """Expected delay; must be positive."""

    @abstractmethod
    def cdf(self, v):
        """P(H <= v) for v >= 0; scalar or elementwise on an array."""

    @abstractmethod
    def integrated_cdf(self, v):
        """integral_0^v P(H <= u) du, the exponent driving tip-density decay."""

    @abstractmethod
    def inverse_cdf(self, u):
        """Quantile transform: uniform u in [0, 1) to a delay."""

    @abstractmethod
    def support(self) -> tuple[float, float]:
        """(lo, hi) bounds of the distribution; hi may be inf."""

    def pdf(self, v):
        """Density f(v); only continuous variants have one."""
        raise TypeError(f"{type(self).__name__} has no density")

    def sample(self, rng: np.random.Generator) -> float:
        """One delay draw from ``rng`` (consumes exactly one uniform)."""
        return float(self.inverse_cdf(rng.random()))

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n delay draws, identical to n successive :meth:`sample` calls."""
        return self.inverse_cdf(rng.random(n))

    @abstractmethod
    def to_config(self) -> dict:
        """Tagged mapping for config files, e.g. {"type": "fixed", "h": 5.0}."""


@dataclass(frozen=True)
class FixedDelay(DelayModel):
    """Every transaction takes exactly ``h`` to attach."""

    h: float

    def __post_init__(self):
        if self.h == 0:
            raise DegenerateDelayError("fixed delay h=0 is degenerate")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"fixed delay needs finite h > 0, got {self.h}")

    def mean(self):
        return self.h

    def cdf(self, v):
        v = _check_age(v)
        out = np.where(v >= self.h, 1.0, 0.0)
        return float(out) if out.ndim == 0 else out

    def integrated_cdf(self, v):
        v = _check_age(v)
        out = np.maximum(0.0, v - self.h)
        return float(out) if out.ndim == 0 else out

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=float)
        out = np.full_like(u, self.h)
        return float(out) if out.ndim == 0 else out

    def support(self):
        return (self.h, self.h)

    def to_config(self):
        return {"type": "fixed", "h": self.h}


@dataclass(frozen=True)
class ExponentialDelay(DelayModel):
    """Exponential delay with rate ``mu`` (mean 1/mu)."""

    mu: float

    def __post_init__(self):
        if self.mu == 0 or math.isinf(self.mu):
            raise DegenerateDelayError("exponential delay needs finite mu > 0")
        if not self.mu > 0:
            raise ValueError(f"exponential rate must be positive, got {self.mu}")

    def mean(self):
        return 1.0 / self.mu

    def cdf(self, v):
        v = _check_age(v)
        out = -np.expm1(-self.mu * v)
        return float(out) if out.ndim == 0 else out

    def integrated_cdf(self, v):
        # integral of (1 - e^{-mu u}) = v + (e^{-mu v} - 1)/mu
        v = _check_age(v)
        out = v + np.expm1(-self.mu * v) / self.mu
        return float(out) if out.ndim == 0 else out

    def pdf(self, v):
        v = _check_age(v)
        out = self.mu * np.exp(-self.mu * v)
        return float(out) if out.ndim == 0 else out

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=float)
        out = -np.log1p(-u) / self.mu
        return float(out) if out.ndim == 0 else out

    def support(self):
        return (0.0, math.inf)

    def to_config(self):
        return {"type": "exponential", "mu": self.mu}


@dataclass(frozen=True)
class UniformDelay(DelayModel):
    """Delay uniform on [h0, h1], 0 <= h0 < h1."""

    h0: float
    h1: float

    def __post_init__(self):
        if self.h0 == self.h1:
            raise DegenerateDelayError("uniform delay with h0 == h1 is degenerate")
        if not (0 <= self.h0 < self.h1 and math.isfinite(self.h1)):
            raise ValueError(
                f"uniform delay needs 0 <= h0 < h1 finite, got [{self.h0}, {self.h1}]"
            )

    def mean(self):
        return 0.5 * (self.h0 + self.h1)

    def cdf(self, v):
        v = _check_age(v)
        out = np.clip((v - self.h0) / (self.h1 - self.h0), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def integrated_cdf(self, v):
        # 0 below h0; (v-h0)^2 / (2(h1-h0)) inside; v - (h0+h1)/2 above
        v = _check_age(v)
        width = self.h1 - self.h0
        inside = np.square(np.clip(v - self.h0, 0.0, width)) / (2.0 * width)
        out = inside + np.maximum(0.0, v - self.h1)
        return float(out) if out.ndim == 0 else out

    def pdf(self, v):
        v = _check_age(v)
        out = np.where((v >= self.h0) & (v <= self.h1), 1.0 / (self.h1 - self.h0), 0.0)
        return float(out) if out.ndim == 0 else out

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=float)
        out = self.h0 + u * (self.h1 - self.h0)
        return float(out) if out.ndim == 0 else out

    def support(self):
        return (self.h0, self.h1)

    def to_config(self):
        return {"type": "uniform", "h0": self.h0, "h1": self.h1}


_VARIANTS = {
    "fixed": (FixedDelay, ("h",)),
    "exponential": (ExponentialDelay, ("mu",)),
    "uniform": (UniformDelay, ("h0", "h1")),
}


def delay_from_config(spec: dict) -> DelayModel:
    """Build a delay model from its tagged-mapping form."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValueError(f"delay spec must be a mapping with a 'type' tag, got {spec!r}")
    kind = spec["type"]
    if kind not in _VARIANTS:
        raise ValueError(
            f"unknown delay type {kind!r}; expected one of {sorted(_VARIANTS)}"
        )
    cls, fields = _VARIANTS[kind]
    missing = [f for f in fields if f not in spec]
    if missing:
        raise ValueError(f"delay type {kind!r} is missing parameters {missing}")
    extra = set(spec) - {"type", *fields}
    if extra:
        raise ValueError(f"delay type {kind!r} got unexpected parameters {sorted(extra)}")
    return cls(*(float(spec[f]) for f in fields))
