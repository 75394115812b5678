"""Stationary equilibrium of the fluid tangle dynamics.

At equilibrium the tip-age profile satisfies

    g(v) = exp(-(2/l) * integral_0^v P(H <= u) du)

and the rescaled tip count must equal its own integral,
l = F(l) = integral_0^inf g(v) dv. A fixed delay h gives l = 2h in closed
form; for other delays the scalar fixed point is bracketed and bisected
(F is smooth but differentiating it under the integral buys nothing for
a 1-D root). The expected unscaled tip count is then rate * l.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .delays import DegenerateDelayError, DelayModel, FixedDelay

_TAIL_DECADES = 0.5 * math.log(1e14)  # integrand below 1e-14 past mean + l * this
_MAX_WIDEN = 60
_MAX_BISECT = 200
_SCAN_POINTS = 65


class StationarySolverError(RuntimeError):
    """Bracketing or uniqueness failure, with diagnostics attached."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class StationaryResult:
    """Equilibrium rescaled tip count and its self-consistency residual."""

    scaled_tips: float
    residual: float
    iterations: int
    delay: DelayModel

    def profile(self, v):
        return stationary_profile(self.delay, self.scaled_tips, v)

    def expected_tips(self, rate: float) -> float:
        if not rate > 0:
            raise ValueError(f"arrival rate must be positive, got {rate}")
        return rate * self.scaled_tips


def stationary_profile(delay: DelayModel, scaled_tips: float, v):
    """Equilibrium tip-age density at age v for a given rescaled count."""
    if not scaled_tips > 0:
        raise ValueError(f"rescaled tip count must be positive, got {scaled_tips}")
    a = np.asarray(delay.integrated_cdf(v), dtype=float)
    out = np.exp(-(2.0 / scaled_tips) * a)
    return float(out) if out.ndim == 0 else out


def _profile_integral(delay: DelayModel, scaled_tips: float) -> float:
    """F(l): total equilibrium tip mass for a trial rescaled count."""
    lo, hi = delay.support()
    mean = delay.mean()
    v_cut = mean + scaled_tips * _TAIL_DECADES
    if math.isfinite(hi):
        v_cut = max(v_cut, hi)
    breaks = [p for p in (lo, hi) if 0.0 < p < v_cut and math.isfinite(p)]
    value, _ = integrate.quad(
        lambda v: stationary_profile(delay, scaled_tips, v),
        0.0, v_cut, points=breaks or None, limit=200,
    )
    # past the support (and far past the mean otherwise) the profile decays
    # exactly like exp(-(2/l)(v - mean)), so the remainder integrates to l/2
    # times the endpoint value (< 1e-14 * l/2 by choice of v_cut)
    tail = 0.5 * scaled_tips * stationary_profile(delay, scaled_tips, v_cut)
    return value + tail


def solve_stationary(delay: DelayModel, tol: float = 1e-9) -> StationaryResult:
    """Solve l = integral_0^inf g(v) dv for the equilibrium rescaled count.

    Fixed delays return 2h exactly. Otherwise the root of
    G(l) = F(l) - l is bracketed starting from [mean, 4 mean], widening
    geometrically if needed; the bracket is scanned for extra sign
    changes before bisecting so multiple roots fail loudly.
    """
    if not (tol > 0 and math.isfinite(tol)):
        raise ValueError(f"tolerance must be positive, got {tol}")
    mean = delay.mean()
    if not (mean > 0 and math.isfinite(mean)):
        raise DegenerateDelayError(
            f"delay mean must be positive and finite (got {mean}); with no "
            "delay the only equilibrium is zero tips, outside the fluid regime"
        )

    if isinstance(delay, FixedDelay):
        l_star = 2.0 * delay.h
        residual = abs(_profile_integral(delay, l_star) - l_star)
        return StationaryResult(l_star, residual, 0, delay)

    def gap(l):
        return _profile_integral(delay, l) - l

    lo, hi = mean, 4.0 * mean
    for _ in range(_MAX_WIDEN):
        if gap(lo) > 0:
            break
        lo *= 0.5
    else:
        raise StationarySolverError(
            "could not bracket the equilibrium from below",
            {"lo": lo, "gap_lo": gap(lo)},
        )
    for _ in range(_MAX_WIDEN):
        if gap(hi) < 0:
            break
        hi *= 2.0
    else:
        raise StationarySolverError(
            "could not bracket the equilibrium from above",
            {"hi": hi, "gap_hi": gap(hi)},
        )

    grid = np.linspace(lo, hi, _SCAN_POINTS)
    signs = np.sign([gap(l) for l in grid])
    flips = np.nonzero(np.diff(signs) != 0)[0]
    if len(flips) > 1:
        brackets = [(float(grid[i]), float(grid[i + 1])) for i in flips]
        raise StationarySolverError(
            f"equilibrium equation has {len(flips)} sign changes in "
            f"[{lo:g}, {hi:g}]; refusing to pick one",
            {"brackets": brackets},
        )

    iterations = 0
    while hi - lo > tol and iterations < _MAX_BISECT:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    l_star = 0.5 * (lo + hi)
    residual = abs(_profile_integral(delay, l_star) - l_star)
    return StationaryResult(l_star, residual, iterations, delay)


def predict_mean_tips(delay: DelayModel, rate: float, tol: float = 1e-9) -> float:
    """Expected stationary tip count at the given arrival rate."""
    return solve_stationary(delay, tol=tol).expected_tips(rate)
