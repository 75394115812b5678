"""Deterministic large-rate limit of tangle growth.

Tracks the density g(t, v) of tips of age v at time t together with the
rescaled tip count l(t) (tips per unit arrival rate). New tips enter at
age zero (g(t, 0) = 1) and a tip of age v is being approved at rate
E[1{H <= v} * 2 / l(t - H)] over the delay H, so along a characteristic
the density decays by exp(-dt * rate) per step. The age and time grids
share one step, which keeps characteristics aligned with the grid.

For a fixed delay the same dynamics reduce to a delay differential
equation in l(t) and the count x(t) of free tips (tips no pending
transaction has selected yet):

    dl/dt = 1 - 2 x(t - h) / l(t - h)   (t >= h; dl/dt = 1 before)
    dx/dt = 1 - 2 x(t) / l(t)

``solve_dde_fixed`` integrates that reduction for the equivalence check
against the density solver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._kernels import get_kernels
from .delays import DelayModel, FixedDelay

# the rescaled count used inside approval rates is floored to reflect that
# the unscaled system always keeps at least one tip; binds only during an
# O(mean delay) initial transient
DEFAULT_RATE_REF = 20.0
AGE_CAP_MULTIPLE = 40.0


@dataclass
class FluidGrid:
    """Output of the density solve on the shared (t, v) grid."""

    dt: float
    t: np.ndarray
    v: np.ndarray
    scaled_tips: np.ndarray  # l(t) on the time grid
    density_final: np.ndarray  # g(horizon, v) on the age grid
    snapshot_steps: np.ndarray
    snapshot_density: np.ndarray  # one row per recorded step

    @property
    def final(self) -> float:
        return float(self.scaled_tips[-1])

    def to_csv(self, path):
        lines = ["t,l"]
        lines += [f"{float(t)!r},{float(v)!r}" for t, v in zip(self.t, self.scaled_tips)]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def grid_to_csv(self, path):
        """Dump the recorded density snapshots as t,v,g rows."""
        if len(self.snapshot_steps) == 0:
            raise ValueError("no snapshots were recorded (snapshot_stride=0)")
        with open(path, "w") as fh:
            fh.write("t,v,g\n")
            for step, row in zip(self.snapshot_steps, self.snapshot_density):
                t = float(step * self.dt)
                fh.writelines(
                    f"{t!r},{float(v)!r},{float(gv)!r}\n" for v, gv in zip(self.v, row)
                )


@dataclass
class DdeSolution:
    """l(t) and free-tip count x(t) from the fixed-delay reduction."""

    dt: float
    t: np.ndarray
    scaled_tips: np.ndarray
    free_tips: np.ndarray

    @property
    def final(self) -> float:
        return float(self.scaled_tips[-1])


def _grid_sizes(delay: DelayModel, horizon: float, dt: float):
    if not (dt > 0 and np.isfinite(dt)):
        raise ValueError(f"step must be positive, got {dt}")
    mean = delay.mean()
    if dt > mean:
        raise ValueError(
            f"step {dt} exceeds the mean delay {mean:g}; refusing (the delay "
            "kernel would be unresolved)"
        )
    if not (horizon > 0 and np.isfinite(horizon)):
        raise ValueError(f"horizon must be positive, got {horizon}")
    if horizon < mean:
        warnings.warn(
            f"horizon {horizon:g} is below the mean delay {mean:g}; "
            "the solve will not reach stationarity",
            stacklevel=3,
        )
    n_steps = int(round(horizon / dt))
    v_max = min(horizon, AGE_CAP_MULTIPLE * mean)
    n_ages = int(round(v_max / dt))
    return n_steps, n_ages


def solve_pde(delay: DelayModel, horizon: float, dt: float, *,
              rate_ref: float = DEFAULT_RATE_REF, snapshot_stride: int = 0,
              backend=None) -> FluidGrid:
    """Integrate the tip-age density up to ``horizon`` with step ``dt``.

    Starts from an empty tangle (no aged tips), which reproduces the
    early-growth regime l(t) ~ t before the first delays complete. The
    age axis is truncated where the stationary profile is far below
    resolution (40 mean delays).
    """
    n_steps, n_ages = _grid_sizes(delay, horizon, dt)
    l_floor = max(dt, 1.0 / rate_ref)
    kern = get_kernels(backend)
    if isinstance(delay, FixedDelay):
        l_hist, g, snap_steps, snaps = kern.pde_solve_fixed(
            delay.h, dt, n_steps, n_ages, l_floor, snapshot_stride
        )
    else:
        v_nodes = np.arange(n_ages + 1, dtype=np.float64) * dt
        cdf_mass = np.ascontiguousarray(np.diff(delay.cdf(v_nodes)))
        l_hist, g, snap_steps, snaps = kern.pde_solve_continuous(
            cdf_mass, dt, n_steps, l_floor, snapshot_stride
        )
    return FluidGrid(
        dt=dt,
        t=np.arange(n_steps + 1, dtype=np.float64) * dt,
        v=np.arange(n_ages + 1, dtype=np.float64) * dt,
        scaled_tips=np.asarray(l_hist),
        density_final=np.asarray(g),
        snapshot_steps=np.asarray(snap_steps),
        snapshot_density=np.asarray(snaps).reshape(len(snap_steps), n_ages + 1),
    )


def solve_dde_fixed(h: float, horizon: float, dt: float) -> DdeSolution:
    """Integrate the fixed-delay (l, x) system by explicit Euler steps.

    History lookups at t - h interpolate linearly between grid points.
    The ratio x/l tends to 1/3 as both vanish at the start, which is used
    where the division would be singular.
    """
    if not h > 0:
        raise ValueError(f"delay must be positive, got {h}")
    if not (dt > 0 and dt <= h):
        raise ValueError(f"step must be in (0, {h}], got {dt}")
    n_steps = int(round(horizon / dt))
    l = np.empty(n_steps + 1)
    x = np.empty(n_steps + 1)
    l[0] = 0.0
    x[0] = 0.0

    def ratio(xv, lv):
        return xv / lv if lv > 0.0 else 1.0 / 3.0

    for n in range(n_steps):
        tn = n * dt
        if tn < h:
            dl = 1.0
        else:
            j = (tn - h) / dt
            j0 = min(int(j), n - 1)
            frac = j - j0
            l_lag = (1.0 - frac) * l[j0] + frac * l[j0 + 1]
            x_lag = (1.0 - frac) * x[j0] + frac * x[j0 + 1]
            dl = 1.0 - 2.0 * ratio(x_lag, l_lag)
        l[n + 1] = l[n] + dt * dl
        x[n + 1] = x[n] + dt * (1.0 - 2.0 * ratio(x[n], l[n]))
        if not (np.isfinite(l[n + 1]) and np.isfinite(x[n + 1])):
            raise FloatingPointError(
                f"delay-equation solve diverged at step {n + 1} (t = {(n + 1) * dt:g})"
            )
    t = np.arange(n_steps + 1, dtype=np.float64) * dt
    return DdeSolution(dt=dt, t=t, scaled_tips=l, free_tips=x)


def approval_rate(delay: DelayModel, age: float, history, t: float) -> float:
    """Rate at which a tip of the given age is being approved at time t.

    ``history`` maps past times to the rescaled tip count; it must cover
    [t - age, t] (clipped to the delay's support). Returns
    E[1{H <= age} * 2 / l(t - H)]: a point lookup for a fixed delay,
    otherwise adaptive quadrature of the delay density against 2/l.
    """
    if age < 0:
        raise ValueError("age must be nonnegative")
    lo, hi = delay.support()
    if isinstance(delay, FixedDelay):
        if age < delay.h:
            return 0.0
        return 2.0 / history(t - delay.h)
    if age <= lo:
        return 0.0
    upper = min(age, hi)
    if np.isinf(upper):
        # integrate to where the delay mass is exhausted
        upper = max(lo, delay.mean())
        while 1.0 - delay.cdf(upper) > 1e-16:
            upper *= 2.0
    value, _ = integrate.quad(
        lambda x: delay.pdf(x) * 2.0 / history(t - x), lo, upper, limit=200
    )
    return float(value)
