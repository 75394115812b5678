"""Monte Carlo simulation of tangle growth.

Each transaction is issued, immediately selects two parents uniformly at
random (with replacement) from the current tip set, then spends a random
proof-of-work delay before attaching. While it works, its chosen parents
stay selectable; once it attaches it becomes a tip itself and its parents
stop being tips (no-op if an earlier attachment already removed them).

The random protocol is fixed so runs are reproducible across kernel
backends: per run, one PCG64 stream produces the arrival times and a
second produces three uniforms per transaction (two tip picks and one
delay, transformed by inverse CDF).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import backend_name, get_kernels
from .delays import DelayModel

ARRIVAL_MODES = ("poisson", "deterministic")

_ARRIVAL_CHUNK = 4096


class TipSet:
    """Set of tip ids with O(1) add, remove, and uniform sampling.

    Backed by an array with swap-removal plus an index map, so picking a
    uniform member is a single indexed read.
    """

    __slots__ = ("_ids", "_where")

    def __init__(self, ids=()):
        self._ids = []
        self._where = {}
        for sid in ids:
            self.add(sid)

    def add(self, sid):
        if sid not in self._where:
            self._where[sid] = len(self._ids)
            self._ids.append(sid)

    def discard(self, sid) -> bool:
        """Remove ``sid`` if present; removal by approval is idempotent."""
        slot = self._where.pop(sid, None)
        if slot is None:
            return False
        last = self._ids.pop()
        if slot < len(self._ids):
            self._ids[slot] = last
            self._where[last] = slot
        return True

    def pick(self, u: float):
        """Member at index int(u * L); u must lie in [0, 1)."""
        count = len(self._ids)
        slot = int(u * count)
        if slot >= count:
            slot = count - 1
        return self._ids[slot]

    def __len__(self):
        return len(self._ids)

    def __contains__(self, sid):
        return sid in self._where

    def __iter__(self):
        return iter(self._ids)


def select_tips(tips: TipSet, rng: np.random.Generator):
    """Draw two parents uniformly with replacement from the tip set.

    A given tip lands in the pair with probability 2/L - 1/L^2.
    """
    if len(tips) == 0:
        raise ValueError("cannot select from an empty tip set")
    first = tips.pick(rng.random())
    second = tips.pick(rng.random())
    return first, second


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulation run (also the ensemble base)."""

    rate: float  # transaction arrivals per unit time
    delay: DelayModel
    horizon: float
    seed: int = 0
    arrival: str = "poisson"
    sample_interval: float = 1.0

    def __post_init__(self):
        if not (self.rate > 0 and np.isfinite(self.rate)):
            raise ValueError(f"arrival rate must be positive, got {self.rate}")
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if not (self.sample_interval > 0 and np.isfinite(self.sample_interval)):
            raise ValueError(
                f"sample interval must be positive, got {self.sample_interval}"
            )
        if self.arrival not in ARRIVAL_MODES:
            raise ValueError(
                f"arrival mode must be one of {ARRIVAL_MODES}, got {self.arrival!r}"
            )
        if not isinstance(self.delay, DelayModel):
            raise ValueError("delay must be a DelayModel instance")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


@dataclass
class Tangle:
    """Per-site record of a finished simulation.

    Site 0 is genesis (no parents, attached at t = 0); site i >= 1 is the
    i-th issued transaction. ``approved_time`` is NaN for sites that were
    still tips (or still pending) at the horizon.
    """

    issue_time: np.ndarray
    attach_time: np.ndarray
    approved_time: np.ndarray
    parent_a: np.ndarray
    parent_b: np.ndarray
    horizon: float

    @property
    def n_sites(self) -> int:
        return len(self.issue_time)

    def attached_mask(self):
        return self.attach_time <= self.horizon

    def tip_ids(self):
        mask = self.attached_mask() & np.isnan(self.approved_time)
        return np.nonzero(mask)[0]

    def counts(self):
        """(tips, approved, pending) at the horizon."""
        attached = self.attached_mask()
        approved = ~np.isnan(self.approved_time)
        n_appr = int(np.count_nonzero(attached & approved))
        n_tips = int(np.count_nonzero(attached & ~approved))
        n_pend = int(np.count_nonzero(~attached))
        return n_tips, n_appr, n_pend


@dataclass
class SimTrajectory:
    """Sampled tip counts L(t) of one run plus end-of-run bookkeeping."""

    t: np.ndarray
    tips: np.ndarray
    sites_issued: int
    n_tips: int
    n_approved: int
    n_pending: int
    run_index: int = 0
    tangle: Tangle | None = None

    def time_average(self, window=None) -> float:
        """Mean tip count over sample times in ``window`` (default: second half)."""
        if window is None:
            window = (self.t[-1] / 2.0, self.t[-1])
        lo, hi = window
        mask = (self.t >= lo) & (self.t <= hi)
        if not mask.any():
            raise ValueError(f"no samples inside window {window}")
        return float(self.tips[mask].mean())

    def to_csv(self, path):
        path = Path(path)
        lines = ["t,L"]
        lines += [f"{float(t)!r},{int(v)}" for t, v in zip(self.t, self.tips)]
        path.write_text("\n".join(lines) + "\n")


@dataclass
class EnsembleResult:
    """Pointwise tip-count statistics across independent runs."""

    t: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray
    n_runs: int
    seeds: list = field(default_factory=list)
    trajectories: list | None = None

    def time_average(self, window=None) -> float:
        if window is None:
            window = (self.t[-1] / 2.0, self.t[-1])
        lo, hi = window
        mask = (self.t >= lo) & (self.t <= hi)
        if not mask.any():
            raise ValueError(f"no samples inside window {window}")
        return float(self.mean[mask].mean())

    def to_csv(self, path):
        path = Path(path)
        lines = ["t,mean,std,min,max"]
        for i in range(len(self.t)):
            lines.append(
                f"{float(self.t[i])!r},{float(self.mean[i])!r},"
                f"{float(self.std[i])!r},{int(self.min[i])},{int(self.max[i])}"
            )
        path.write_text("\n".join(lines) + "\n")


def _streams(seed: int, run_index: int):
    make = lambda tag: np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([int(seed), int(run_index), tag]))
    )
    return make(0), make(1)


def _arrival_times(config: SimConfig, gen: np.random.Generator) -> np.ndarray:
    if config.arrival == "deterministic":
        n = int(np.floor(config.rate * config.horizon + 1e-9))
        return np.arange(1, n + 1, dtype=np.float64) / config.rate
    pieces = []
    offset = 0.0
    while True:
        gaps = -np.log1p(-gen.random(_ARRIVAL_CHUNK)) / config.rate
        times = offset + np.cumsum(gaps)
        stop = int(np.searchsorted(times, config.horizon, side="right"))
        if stop < len(times):
            pieces.append(times[:stop])
            break
        pieces.append(times)
        offset = times[-1]
    return np.concatenate(pieces)


def _draws(config: SimConfig, run_index: int):
    arr_gen, ev_gen = _streams(config.seed, run_index)
    arrivals = _arrival_times(config, arr_gen)
    n = len(arrivals)
    u = ev_gen.random(3 * n).reshape(n, 3)
    pick_a = np.ascontiguousarray(u[:, 0])
    pick_b = np.ascontiguousarray(u[:, 1])
    delays = np.ascontiguousarray(config.delay.inverse_cdf(u[:, 2]))
    return arrivals, arrivals + delays, pick_a, pick_b


def run(config: SimConfig, run_index: int = 0, backend=None,
        keep_tangle: bool = True) -> SimTrajectory:
    """Simulate one trajectory; identical (config, run_index) reproduce it bit for bit."""
    arrivals, attach, pick_a, pick_b = _draws(config, run_index)
    n_samples = int(np.floor(config.horizon / config.sample_interval + 1e-9)) + 1
    kern = get_kernels(backend)
    tip_counts, parent_a, parent_b, approved = kern.sim_run(
        arrivals, attach, pick_a, pick_b,
        config.horizon, config.sample_interval, n_samples,
    )
    tangle = Tangle(
        issue_time=np.concatenate(([0.0], arrivals)),
        attach_time=np.concatenate(([0.0], attach)),
        approved_time=approved,
        parent_a=parent_a,
        parent_b=parent_b,
        horizon=config.horizon,
    )
    n_tips, n_appr, n_pend = tangle.counts()
    return SimTrajectory(
        t=np.arange(n_samples, dtype=np.float64) * config.sample_interval,
        tips=tip_counts,
        sites_issued=tangle.n_sites,
        n_tips=n_tips,
        n_approved=n_appr,
        n_pending=n_pend,
        run_index=run_index,
        tangle=tangle if keep_tangle else None,
    )


def _run_for_ensemble(args):
    config, run_index, backend = args
    return run(config, run_index, backend=backend, keep_tangle=False)


def ensemble(config: SimConfig, n_runs: int, workers: int = 1,
             keep_runs: bool = False, backend=None) -> EnsembleResult:
    """Aggregate pointwise L(t) statistics over independent runs.

    Run k uses streams derived from (config.seed, k), so the ensemble is
    reproducible and run 0 equals ``run(config)``. Runs are independent;
    ``workers > 1`` executes them in separate processes.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    backend = backend or backend_name()
    jobs = [(config, k, backend) for k in range(n_runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_for_ensemble, jobs, chunksize=8))
    else:
        runs = [_run_for_ensemble(job) for job in jobs]
    counts = np.stack([r.tips for r in runs])
    return EnsembleResult(
        t=runs[0].t,
        mean=counts.mean(axis=0),
        std=counts.std(axis=0),
        min=counts.min(axis=0),
        max=counts.max(axis=0),
        n_runs=n_runs,
        seeds=[[int(config.seed), k] for k in range(n_runs)],
        trajectories=runs if keep_runs else None,
    )


@dataclass
class ValidationReport:
    """Outcome of the structural checks on a finished tangle."""

    ok: bool
    failures: list
    n_sites: int = 0
    n_tips: int = 0
    n_approved: int = 0
    n_pending: int = 0

    def __bool__(self):
        return self.ok


def validate_dag(tangle: Tangle, trajectory: SimTrajectory | None = None) -> ValidationReport:
    """Check DAG structure, genesis reachability, lifecycle order, and tip accounting.

    Returns a report with the first violation of each kind rather than
    raising; pass the run's trajectory to also recount L(t) at every
    sample point from the site lifecycles.
    """
    failures = []
    n = tangle.n_sites
    pa, pb = tangle.parent_a, tangle.parent_b
    attach, approved = tangle.attach_time, tangle.approved_time

    if n == 0 or pa[0] != -1 or pb[0] != -1 or tangle.attach_time[0] != 0.0:
        failures.append("genesis: site 0 must exist with no parents and attach at t=0")

    ids = np.arange(n)
    bad = (pa[1:] < 0) | (pa[1:] >= ids[1:]) | (pb[1:] < 0) | (pb[1:] >= ids[1:])
    if bad.any():
        i = int(np.nonzero(bad)[0][0]) + 1
        failures.append(
            f"ordering: site {i} has parents ({pa[i]}, {pb[i]}) not in [0, {i})"
        )
    else:
        # edges point strictly back in ids, so the graph is acyclic; check
        # the timing half of the invariant and genesis reachability
        late = (attach[pa[1:]] >= attach[1:]) | (attach[pb[1:]] >= attach[1:])
        if late.any():
            i = int(np.nonzero(late)[0][0]) + 1
            failures.append(f"timing: site {i} attaches before a parent")
        unattached_parent = (attach[pa[1:]] > tangle.issue_time[1:]) | (
            attach[pb[1:]] > tangle.issue_time[1:]
        )
        if unattached_parent.any():
            i = int(np.nonzero(unattached_parent)[0][0]) + 1
            failures.append(f"selection: site {i} selected a parent not yet attached")
        reach = np.zeros(n, dtype=bool)
        reach[0] = True
        for i in range(1, n):
            reach[i] = reach[pa[i]] or reach[pb[i]]
        if not reach.all():
            i = int(np.nonzero(~reach)[0][0])
            failures.append(f"reachability: site {i} does not approve genesis")

    has_approval = ~np.isnan(approved)
    if (approved[has_approval] < attach[has_approval]).any():
        failures.append("lifecycle: a site was approved before it attached")
    if (~tangle.attached_mask() & has_approval).any():
        failures.append("lifecycle: a pending site carries an approval time")

    n_tips, n_appr, n_pend = tangle.counts()
    if n_tips + n_appr + n_pend != n:
        failures.append(
            f"conservation: tips({n_tips}) + approved({n_appr}) + pending({n_pend}) != {n}"
        )
    if trajectory is not None:
        order_attach = np.sort(attach[tangle.attached_mask()])
        order_approved = np.sort(approved[has_approval])
        recount = np.searchsorted(order_attach, trajectory.t, side="right") - \
            np.searchsorted(order_approved, trajectory.t, side="right")
        if not np.array_equal(recount, trajectory.tips):
            i = int(np.nonzero(recount != trajectory.tips)[0][0])
            failures.append(
                f"recount: L({trajectory.t[i]:g}) = {trajectory.tips[i]} recorded "
                f"but {recount[i]} recomputed from site lifecycles"
            )

    return ValidationReport(
        ok=not failures,
        failures=failures,
        n_sites=n,
        n_tips=n_tips,
        n_approved=n_appr,
        n_pending=n_pend,
    )
