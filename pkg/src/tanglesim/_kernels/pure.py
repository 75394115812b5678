"""Pure-Python kernels: reference implementations of the hot loops.

The compiled extension (``_core``) mirrors these functions exactly; the
simulation kernel must stay step-for-step identical so both backends
produce bit-identical trajectories from the same draw arrays.

Conventions shared by both backends:

* Event order: attachments fire before the arrival they tie with, ties
  between attachments break by site id (lexicographic (time, id)).
* Tip bookkeeping: the new site is appended to the tip array first, then
  its two parents are swap-removed if still present (first a, then b).
* Tip picks map a uniform draw u to index int(u * L), clamped to L - 1.
* Tip counts are recorded at sample times k * sample_interval, after all
  events at or before that time have been processed.
"""

import heapq

import numpy as np


def sim_run(arrivals, attach, pick_a, pick_b, horizon, sample_interval, n_samples):
    """Run one tangle growth trajectory.

    arrivals/attach: issue and attachment times per transaction (sorted by
    issue); pick_a/pick_b: uniform draws for the two tip selections made
    at issue time. Attachments later than ``horizon`` never happen (the
    transaction stays pending). Site ids are 1 + arrival index; genesis
    is site 0, a tip from t = 0.

    Returns (tip_counts, parent_a, parent_b, approved_time).
    """
    n = len(arrivals)
    parent_a = np.full(n + 1, -1, dtype=np.int64)
    parent_b = np.full(n + 1, -1, dtype=np.int64)
    approved = np.full(n + 1, np.nan, dtype=np.float64)
    tip_counts = np.empty(n_samples, dtype=np.int64)

    tips = [0]
    pos = {0: 0}
    heap = []  # (attach_time, site_id) of pending attachments
    k = 0  # next sample slot

    def flush(upto):
        # record samples strictly before the next event
        nonlocal k
        while k < n_samples and k * sample_interval < upto:
            tip_counts[k] = len(tips)
            k += 1

    def attach_site(when, sid):
        pos[sid] = len(tips)
        tips.append(sid)
        for p in (parent_a[sid], parent_b[sid]):
            i = pos.pop(p, None)
            if i is None:  # already approved earlier
                continue
            last = tips.pop()
            if i < len(tips):
                tips[i] = last
                pos[last] = i
            approved[p] = when

    for i in range(n):
        s = arrivals[i]
        while heap and heap[0][0] <= s:
            when, sid = heapq.heappop(heap)
            flush(when)
            attach_site(when, sid)
        flush(s)
        count = len(tips)
        ia = int(pick_a[i] * count)
        if ia >= count:
            ia = count - 1
        ib = int(pick_b[i] * count)
        if ib >= count:
            ib = count - 1
        parent_a[i + 1] = tips[ia]
        parent_b[i + 1] = tips[ib]
        if attach[i] <= horizon:
            heapq.heappush(heap, (attach[i], i + 1))

    while heap:
        when, sid = heapq.heappop(heap)
        flush(when)
        attach_site(when, sid)
    flush(np.inf)
    return tip_counts, parent_a, parent_b, approved


def _record(snaps, snap_steps, stride, step, g):
    if stride > 0 and step % stride == 0:
        snap_steps.append(step)
        snaps.append(g.copy())


def pde_solve_fixed(h, dt, n_steps, n_ages, l_floor, snap_stride=0):
    """Advance the tip-age density along characteristics for a fixed delay.

    Cells at age >= h decay at rate 2 / l(t - h); the decay factor for the
    step from t to t+dt is applied to cells whose age lands at or beyond h,
    which keeps the endpoint error first order in dt.
    """
    g = np.zeros(n_ages + 1)
    g[0] = 1.0
    l_hist = np.empty(n_steps + 1)
    l_hist[0] = np.trapezoid(g, dx=dt)
    ih = max(1, int(np.ceil(h / dt - 1e-9)))
    snaps, snap_steps = [], []
    _record(snaps, snap_steps, snap_stride, 0, g)

    for step in range(n_steps):
        lagged = step * dt - h
        if lagged < 0:
            lv = l_floor
        else:
            j = lagged / dt
            j0 = min(int(j), step - 1)
            frac = j - j0
            lv = max((1.0 - frac) * l_hist[j0] + frac * l_hist[j0 + 1], l_floor)
        decay = np.exp(-dt * 2.0 / lv)
        g[1:] = g[:-1]
        if ih <= n_ages:
            g[ih:] *= decay
        g[0] = 1.0
        l_new = np.trapezoid(g, dx=dt)
        if not np.isfinite(l_new):
            raise FloatingPointError(
                f"tip-density solve diverged at step {step + 1} (t = {(step + 1) * dt:g})"
            )
        l_hist[step + 1] = l_new
        _record(snaps, snap_steps, snap_stride, step + 1, g)

    return l_hist, g, np.array(snap_steps, dtype=np.int64), np.array(snaps)


def pde_solve_continuous(cdf_mass, dt, n_steps, l_floor, snap_stride=0):
    """Same advance for a continuous delay.

    cdf_mass[j] = P(H <= (j+1) dt) - P(H <= j dt). The decay exponent for a
    cell reaching age v is the CDF-weighted trapezoid of 2 / l(t - x) over
    x in [0, v]; exact CDF increments keep support edges sharp.
    """
    n_ages = len(cdf_mass)
    g = np.zeros(n_ages + 1)
    g[0] = 1.0
    l_hist = np.empty(n_steps + 1)
    l_hist[0] = np.trapezoid(g, dx=dt)
    inv_floor = 1.0 / l_floor
    recip = np.empty(n_steps + 1)  # 1 / max(l, floor), kept incrementally
    recip[0] = inv_floor
    rev = np.full(n_ages + 1, inv_floor)  # recip at t - x over the age grid
    snaps, snap_steps = [], []
    _record(snaps, snap_steps, snap_stride, 0, g)

    for step in range(n_steps):
        depth = min(step, n_ages)
        rev[: depth + 1] = recip[step - depth : step + 1][::-1]
        if depth < n_ages:
            rev[depth + 1 :] = inv_floor
        exponent = np.cumsum(cdf_mass * (rev[:-1] + rev[1:]))
        g[1:] = g[:-1] * np.exp(-dt * exponent)
        g[0] = 1.0
        l_new = np.trapezoid(g, dx=dt)
        if not np.isfinite(l_new):
            raise FloatingPointError(
                f"tip-density solve diverged at step {step + 1} (t = {(step + 1) * dt:g})"
            )
        l_hist[step + 1] = l_new
        recip[step + 1] = 1.0 / max(l_new, l_floor)
        _record(snaps, snap_steps, snap_stride, step + 1, g)

    return l_hist, g, np.array(snap_steps, dtype=np.int64), np.array(snaps)
