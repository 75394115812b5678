# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.

Mirrors pure.py step for step; see that module for the event-order and
draw-consumption conventions that keep the two backends bit-identical.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, exp, isfinite

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline bint _before(double t1, i64 i1, double t2, i64 i2) noexcept:
    return t1 < t2 or (t1 == t2 and i1 < i2)


cdef Py_ssize_t _heap_push(double[::1] ht, i64[::1] hid, Py_ssize_t size,
                           double t, i64 sid) noexcept:
    cdef Py_ssize_t i = size, up
    cdef double tt
    cdef i64 ti
    ht[i] = t
    hid[i] = sid
    while i > 0:
        up = (i - 1) >> 1
        if _before(ht[i], hid[i], ht[up], hid[up]):
            tt = ht[up]; ht[up] = ht[i]; ht[i] = tt
            ti = hid[up]; hid[up] = hid[i]; hid[i] = ti
            i = up
        else:
            break
    return size + 1


cdef Py_ssize_t _heap_pop(double[::1] ht, i64[::1] hid, Py_ssize_t size) noexcept:
    # caller reads ht[0]/hid[0] first; this removes the root
    cdef Py_ssize_t i = 0, child
    size -= 1
    ht[0] = ht[size]
    hid[0] = hid[size]
    while True:
        child = 2 * i + 1
        if child >= size:
            break
        if child + 1 < size and _before(ht[child + 1], hid[child + 1],
                                        ht[child], hid[child]):
            child += 1
        if _before(ht[child], hid[child], ht[i], hid[i]):
            ht[child], ht[i] = ht[i], ht[child]
            hid[child], hid[i] = hid[i], hid[child]
            i = child
        else:
            break
    return size


def sim_run(double[::1] arrivals, double[::1] attach,
            double[::1] pick_a, double[::1] pick_b,
            double horizon, double sample_interval, Py_ssize_t n_samples):
    """One tangle growth trajectory; see pure.sim_run."""
    cdef Py_ssize_t n = arrivals.shape[0]
    parent_a_arr = np.full(n + 1, -1, dtype=np.int64)
    parent_b_arr = np.full(n + 1, -1, dtype=np.int64)
    approved_arr = np.full(n + 1, np.nan, dtype=np.float64)
    tip_counts_arr = np.empty(n_samples, dtype=np.int64)
    tips_arr = np.empty(n + 1, dtype=np.int64)
    pos_arr = np.full(n + 1, -1, dtype=np.int64)
    heap_t_arr = np.empty(max(n, 1), dtype=np.float64)
    heap_id_arr = np.empty(max(n, 1), dtype=np.int64)

    cdef i64[::1] parent_a = parent_a_arr
    cdef i64[::1] parent_b = parent_b_arr
    cdef double[::1] approved = approved_arr
    cdef i64[::1] tip_counts = tip_counts_arr
    cdef i64[::1] tips = tips_arr
    cdef i64[::1] pos = pos_arr
    cdef double[::1] heap_t = heap_t_arr
    cdef i64[::1] heap_id = heap_id_arr

    cdef Py_ssize_t count = 0, heap_size = 0, k = 0
    cdef Py_ssize_t i, ia, ib, slot
    cdef double s, when
    cdef i64 sid, parent, last
    cdef int side

    # genesis is a tip from t = 0
    tips[0] = 0
    pos[0] = 0
    count = 1

    for i in range(n):
        s = arrivals[i]
        while heap_size > 0 and heap_t[0] <= s:
            when = heap_t[0]
            sid = heap_id[0]
            heap_size = _heap_pop(heap_t, heap_id, heap_size)
            while k < n_samples and k * sample_interval < when:
                tip_counts[k] = count
                k += 1
            # append the new tip, then swap-remove its parents if present
            pos[sid] = count
            tips[count] = sid
            count += 1
            for side in range(2):
                parent = parent_a[sid] if side == 0 else parent_b[sid]
                slot = pos[parent]
                if slot < 0:
                    continue
                pos[parent] = -1
                count -= 1
                last = tips[count]
                if slot < count:
                    tips[slot] = last
                    pos[last] = slot
                approved[parent] = when
        while k < n_samples and k * sample_interval < s:
            tip_counts[k] = count
            k += 1
        ia = <Py_ssize_t>(pick_a[i] * count)
        if ia >= count:
            ia = count - 1
        ib = <Py_ssize_t>(pick_b[i] * count)
        if ib >= count:
            ib = count - 1
        parent_a[i + 1] = tips[ia]
        parent_b[i + 1] = tips[ib]
        if attach[i] <= horizon:
            heap_size = _heap_push(heap_t, heap_id, heap_size, attach[i], i + 1)

    while heap_size > 0:
        when = heap_t[0]
        sid = heap_id[0]
        heap_size = _heap_pop(heap_t, heap_id, heap_size)
        while k < n_samples and k * sample_interval < when:
            tip_counts[k] = count
            k += 1
        pos[sid] = count
        tips[count] = sid
        count += 1
        for side in range(2):
            parent = parent_a[sid] if side == 0 else parent_b[sid]
            slot = pos[parent]
            if slot < 0:
                continue
            pos[parent] = -1
            count -= 1
            last = tips[count]
            if slot < count:
                tips[slot] = last
                pos[last] = slot
            approved[parent] = when
    while k < n_samples:
        tip_counts[k] = count
        k += 1
    return tip_counts_arr, parent_a_arr, parent_b_arr, approved_arr


cdef double _trapz(double[::1] g, double dt) noexcept:
    cdef Py_ssize_t m = g.shape[0] - 1
    cdef double s = 0.5 * (g[0] + g[m])
    cdef Py_ssize_t i
    for i in range(1, m):
        s += g[i]
    return s * dt


def pde_solve_fixed(double h, double dt, Py_ssize_t n_steps, Py_ssize_t n_ages,
                    double l_floor, Py_ssize_t snap_stride=0):
    """Fixed-delay characteristics advance; see pure.pde_solve_fixed."""
    g_arr = np.zeros(n_ages + 1)
    l_arr = np.empty(n_steps + 1)
    cdef double[::1] g = g_arr
    cdef double[::1] l_hist = l_arr
    cdef Py_ssize_t ih = <Py_ssize_t>ceil(h / dt - 1e-9)
    if ih < 1:
        ih = 1
    cdef Py_ssize_t step, i, j0
    cdef double lagged, lv, frac, decay, l_new, j
    snaps = []
    snap_steps = []

    g[0] = 1.0
    l_hist[0] = _trapz(g, dt)
    if snap_stride > 0:
        snap_steps.append(0)
        snaps.append(g_arr.copy())

    for step in range(n_steps):
        lagged = step * dt - h
        if lagged < 0:
            lv = l_floor
        else:
            j = lagged / dt
            j0 = <Py_ssize_t>j
            if j0 > step - 1:
                j0 = step - 1
            frac = j - j0
            lv = (1.0 - frac) * l_hist[j0] + frac * l_hist[j0 + 1]
            if lv < l_floor:
                lv = l_floor
        decay = exp(-dt * 2.0 / lv)
        for i in range(n_ages, 0, -1):
            g[i] = g[i - 1] * (decay if i >= ih else 1.0)
        g[0] = 1.0
        l_new = _trapz(g, dt)
        if not isfinite(l_new):
            raise FloatingPointError(
                f"tip-density solve diverged at step {step + 1} (t = {(step + 1) * dt:g})"
            )
        l_hist[step + 1] = l_new
        if snap_stride > 0 and (step + 1) % snap_stride == 0:
            snap_steps.append(step + 1)
            snaps.append(g_arr.copy())

    return l_arr, g_arr, np.array(snap_steps, dtype=np.int64), np.array(snaps)


def pde_solve_continuous(double[::1] cdf_mass, double dt, Py_ssize_t n_steps,
                         double l_floor, Py_ssize_t snap_stride=0):
    """Continuous-delay characteristics advance; see pure.pde_solve_continuous."""
    cdef Py_ssize_t n_ages = cdf_mass.shape[0]
    g_arr = np.zeros(n_ages + 1)
    gn_arr = np.zeros(n_ages + 1)
    l_arr = np.empty(n_steps + 1)
    recip_arr = np.empty(n_steps + 1)
    cdef double[::1] g = g_arr
    cdef double[::1] gn = gn_arr
    cdef double[::1] l_hist = l_arr
    cdef double[::1] recip = recip_arr
    cdef double inv_floor = 1.0 / l_floor
    cdef Py_ssize_t step, m
    cdef double acc, ra, rb, l_new
    cdef double[::1] tmp
    snaps = []
    snap_steps = []

    g[0] = 1.0
    l_hist[0] = _trapz(g, dt)
    recip[0] = inv_floor
    if snap_stride > 0:
        snap_steps.append(0)
        snaps.append(np.asarray(g).copy())

    for step in range(n_steps):
        acc = 0.0
        for m in range(1, n_ages + 1):
            ra = recip[step - m + 1] if step - m + 1 >= 0 else inv_floor
            rb = recip[step - m] if step - m >= 0 else inv_floor
            acc += cdf_mass[m - 1] * (ra + rb)
            gn[m] = g[m - 1] * exp(-dt * acc)
        gn[0] = 1.0
        tmp = g; g = gn; gn = tmp
        l_new = _trapz(g, dt)
        if not isfinite(l_new):
            raise FloatingPointError(
                f"tip-density solve diverged at step {step + 1} (t = {(step + 1) * dt:g})"
            )
        l_hist[step + 1] = l_new
        recip[step + 1] = 1.0 / max(l_new, l_floor)
        if snap_stride > 0 and (step + 1) % snap_stride == 0:
            snap_steps.append(step + 1)
            snaps.append(np.asarray(g).copy())

    return l_arr, np.asarray(g).copy(), \
        np.array(snap_steps, dtype=np.int64), np.array(snaps)
