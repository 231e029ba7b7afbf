"""Compiled event loops.

Both samplers share the state layout ``x[m, i]`` (replica, neuron) and the
CSR out-edge arrays ``out_ptr / out_idx / out_w``; for the r-norm interaction
``out_w`` already holds ``sign(w) |w|**p_target``.

RNG draw order (the pure-Python reference path relies on it):

* thinning, per proposal: ``standard_exponential`` then ``random`` (accept);
  on acceptance one ``random`` to pick the spiker and one ``integers`` per
  out-edge when ``M > 1``.
* queue: one ``standard_exponential`` per (re)scheduled neuron; the spiker is
  rescheduled first, then per out-edge ``integers`` (``M > 1``) followed by the
  target's reschedule.

Extinction: thinning records it when the total rate is exactly zero; the queue
additionally certifies it when every waiting time is infinite (possible for
``z = 0`` with drift), dating it at the last spike.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _phi(x, p, z):
    if p == 1.0:
        return x + z
    return x ** p + z


@njit(cache=True)
def _colsum(x, p, i):
    s = 0.0
    M = x.shape[0]
    if p[i] == 1.0:
        for m in range(M):
            s += x[m, i]
    else:
        for m in range(M):
            s += x[m, i] ** p[i]
    return s


@njit(cache=True, inline="always")
def _col_rate(S, tcol, t, a, p, z, M, i):
    return S[i] * math.exp(-p[i] * a[i] * (t - tcol[i])) + M * z[i]


@njit(cache=True)
def _advance_col(x, tcol, S, a, p, i, t):
    if t != tcol[i]:
        f = math.exp(-a[i] * (t - tcol[i]))
        for m in range(x.shape[0]):
            x[m, i] *= f
        tcol[i] = t
        S[i] = _colsum(x, p, i)


@njit(cache=True, inline="always")
def _receive(x, s, j, w, p, rnorm):
    """Add weight w to x[s, j]; returns 1 if the result was clipped at 0."""
    if rnorm and p[j] != 1.0:
        y = x[s, j] ** p[j] + w
        if y < 0.0:
            x[s, j] = 0.0
            return 1
        x[s, j] = y ** (1.0 / p[j])
        return 0
    y = x[s, j] + w
    if y < 0.0:
        x[s, j] = 0.0
        return 1
    x[s, j] = y
    return 0


@njit(cache=True, inline="always")
def _route(rng, M, m):
    if M == 1:
        return m
    k = rng.integers(0, M - 1)
    return k if k < m else k + 1


@njit(cache=True)
def _grow(times, reps, neus):
    cap = 2 * times.shape[0]
    t2 = np.empty(cap)
    r2 = np.empty(cap, np.int32)
    n2 = np.empty(cap, np.int32)
    k = times.shape[0]
    t2[:k] = times
    r2[:k] = reps
    n2[:k] = neus
    return t2, r2, n2


@njit(cache=True)
def run_thinning(rng, x0, a, r, z, p, rnorm, out_ptr, out_idx, out_w,
                 horizon, snap_dt, cap):
    M, n = x0.shape
    x = x0.copy()
    tcol = np.zeros(n)
    S = np.empty(n)
    for i in range(n):
        S[i] = _colsum(x, p, i)

    times = np.empty(cap)
    reps = np.empty(cap, np.int32)
    neus = np.empty(cap, np.int32)
    count = 0
    clips = 0
    extinct = np.nan

    n_snap = int(math.floor(horizon / snap_dt)) + 1 if snap_dt > 0 else 0
    snaps = np.empty((n_snap, M, n))
    snap_k = 0

    now = 0.0
    while True:
        B = 0.0
        for i in range(n):
            B += _col_rate(S, tcol, now, a, p, z, M, i)
        if B <= 0.0:
            extinct = now
            while snap_k < n_snap:
                for i in range(n):
                    f = math.exp(-a[i] * (snap_k * snap_dt - tcol[i]))
                    for m in range(M):
                        snaps[snap_k, m, i] = x[m, i] * f
                snap_k += 1
            now = horizon
            break
        tp = now + rng.standard_exponential() / B
        while snap_k < n_snap and snap_k * snap_dt <= tp:
            ts = snap_k * snap_dt
            for i in range(n):
                f = math.exp(-a[i] * (ts - tcol[i]))
                for m in range(M):
                    snaps[snap_k, m, i] = x[m, i] * f
            snap_k += 1
        if tp > horizon:
            now = horizon
            break
        Rn = 0.0
        for i in range(n):
            Rn += _col_rate(S, tcol, tp, a, p, z, M, i)
        if rng.random() * B >= Rn:
            now = tp
            continue

        v = rng.random() * Rn
        isel = n - 1
        for i in range(n):
            c = _col_rate(S, tcol, tp, a, p, z, M, i)
            if v < c:
                isel = i
                break
            v -= c
        _advance_col(x, tcol, S, a, p, isel, tp)
        msel = M - 1
        for m in range(M):
            c = _phi(x[m, isel], p[isel], z[isel])
            if v < c:
                msel = m
                break
            v -= c

        if count == times.shape[0]:
            times, reps, neus = _grow(times, reps, neus)
        times[count] = tp
        reps[count] = msel
        neus[count] = isel
        count += 1

        x[msel, isel] = r[isel]
        S[isel] = _colsum(x, p, isel)
        for e in range(out_ptr[isel], out_ptr[isel + 1]):
            j = out_idx[e]
            s = _route(rng, M, msel)
            _advance_col(x, tcol, S, a, p, j, tp)
            clips += _receive(x, s, j, out_w[e], p, rnorm)
            S[j] = _colsum(x, p, j)
        now = tp

    cached = 0.0
    for i in range(n):
        cached += _col_rate(S, tcol, now, a, p, z, M, i)
    for i in range(n):
        _advance_col(x, tcol, S, a, p, i, now)
    return (times[:count], reps[:count], neus[:count], clips, extinct,
            snaps[:snap_k], x, cached)


# --- per-neuron queue --------------------------------------------------------

@njit(cache=True)
def _wait(rng, x, a, p, z):
    """Time to the next spike of a neuron left alone from potential x."""
    e = rng.standard_exponential()
    lead = x if p == 1.0 else x ** p
    if a == 0.0 or lead == 0.0:
        rate = lead + z
        if rate <= 0.0:
            return np.inf
        return e / rate
    k = p * a
    cap = lead / k
    if z == 0.0:
        if e >= cap:
            return np.inf
        return -math.log1p(-e / cap) / k
    # concave increasing compensator: Newton from below converges monotonically
    s = e / (lead + z)
    for _ in range(100):
        g = cap * (-math.expm1(-k * s)) + z * s - e
        dg = lead * math.exp(-k * s) + z
        step = g / dg
        s -= step
        if abs(step) <= 1e-15 * s:
            break
    return s


@njit(cache=True, inline="always")
def _before(key, e1, e2):
    k1 = key[e1]
    k2 = key[e2]
    return k1 < k2 or (k1 == k2 and e1 < e2)


@njit(cache=True)
def _sift_up(heap, pos, key, k):
    e = heap[k]
    while k > 0:
        parent = (k - 1) >> 1
        pe = heap[parent]
        if not _before(key, e, pe):
            break
        heap[k] = pe
        pos[pe] = k
        k = parent
    heap[k] = e
    pos[e] = k


@njit(cache=True)
def _sift_down(heap, pos, key, k):
    size = heap.shape[0]
    e = heap[k]
    while True:
        child = 2 * k + 1
        if child >= size:
            break
        if child + 1 < size and _before(key, heap[child + 1], heap[child]):
            child += 1
        ce = heap[child]
        if not _before(key, ce, e):
            break
        heap[k] = ce
        pos[ce] = k
        k = child
    heap[k] = e
    pos[e] = k


@njit(cache=True)
def _reschedule(heap, pos, key, e, new):
    old = key[e]
    key[e] = new
    if new < old:
        _sift_up(heap, pos, key, pos[e])
    else:
        _sift_down(heap, pos, key, pos[e])


@njit(cache=True)
def run_queue(rng, x0, a, r, z, p, rnorm, out_ptr, out_idx, out_w,
              horizon, snap_dt, cap):
    M, n = x0.shape
    N = M * n
    x = x0.copy()
    tl = np.zeros((M, n))
    key = np.empty(N)
    for m in range(M):
        for i in range(n):
            key[m * n + i] = _wait(rng, x[m, i], a[i], p[i], z[i])
    heap = np.arange(N)
    pos = np.arange(N)
    for k in range(N // 2 - 1, -1, -1):
        _sift_down(heap, pos, key, k)

    times = np.empty(cap)
    reps = np.empty(cap, np.int32)
    neus = np.empty(cap, np.int32)
    count = 0
    clips = 0
    extinct = np.nan
    n_snap = int(math.floor(horizon / snap_dt)) + 1 if snap_dt > 0 else 0
    snaps = np.empty((n_snap, M, n))
    snap_k = 0
    now = 0.0

    while True:
        e = heap[0]
        t = key[e]
        while snap_k < n_snap and snap_k * snap_dt <= t:
            ts = snap_k * snap_dt
            for m in range(M):
                for i in range(n):
                    snaps[snap_k, m, i] = x[m, i] * math.exp(-a[i] * (ts - tl[m, i]))
            snap_k += 1
        if t > horizon:
            if t == np.inf:
                # every neuron's remaining compensator is below its draw: no spike ever again
                extinct = times[count - 1] if count > 0 else 0.0
            now = horizon
            break
        msel = e // n
        isel = e - msel * n
        if count == times.shape[0]:
            times, reps, neus = _grow(times, reps, neus)
        times[count] = t
        reps[count] = msel
        neus[count] = isel
        count += 1

        x[msel, isel] = r[isel]
        tl[msel, isel] = t
        _reschedule(heap, pos, key, e, t + _wait(rng, r[isel], a[isel], p[isel], z[isel]))
        for k in range(out_ptr[isel], out_ptr[isel + 1]):
            j = out_idx[k]
            s = _route(rng, M, msel)
            x[s, j] *= math.exp(-a[j] * (t - tl[s, j]))
            tl[s, j] = t
            clips += _receive(x, s, j, out_w[k], p, rnorm)
            _reschedule(heap, pos, key, s * n + j,
                        t + _wait(rng, x[s, j], a[j], p[j], z[j]))
        now = t

    cached = 0.0
    for m in range(M):
        for i in range(n):
            x[m, i] *= math.exp(-a[i] * (now - tl[m, i]))
            cached += _phi(x[m, i], p[i], z[i])
    return (times[:count], reps[:count], neus[:count], clips, extinct,
            snaps[:snap_k], x, cached)
