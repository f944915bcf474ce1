"""Numba-accelerated single-system kernel for high-volume runs.

Implements the same event-driven kinematics as engine.py for the policies the
paper's experiments sweep at 10^7 arrivals: SRPT-k, PSJF-k, RS-k, Practical
SEK / SEK-n, and the estimate-keyed variants.  Results are cross-checked
against the reference lane in the test suite.  Falls back to pure Python
(same code, interpreted) when numba is unavailable.
"""

from __future__ import annotations

import numpy as np

from .policies import SNAP

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


INF = np.inf

MODE_SRPT = 0
MODE_SEKN = 1
MODE_PSJF = 2
MODE_RS = 3

STATUS_OK = 0
STATUS_UNSTABLE = 1

_FAST_KINDS = {"srpt", "sek", "sekn", "psjf", "rs", "srpt-est", "sek-est"}


def supports(spec) -> bool:
    return spec.kind in _FAST_KINDS


def _mode_of(spec):
    if spec.kind in ("srpt", "srpt-est"):
        return MODE_SRPT
    if spec.kind in ("sek", "sek-est", "sekn"):
        return MODE_SEKN
    if spec.kind == "psjf":
        return MODE_PSJF
    return MODE_RS


@njit(cache=True)
def _sorted_kernel(mode, use_est, k, eps, n_param, arr_times, sizes, ests,
                   init_sizes, store_resp, cap, responses):
    """Event loop for the sorted-by-key modes (everything except RS).

    key[i] is the priority key (remaining size, original size, or clamped
    remaining-size estimate), ascending; rem[i] the true remaining size;
    arr[i] the arrival time.  Served set is the prefix of min(k, n), or the
    k-1 smallest plus position k while an except-k+1 pattern is active.
    """
    size0 = 1024
    key = np.empty(size0, dtype=np.float64)
    rem = np.empty(size0, dtype=np.float64)
    arr = np.empty(size0, dtype=np.float64)
    alloc = size0
    n = 0
    key_dynamic = mode != MODE_PSJF

    # initial batch, sorted by key (== size for every mode at t=0)
    m0 = init_sizes.shape[0]
    if m0 > 0:
        order = np.argsort(init_sizes, kind="mergesort")
        while alloc < m0 + 16:
            alloc *= 2
        key = np.empty(alloc, dtype=np.float64)
        rem = np.empty(alloc, dtype=np.float64)
        arr = np.empty(alloc, dtype=np.float64)
        for i in range(m0):
            s = init_sizes[order[i]]
            key[i] = s
            rem[i] = s
            arr[i] = 0.0
        n = m0

    n_arr = arr_times.shape[0]
    i_arr = 0
    clock = 0.0
    except_active = False
    count = 0
    mean = 0.0
    m2 = 0.0
    area_n = 0.0
    peak = n

    while True:
        # ---- candidate events ----
        t_arr = arr_times[i_arr] if i_arr < n_arr else INF

        t_comp = INF
        comp_pos = -1
        if n > 0:
            best = INF
            if except_active:
                # served set: the k-1 smallest keys plus position k
                for j in range(k - 1):
                    if rem[j] < best:
                        best = rem[j]
                        comp_pos = j
                if rem[k] < best:
                    best = rem[k]
                    comp_pos = k
            else:
                m = k if k < n else n
                for j in range(m):
                    if rem[j] < best:
                        best = rem[j]
                        comp_pos = j
            t_comp = clock + k * best

        t_cross = INF
        if mode == MODE_SEKN and not except_active and k < n <= k + n_param:
            kk = key[k - 1]
            if kk > eps + SNAP:
                t_cross = clock + k * (kk - eps)

        # earliest event; ties: arrival < threshold < completion
        if t_arr <= t_comp and t_arr <= t_cross:
            t_next = t_arr
            ev = 0
        elif t_cross < t_comp:
            t_next = t_cross
            ev = 1
        else:
            t_next = t_comp
            ev = 2
        if t_next == INF:
            break

        # ---- advance ----
        dt = t_next - clock
        area_n += dt * n
        if dt > 0.0:
            dec = dt / k
            if except_active:
                for j in range(k - 1):
                    rem[j] -= dec
                    if rem[j] < SNAP:
                        rem[j] = 0.0
                rem[k] -= dec
                if rem[k] < SNAP:
                    rem[k] = 0.0
                if key_dynamic:
                    for j in range(k - 1):
                        key[j] -= dec
                        if key[j] < SNAP:
                            key[j] = 0.0
                    key[k] -= dec
                    if key[k] < SNAP:
                        key[k] = 0.0
            else:
                m = k if k < n else n
                for j in range(m):
                    rem[j] -= dec
                    if rem[j] < SNAP:
                        rem[j] = 0.0
                if key_dynamic:
                    for j in range(m):
                        key[j] -= dec
                        if key[j] < SNAP:
                            key[j] = 0.0
        clock = t_next
        # repair the single possible inversion: the served largest sank below
        # the skipped k-th smallest; the served set then equals the plain
        # prefix, so except mode can simply end
        if except_active and key[k] < key[k - 1]:
            key[k - 1], key[k] = key[k], key[k - 1]
            rem[k - 1], rem[k] = rem[k], rem[k - 1]
            arr[k - 1], arr[k] = arr[k], arr[k - 1]
            except_active = False
            if comp_pos == k:
                comp_pos = k - 1

        # ---- apply event ----
        if ev == 0:
            s = sizes[i_arr]
            kv = ests[i_arr] if use_est else s
            # insertion by key, equal keys after existing ones
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) >> 1
                if key[mid] <= kv:
                    lo = mid + 1
                else:
                    hi = mid
            if n + 1 >= alloc:
                alloc2 = alloc * 2
                key2 = np.empty(alloc2, dtype=np.float64)
                rem2 = np.empty(alloc2, dtype=np.float64)
                arr2 = np.empty(alloc2, dtype=np.float64)
                key2[:n] = key[:n]
                rem2[:n] = rem[:n]
                arr2[:n] = arr[:n]
                key = key2
                rem = rem2
                arr = arr2
                alloc = alloc2
            for j in range(n, lo, -1):
                key[j] = key[j - 1]
                rem[j] = rem[j - 1]
                arr[j] = arr[j - 1]
            key[lo] = kv
            rem[lo] = s
            arr[lo] = clock
            n += 1
            i_arr += 1
            if n > peak:
                peak = n
            if n > cap:
                return (STATUS_UNSTABLE, count, mean, m2, area_n, peak, clock)
            except_active = False
        elif ev == 2:
            resp = clock - arr[comp_pos]
            count += 1
            d = resp - mean
            mean += d / count
            m2 += d * (resp - mean)
            if store_resp:
                responses[count - 1] = resp
            for j in range(comp_pos, n - 1):
                key[j] = key[j + 1]
                rem[j] = rem[j + 1]
                arr[j] = arr[j + 1]
            n -= 1
            except_active = False
        # ev == 1 (threshold) changes nothing structurally

        # ---- selection ----
        if mode == MODE_SEKN and k < n <= k + n_param:
            n_below = 0
            n_above = 0
            for j in range(n):
                if key[j] < eps + SNAP:
                    n_below += 1
                elif key[j] > eps + SNAP:
                    n_above += 1
            except_active = n_below == k and n_above == n - k
        else:
            except_active = False

    return (STATUS_OK, count, mean, m2, area_n, peak, clock)


@njit(cache=True)
def _rs_kernel(k, arr_times, sizes, init_sizes, store_resp, cap, responses):
    """Event loop for RS-k: priority = remaining x original size, recomputed
    at every event over an unsorted job table."""
    size0 = 1024
    rem = np.empty(size0, dtype=np.float64)
    sz = np.empty(size0, dtype=np.float64)
    arr = np.empty(size0, dtype=np.float64)
    alloc = size0
    n = 0
    m0 = init_sizes.shape[0]
    if m0 > 0:
        while alloc < m0 + 16:
            alloc *= 2
        rem = np.empty(alloc, dtype=np.float64)
        sz = np.empty(alloc, dtype=np.float64)
        arr = np.empty(alloc, dtype=np.float64)
        for i in range(m0):
            rem[i] = init_sizes[i]
            sz[i] = init_sizes[i]
            arr[i] = 0.0
        n = m0

    served = np.empty(64, dtype=np.int64)
    n_arr = arr_times.shape[0]
    i_arr = 0
    clock = 0.0
    count = 0
    mean = 0.0
    m2 = 0.0
    area_n = 0.0
    peak = n

    while True:
        # select served: the min(k, n) jobs of least remaining*size product
        m = k if k < n else n
        for pick in range(m):
            best = INF
            arg = -1
            for j in range(n):
                taken = False
                for q in range(pick):
                    if served[q] == j:
                        taken = True
                        break
                if taken:
                    continue
                prod = rem[j] * sz[j]
                if prod < best:
                    best = prod
                    arg = j
            served[pick] = arg

        t_arr = arr_times[i_arr] if i_arr < n_arr else INF
        t_comp = INF
        comp_pos = -1
        for q in range(m):
            t = clock + k * rem[served[q]]
            if t < t_comp:
                t_comp = t
                comp_pos = served[q]
        if t_arr <= t_comp:
            t_next = t_arr
            ev = 0
        else:
            t_next = t_comp
            ev = 2
        if t_next == INF:
            break

        dt = t_next - clock
        area_n += dt * n
        if dt > 0.0:
            dec = dt / k
            for q in range(m):
                j = served[q]
                rem[j] -= dec
                if rem[j] < SNAP:
                    rem[j] = 0.0
        clock = t_next

        if ev == 0:
            if n + 1 >= alloc:
                alloc2 = alloc * 2
                rem2 = np.empty(alloc2, dtype=np.float64)
                sz2 = np.empty(alloc2, dtype=np.float64)
                arr2 = np.empty(alloc2, dtype=np.float64)
                rem2[:n] = rem[:n]
                sz2[:n] = sz[:n]
                arr2[:n] = arr[:n]
                rem = rem2
                sz = sz2
                arr = arr2
                alloc = alloc2
            rem[n] = sizes[i_arr]
            sz[n] = sizes[i_arr]
            arr[n] = clock
            n += 1
            i_arr += 1
            if n > peak:
                peak = n
            if n > cap:
                return (STATUS_UNSTABLE, count, mean, m2, area_n, peak, clock)
        else:
            resp = clock - arr[comp_pos]
            count += 1
            d = resp - mean
            mean += d / count
            m2 += d * (resp - mean)
            if store_resp:
                responses[count - 1] = resp
            rem[comp_pos] = rem[n - 1]
            sz[comp_pos] = sz[n - 1]
            arr[comp_pos] = arr[n - 1]
            n -= 1

    return (STATUS_OK, count, mean, m2, area_n, peak, clock)


@njit(cache=True)
def merged_until_divergence(rem, arr, ids, n, clock, next_id, arr_times, sizes,
                            i_arr, k, epsp, eps, x, y, acc, cap):
    """Advance the merged coupled system (both sides identical, so simulate
    one SRPT-k queue) until a divergence starting state appears or the run
    drains.

    A divergence starting state: exactly k+1 jobs, the k smallest inside
    [eps', eps], the largest inside [x, y] and strictly above the k-th
    smallest, so the except-k+1 schedule actually differs from SRPT-k.
    Detected both at events and via the analytically-timed crossing of the
    k-th smallest job through eps.

    acc layout: countA, meanA, m2A, areaA, countB, meanB, m2B, areaB.
    Returns (reason, rem, arr, ids, n, clock, next_id, i_arr, peak) with
    reason 0 = drained, 1 = divergence, 2 = cap exceeded.
    """
    n_arr = arr_times.shape[0]
    alloc = rem.shape[0]
    peak = n
    snap = SNAP
    while True:
        # divergence starting state?
        if n == k + 1:
            if (
                rem[0] >= epsp - snap
                and rem[k - 1] <= eps + snap
                and x - snap <= rem[k] <= y + snap
                and rem[k] > rem[k - 1] + snap
            ):
                return (1, rem, arr, ids, n, clock, next_id, i_arr, peak)

        t_arr = arr_times[i_arr] if i_arr < n_arr else INF
        t_comp = INF
        if n > 0:
            t_comp = clock + k * rem[0]
        t_cross = INF
        if n == k + 1:
            dv = rem[k - 1] - eps
            if (
                dv > snap
                and rem[0] - dv >= epsp - snap
                and x - snap <= rem[k] <= y + snap
            ):
                t_cross = clock + k * dv
        if t_arr <= t_comp and t_arr <= t_cross:
            t_next = t_arr
            ev = 0
        elif t_cross < t_comp:
            t_next = t_cross
            ev = 1
        else:
            t_next = t_comp
            ev = 2
        if t_next == INF:
            return (0, rem, arr, ids, n, clock, next_id, i_arr, peak)

        dt = t_next - clock
        acc[3] += dt * n
        acc[7] += dt * n
        if dt > 0.0:
            dec = dt / k
            m = k if k < n else n
            for j in range(m):
                rem[j] -= dec
                if rem[j] < snap:
                    rem[j] = 0.0
        clock = t_next

        if ev == 0:
            s = sizes[i_arr]
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) >> 1
                if rem[mid] <= s:
                    lo = mid + 1
                else:
                    hi = mid
            if n + 1 >= alloc:
                alloc2 = alloc * 2
                rem2 = np.empty(alloc2, dtype=np.float64)
                arr2 = np.empty(alloc2, dtype=np.float64)
                ids2 = np.empty(alloc2, dtype=np.int64)
                rem2[:n] = rem[:n]
                arr2[:n] = arr[:n]
                ids2[:n] = ids[:n]
                rem = rem2
                arr = arr2
                ids = ids2
                alloc = alloc2
            for j in range(n, lo, -1):
                rem[j] = rem[j - 1]
                arr[j] = arr[j - 1]
                ids[j] = ids[j - 1]
            rem[lo] = s
            arr[lo] = clock
            ids[lo] = next_id
            next_id += 1
            n += 1
            i_arr += 1
            if n > peak:
                peak = n
            if n > cap:
                return (2, rem, arr, ids, n, clock, next_id, i_arr, peak)
        elif ev == 2:
            resp = clock - arr[0]
            # identical completion in both coupled systems
            acc[0] += 1.0
            d = resp - acc[1]
            acc[1] += d / acc[0]
            acc[2] += d * (resp - acc[1])
            acc[4] += 1.0
            d = resp - acc[5]
            acc[5] += d / acc[4]
            acc[6] += d * (resp - acc[5])
            for j in range(0, n - 1):
                rem[j] = rem[j + 1]
                arr[j] = arr[j + 1]
                ids[j] = ids[j + 1]
            n -= 1
        # ev == 1: threshold crossing, no structural change; the divergence
        # check at the top of the loop sees the new state


def run_single_arrays(spec, k, arr_times, sizes, ests, initial_jobs,
                      store_responses, cap):
    """Run the fast kernel; returns the same aggregate tuple as the reference
    lane: (count, mean_t, var_t, time_avg_n, peak, end_clock[, responses])."""
    from .engine import UnstableRunError  # local import avoids a cycle

    mode = _mode_of(spec)
    use_est = spec.uses_estimates
    if k > 64:
        raise ValueError("fast lane supports k <= 64")
    init = np.asarray(initial_jobs if initial_jobs else [], dtype=np.float64)
    total_jobs = len(arr_times) + len(init)
    responses = np.empty(total_jobs if store_responses else 0, dtype=np.float64)
    if ests is None:
        ests = np.empty(0, dtype=np.float64)
    eps = spec.eps if spec.eps is not None else 0.0
    n_param = spec.n if spec.n is not None else 1
    if mode == MODE_RS:
        out = _rs_kernel(k, arr_times, sizes, init, store_responses, cap, responses)
    else:
        out = _sorted_kernel(mode, use_est, k, eps, n_param, arr_times, sizes,
                             ests, init, store_responses, cap, responses)
    status, count, mean, m2, area_n, peak, end = out
    if status == STATUS_UNSTABLE:
        raise UnstableRunError(f"number in system exceeded cap {cap} at t={end}")
    var = m2 / (count - 1) if count > 1 else 0.0
    avg_n = area_n / end if end > 0 else 0.0
    result = [count, mean, var, avg_n, peak, end]
    if store_responses:
        result.append(responses[:count])
    else:
        result.append(None)
    return tuple(result)
