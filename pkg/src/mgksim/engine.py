"""Event-driven simulation kernel for a single M/G/k queue.

Each of the k servers works at rate 1/k, so a job of size x needs kx time in
service.  The kernel is event-driven with analytically computed event times:
completions at clock + k*remaining, threshold crossings at
clock + k*(remaining - level).  Policies are consulted at events only;
between events the served set is constant and served jobs' remaining sizes
decrease linearly.

This module is the reference lane: it handles every policy, supports event
tracing, and is written for clarity.  High-volume runs dispatch to the numba
lane in fast.py, which must agree with this kernel (cross-checked in tests).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import fast
from .policies import SNAP, JobView, PolicySpec, above, parse_policy
from .stats import RunStats, Welford
from .workload import check_stability, draw_workload, parse_dist

INF = math.inf

# Tolerance for "this served job should have exactly zero remaining at its
# completion event"; bounded by clock-scale float error, far below any job size.
COMPLETION_TOL = 1e-6

DEFAULT_CAP = 10_000_000


class KernelLogicError(RuntimeError):
    """An advance overshot a completion: some event was missed."""


class UnstableRunError(RuntimeError):
    pass


ARRIVAL, THRESHOLD, DIFFZERO, COMPLETION = range(4)
KIND_NAMES = {ARRIVAL: "arrival", THRESHOLD: "threshold", DIFFZERO: "diffzero",
              COMPLETION: "completion"}


@dataclass(frozen=True)
class Event:
    time: float
    kind: int
    job_id: int
    level: float | None = None

    @property
    def sort_key(self):
        # simultaneous events: kind order arrival < threshold < diffzero <
        # completion, then job id ascending
        return (self.time, self.kind, self.job_id)


@dataclass
class Job:
    id: int
    size: float
    remaining: float
    arrival_time: float
    estimate: float | None = None
    attained: float = 0.0  # work received, in size units
    completion_time: float | None = None

    @property
    def est_remaining(self) -> float | None:
        if self.estimate is None:
            return None
        return max(self.estimate - self.attained, 0.0)

    def view(self) -> JobView:
        return JobView(self.id, self.size, self.remaining, self.est_remaining)


@dataclass
class SystemState:
    """One queue: jobs sorted by remaining size (ties by id), plus the served
    set chosen by the policy at the last event."""

    k: int
    clock: float = 0.0
    jobs: list[Job] = field(default_factory=list)
    served: frozenset = frozenset()

    def insert(self, job: Job):
        self.jobs.append(job)
        self.jobs.sort(key=lambda j: (j.remaining, j.id))

    def remove(self, job_id: int) -> Job:
        for i, j in enumerate(self.jobs):
            if j.id == job_id:
                return self.jobs.pop(i)
        raise KeyError(job_id)

    def job(self, job_id: int) -> Job:
        for j in self.jobs:
            if j.id == job_id:
                return j
        raise KeyError(job_id)

    def views(self):
        return [j.view() for j in self.jobs]

    def remaining_vector(self):
        return [j.remaining for j in self.jobs]


def advance(state: SystemState, dt: float):
    """Advance the clock by dt with no event strictly inside the interval:
    every served job's remaining size drops by dt/k."""
    if dt < 0:
        raise KernelLogicError(f"negative advance dt={dt}")
    if dt > 0:
        dec = dt / state.k
        for j in state.jobs:
            if j.id in state.served:
                j.remaining -= dec
                j.attained += dec
                if j.remaining < -COMPLETION_TOL:
                    raise KernelLogicError(
                        f"job {j.id} remaining {j.remaining} < 0 after advance: "
                        "missed completion event"
                    )
                if j.remaining < SNAP:
                    j.remaining = 0.0
        state.jobs.sort(key=lambda j: (j.remaining, j.id))
    state.clock += dt
    return state


def _ordering_key(spec: PolicySpec):
    if spec.uses_estimates:
        return lambda j: (j.est_remaining, j.id)
    return lambda j: (j.remaining, j.id)


def _onset_crossing(state: SystemState, spec: PolicySpec) -> Event | None:
    """The next threshold crossing that can change the policy's selection.

    Only the k-th smallest served job crossing the level eps can newly satisfy
    an except-k+1 condition; crossings that merely exit a condition are
    irrelevant because the except pattern persists until the next arrival or
    completion.
    """
    if spec.kind not in ("sek", "sekn", "fullsek", "sek-est"):
        return None
    k = state.k
    n = len(state.jobs)
    n_limit = spec.n if spec.kind == "sekn" else 1
    if not (k < n <= k + n_limit):
        return None
    order = sorted(state.jobs, key=_ordering_key(spec))
    # only from plain shortest-first service: an active except pattern
    # registers no further crossings until an arrival or completion
    prefix = frozenset(j.id for j in order[:k])
    if state.served != prefix:
        return None
    key = (lambda j: j.est_remaining) if spec.uses_estimates else (lambda j: j.remaining)
    kth = order[k - 1]
    if not above(key(kth), spec.eps):
        return None
    dv = key(kth) - spec.eps
    if spec.kind == "fullsek":
        # at the crossing all smaller served jobs sit dv lower; they must
        # still be inside [eps', eps], and the largest inside [x, y]
        if key(order[0]) - dv < spec.epsp - SNAP:
            return None
        largest = key(order[-1])
        if not (spec.x - SNAP <= largest <= spec.y + SNAP):
            return None
    return Event(state.clock + state.k * dv, THRESHOLD, kth.id, spec.eps)


def next_event(state: SystemState, spec: PolicySpec,
               next_arrival: float = INF, next_id: int = -1) -> Event | None:
    """The earliest pending event: the next arrival, the earliest completion
    among served jobs, or a policy-registered threshold crossing."""
    best = None
    if next_arrival < INF:
        best = Event(next_arrival, ARRIVAL, next_id)
    for j in state.jobs:
        if j.id in state.served:
            ev = Event(state.clock + state.k * j.remaining, COMPLETION, j.id)
            if best is None or ev.sort_key < best.sort_key:
                best = ev
    cross = _onset_crossing(state, spec)
    if cross is not None and (best is None or cross.sort_key < best.sort_key):
        best = cross
    return best


class TraceWriter:
    """Newline-delimited JSON event trace for debugging and replay tests."""

    def __init__(self, fh):
        self.fh = fh

    def record(self, state: SystemState, ev: Event):
        self.fh.write(
            json.dumps(
                {
                    "t": ev.time,
                    "kind": KIND_NAMES[ev.kind],
                    "job": ev.job_id,
                    "rem": state.remaining_vector(),
                },
                separators=(",", ":"),
            )
            + "\n"
        )


def run_single(policy, dist, lam, k, num_arrivals, seed, *,
               sigma=None, initial_jobs=None, store_responses=False,
               cap=DEFAULT_CAP, trace=None, lane="auto",
               warn_unstable=True) -> RunStats:
    """Simulate num_arrivals Poisson arrivals (plus optional initial batch)
    and run until all jobs depart.  Deterministic in all inputs and seed."""
    spec = parse_policy(policy) if isinstance(policy, str) else policy
    model = parse_dist(dist) if isinstance(dist, str) else dist
    if num_arrivals < 1 and not initial_jobs:
        raise ValueError("need num_arrivals >= 1 or an initial batch")
    if k < 1:
        raise ValueError("k must be >= 1")
    if num_arrivals > 0 and warn_unstable:
        check_stability(model, lam)
    want_est = sigma is not None or spec.uses_estimates
    eff_sigma = sigma if sigma is not None else (0.0 if spec.uses_estimates else None)
    times, sizes, ests = draw_workload(
        model, lam if num_arrivals else 1.0, num_arrivals, seed,
        sigma=eff_sigma if want_est else None,
    )
    use_fast = lane == "fast" or (
        lane == "auto" and fast.supports(spec) and trace is None
    )
    if use_fast:
        out = fast.run_single_arrays(
            spec, k, times, sizes, ests, initial_jobs, store_responses, cap
        )
    else:
        out = _run_reference(
            spec, k, times, sizes, ests, initial_jobs, store_responses, cap, trace
        )
    count, mean_t, var_t, avg_n, peak, end = out[:6]
    responses = out[6] if store_responses else None
    return RunStats(
        policy=spec.spec_str(),
        dist=model.spec_str(),
        lam=lam,
        k=k,
        num_arrivals=num_arrivals,
        seed=seed,
        sigma=eff_sigma,
        job_count=count,
        mean_t=mean_t,
        var_t=var_t,
        time_avg_n=avg_n,
        peak_backlog=peak,
        total_time=end,
        responses=responses,
    )


def _run_reference(spec, k, times, sizes, ests, initial_jobs,
                   store_responses, cap, trace):
    state = SystemState(k=k)
    next_id = 0
    if initial_jobs:
        for s in initial_jobs:
            est = s if (ests is not None or spec.uses_estimates) else None
            state.insert(Job(next_id, s, s, 0.0, estimate=est))
            next_id += 1
    n_arr = len(times)
    i_arr = 0
    welford = Welford()
    responses = [] if store_responses else None
    area_n = 0.0
    peak = len(state.jobs)
    state.served = spec.select(state.views(), k)
    while True:
        nxt = times[i_arr] if i_arr < n_arr else INF
        ev = next_event(state, spec, nxt, next_id)
        if ev is None:
            break
        dt = ev.time - state.clock
        area_n += dt * len(state.jobs)
        advance(state, dt)
        if ev.kind == ARRIVAL:
            s = float(sizes[i_arr])
            est = float(ests[i_arr]) if ests is not None else None
            state.insert(Job(next_id, s, s, ev.time, estimate=est))
            next_id += 1
            i_arr += 1
            if len(state.jobs) > cap:
                raise UnstableRunError(
                    f"number in system exceeded cap {cap} at t={ev.time}"
                )
        elif ev.kind == COMPLETION:
            job = state.job(ev.job_id)
            if abs(job.remaining) > COMPLETION_TOL:
                raise KernelLogicError(
                    f"completion of job {job.id} with remaining {job.remaining}"
                )
            state.remove(job.id)
            job.completion_time = ev.time
            resp = ev.time - job.arrival_time
            welford.add(resp)
            if responses is not None:
                responses.append(resp)
        # threshold events change nothing structurally; selection re-runs
        state.served = spec.select(state.views(), k)
        if trace is not None:
            trace.record(state, ev)
        if len(state.jobs) > peak:
            peak = len(state.jobs)
    end = state.clock
    mean_t = welford.mean
    var_t = welford.variance
    avg_n = area_n / end if end > 0 else 0.0
    resp_arr = np.array(responses) if responses is not None else None
    return welford.count, mean_t, var_t, avg_n, peak, end, resp_arr
