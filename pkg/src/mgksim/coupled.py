"""Coupled simulation of SEK-SMOD against SRPT-k on identical arrivals.

Runs both systems on one shared pre-drawn arrival stream, maintains the
padded joint state, detects divergence episodes, applies SMOD once a
post-divergence arrival occurs, and asserts the whole worst-case property
suite at every event while the systems differ.  While the systems are merged
they are a single SRPT-k queue by construction, so the merged phase runs in
the fast kernel and every check there is vacuously satisfied.

Checker violations are never swallowed: the run aborts at the first one and
returns a structured report with replayable context.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import fast
from .policies import SNAP
from .stats import RunStats
from .workload import (
    check_stability,
    draw_workload,
    fmt,
    parse_dist,
    prob_in_band,
    relevant_load,
)

# State-identity and assertion tolerances.  Event times live on a clock up to
# ~1e7 where one ulp is ~2e-9; remaining sizes of the two coupled copies of a
# job drift apart by a few ulp per differential-service segment, so merge
# snapping needs ~1e-7 and inequality checks ~1e-6 of slack.  Genuine
# violations appear at the scale of eps or job sizes, orders of magnitude
# above both.
MERGE_EPS = 1e-7
CHECK_TOL = 1e-6

DEFAULT_CAP = 10_000_000


class InvalidXError(ValueError):
    """x has zero band mass: P(S in [x, 2x]) = 0."""


class Phase(str, Enum):
    MERGED = "merged"
    SEK = "sek"
    SMOD = "smod"


class Scenario(str, Enum):
    GOOD = "good"
    BAD = "bad"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class ParamSet:
    """Coupling parameters plus the scenario-analysis constants they imply."""

    x: float
    y: float
    eps: float
    epsp: float
    c1: float
    c2: float
    c3: float
    c4: float
    rho_le_y: float

    def __post_init__(self):
        if not self.y == 2 * self.x:
            raise ValueError("y must equal 2x")
        if not 0 < self.eps <= self.x / 6 + 1e-15:
            raise ValueError(f"need 0 < eps <= x/6, got eps={self.eps}, x={self.x}")
        if not self.epsp == self.eps / 2:
            raise ValueError("eps' must equal eps/2")

    @property
    def improvement_lower_bound(self) -> float:
        # per-divergence expected IND is at least eps*c3*c4 - eps^2*c1*c2
        return self.eps * self.c3 * self.c4 - self.eps**2 * self.c1 * self.c2


def derive_parameters(lam, model, k, x, eps=None) -> ParamSet:
    """Compute the full parameterization for a given (lam, S, k, x).

    With eps=None the proof-regime threshold min(x/6, c3*c4/(2*c1*c2)) is
    used; passing eps selects the practical regime (eps <= x/6 enforced).
    """
    if isinstance(model, str):
        model = parse_dist(model)
    if k < 2:
        raise ValueError("coupled analysis requires k >= 2")
    band = prob_in_band(model, x)
    if band <= 0:
        raise InvalidXError(f"P(S in [{x}, {2 * x}]) = 0")
    y = 2.0 * x
    rho_le_y = relevant_load(model, lam, y)
    if rho_le_y >= 1:
        raise ValueError(f"relevant load rho_<=y = {rho_le_y:.4g} >= 1")
    c1 = 2.0 * k * lam
    c2 = k * (lam * ((k + 1) * y + k * x / 6.0) / (1.0 - rho_le_y) + k + 2)
    c3 = ((lam * k * x / 3.0) ** k * math.exp(-lam * k * (y + 8.0 * x / 3.0))
          / math.factorial(k)) * band**k
    c4 = k / 2.0
    if eps is None:
        eps = min(x / 6.0, c3 * c4 / (2.0 * c1 * c2))
    return ParamSet(x=x, y=y, eps=eps, epsp=eps / 2.0, c1=c1, c2=c2, c3=c3,
                    c4=c4, rho_le_y=rho_le_y)


# ---------------------------------------------------------------------------
# joint-state descriptor and its invariants


def pad_states(rA, rB):
    """Front-pad the shorter sorted vector with zeros so both have the same
    length; returns (bA, bB, d) with d the number of padding indices."""
    rA, rB = list(rA), list(rB)
    for r in (rA, rB):
        if any(r[i] > r[i + 1] for i in range(len(r) - 1)):
            raise ValueError("state vectors must be sorted ascending")
        if any(v <= 0 for v in r):
            raise ValueError("state vectors must be strictly positive")
    return _pad_floats(rA, rB)


def _pad_floats(rA, rB):
    d = abs(len(rA) - len(rB))
    if len(rA) < len(rB):
        return [0.0] * d + list(rA), list(rB), d
    return list(rA), [0.0] * d + list(rB), d


@dataclass
class JointState:
    """Padded pair of state vectors: bA is the SEK-SMOD (or SMOD) side, bB
    the SRPT-k side."""

    bA: list
    bB: list
    d: int
    clock: float = 0.0
    phase: Phase = Phase.MERGED
    last_divergence: float | None = None
    arrivals_since_divergence: int = 0

    @classmethod
    def from_raw(cls, rA, rB, **kw):
        bA, bB, d = pad_states(rA, rB)
        return cls(bA=bA, bB=bB, d=d, **kw)

    @property
    def work_a(self):
        return sum(self.bA)

    @property
    def work_b(self):
        return sum(self.bB)

    def raw_a(self):
        # padding zeros sit only at the front; real jobs are strictly positive
        return [v for v in self.bA if v > 0.0]

    def raw_b(self):
        return [v for v in self.bB if v > 0.0]


def _diffs(joint: JointState):
    return [a - b for a, b in zip(joint.bA, joint.bB)]


def pos_part(joint: JointState) -> float:
    """r+ = sum of positive components of bA - bB."""
    return sum(max(dv, 0.0) for dv in _diffs(joint))


def neg_part(joint: JointState) -> float:
    """r- = sum of |negative components| of bA - bB."""
    return sum(-min(dv, 0.0) for dv in _diffs(joint))


def check_dominance(joint: JointState, tol=CHECK_TOL) -> bool:
    """bA <= bB componentwise, equivalently r+ = 0."""
    return all(a <= b + tol for a, b in zip(joint.bA, joint.bB))


def check_zigzag(joint: JointState, tol=CHECK_TOL) -> bool:
    """bA_i <= bB_{i+1} for all i below the top index."""
    bA, bB = joint.bA, joint.bB
    return all(bA[i] <= bB[i + 1] + tol for i in range(len(bA) - 1))


def check_pln(joint: JointState, tol=CHECK_TOL) -> bool:
    """Every positive-diff index precedes every negative-diff index
    (vacuously true if either set is empty)."""
    last_pos = -1
    first_neg = None
    for i, dv in enumerate(_diffs(joint)):
        if dv > tol:
            last_pos = i
        elif dv < -tol and first_neg is None:
            first_neg = i
    if first_neg is None or last_pos == -1:
        return True
    return last_pos < first_neg


def _smod_positions(remA, remB, k):
    """Def-3.3 selection on raw sorted vectors; 0-based positions into remA.

    With no job surplus SMOD matches SRPT-k on its own state.  Otherwise the
    k+d smallest SMOD jobs are eligible; zero-or-positive-difference indices
    (padding included) get high priority, and any remaining servers fill with
    the least-remaining negative-difference eligible jobs.
    """
    nA, nB = len(remA), len(remB)
    m = min(k, nA)
    if nA <= nB or nA <= k:
        return list(range(m))
    d = nA - nB
    elig = min(k + d, nA)
    nonneg = []
    neg = []
    for i in range(elig):
        bB = 0.0 if i < d else remB[i - d]
        if remA[i] - bB >= -SNAP:
            nonneg.append(i)
        else:
            neg.append(i)
    if len(nonneg) >= k:
        return nonneg[:k]
    return nonneg + neg[: k - len(nonneg)]


def _sek_positions(rem, k, p: ParamSet):
    """Def-3.2 selection on one sorted vector; 0-based positions into rem."""
    n = len(rem)
    if (
        n == k + 1
        and rem[0] >= p.epsp - SNAP
        and rem[k - 1] <= p.eps + SNAP
        and p.x - SNAP <= rem[k] <= p.y + SNAP
    ):
        return list(range(k - 1)) + [k]
    return list(range(min(k, n)))


def smod_select(joint: JointState, k: int) -> frozenset:
    """SMOD's served set as 0-based positions into the SMOD side's real
    (unpadded) job vector."""
    return frozenset(_smod_positions(joint.raw_a(), joint.raw_b(), k))


def sek_smod_select(joint: JointState, k: int, params: ParamSet) -> frozenset:
    """Phase-dependent selection for the SEK-SMOD side: FullSEK while merged
    or before any post-divergence arrival, SMOD afterwards."""
    if joint.phase in (Phase.MERGED, Phase.SEK):
        return frozenset(_sek_positions(joint.raw_a(), k, params))
    return frozenset(_smod_positions(joint.raw_a(), joint.raw_b(), k))


def classify_scenario(t_div, b_largest, params: ParamSet, k, arrival_times,
                      arrival_sizes) -> Scenario:
    """Good/Bad/Neutral classification of the arrival pattern following a
    divergence at t_div whose largest job had remaining size b_largest."""
    times = arrival_times
    x = params.x

    def span(lo, hi, closed_hi=True):
        i0 = np.searchsorted(times, lo, side="right")
        i1 = np.searchsorted(times, hi, side="right" if closed_hi else "left")
        return int(i0), int(i1)

    i0, i1 = span(t_div, t_div + 2 * k * params.eps)
    if i1 > i0:
        return Scenario.BAD
    w1_end = t_div + k * (b_largest - 2 * x / 3.0)
    w2_end = t_div + k * (b_largest - x / 3.0)
    horizon = t_div + k * (b_largest + 2 * x)
    i0, i1 = span(t_div, w1_end)
    if i1 == i0:
        j0, j1 = span(w1_end, w2_end)
        if j1 - j0 == k and all(
            x <= arrival_sizes[j] <= 2 * x for j in range(j0, j1)
        ):
            h0, h1 = span(w2_end, horizon, closed_hi=False)
            if h1 == h0:
                return Scenario.GOOD
    return Scenario.NEUTRAL


@dataclass
class DivergenceRecord:
    """One divergence episode of the coupled run."""

    t_div: float
    snapshot: tuple
    scenario: Scenario | None = None
    delta: float = 0.0
    t_dom: float | None = None
    t_merge: float | None = None
    arrivals_before_dom: int = 0
    max_job_completion_time: float | None = None


@dataclass
class Violation:
    check: str
    time: float
    message: str
    context: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {"check": self.check, "time": self.time,
                   "message": self.message}
        payload.update(self.context)
        return json.dumps(payload, separators=(",", ":"))


@dataclass
class CoupledResult:
    stats_a: RunStats
    stats_b: RunStats
    records: list
    violations: list
    aborted: bool = False

    @property
    def num_divergences(self) -> int:
        return len(self.records)

    def scenario_counts(self) -> dict:
        out = {s.value: 0 for s in Scenario}
        for r in self.records:
            out[r.scenario.value] += 1
        return out


class _Halt(Exception):
    pass


def _unstable(cap, t):
    from .engine import UnstableRunError

    return UnstableRunError(f"number in system exceeded cap {cap} at t={t}")


class CoupledRun:
    """Driver for one coupled run; see run_coupled."""

    def __init__(self, model, lam, k, params, num_arrivals, seed,
                 assert_level="full", arrivals=None, initial_jobs=None,
                 cap=DEFAULT_CAP, collect_records=True):
        self.model = parse_dist(model) if isinstance(model, str) else model
        self.lam = lam
        self.k = k
        self.p = params
        self.num_arrivals = num_arrivals
        self.seed = seed
        if assert_level not in ("off", "cheap", "full"):
            raise ValueError(f"bad assert level {assert_level!r}")
        self.assert_level = assert_level
        self.cap = cap
        self.collect_records = collect_records
        if arrivals is not None:
            self.times = np.asarray(arrivals[0], dtype=np.float64)
            self.sizes = np.asarray(arrivals[1], dtype=np.float64)
        else:
            self.times, self.sizes, _ = draw_workload(
                self.model, lam, num_arrivals, seed
            )
        self.initial_jobs = sorted(initial_jobs) if initial_jobs else []

    def run(self) -> CoupledResult:
        # acc layout: countA, meanA, m2A, areaA, countB, meanB, m2B, areaB
        self.acc = np.zeros(8, dtype=np.float64)
        self.peak_a = self.peak_b = len(self.initial_jobs)
        self.records = []
        self.violations = []
        self.record = None
        self.i_arr = 0
        self.clock = 0.0
        self.next_id = 0

        alloc = 1024
        while alloc < len(self.initial_jobs) + 16:
            alloc *= 2
        rem = np.empty(alloc, dtype=np.float64)
        arr = np.empty(alloc, dtype=np.float64)
        ids = np.empty(alloc, dtype=np.int64)
        for i, s in enumerate(self.initial_jobs):
            rem[i] = s
            arr[i] = 0.0
            ids[i] = self.next_id
            self.next_id += 1
        n = len(self.initial_jobs)

        aborted = False
        try:
            while True:
                out = fast.merged_until_divergence(
                    rem, arr, ids, n, self.clock, self.next_id, self.times,
                    self.sizes, self.i_arr, self.k, self.p.epsp, self.p.eps,
                    self.p.x, self.p.y, self.acc, self.cap,
                )
                (reason, rem, arr, ids, n, self.clock, self.next_id,
                 self.i_arr, pk) = out
                self.peak_a = max(self.peak_a, pk)
                self.peak_b = max(self.peak_b, pk)
                if reason == 0:
                    break
                if reason == 2:
                    raise _unstable(self.cap, self.clock)
                rem, arr, ids, n = self._episode(rem, arr, ids, n)
        except _Halt:
            aborted = True

        return CoupledResult(
            stats_a=self._stats("sek-smod", self.acc[0:4], self.peak_a),
            stats_b=self._stats("srpt", self.acc[4:8], self.peak_b),
            records=self.records,
            violations=self.violations,
            aborted=aborted,
        )

    def _stats(self, policy, acc, peak) -> RunStats:
        count = int(acc[0])
        return RunStats(
            policy=policy,
            dist=self.model.spec_str(),
            lam=self.lam,
            k=self.k,
            num_arrivals=self.num_arrivals,
            seed=self.seed,
            sigma=None,
            job_count=count,
            mean_t=acc[1],
            var_t=acc[2] / (count - 1) if count > 1 else 0.0,
            time_avg_n=acc[3] / self.clock if self.clock > 0 else 0.0,
            peak_backlog=peak,
            total_time=self.clock,
        )

    def _violate(self, check, message, **context):
        base = {
            "seed": self.seed,
            "dist": self.model.spec_str(),
            "lam": self.lam,
            "k": self.k,
            "eps": self.p.eps,
            "x": self.p.x,
            "phase": self.phase.value if self.record else Phase.MERGED.value,
            "t_div": self.record.t_div if self.record else None,
            "bA": list(getattr(self, "remA", [])),
            "bB": list(getattr(self, "remB", [])),
        }
        base.update(context)
        self.violations.append(Violation(check, self.clock, message, base))
        raise _Halt

    # -- one divergence episode ---------------------------------------------

    def _episode(self, rem, arr, ids, n):
        """Run the joint system from a divergence starting state until merge;
        returns the reunified (rem, arr, ids, n)."""
        k = self.k
        self.remA = [float(v) for v in rem[:n]]
        self.arrA = [float(v) for v in arr[:n]]
        self.idA = [int(v) for v in ids[:n]]
        self.remB = list(self.remA)
        self.arrB = list(self.arrA)
        self.idB = list(self.idA)
        self.phase = Phase.SEK
        self.arrivals_since = 0
        self.record = DivergenceRecord(t_div=self.clock,
                                       snapshot=tuple(self.remA))
        self._watch_job = self.idB[-1]  # SRPT-side copy of the largest job
        self._watch_completed = False
        had_dom = False
        r_plus_prev = None  # armed on entering the SMOD phase

        while True:
            servedA = self._select_a()
            servedB = list(range(min(k, len(self.remB))))

            t_next, kinds = self._next_joint_event(servedA, servedB)
            dt = t_next - self.clock
            if dt < -CHECK_TOL:
                self._violate("kernel", f"event time regressed by {dt}")
            nA, nB = len(self.remA), len(self.remB)
            self.record.delta += (nB - nA) * dt
            self.acc[3] += dt * nA
            self.acc[7] += dt * nB
            self._advance(self.remA, servedA, dt)
            self._advance(self.remB, servedB, dt)
            self.clock = t_next

            structural = False
            if "arrival" in kinds:
                s = float(self.sizes[self.i_arr])
                self._insert(self.remA, self.arrA, self.idA, s)
                self._insert(self.remB, self.arrB, self.idB, s)
                self.next_id += 1
                self.i_arr += 1
                self.arrivals_since += 1
                if self.phase is Phase.SEK:
                    self.phase = Phase.SMOD
                structural = True
                if max(len(self.remA), len(self.remB)) > self.cap:
                    raise _unstable(self.cap, self.clock)
            done_a = self._complete(self.remA, self.arrA, self.idA,
                                    servedA, 0)
            done_b = self._complete(self.remB, self.arrB, self.idB,
                                    servedB, 4, watch=True)
            structural = structural or done_a or done_b
            self._resort(self.remA, self.arrA, self.idA)
            self._resort(self.remB, self.arrB, self.idB)
            self.peak_a = max(self.peak_a, len(self.remA))
            self.peak_b = max(self.peak_b, len(self.remB))

            if self._try_merge():
                self.record.t_merge = self.clock
                if self.record.t_dom is None:
                    self.record.t_dom = self.clock
                    self.record.arrivals_before_dom = self.arrivals_since
                self._close_record()
                break

            joint = self._joint()
            dom = check_dominance(joint, tol=MERGE_EPS)
            if dom and self.record.t_dom is None:
                self.record.t_dom = self.clock
                self.record.arrivals_before_dom = self.arrivals_since
            if had_dom and not dom:
                self._violate("dominance_persistence",
                              "dominance lost before merge")
            had_dom = had_dom or dom

            if self._watch_completed:
                self._watch_completed = False
                self.record.max_job_completion_time = self.clock
                if not dom:
                    self._violate(
                        "dominance_by_max_job_completion",
                        "largest-at-divergence job completed on the SRPT-k "
                        "side before dominance or merge",
                    )

            if self.assert_level == "full" or (
                self.assert_level == "cheap" and structural
            ):
                self._check_suite(joint)
                if self.phase is Phase.SMOD:
                    r_plus = pos_part(joint)
                    if (r_plus_prev is not None
                            and r_plus > r_plus_prev + CHECK_TOL):
                        self._violate(
                            "r_plus_monotone",
                            f"r+ grew within SMOD phase: "
                            f"{r_plus_prev} -> {r_plus}",
                        )
                    r_plus_prev = r_plus

        n = len(self.remA)
        while n + 16 >= rem.shape[0]:
            rem = np.concatenate([rem, np.empty_like(rem)])
            arr = np.concatenate([arr, np.empty_like(arr)])
            ids = np.concatenate([ids, np.empty_like(ids)])
        rem[:n] = self.remA
        arr[:n] = self.arrA
        ids[:n] = self.idA
        return rem, arr, ids, n

    # -- helpers -------------------------------------------------------------

    def _select_a(self):
        if self.phase is Phase.SEK:
            return _sek_positions(self.remA, self.k, self.p)
        return _smod_positions(self.remA, self.remB, self.k)

    def _next_joint_event(self, servedA, servedB):
        """Earliest pending event time over both systems plus the kinds due
        then.  Tie order: arrival < diffzero-class < completion; threshold
        crossings cannot arise while diverged (x >= 6 eps keeps the served
        largest strictly above the parked band during the SEK pattern, and
        SMOD registers only diff-zero and order crossings)."""
        k = self.k
        INF = math.inf
        t_arr = self.times[self.i_arr] if self.i_arr < len(self.times) else INF
        t_comp = INF
        for pos in servedA:
            t = self.clock + k * self.remA[pos]
            if t < t_comp:
                t_comp = t
        for pos in servedB:
            t = self.clock + k * self.remB[pos]
            if t < t_comp:
                t_comp = t
        t_dz = INF
        nA, nB = len(self.remA), len(self.remB)
        if nA > nB and nA > k:
            d = nA - nB
            elig = min(k + d, nA)
            servedA_set = set(servedA)
            b_served = set(range(d, d + min(k, nB)))
            for i in range(elig):
                if i in servedA_set:
                    continue
                bB = 0.0 if i < d else self.remB[i - d]
                diff = self.remA[i] - bB
                if diff < -SNAP and i in b_served:
                    t = self.clock + k * (-diff)
                    if t < t_dz:
                        t_dz = t
                # a served job above an omitted one can sink to its level,
                # relabeling indices and hence priority classes
                for jpos in servedA:
                    if jpos > i and self.remA[jpos] > self.remA[i]:
                        t = self.clock + k * (self.remA[jpos] - self.remA[i])
                        if t < t_dz:
                            t_dz = t
        if t_arr == INF and t_comp == INF and t_dz == INF:
            self._violate("kernel", "no pending events while diverged")
        t_next = min(t_arr, t_dz, t_comp)
        kinds = set()
        if t_arr == t_next:
            kinds.add("arrival")
        if t_dz == t_next:
            kinds.add("diffzero")
        if t_comp == t_next:
            kinds.add("completion")
        return t_next, kinds

    def _advance(self, remv, served, dt):
        if dt <= 0:
            return
        dec = dt / self.k
        for pos in served:
            remv[pos] -= dec
            if remv[pos] < -CHECK_TOL:
                self._violate("kernel",
                              f"remaining {remv[pos]} < 0 after advance")
            if remv[pos] < SNAP:
                remv[pos] = 0.0

    def _insert(self, remv, arrv, idv, s):
        lo, hi = 0, len(remv)
        while lo < hi:
            mid = (lo + hi) >> 1
            if remv[mid] <= s:
                lo = mid + 1
            else:
                hi = mid
        remv.insert(lo, s)
        arrv.insert(lo, self.clock)
        idv.insert(lo, self.next_id)

    def _complete(self, remv, arrv, idv, served, off, watch=False):
        done = [pos for pos in served if remv[pos] == 0.0]
        if not done:
            return False
        acc = self.acc
        for pos in sorted(done, reverse=True):
            resp = self.clock - arrv[pos]
            acc[off] += 1.0
            d = resp - acc[off + 1]
            acc[off + 1] += d / acc[off]
            acc[off + 2] += d * (resp - acc[off + 1])
            if watch and idv[pos] == self._watch_job:
                self._watch_completed = True
            del remv[pos]
            del arrv[pos]
            del idv[pos]
        return True

    def _resort(self, remv, arrv, idv):
        order = sorted(range(len(remv)), key=lambda i: (remv[i], idv[i]))
        if order != list(range(len(remv))):
            remv[:] = [remv[i] for i in order]
            arrv[:] = [arrv[i] for i in order]
            idv[:] = [idv[i] for i in order]

    def _try_merge(self):
        if len(self.remA) != len(self.remB):
            return False
        if any(abs(a - b) > MERGE_EPS for a, b in zip(self.remA, self.remB)):
            return False
        # unify the copies so float drift does not accumulate across episodes
        self.remB = list(self.remA)
        self.arrB = list(self.arrA)
        self.idB = list(self.idA)
        self.phase = Phase.MERGED
        return True

    def _joint(self) -> JointState:
        bA, bB, d = _pad_floats(self.remA, self.remB)
        return JointState(
            bA=bA, bB=bB, d=d, clock=self.clock, phase=self.phase,
            last_divergence=self.record.t_div,
            arrivals_since_divergence=self.arrivals_since,
        )

    def _check_suite(self, joint: JointState):
        n = len(joint.bA)
        tol = CHECK_TOL * max(1.0, n / 16.0)
        if joint.work_a > joint.work_b + tol:
            self._violate("work_inequality",
                          f"W_sekmod={joint.work_a} > W_srpt={joint.work_b}")
        if len(self.remA) - len(self.remB) > 1:
            self._violate(
                "n_difference",
                f"N_sekmod - N_srpt = {len(self.remA) - len(self.remB)} > 1",
            )
        if not check_zigzag(joint):
            self._violate("zigzag", "zig-zag matching violated")
        if not check_pln(joint):
            self._violate("pln", "positive-less-than-negative violated")
        r_plus = pos_part(joint)
        if r_plus > self.p.eps + tol:
            self._violate("r_plus_bound",
                          f"r+ = {r_plus} > eps = {self.p.eps}")
        if not self.remB and self.remA:
            self._violate("renewal_soundness",
                          "SRPT-k side empty while SEK-SMOD side is not")

    def _close_record(self):
        rec = self.record
        rec.scenario = classify_scenario(
            rec.t_div, rec.snapshot[-1], self.p, self.k, self.times, self.sizes
        )
        if self.assert_level != "off":
            bound = -self.k * self.p.eps * (self.k + 2 + rec.arrivals_before_dom)
            if rec.delta < bound - CHECK_TOL:
                self._violate("ind_per_job",
                              f"delta {rec.delta} below bound {bound}",
                              scenario=rec.scenario.value)
            if rec.scenario in (Scenario.GOOD, Scenario.NEUTRAL) and (
                rec.delta < -CHECK_TOL
            ):
                self._violate(
                    "pathwise_nonnegative",
                    f"{rec.scenario.value} episode with delta {rec.delta} < 0",
                )
        if self.collect_records:
            self.records.append(rec)


def run_coupled(model, lam, k, params, num_arrivals, seed, assert_level="full",
                arrivals=None, initial_jobs=None, cap=DEFAULT_CAP,
                collect_records=True, warn_unstable=True) -> CoupledResult:
    """Simulate SEK-SMOD and SRPT-k on an identical arrival stream, asserting
    the worst-case property suite at every event while the systems differ.

    params may come from derive_parameters (proof regime) or carry a
    user-chosen eps (practical regime).  arrivals may be an explicit
    (times, sizes) pair for hand-built traces and fuzzing.
    """
    if warn_unstable and num_arrivals and arrivals is None:
        check_stability(
            parse_dist(model) if isinstance(model, str) else model, lam
        )
    run = CoupledRun(model, lam, k, params, num_arrivals, seed, assert_level,
                     arrivals, initial_jobs, cap, collect_records)
    return run.run()


def records_to_csv(records, k, path):
    """Divergence ledger: one row per episode."""
    cols = ["t_div"] + [f"b{i + 1}" for i in range(k + 1)] + [
        "scenario", "delta", "t_dom_minus_t_div", "t_merge_minus_t_div",
        "arrivals_before_dom",
    ]
    lines = [",".join(cols)]
    for r in records:
        row = [fmt(r.t_div)]
        row += [fmt(v) for v in r.snapshot]
        row += [
            r.scenario.value,
            fmt(r.delta),
            fmt(r.t_dom - r.t_div),
            fmt(r.t_merge - r.t_div),
            str(r.arrivals_before_dom),
        ]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def violations_to_ndjson(violations, path):
    with open(path, "w") as fh:
        for v in violations:
            fh.write(v.to_json() + "\n")
