"""Response-time aggregation, improvement ratios under common random numbers,
and the brute-force batch oracle."""

from __future__ import annotations

import itertools
import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import t as student_t

from .workload import fmt


class PairingError(ValueError):
    """Improvement ratios require runs with matched workload and seed."""


class SizeLimitError(ValueError):
    pass


class ZeroArrivalError(ValueError):
    pass


@dataclass
class Welford:
    """Streaming mean/variance accumulator."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, x: float):
        self.count += 1
        d = x - self.mean
        self.mean += d / self.count
        self.m2 += d * (x - self.mean)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0


@dataclass
class RunStats:
    """Aggregates of one simulation run; a deterministic function of its
    configuration and seed."""

    policy: str
    dist: str
    lam: float
    k: int
    num_arrivals: int
    seed: int
    sigma: float | None
    job_count: int
    mean_t: float
    var_t: float
    time_avg_n: float
    peak_backlog: int
    total_time: float
    responses: np.ndarray | None = field(default=None, repr=False)

    @property
    def total_response(self) -> float:
        return self.mean_t * self.job_count

    @property
    def fingerprint(self) -> str:
        # everything but the policy: CRN pairing requires identical workload
        sig = "" if self.sigma is None else fmt(self.sigma)
        return (
            f"{self.dist}|lam={fmt(self.lam)}|k={self.k}"
            f"|n={self.num_arrivals}|seed={self.seed}|sigma={sig}"
        )


@dataclass
class Comparison:
    baseline_mean_t: float
    candidate_mean_t: float
    ratio: float
    ci_halfwidth: float | None
    per_seed_ratios: list[float] = field(default_factory=list)


def _ratio(baseline: RunStats, candidate: RunStats) -> float:
    if baseline.fingerprint != candidate.fingerprint:
        raise PairingError(
            f"unpaired runs: {baseline.fingerprint} vs {candidate.fingerprint}"
        )
    return 1.0 - candidate.mean_t / baseline.mean_t


def improvement_ratio(baseline, candidate) -> Comparison:
    """1 - E[T^pi] / E[T^baseline] under common random numbers.

    Accepts a single paired run each, or equal-length lists over seeds; with
    >= 2 seeds a paired-t 95% interval over the per-seed ratios is attached.
    """
    if isinstance(baseline, RunStats):
        baseline, candidate = [baseline], [candidate]
    if len(baseline) != len(candidate) or not baseline:
        raise PairingError("need equal nonempty lists of paired runs")
    ratios = [_ratio(b, c) for b, c in zip(baseline, candidate)]
    base_mean = float(np.mean([b.mean_t for b in baseline]))
    cand_mean = float(np.mean([c.mean_t for c in candidate]))
    mean_ratio = float(np.mean(ratios))
    half = None
    if len(ratios) >= 2:
        sd = float(np.std(ratios, ddof=1))
        half = float(student_t.ppf(0.975, len(ratios) - 1)) * sd / math.sqrt(len(ratios))
    return Comparison(base_mean, cand_mean, mean_ratio, half, ratios)


def batch_oracle(sizes, k) -> float:
    """Exact minimum total response time for a batch of jobs on k servers of
    rate 1/k, by exhaustive search over nonpreemptive priority orders
    (preemption cannot reduce total response time in the batch setting)."""
    sizes = list(sizes)
    if len(sizes) > 8:
        raise SizeLimitError(f"batch oracle limited to 8 jobs, got {len(sizes)}")
    if not sizes:
        return 0.0
    best = math.inf
    for order in itertools.permutations(sizes):
        free = [0.0] * k
        heapq.heapify(free)
        total = 0.0
        for s in order:
            start = heapq.heappop(free)
            done = start + k * s
            total += done
            heapq.heappush(free, done)
        if total < best:
            best = total
    return best


def little_law_gap(stats: RunStats, lam: float) -> float:
    """|lam * mean(T) - time-average N| / time-average N."""
    if stats.job_count == 0:
        raise ZeroArrivalError("no completed jobs in run")
    return abs(lam * stats.mean_t - stats.time_avg_n) / stats.time_avg_n


CSV_COLUMNS = (
    "policy,k,dist,rho,eps,n,sigma,seed,num_arrivals,"
    "mean_t,time_avg_n,improvement_ratio,ci_halfwidth"
)


def _quote(field: str) -> str:
    # minimal CSV quoting: distribution specs carry commas
    if "," in field or '"' in field:
        return '"' + field.replace('"', '""') + '"'
    return field


def csv_row(policy, k, dist, rho, eps, n, sigma, seed, num_arrivals, mean_t,
            time_avg_n, improvement=None, ci=None) -> str:
    def opt(v):
        return "" if v is None else fmt(v)

    return ",".join(
        [
            _quote(policy),
            str(k),
            _quote(dist),
            fmt(rho),
            opt(eps),
            "" if n is None else str(n),
            opt(sigma),
            "" if seed is None else str(seed),
            str(num_arrivals),
            fmt(mean_t),
            fmt(time_avg_n),
            opt(improvement),
            opt(ci),
        ]
    )
