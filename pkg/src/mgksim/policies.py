"""Scheduling policies as pure selection functions.

Each selector maps a collection of jobs (plus policy parameters) to the set
of job ids to serve.  Ties in any priority key break by job id ascending.
Selectors are consulted by the engine at events only; between events the
served set is constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

# Threshold comparisons are widened by SNAP so that a job whose remaining size
# reaches a registered level via an exactly-computed crossing event lands on
# the "below" side despite float rounding.  The spec's interval endpoints are
# measure-zero under continuous size distributions.
SNAP = 1e-9


class JobView(NamedTuple):
    id: int
    size: float
    remaining: float
    est_remaining: float | None = None


def below(v, level):
    return v < level + SNAP


def above(v, level):
    return v > level + SNAP


def in_band(v, lo, hi):
    return lo - SNAP <= v <= hi + SNAP


class ConfigurationError(ValueError):
    pass


def _k_smallest(jobs, k, key):
    order = sorted(jobs, key=lambda j: (key(j), j.id))
    return frozenset(j.id for j in order[: min(k, len(order))])


def select_srpt_k(jobs, k) -> frozenset:
    """The min(k, n) jobs of least remaining size."""
    return _k_smallest(jobs, k, lambda j: j.remaining)


def select_psjf_k(jobs, k) -> frozenset:
    """The min(k, n) jobs of least original size."""
    return _k_smallest(jobs, k, lambda j: j.size)


def select_rs_k(jobs, k) -> frozenset:
    """The min(k, n) jobs of least remaining x original size."""
    return _k_smallest(jobs, k, lambda j: j.remaining * j.size)


def _except_pattern(order, k):
    """Serve the k-1 smallest plus the largest, skipping the k-th smallest."""
    return frozenset(j.id for j in order[: k - 1]) | {order[-1].id}


def select_practical_sek(jobs, k, eps) -> frozenset:
    """SRPT-k, except with exactly k+1 jobs present, k of them below eps and
    the largest above eps: serve the k-1 smallest plus the largest."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    order = sorted(jobs, key=lambda j: (j.remaining, j.id))
    n = len(order)
    if n == k + 1:
        n_below = sum(1 for j in order if below(j.remaining, eps))
        if n_below == k and above(order[-1].remaining, eps):
            return _except_pattern(order, k)
    return frozenset(j.id for j in order[: min(k, n)])


def select_sek_n(jobs, k, eps, n) -> frozenset:
    """SEK-n: with at most k+n jobs present, exactly k below eps and all others
    above eps, serve the k-1 smallest plus the (k+1)-st smallest, skipping the
    job of k-th least remaining size.  SEK-1 coincides with Practical SEK."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    if not n >= 1:
        raise ValueError("n must be >= 1")
    order = sorted(jobs, key=lambda j: (j.remaining, j.id))
    m = len(order)
    if k < m <= k + n:
        n_below = sum(1 for j in order if below(j.remaining, eps))
        n_above = sum(1 for j in order if above(j.remaining, eps))
        if n_below == k and n_above == m - k:
            return frozenset(j.id for j in order[: k - 1]) | {order[k].id}
    return frozenset(j.id for j in order[: min(k, m)])


def select_full_sek(jobs, k, epsp, eps, x, y) -> frozenset:
    """The fully parameterized except-k+1 rule: with exactly k+1 jobs present,
    k of them with remaining in [epsp, eps] and the largest in [x, y], serve
    the k-1 smallest plus the largest; otherwise SRPT-k."""
    if not (0 <= epsp < eps <= x < y):
        raise ValueError(f"need 0 <= eps' < eps <= x < y, got {(epsp, eps, x, y)}")
    order = sorted(jobs, key=lambda j: (j.remaining, j.id))
    n = len(order)
    if n == k + 1:
        small_band = sum(1 for j in order[:-1] if in_band(j.remaining, epsp, eps))
        if small_band == k and in_band(order[-1].remaining, x, y):
            return _except_pattern(order, k)
    return frozenset(j.id for j in order[: min(k, n)])


def _est_key(j):
    if j.est_remaining is None:
        raise ConfigurationError(f"job {j.id} has no size estimate")
    return j.est_remaining


def select_estimate(jobs, k, variant, eps=None) -> frozenset:
    """SRPT-k / Practical SEK with priority computed on the clamped remaining
    size estimate instead of true remaining size."""
    keyed = [
        JobView(j.id, j.size, _est_key(j), j.est_remaining) for j in jobs
    ]
    if variant == "srpt":
        return select_srpt_k(keyed, k)
    if variant == "sek":
        return select_practical_sek(keyed, k, eps)
    raise ConfigurationError(f"unknown estimate variant {variant!r}")


@dataclass(frozen=True)
class PolicySpec:
    """Parsed policy with parameters in size units."""

    kind: str
    eps: float | None = None
    epsp: float | None = None
    x: float | None = None
    y: float | None = None
    n: int | None = None
    params: dict = field(default_factory=dict, compare=False)

    KINDS = ("srpt", "psjf", "rs", "sek", "sekn", "fullsek", "srpt-est", "sek-est")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown policy kind {self.kind!r}")
        if self.kind == "fullsek" and not (
            0 <= self.epsp < self.eps <= self.x < self.y
        ):
            raise ConfigurationError(
                f"fullsek requires 0 <= eps' < eps <= x < y, got "
                f"({self.epsp}, {self.eps}, {self.x}, {self.y})"
            )
        if self.kind in ("sek", "sek-est") and not (self.eps and self.eps > 0):
            raise ConfigurationError(f"{self.kind} requires eps > 0")
        if self.kind == "sekn" and not (self.eps and self.eps > 0 and self.n >= 1):
            raise ConfigurationError("sekn requires eps > 0 and n >= 1")

    @property
    def uses_estimates(self) -> bool:
        return self.kind in ("srpt-est", "sek-est")

    def select(self, jobs, k) -> frozenset:
        if self.kind == "srpt":
            return select_srpt_k(jobs, k)
        if self.kind == "psjf":
            return select_psjf_k(jobs, k)
        if self.kind == "rs":
            return select_rs_k(jobs, k)
        if self.kind == "sek":
            return select_practical_sek(jobs, k, self.eps)
        if self.kind == "sekn":
            return select_sek_n(jobs, k, self.eps, self.n)
        if self.kind == "fullsek":
            return select_full_sek(jobs, k, self.epsp, self.eps, self.x, self.y)
        if self.kind == "srpt-est":
            return select_estimate(jobs, k, "srpt")
        if self.kind == "sek-est":
            return select_estimate(jobs, k, "sek", self.eps)
        raise ConfigurationError(self.kind)

    def spec_str(self) -> str:
        from .workload import fmt

        if self.kind in ("srpt", "psjf", "rs", "srpt-est"):
            return self.kind
        if self.kind in ("sek", "sek-est"):
            return f"{self.kind}:eps={fmt(self.eps)}"
        if self.kind == "sekn":
            return f"sekn:eps={fmt(self.eps)},n={self.n}"
        return (
            f"fullsek:epsp={fmt(self.epsp)},eps={fmt(self.eps)},"
            f"x={fmt(self.x)},y={fmt(self.y)}"
        )


def parse_policy(spec: str) -> PolicySpec:
    """Parse policy spec strings: ``srpt``, ``psjf``, ``rs``, ``sek:eps=1``,
    ``sekn:eps=1,n=2``, ``fullsek:epsp=...,eps=...,x=...,y=...``,
    ``srpt-est``, ``sek-est:eps=2``."""
    kind, _, rest = spec.partition(":")
    kv = {}
    if rest:
        for part in rest.split(","):
            key, _, val = part.partition("=")
            kv[key.strip()] = val
    try:
        if kind in ("srpt", "psjf", "rs", "srpt-est"):
            return PolicySpec(kind=kind)
        if kind in ("sek", "sek-est"):
            return PolicySpec(kind=kind, eps=float(kv["eps"]))
        if kind == "sekn":
            return PolicySpec(kind=kind, eps=float(kv["eps"]), n=int(kv["n"]))
        if kind == "fullsek":
            return PolicySpec(
                kind=kind,
                epsp=float(kv["epsp"]),
                eps=float(kv["eps"]),
                x=float(kv["x"]),
                y=float(kv["y"]),
            )
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"bad policy spec {spec!r}: {exc}") from exc
    raise ConfigurationError(f"unknown policy spec {spec!r}")
