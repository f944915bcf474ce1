"""Job-size distributions, Poisson arrivals, and size-estimate error model.

All moment and truncated-moment queries are closed form so that derived
scheduling constants are bit-stable across runs; numeric quadrature lives
only in the test suite as an independent oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


class InfeasibleParametersError(ValueError):
    """No valid distribution exists for the requested moments."""

    def __init__(self, msg, discriminant=None):
        super().__init__(msg)
        self.discriminant = discriminant


class UnstableLoadWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Exponential:
    """Exp(rate): mean 1/rate."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be > 0, got {self.rate}")

    def mean(self):
        return 1.0 / self.rate

    def second_moment(self):
        return 2.0 / self.rate**2

    def cdf(self, x):
        return 1.0 - math.exp(-self.rate * x) if x > 0 else 0.0

    def truncated_mean(self, y):
        # E[S 1{S <= y}] = 1/mu - (y + 1/mu) e^{-mu y}
        if y <= 0:
            return 0.0
        if math.isinf(y):
            return self.mean()
        return 1.0 / self.rate - (y + 1.0 / self.rate) * math.exp(-self.rate * y)

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def spec_str(self):
        return f"exp:rate={fmt(self.rate)}"


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo >= 0 and self.hi > self.lo):
            raise ValueError(f"need 0 <= lo < hi, got [{self.lo}, {self.hi}]")

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def second_moment(self):
        return (self.hi**3 - self.lo**3) / (3.0 * (self.hi - self.lo))

    def cdf(self, x):
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        return (x - self.lo) / (self.hi - self.lo)

    def truncated_mean(self, y):
        if y <= self.lo:
            return 0.0
        top = min(y, self.hi)
        return (top**2 - self.lo**2) / (2.0 * (self.hi - self.lo))

    def sample(self, rng, size):
        s = rng.uniform(self.lo, self.hi, size)
        # job sizes must be strictly positive
        return np.maximum(s, np.nextafter(self.lo, self.hi))

    def spec_str(self):
        return f"uniform:lo={fmt(self.lo)},hi={fmt(self.hi)}"


@dataclass(frozen=True)
class HyperExp2:
    """Two-branch hyperexponential; branch 1 is the high-mean branch."""

    p: float
    mu1: float
    mu2: float

    def __post_init__(self):
        if not (0 < self.p < 1):
            raise ValueError(f"p must be in (0,1), got {self.p}")
        if not (self.mu1 > 0 and self.mu2 > 0):
            raise ValueError("branch rates must be > 0")

    def mean(self):
        return self.p / self.mu1 + (1.0 - self.p) / self.mu2

    def second_moment(self):
        return 2.0 * self.p / self.mu1**2 + 2.0 * (1.0 - self.p) / self.mu2**2

    def cdf(self, x):
        if x <= 0:
            return 0.0
        return self.p * (1.0 - math.exp(-self.mu1 * x)) + (1.0 - self.p) * (
            1.0 - math.exp(-self.mu2 * x)
        )

    def truncated_mean(self, y):
        if y <= 0:
            return 0.0
        if math.isinf(y):
            return self.mean()
        t1 = 1.0 / self.mu1 - (y + 1.0 / self.mu1) * math.exp(-self.mu1 * y)
        t2 = 1.0 / self.mu2 - (y + 1.0 / self.mu2) * math.exp(-self.mu2 * y)
        return self.p * t1 + (1.0 - self.p) * t2

    def sample(self, rng, size):
        branch = rng.random(size) < self.p
        e = rng.exponential(1.0, size)
        return np.where(branch, e / self.mu1, e / self.mu2)

    def spec_str(self):
        csq = self.second_moment() / self.mean() ** 2 - 1.0
        rho_high = (self.p / self.mu1) / self.mean()
        return f"hyperexp:csq={fmt(csq)},rho_high={fmt(rho_high)},mean={fmt(self.mean())}"


JobSizeModel = Exponential | Uniform | HyperExp2


def fmt(x: float) -> str:
    """Compact stable float formatting for spec strings and CSV."""
    s = f"{x:.12g}"
    return s


def hyperexp_from_moments(csq: float, rho_high: float, mean: float) -> JobSizeModel:
    """Build a HyperExp2 with given squared coefficient of variation, fraction
    of load on the high-mean branch, and mean.

    Solves exactly: p/mu1 + (1-p)/mu2 = mean; 2p/mu1^2 + 2(1-p)/mu2^2 =
    (csq+1) mean^2; (p/mu1)/mean = rho_high.  Substituting p = rho_high*mean*mu1
    and mu2 = (1 - rho_high*mean*mu1) / ((1-rho_high)*mean) yields a quadratic
    in mu1; the root with branch mean 1/mu1 >= mean is the high-mean branch.
    """
    if not csq >= 1:
        # raise through the quadratic path so the discriminant gets reported
        pass
    if not (0 < rho_high < 1):
        raise ValueError(f"rho_high must be in (0,1), got {rho_high}")
    if not mean > 0:
        raise ValueError(f"mean must be > 0, got {mean}")

    a = 0.5 * (csq + 1.0) * mean**2 * rho_high
    b = mean * ((1.0 - rho_high) ** 2 - rho_high**2 - 0.5 * (csq + 1.0))
    c = rho_high
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise InfeasibleParametersError(
            f"no real hyperexponential for csq={csq}, rho_high={rho_high}, "
            f"mean={mean} (discriminant {disc:.6g} < 0); two-branch "
            "hyperexponentials require csq >= 1",
            discriminant=disc,
        )
    root = math.sqrt(disc)
    # smaller root has the larger branch mean 1/mu1
    mu1 = (-b - root) / (2.0 * a)
    p = rho_high * mean * mu1
    if not (mu1 > 0 and 0 < p < 1):
        raise InfeasibleParametersError(
            f"quadratic root mu1={mu1:.6g} gives no valid branch probability "
            f"(p={p:.6g})",
            discriminant=disc,
        )
    if 1.0 / mu1 < mean * (1.0 - 1e-12):
        raise InfeasibleParametersError(
            f"high-mean branch 1/mu1={1.0 / mu1:.6g} fell below mean={mean}",
            discriminant=disc,
        )
    mu2 = (1.0 - rho_high * mean * mu1) / ((1.0 - rho_high) * mean)
    return HyperExp2(p=p, mu1=mu1, mu2=mu2)


def relevant_load(model: JobSizeModel, lam: float, y: float) -> float:
    """rho_{<=y} = lam * E[S 1{S <= y}], the load of jobs with size at most y."""
    if y < 0:
        raise ValueError(f"y must be >= 0, got {y}")
    return lam * model.truncated_mean(y)


def prob_in_band(model: JobSizeModel, x: float) -> float:
    """P(x <= S <= 2x)."""
    if not x > 0:
        raise ValueError(f"x must be > 0, got {x}")
    return model.cdf(2.0 * x) - model.cdf(x)


@dataclass(frozen=True)
class ArrivalModel:
    """Poisson arrivals at rate lam."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")

    def sample_interarrival(self, rng, size):
        return rng.exponential(1.0 / self.lam, size)


@dataclass(frozen=True)
class EstimateModel:
    """Additive size-estimate error: E = (S + D)^+ with D ~ Normal(0, sigma)."""

    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    def sample(self, sizes, rng):
        if self.sigma == 0.0:
            return np.asarray(sizes, dtype=np.float64).copy()
        d = rng.normal(0.0, self.sigma, len(sizes))
        return np.maximum(np.asarray(sizes, dtype=np.float64) + d, 0.0)


def sample_estimate(s: float, est: EstimateModel, rng) -> float:
    return float(est.sample(np.array([s]), rng)[0])


def check_stability(model: JobSizeModel, lam: float) -> float:
    """Return the load lam*E[S]; warn (do not forbid) when it is >= 1."""
    rho = lam * model.mean()
    if rho >= 1.0:
        warnings.warn(
            f"load rho = {rho:.4g} >= 1: system is unstable", UnstableLoadWarning
        )
    return rho


# Named RNG streams split from the run seed.  One stream per concern so that
# coupled/common-random-number runs share arrival and size draws exactly no
# matter which policy consumes them.
_STREAMS = ("arrivals", "sizes", "estimates")


def streams(seed: int) -> dict:
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(_STREAMS, children)}


def draw_workload(model: JobSizeModel, lam: float, n: int, seed: int,
                  sigma: float | None = None):
    """Pre-draw the full arrival stream for a run.

    Returns (arrival_times, sizes, estimates); arrival_times are absolute.
    estimates is None unless sigma is given.
    """
    rngs = streams(seed)
    if n == 0:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty.copy(), (empty.copy() if sigma is not None else None)
    inter = ArrivalModel(lam).sample_interarrival(rngs["arrivals"], n)
    times = np.cumsum(inter)
    sizes = model.sample(rngs["sizes"], n)
    est = None
    if sigma is not None:
        est = EstimateModel(sigma).sample(sizes, rngs["estimates"])
    return times, sizes, est


def parse_dist(spec: str) -> JobSizeModel:
    """Parse the compact distribution spec used by the CLI and config files.

    Forms: ``exp:rate=1``, ``uniform:lo=0,hi=2``,
    ``hyperexp:csq=10,rho_high=0.5,mean=1``.
    """
    try:
        kind, _, rest = spec.partition(":")
        kv = {}
        if rest:
            for part in rest.split(","):
                key, _, val = part.partition("=")
                kv[key.strip()] = float(val)
        if kind == "exp":
            return Exponential(rate=kv["rate"])
        if kind == "uniform":
            return Uniform(lo=kv["lo"], hi=kv["hi"])
        if kind == "hyperexp":
            return hyperexp_from_moments(kv["csq"], kv["rho_high"], kv["mean"])
    except InfeasibleParametersError:
        raise
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad distribution spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown distribution kind in {spec!r}")
