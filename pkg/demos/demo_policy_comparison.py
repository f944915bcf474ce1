"""Compare Practical SEK against SRPT-k on a small load sweep.

A desk-scale version of the headline experiment: paired runs under common
random numbers, improvement ratio 1 - E[T^SEK]/E[T^SRPT-k] per load.
At full scale (1e7 arrivals, 5 seeds) the exponential peak lands at ~0.32%
around rho = 0.95; at this scale the shape is visible but noisy.
"""

import time

from mgksim.engine import run_single
from mgksim.stats import improvement_ratio

ARRIVALS = 1_000_000
SEEDS = (1, 2, 3)

print(f"{'rho':>5} {'E[T] srpt':>10} {'E[T] sek':>10} {'improvement':>12} {'ci':>8}")
t0 = time.time()
for rho in (0.80, 0.88, 0.92, 0.95, 0.97):
    base = [run_single("srpt", "exp:rate=1", rho, 2, ARRIVALS, s) for s in SEEDS]
    cand = [run_single("sek:eps=1", "exp:rate=1", rho, 2, ARRIVALS, s) for s in SEEDS]
    c = improvement_ratio(base, cand)
    print(f"{rho:>5} {c.baseline_mean_t:>10.4f} {c.candidate_mean_t:>10.4f} "
          f"{c.ratio * 100:>11.4f}% {c.ci_halfwidth * 100:>7.4f}pp")
print(f"({time.time() - t0:.1f}s)")
