"""Walk through the coupling parameterization for a concrete system.

For an M/G/2 queue with Exp(1) job sizes at load 0.5 and interchange band
[x, 2x] = [1, 2], print the scenario-analysis constants, the proof-regime
threshold eps, and the per-divergence improvement lower bound they imply.
"""

from mgksim.coupled import derive_parameters
from mgksim.workload import parse_dist, prob_in_band, relevant_load

model = parse_dist("exp:rate=1")
lam, k, x = 0.5, 2, 1.0

print(f"band mass P(S in [{x}, {2 * x}]) = {prob_in_band(model, x):.6f}")
print(f"relevant load rho_<=2x        = {relevant_load(model, lam, 2 * x):.6f}")

p = derive_parameters(lam, model, k, x)
print(f"\nproof regime: c1={p.c1}  c2={p.c2:.4f}  c3={p.c3:.4e}  c4={p.c4}")
print(f"eps = min(x/6, c3 c4 / (2 c1 c2)) = {p.eps:.4e}, eps' = {p.epsp:.4e}")
print(f"per-divergence IND lower bound: {p.improvement_lower_bound:.4e} > 0")

p = derive_parameters(lam, model, k, x, eps=x / 6)
print(f"\npractical regime (eps = x/6 = {p.eps:.4f}):")
print(f"bad-scenario probability bound   c1*eps = {p.c1 * p.eps:.4f}")
print(f"good-scenario probability bound  c3     = {p.c3:.4e}")
