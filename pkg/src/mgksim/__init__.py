"""Deterministic M/G/k scheduling simulator and coupled-system invariant
checker for the SEK / SMOD / SEK-SMOD policy family."""

from .engine import KernelLogicError, UnstableRunError, run_single
from .policies import PolicySpec, parse_policy
from .stats import (
    Comparison,
    PairingError,
    RunStats,
    batch_oracle,
    improvement_ratio,
    little_law_gap,
)
from .workload import (
    ArrivalModel,
    EstimateModel,
    Exponential,
    HyperExp2,
    InfeasibleParametersError,
    Uniform,
    hyperexp_from_moments,
    parse_dist,
    prob_in_band,
    relevant_load,
)

__all__ = [
    "ArrivalModel",
    "Comparison",
    "EstimateModel",
    "Exponential",
    "HyperExp2",
    "InfeasibleParametersError",
    "KernelLogicError",
    "PairingError",
    "PolicySpec",
    "RunStats",
    "Uniform",
    "UnstableRunError",
    "batch_oracle",
    "hyperexp_from_moments",
    "improvement_ratio",
    "little_law_gap",
    "parse_dist",
    "parse_policy",
    "prob_in_band",
    "relevant_load",
    "run_single",
]
