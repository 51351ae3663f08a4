"""Centralized (genie-aided) scheduling oracles for Phase 1.

The full search asks whether *any* m sources, mapped one-to-one onto the m
relays, can all clear SINR >= 1 together. The grouped search restricts each
relay to its own contiguous block of n // m sources. Both search spaces
blow up quickly, so every call is checked against a budget and refuses
instead of silently truncating; a partial search would bias the estimates.

Desk-scale envelope: full search for n <= 16, m <= 4 (at most 43,680
assignments per block), grouped search while (n // m)**m <= 1e6. At these
sizes the grouped results are illustrative only.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from ._parallel import map_trials
from .core import FadingBlock, NetworkConfig, ThroughputEstimate, sample_gamma
from .analytics import success_probability

__all__ = [
    "GenieBudgetExceeded",
    "GenieSearchBudget",
    "full_search_size",
    "grouped_search_size",
    "genie_exists_full",
    "genie_exists_grouped",
    "genie_trial_outcomes",
    "estimate_existence_prob",
    "markov_bound",
]


class GenieBudgetExceeded(RuntimeError):
    """Raised when a search would exceed its budget.

    ``required`` is the number of candidates the search would have to
    enumerate (or the elapsed seconds for the wall-clock guard).
    """

    def __init__(self, message, required):
        super().__init__(message)
        self.required = required


@dataclass(frozen=True)
class GenieSearchBudget:
    max_assignments: int = 1_000_000
    max_seconds: Optional[float] = None

    def __post_init__(self):
        if self.max_assignments < 1:
            raise ValueError("max_assignments must be >= 1")


DEFAULT_BUDGET = GenieSearchBudget()


def full_search_size(n: int, m: int) -> int:
    """Number of (subset, bijection) pairs: C(n, m) * m!."""
    return math.comb(n, m) * math.factorial(m)


def grouped_search_size(n: int, m: int) -> int:
    return (n // m) ** m


def _check(required, budget, what):
    if required > budget.max_assignments:
        raise GenieBudgetExceeded(
            f"{what} needs {required} candidates, budget is {budget.max_assignments}", required
        )


def _gains(block: FadingBlock, m: int) -> np.ndarray:
    if not 1 <= m <= block.m:
        raise ValueError(f"m={m} must be between 1 and the block's {block.m} relays")
    if m > block.n:
        raise ValueError(f"m={m} exceeds n={block.n}")
    return np.ascontiguousarray(block.gamma[:, :m])


def genie_exists_full(block: FadingBlock, m: int, cfg: NetworkConfig,
                      budget: GenieSearchBudget = DEFAULT_BUDGET) -> bool:
    """Is there an all-successful assignment of m sources to the first m relays?"""
    g = _gains(block, m)
    _check(full_search_size(block.n, m), budget, f"full search (n={block.n}, m={m})")
    return bool(kernels.genie_full(g, 1.0 / cfg.rho))


def genie_exists_grouped(block: FadingBlock, m: int, cfg: NetworkConfig,
                         budget: GenieSearchBudget = DEFAULT_BUDGET) -> bool:
    """Grouped variant: relay k may only pick from sources
    k*(n//m) .. (k+1)*(n//m)-1; the trailing n mod m sources are unused."""
    g = _gains(block, m)
    _check(grouped_search_size(block.n, m), budget, f"grouped search (n={block.n}, m={m})")
    return bool(kernels.genie_grouped(g, 1.0 / cfg.rho))


def genie_trial_outcomes(cfg: NetworkConfig, m: int, trials: int,
                         variants=("full", "grouped"),
                         budget: GenieSearchBudget = DEFAULT_BUDGET,
                         threads: Optional[int] = None) -> dict:
    """Per-trial booleans for each requested variant plus ``witness``.

    ``witness[t]`` is True when the decentralized scheme, with all m picks
    distinct, delivered m bits on trial t's block. Blocks are the same ones
    the Phase-1 estimators see for (cfg.seed, t).
    """
    for v in variants:
        if v not in ("full", "grouped"):
            raise ValueError(f"unknown variant {v!r}")
    if "full" in variants:
        _check(full_search_size(cfg.n, m), budget, f"full search (n={cfg.n}, m={m})")
    if "grouped" in variants:
        _check(grouped_search_size(cfg.n, m), budget, f"grouped search (n={cfg.n}, m={m})")
    noise = 1.0 / cfg.rho
    start = time.monotonic()

    def one(t):
        if budget.max_seconds is not None and time.monotonic() - start > budget.max_seconds:
            raise GenieBudgetExceeded(
                f"genie search exceeded {budget.max_seconds}s", time.monotonic() - start
            )
        g = np.ascontiguousarray(sample_gamma(cfg.n, m, cfg.seed, t))
        _, distinct = kernels.phase1_prefix_bits(g, noise)
        row = [bool(distinct[m - 1] == m)]
        for v in variants:
            row.append(bool(kernels.genie_full(g, noise) if v == "full" else kernels.genie_grouped(g, noise)))
        return row

    res = map_trials(one, trials, threads).astype(bool)
    out = {"witness": res[:, 0]}
    for k, v in enumerate(variants):
        out[v] = res[:, k + 1]
    return out


def estimate_existence_prob(cfg: NetworkConfig, m: int, trials: int, variant: str = "full",
                            budget: GenieSearchBudget = DEFAULT_BUDGET,
                            threads: Optional[int] = None) -> ThroughputEstimate:
    """Monte Carlo estimate of P[some all-successful m-assignment exists]."""
    hits = genie_trial_outcomes(cfg, m, trials, (variant,), budget, threads)[variant]
    p = float(hits.mean())
    return ThroughputEstimate(p, math.sqrt(p * (1.0 - p) / trials), trials)


def markov_bound(n: int, m: int, rho: float) -> float:
    """min(1, (n p_m)^m) with p_m = e^{-1/rho} / 2^{m-1}; bounds the
    existence probability through the expected number of valid sets."""
    if m < 1:
        raise ValueError("m must be >= 1")
    log_base = math.log(n) + math.log(success_probability(m, rho))
    return 1.0 if log_base >= 0 else math.exp(m * log_base)
