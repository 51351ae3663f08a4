"""The decentralized two-hop protocol on a single fading block.

Phase 1: every relay feeds back the index of its strongest source; the
distinct chosen sources transmit together. Phase 2: every relay transmits,
and a destination feeds back the index of the (at most one) relay whose
SINR clears 1; a relay with several requests serves one of them at random.

All indices are zero-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FadingBlock, NetworkConfig, ordered_row_sum

__all__ = [
    "MODES",
    "Phase1Schedule",
    "Phase1Result",
    "Phase2Result",
    "schedule_phase1",
    "evaluate_phase1",
    "phase2_clearance",
    "run_phase2",
]

MODES = ("all_assignments", "distinct_only")


@dataclass(frozen=True)
class Phase1Schedule:
    chosen: tuple
    distinct_set: frozenset

    @property
    def all_distinct(self) -> bool:
        return len(self.distinct_set) == len(self.chosen)


@dataclass(frozen=True)
class Phase1Result:
    """Outcome of Phase 1 on one block.

    ``delivered_bits`` counts distinct sources decoded by at least one of the
    relays that picked them. ``distinct_only_bits`` counts decoding relays
    when all m picks are distinct and is 0 otherwise.
    """

    sinr: tuple
    decoded: tuple
    delivered_bits: int
    distinct_only_bits: int
    mode: str = "all_assignments"

    @property
    def bits(self) -> int:
        if self.mode == "distinct_only":
            return self.distinct_only_bits
        return self.delivered_bits


@dataclass(frozen=True)
class Phase2Result:
    """``conflicts`` counts destinations with more than one relay clearing
    the threshold; it is zero whenever the noise term is positive."""

    good_relay: tuple
    served: tuple
    delivered_bits: int
    conflicts: int = 0


def schedule_phase1(block: FadingBlock) -> Phase1Schedule:
    # np.argmax returns the first maximum, i.e. lowest index on ties
    chosen = tuple(int(i) for i in block.gamma.argmax(axis=0))
    return Phase1Schedule(chosen=chosen, distinct_set=frozenset(chosen))


def evaluate_phase1(
    block: FadingBlock,
    sched: Phase1Schedule,
    rho: float,
    mode: str = "all_assignments",
) -> Phase1Result:
    """Decode test at every relay with the distinct scheduled sources on air.

    A source picked by several relays transmits one stream and is counted
    once if any of those relays decodes it.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if len(sched.chosen) != block.m or max(sched.chosen) >= block.n:
        raise ValueError("schedule does not match block dimensions")
    noise = 1.0 / rho
    chosen = np.asarray(sched.chosen)
    active = np.asarray(sorted(sched.distinct_set))
    total = ordered_row_sum(block.gamma[active, :])
    own = block.gamma[chosen, np.arange(block.m)]
    interference = total - own
    ok = own >= noise + interference
    sinr = tuple(float(v) for v in own / (noise + interference))
    delivered = len(set(chosen[ok].tolist()))
    distinct = int(ok.sum()) if sched.all_distinct else 0
    return Phase1Result(
        sinr=sinr,
        decoded=tuple(bool(v) for v in ok),
        delivered_bits=delivered,
        distinct_only_bits=distinct,
        mode=mode,
    )


def phase2_clearance(block: FadingBlock, rho_r: float) -> np.ndarray:
    """Boolean (m, n) matrix: relay r clears SINR >= 1 at destination j."""
    total = ordered_row_sum(block.xi)
    return block.xi >= 1.0 / rho_r + (total[None, :] - block.xi)


def run_phase2(block: FadingBlock, cfg, stream: Optional[np.random.Generator] = None) -> Phase2Result:
    """Feedback and service decisions for Phase 2.

    ``cfg`` may be a :class:`NetworkConfig` or a bare linear ``rho_r``.
    ``stream`` drives the uniform choice among a relay's requesters; when
    omitted, each relay serves its lowest-index requester.
    """
    rho_r = cfg.rho_r if isinstance(cfg, NetworkConfig) else float(cfg)
    clear = phase2_clearance(block, rho_r)
    per_dest = clear.sum(axis=0)
    first = clear.argmax(axis=0).tolist()
    good = [r if k else None for r, k in zip(first, per_dest.tolist())]
    served = []
    for r in range(block.m):
        requesters = np.flatnonzero(clear[r])
        if requesters.size == 0:
            served.append(None)
        elif stream is None:
            served.append(int(requesters[0]))
        else:
            served.append(int(requesters[stream.integers(requesters.size)]))
    delivered = sum(s is not None for s in served)
    return Phase2Result(
        good_relay=tuple(good),
        served=tuple(served),
        delivered_bits=delivered,
        conflicts=int(np.count_nonzero(per_dest > 1)),
    )
