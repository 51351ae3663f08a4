"""Channel generation, SINR evaluation and the shared domain types.

All link gains are unit-mean exponential power gains (Rayleigh amplitudes).
Every random quantity is drawn from a stream keyed by ``(seed, trial, kind)``
so a trial can be regenerated in isolation, in any order, on any worker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "NetworkConfig",
    "FadingBlock",
    "ThroughputEstimate",
    "STREAM_GAMMA",
    "STREAM_XI",
    "STREAM_TIEBREAK",
    "trial_stream",
    "sample_gamma",
    "sample_xi",
    "sample_fading_block",
    "ordered_row_sum",
    "clears_threshold",
    "sinr_phase1",
    "sinr_phase2",
    "db_to_linear",
    "linear_to_db",
]

# Sub-stream identifiers. Keeping the hops on separate streams means a
# Phase-2-only estimator never has to draw Phase-1 gains.
STREAM_GAMMA = 0
STREAM_XI = 1
STREAM_TIEBREAK = 2

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class NetworkConfig:
    """Fixed parameters of one experiment.

    Parameters
    ----------
    n : int
        Number of source-destination pairs.
    m : int
        Number of relays.
    rho, rho_r : float
        Linear SNR of the source-relay and relay-destination links.
    seed : int
        Master seed (64 bit).
    rate : float
        Per-link rate in bits/s/Hz. Only 1 is supported; decoding succeeds
        iff SINR >= 1.
    """

    n: int
    m: int
    rho: float = 10.0
    rho_r: float = 10.0
    seed: int = 0
    rate: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ValueError(f"rho must be positive and finite, got {self.rho!r}")
        if not (self.rho_r > 0 and math.isfinite(self.rho_r)):
            raise ValueError(f"rho_r must be positive and finite, got {self.rho_r!r}")
        if self.rate != 1:
            raise ValueError("only rate = 1 bit/s/Hz is supported")
        if not 0 <= int(self.seed) <= _SEED_MASK:
            raise ValueError("seed must fit in 64 unsigned bits")

    def with_m(self, m: int) -> "NetworkConfig":
        return replace(self, m=m)

    def with_n(self, n: int) -> "NetworkConfig":
        return replace(self, n=n)


@dataclass(frozen=True)
class FadingBlock:
    """Power gains of one coherence block.

    ``gamma[i, r]`` is source i -> relay r, ``xi[r, j]`` is relay r ->
    destination j.
    """

    gamma: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        # private copies: freezing them must not touch the caller's arrays
        gamma = np.array(self.gamma, dtype=np.float64)
        xi = np.array(self.xi, dtype=np.float64)
        if gamma.ndim != 2 or xi.ndim != 2:
            raise ValueError("gamma and xi must be 2-D")
        if gamma.shape != xi.shape[::-1]:
            raise ValueError(
                f"gamma is {gamma.shape} but xi is {xi.shape}; expected (n, m) and (m, n)"
            )
        gamma.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    @property
    def m(self) -> int:
        return self.gamma.shape[1]

    def restrict(self, m: int) -> "FadingBlock":
        """Keep the first ``m`` relays.

        Because relay gains are laid out relay-major in the stream, this is
        the same block that would have been drawn with ``m`` relays.
        """
        if not 1 <= m <= self.m:
            raise ValueError(f"cannot restrict {self.m} relays to {m}")
        return FadingBlock(self.gamma[:, :m], self.xi[:m, :])


@dataclass(frozen=True)
class ThroughputEstimate:
    """Monte Carlo sample mean with its standard error (bits/s/Hz)."""

    mean: float
    std_error: float
    trials: int

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")

    @classmethod
    def from_samples(cls, samples) -> "ThroughputEstimate":
        x = np.asarray(samples, dtype=np.float64)
        if x.size == 0:
            raise ValueError("no samples")
        se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        return cls(float(x.mean()), se, int(x.size))


def trial_stream(seed: int, trial: int, kind: int = STREAM_GAMMA) -> np.random.Generator:
    """Independent generator for one (seed, trial, kind) triple."""
    ss = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=(int(trial), int(kind)))
    return np.random.Generator(np.random.PCG64(ss))


def sample_gamma(n: int, m: int, seed: int, trial: int) -> np.ndarray:
    """Source->relay gains, shape (n, m)."""
    # drawn relay-major so column r does not depend on m
    return trial_stream(seed, trial, STREAM_GAMMA).standard_exponential((m, n)).T


def sample_xi(n: int, m: int, seed: int, trial: int) -> np.ndarray:
    """Relay->destination gains, shape (m, n)."""
    return trial_stream(seed, trial, STREAM_XI).standard_exponential((m, n))


def sample_fading_block(cfg: NetworkConfig, trial: int) -> FadingBlock:
    """Draw the block for ``trial``; identical inputs give identical gains."""
    return FadingBlock(
        sample_gamma(cfg.n, cfg.m, cfg.seed, trial),
        sample_xi(cfg.n, cfg.m, cfg.seed, trial),
    )


def ordered_row_sum(rows: np.ndarray) -> np.ndarray:
    """Sum the rows of a 2-D array strictly in index order.

    Every threshold decision in the package goes through sums formed this
    way, so the compiled kernels and the numpy paths agree bit for bit.
    """
    rows = np.asarray(rows, dtype=np.float64)
    total = rows[0].copy()
    for k in range(1, rows.shape[0]):
        total += rows[k]
    return total


def clears_threshold(signal, interference, noise):
    """SINR >= 1 written without a division: signal >= noise + interference."""
    return np.asarray(signal) >= noise + np.asarray(interference)


def sinr_phase1(block: FadingBlock, active, relay: int, desired: int, rho: float) -> float:
    """SINR at ``relay`` for source ``desired`` with the ``active`` sources on air.

    Indices are zero-based.
    """
    active = sorted(set(int(i) for i in active))
    if desired not in active:
        raise ValueError(f"desired source {desired} is not in the active set")
    if not 0 <= relay < block.m:
        raise IndexError(f"relay {relay} out of range for m={block.m}")
    g = block.gamma[:, relay]
    interference = sum(float(g[t]) for t in active if t != desired)
    return float(g[desired]) / (1.0 / rho + interference)


def sinr_phase2(block: FadingBlock, relay: int, dest: int, cfg_or_rho_r) -> float:
    """SINR of ``relay`` at destination ``dest`` with every relay transmitting."""
    rho_r = getattr(cfg_or_rho_r, "rho_r", cfg_or_rho_r)
    if not 0 <= relay < block.m:
        raise IndexError(f"relay {relay} out of range for m={block.m}")
    if not 0 <= dest < block.n:
        raise IndexError(f"destination {dest} out of range for n={block.n}")
    col = block.xi[:, dest]
    interference = float(col.sum() - col[relay])
    return float(col[relay]) / (1.0 / rho_r + interference)


def db_to_linear(db: float) -> float:
    if not math.isfinite(db):
        raise ValueError(f"SNR in dB must be finite, got {db!r}")
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)
