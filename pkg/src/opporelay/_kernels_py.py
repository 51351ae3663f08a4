"""Pure numpy versions of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``OPPORELAY_PURE=1`` is set. The summation order matches the compiled code
exactly so both backends make identical threshold decisions.
"""

from functools import lru_cache
from itertools import combinations, permutations

import numpy as np

from .core import ordered_row_sum


def phase1_prefix_bits(gamma, noise):
    """Phase-1 delivered bits for every relay prefix 1..M of one block.

    Returns ``(all_bits, distinct_bits)``, integer arrays of length M where
    entry m-1 refers to the block restricted to its first m relays.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    M = gamma.shape[1]
    chosen = gamma.argmax(axis=0)
    all_bits = np.zeros(M, dtype=np.int64)
    distinct_bits = np.zeros(M, dtype=np.int64)
    for m in range(1, M + 1):
        ch = chosen[:m]
        active = np.unique(ch)
        total = ordered_row_sum(gamma[active, :m])
        own = gamma[ch, np.arange(m)]
        ok = own >= noise + (total - own)
        all_bits[m - 1] = np.unique(ch[ok]).size
        if active.size == m:
            distinct_bits[m - 1] = int(ok.sum())
    return all_bits, distinct_bits


def phase2_prefix_bits(xi, noise):
    """Phase-2 delivered bits (relays with feedback) for every prefix 1..M."""
    xi = np.asarray(xi, dtype=np.float64)
    M, n = xi.shape
    bits = np.zeros(M, dtype=np.int64)
    total = np.zeros(n)
    best = np.zeros(n)
    arg = np.zeros(n, dtype=np.int64)
    for m in range(1, M + 1):
        row = xi[m - 1]
        if m == 1:
            total = row.copy()
            best = row.copy()
        else:
            total = total + row
            better = row > best
            arg = np.where(better, m - 1, arg)
            best = np.where(better, row, best)
        good = best >= noise + (total - best)
        bits[m - 1] = np.count_nonzero(np.bincount(arg[good], minlength=m))
    return bits


@lru_cache(maxsize=64)
def _subsets(n, m):
    return np.array(list(combinations(range(n), m)), dtype=np.int64)


@lru_cache(maxsize=16)
def _perms(m):
    return np.array(list(permutations(range(m))), dtype=np.int64)


def genie_full(gamma, noise):
    """True iff some m-subset of sources and bijection onto the m relays
    has every link clearing SINR >= 1."""
    gamma = np.asarray(gamma, dtype=np.float64)
    n, m = gamma.shape
    subs = _subsets(n, m)
    g = gamma[subs]  # (S, m positions, m relays)
    total = g[:, 0, :].copy()
    for a in range(1, m):
        total += g[:, a, :]
    ok = g >= noise + (total[:, None, :] - g)
    # prune subsets where some source or some relay has no decodable partner
    live = ok.any(axis=2).all(axis=1) & ok.any(axis=1).all(axis=1)
    ok = ok[live]
    if ok.shape[0] == 0:
        return False
    perms = _perms(m)
    pos = np.arange(m)
    hit = ok[:, pos[None, :], perms]  # (S', P, m)
    return bool(hit.all(axis=2).any())


def genie_grouped(gamma, noise):
    """True iff one source per contiguous group (group k -> relay k) makes
    every link clear SINR >= 1. Trailing n mod m sources are unused."""
    gamma = np.asarray(gamma, dtype=np.float64)
    n, m = gamma.shape
    size = n // m
    if size == 0:
        return False
    # own[k][c]: gain of group k's c-th source at relay k
    grids = np.meshgrid(*[np.arange(size)] * (m - 1), indexing="ij") if m > 1 else []
    rest = [gr.ravel() for gr in grids]
    for c0 in range(size):
        choice = [np.full(rest[0].size if rest else 1, c0)] + rest
        src = np.stack([k * size + np.asarray(c) for k, c in enumerate(choice)], axis=1)
        g = gamma[src]  # (C, m sources, m relays)
        total = g[:, 0, :].copy()
        for a in range(1, m):
            total += g[:, a, :]
        own = g[:, np.arange(m), np.arange(m)]
        ok = own >= noise + (total - own)
        if ok.all(axis=1).any():
            return True
    return False
