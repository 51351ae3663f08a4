# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: per-block Phase-1/Phase-2 accounting and the genie
searches. Semantics and summation order mirror ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


def phase1_prefix_bits(const double[:, :] gamma, double noise):
    cdef Py_ssize_t n = gamma.shape[0], M = gamma.shape[1]
    cdef Py_ssize_t i, r, m, k, a
    cdef long[:] chosen = np.zeros(M, dtype=np.int_)
    cdef cnp.int64_t[:] all_bits = np.zeros(M, dtype=np.int64)
    cdef cnp.int64_t[:] distinct_bits = np.zeros(M, dtype=np.int64)
    cdef long[:] active = np.zeros(M, dtype=np.int_)
    cdef char[:] decoded = np.zeros(M, dtype=np.int8)
    cdef double best, total, own
    cdef Py_ssize_t nact, src, cnt, hits
    cdef bint seen
    with nogil:
        for r in range(M):
            best = gamma[0, r]
            chosen[r] = 0
            for i in range(1, n):
                if gamma[i, r] > best:
                    best = gamma[i, r]
                    chosen[r] = i
        for m in range(1, M + 1):
            # sorted distinct chosen sources among the first m relays
            nact = 0
            for r in range(m):
                src = chosen[r]
                k = nact
                seen = False
                for a in range(nact):
                    if active[a] == src:
                        seen = True
                        break
                if seen:
                    continue
                while k > 0 and active[k - 1] > src:
                    active[k] = active[k - 1]
                    k -= 1
                active[k] = src
                nact += 1
            for a in range(nact):
                decoded[a] = 0
            hits = 0
            for r in range(m):
                total = gamma[active[0], r]
                for a in range(1, nact):
                    total = total + gamma[active[a], r]
                own = gamma[chosen[r], r]
                if own >= noise + (total - own):
                    hits += 1
                    for a in range(nact):
                        if active[a] == chosen[r]:
                            decoded[a] = 1
            cnt = 0
            for a in range(nact):
                cnt += decoded[a]
            all_bits[m - 1] = cnt
            if nact == m:
                distinct_bits[m - 1] = hits
    return np.asarray(all_bits), np.asarray(distinct_bits)


def phase2_prefix_bits(const double[:, :] xi, double noise):
    cdef Py_ssize_t M = xi.shape[0], n = xi.shape[1]
    cdef Py_ssize_t j, m, r
    cdef cnp.int64_t[:] bits = np.zeros(M, dtype=np.int64)
    cdef double[:] total = np.zeros(n)
    cdef double[:] best = np.zeros(n)
    cdef long[:] arg = np.zeros(n, dtype=np.int_)
    cdef char[:] fed = np.zeros(M, dtype=np.int8)
    cdef double x
    cdef Py_ssize_t cnt
    with nogil:
        for m in range(1, M + 1):
            for r in range(m):
                fed[r] = 0
            for j in range(n):
                x = xi[m - 1, j]
                if m == 1:
                    total[j] = x
                    best[j] = x
                    arg[j] = 0
                else:
                    total[j] = total[j] + x
                    if x > best[j]:
                        best[j] = x
                        arg[j] = m - 1
                if best[j] >= noise + (total[j] - best[j]):
                    fed[arg[j]] = 1
            cnt = 0
            for r in range(m):
                cnt += fed[r]
            bits[m - 1] = cnt
    return np.asarray(bits)


cdef bint _assign_exists(char *ok, Py_ssize_t m, long *perm, long *c) noexcept nogil:
    # Heap's algorithm over bijections position -> relay; ok is row-major m x m
    cdef Py_ssize_t a, i, tmp
    cdef bint good
    for a in range(m):
        perm[a] = a
        c[a] = 0
    good = True
    for a in range(m):
        if not ok[a * m + perm[a]]:
            good = False
            break
    if good:
        return True
    i = 1
    while i < m:
        if c[i] < i:
            if i % 2 == 0:
                tmp = perm[0]; perm[0] = perm[i]; perm[i] = tmp
            else:
                tmp = perm[c[i]]; perm[c[i]] = perm[i]; perm[i] = tmp
            good = True
            for a in range(m):
                if not ok[a * m + perm[a]]:
                    good = False
                    break
            if good:
                return True
            c[i] += 1
            i = 1
        else:
            c[i] = 0
            i += 1
    return False


def genie_full(const double[:, :] gamma, double noise):
    cdef Py_ssize_t n = gamma.shape[0], m = gamma.shape[1]
    cdef Py_ssize_t a, r, k
    cdef long *sub = <long *> malloc(m * sizeof(long))
    cdef long *perm = <long *> malloc(m * sizeof(long))
    cdef long *c = <long *> malloc(m * sizeof(long))
    cdef double *total = <double *> malloc(m * sizeof(double))
    cdef char *ok = <char *> malloc(m * m * sizeof(char))
    cdef bint found = False, live, any_ok
    cdef double g
    if sub == NULL or perm == NULL or c == NULL or total == NULL or ok == NULL:
        free(sub); free(perm); free(c); free(total); free(ok)
        raise MemoryError()
    try:
        with nogil:
            for a in range(m):
                sub[a] = a
            while True:
                for r in range(m):
                    total[r] = gamma[sub[0], r]
                    for a in range(1, m):
                        total[r] = total[r] + gamma[sub[a], r]
                for a in range(m):
                    for r in range(m):
                        g = gamma[sub[a], r]
                        ok[a * m + r] = g >= noise + (total[r] - g)
                live = True
                for a in range(m):
                    any_ok = False
                    for r in range(m):
                        if ok[a * m + r]:
                            any_ok = True
                            break
                    if not any_ok:
                        live = False
                        break
                if live:
                    for r in range(m):
                        any_ok = False
                        for a in range(m):
                            if ok[a * m + r]:
                                any_ok = True
                                break
                        if not any_ok:
                            live = False
                            break
                if live and _assign_exists(ok, m, perm, c):
                    found = True
                    break
                # next subset in lexicographic order
                k = m - 1
                while k >= 0 and sub[k] == n - m + k:
                    k -= 1
                if k < 0:
                    break
                sub[k] += 1
                for a in range(k + 1, m):
                    sub[a] = sub[a - 1] + 1
    finally:
        free(sub); free(perm); free(c); free(total); free(ok)
    return bool(found)


def genie_grouped(const double[:, :] gamma, double noise):
    cdef Py_ssize_t n = gamma.shape[0], m = gamma.shape[1]
    cdef Py_ssize_t size = n // m
    cdef Py_ssize_t d, k, r
    cdef long *pick = <long *> malloc(m * sizeof(long))
    # partial[d * m + r]: interference total at relay r from groups 0..d
    cdef double *partial = <double *> malloc(m * m * sizeof(double))
    cdef bint found = False, ok
    cdef double own, tot
    if size == 0:
        free(pick); free(partial)
        return False
    if pick == NULL or partial == NULL:
        free(pick); free(partial)
        raise MemoryError()
    try:
        with nogil:
            d = 0
            pick[0] = -1
            while d >= 0:
                pick[d] += 1
                if pick[d] >= size:
                    d -= 1
                    continue
                for r in range(m):
                    if d == 0:
                        partial[r] = gamma[pick[0], r]
                    else:
                        partial[d * m + r] = partial[(d - 1) * m + r] + gamma[d * size + pick[d], r]
                # interference only grows with more groups, so a partial
                # failure is final
                ok = True
                for k in range(d + 1):
                    own = gamma[k * size + pick[k], k]
                    tot = partial[d * m + k]
                    if not (own >= noise + (tot - own)):
                        ok = False
                        break
                if not ok:
                    continue
                if d == m - 1:
                    found = True
                    break
                d += 1
                pick[d] = -1
    finally:
        free(pick); free(partial)
    return bool(found)
