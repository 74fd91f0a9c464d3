# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise digit-prefix kernel.

Mirrors _ref.pairwise_st operation for operation: per (net point, data
point) pair the common digit-prefix lengths are found (single XOR plus bit
scan in base 2), the bounded-composition count is computed by the moving-sum
recursion, and T is accumulated with Neumaier compensation over ascending
data indices with nonzero terms only.  Outputs are bit-identical to the
reference implementation.
"""

from cython.parallel cimport parallel, prange, threadid
from libc.math cimport fabs
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline long _bitlen(long v) nogil:
    cdef long n = 0
    while v:
        v >>= 1
        n += 1
    return n


cdef inline long _cap_general(long xp, long zp, long base, long r) nogil:
    # digits shared by two depth-r base-b prefix integers
    cdef long d = r
    while xp != zp:
        xp //= base
        zp //= base
        d -= 1
    return d


cdef inline long _count_bounded(long* caps, long s, long r, long* cur, long* csum) nogil:
    cdef long j, rp, lo, total
    total = 0
    for j in range(s):
        total += caps[j]
    if total < r:
        return 0
    for rp in range(r + 1):
        cur[rp] = 1 if rp <= caps[0] else 0
    for j in range(1, s):
        csum[0] = cur[0]
        for rp in range(1, r + 1):
            csum[rp] = csum[rp - 1] + cur[rp]
        for rp in range(r + 1):
            lo = rp - caps[j] - 1
            cur[rp] = csum[rp] - (csum[lo] if lo >= 0 else 0)
    return cur[r]


def pairwise_st(xpref_in, y_in, zpref_in, long base, long r, long budget,
                bint skip, int threads=1):
    """S_r and T_r at every net point; see _ref.pairwise_st for the contract."""
    cdef cnp.int64_t[:, ::1] xpref = np.ascontiguousarray(xpref_in, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] zpref = np.ascontiguousarray(zpref_in, dtype=np.int64)
    cdef cnp.float64_t[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef long n = xpref.shape[0]
    cdef long s = xpref.shape[1]
    cdef long L = zpref.shape[0]

    S_arr = np.zeros(L, dtype=np.int64)
    T_arr = np.zeros(L, dtype=np.float64)
    nz_arr = np.zeros(L, dtype=np.int64)
    cdef cnp.int64_t[::1] S = S_arr
    cdef cnp.float64_t[::1] T = T_arr
    cdef cnp.int64_t[::1] nzc = nz_arr

    cdef long ell, k, j, cnt, idx, nact, wpos, tid
    cdef long visited = 0
    cdef double ssum, comp, term, tmp
    cdef long* caps
    cdef long* cur
    cdef long* csum
    cdef long* order
    cdef cnp.int64_t[::1] R

    if n == 0 or L == 0:
        return S_arr, T_arr, 0, 0

    if skip:
        R = np.zeros(n, dtype=np.int64)
        order = <long*> malloc(n * sizeof(long))
        caps = <long*> malloc(s * sizeof(long))
        cur = <long*> malloc((r + 1) * sizeof(long))
        csum = <long*> malloc((r + 1) * sizeof(long))
        if order == NULL or caps == NULL or cur == NULL or csum == NULL:
            free(order); free(caps); free(cur); free(csum)
            raise MemoryError
        try:
            with nogil:
                for k in range(n):
                    order[k] = k
                nact = n
                for ell in range(L):
                    ssum = 0.0
                    comp = 0.0
                    wpos = 0
                    for k in range(nact):
                        idx = order[k]
                        for j in range(s):
                            if base == 2:
                                caps[j] = r - _bitlen(xpref[idx, j] ^ zpref[ell, j])
                            else:
                                caps[j] = _cap_general(xpref[idx, j], zpref[ell, j], base, r)
                        cnt = _count_bounded(caps, s, r, cur, csum)
                        visited += 1
                        if cnt != 0:
                            S[ell] += cnt
                            nzc[ell] += 1
                            term = y[idx] * <double> cnt
                            tmp = ssum + term
                            if fabs(ssum) >= fabs(term):
                                comp += (ssum - tmp) + term
                            else:
                                comp += (term - tmp) + ssum
                            ssum = tmp
                            R[idx] += 1
                            if R[idx] >= budget:
                                continue  # saturated: drop from active list
                        order[wpos] = idx
                        wpos += 1
                    # rebuild active list: saturated entries were not copied
                    nact = wpos
                    T[ell] = ssum + comp
        finally:
            free(order); free(caps); free(cur); free(csum)
        return S_arr, T_arr, int(visited), int(np.sum(nz_arr))

    # plain path: net points are independent, parallelize over ell
    cdef int nthreads = threads if threads > 0 else 1
    # pad per-thread scratch to cache-line multiples to avoid false sharing
    cdef long stride_c = ((s + 15) // 16) * 16
    cdef long stride_b = ((r + 16) // 16) * 16
    cdef const cnp.int64_t* xptr = &xpref[0, 0]
    cdef const cnp.int64_t* zptr = &zpref[0, 0]
    cdef const cnp.float64_t* yptr = &y[0]
    cdef cnp.int64_t* Sptr = &S[0]
    cdef cnp.float64_t* Tptr = &T[0]
    cdef cnp.int64_t* nzptr = &nzc[0]
    caps = <long*> malloc(nthreads * stride_c * sizeof(long))
    cur = <long*> malloc(nthreads * stride_b * sizeof(long))
    csum = <long*> malloc(nthreads * stride_b * sizeof(long))
    if caps == NULL or cur == NULL or csum == NULL:
        free(caps); free(cur); free(csum)
        raise MemoryError
    try:
        with nogil, parallel(num_threads=nthreads):
            for ell in prange(L, schedule="static"):
                tid = threadid()
                _one_point(xptr, yptr, zptr, base, r, s, n, ell,
                           caps + tid * stride_c, cur + tid * stride_b,
                           csum + tid * stride_b, Sptr, Tptr, nzptr)
    finally:
        free(caps); free(cur); free(csum)
    return S_arr, T_arr, int(n * L), int(np.sum(nz_arr))


cdef void _one_point(const cnp.int64_t* xpref, const cnp.float64_t* y,
                     const cnp.int64_t* zpref, long base, long r, long s,
                     long n, long ell, long* caps, long* cur, long* csum,
                     cnp.int64_t* S, cnp.float64_t* T,
                     cnp.int64_t* nzc) noexcept nogil:
    cdef long k, j, cnt
    cdef double ssum = 0.0
    cdef double comp = 0.0
    cdef double term, tmp
    cdef const cnp.int64_t* zrow = zpref + ell * s
    cdef const cnp.int64_t* xrow
    for k in range(n):
        xrow = xpref + k * s
        for j in range(s):
            if base == 2:
                caps[j] = r - _bitlen(xrow[j] ^ zrow[j])
            else:
                caps[j] = _cap_general(xrow[j], zrow[j], base, r)
        cnt = _count_bounded(caps, s, r, cur, csum)
        if cnt != 0:
            S[ell] += cnt
            nzc[ell] += 1
            term = y[k] * <double> cnt
            tmp = ssum + term
            if fabs(ssum) >= fabs(term):
                comp += (ssum - tmp) + term
            else:
                comp += (term - tmp) + ssum
            ssum = tmp
    T[ell] = ssum + comp
