"""NumPy reference implementation of the pairwise digit-prefix kernel.

For every net point z and data point x it finds, per coordinate, the length
of the common digit prefix (capped at r), counts the refinement vectors
d <= i with |d| = r by the moving-sum recursion, and accumulates the count
into S_r(z) and y-weighted into T_r(z).  T is accumulated with Neumaier
compensated summation over data points in ascending index order, adding only
nonzero terms, so the compiled kernel and the skipping variant reproduce it
bit for bit.
"""

from __future__ import annotations

import numpy as np


def _caps_base2(xp: np.ndarray, zrow: np.ndarray, r: int) -> np.ndarray:
    xor = xp ^ zrow
    # bit_length via frexp; exact because r <= 52 keeps values below 2^53
    _, exp = np.frexp(xor.astype(np.float64))
    return r - exp.astype(np.int64)


def _caps_general(xp: np.ndarray, zrow: np.ndarray, base: int, r: int) -> np.ndarray:
    caps = np.zeros(xp.shape, dtype=np.int64)
    for depth in range(1, r + 1):
        div = base ** (r - depth)
        caps += (xp // div) == (zrow // div)
    return caps


def _count_bounded(caps: np.ndarray, r: int) -> np.ndarray:
    """Vectorized #{d <= i, |d| = r} for each row i of caps."""
    n, s = caps.shape
    counts = (np.arange(r + 1)[None, :] <= caps[:, 0:1]).astype(np.int64)
    for j in range(1, s):
        csum = np.cumsum(counts, axis=1)
        idx = np.arange(r + 1)[None, :] - caps[:, j : j + 1] - 1
        shifted = np.zeros_like(csum)
        valid = idx >= 0
        np.copyto(shifted, np.take_along_axis(csum, np.clip(idx, 0, r), axis=1), where=valid)
        counts = csum - shifted
    return counts[:, r]


def pairwise_st(xpref, y, zpref, base, r, budget, skip, threads=1):
    """S_r and T_r at every net point from digit prefixes truncated to depth r.

    Parameters
    ----------
    xpref, zpref : int64 arrays (N, s) and (L, s), prefixes at depth r
    y : float64 (N,) responses
    budget : saturation bound on nonzero contributions per data point
        (only consulted when `skip` is true)
    skip : drop a data point once its nonzero-contribution count reaches
        the budget (all its remaining contributions are provably zero)

    Returns (S, T, visited_pairs, nonzero_pairs).
    """
    xpref = np.ascontiguousarray(xpref, dtype=np.int64)
    zpref = np.ascontiguousarray(zpref, dtype=np.int64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, s = xpref.shape
    L = zpref.shape[0]
    S = np.zeros(L, dtype=np.int64)
    T = np.zeros(L, dtype=np.float64)
    R = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    visited = 0
    nonzero = 0
    for ell in range(L):
        if skip:
            idx = np.flatnonzero(active)
            xp = xpref[idx]
            ys = y[idx]
        else:
            idx = None
            xp = xpref
            ys = y
        if xp.shape[0] == 0:
            continue
        if base == 2:
            caps = _caps_base2(xp, zpref[ell], r)
        else:
            caps = _caps_general(xp, zpref[ell], base, r)
        feasible = np.flatnonzero(caps.sum(axis=1) >= r)
        visited += xp.shape[0]
        if feasible.size == 0:
            continue
        cnt = _count_bounded(caps[feasible], r)
        nz_local = np.flatnonzero(cnt)
        S[ell] = cnt.sum()
        ssum = 0.0
        comp = 0.0
        for k in nz_local:
            term = float(ys[feasible[k]]) * float(cnt[k])
            tmp = ssum + term
            if abs(ssum) >= abs(term):
                comp += (ssum - tmp) + term
            else:
                comp += (term - tmp) + ssum
            ssum = tmp
        T[ell] = ssum + comp
        nonzero += nz_local.size
        if skip and nz_local.size:
            hit = idx[feasible[nz_local]]
            R[hit] += 1
            active[hit[R[hit] >= budget]] = False
    return S, T, visited, nonzero
