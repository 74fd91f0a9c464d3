"""Inclusion-exclusion coefficients and bounded-composition counts.

The combination principle expresses the indicator of the union family K_nu
(all admissible cell indices at total refinement nu) through the fixed-depth
families K_d with |d| = nu - q, with alternating binomial coefficients.  The
bounded-composition count is the number of refinement vectors d <= i with
|d| = r; it is the per-data-point contribution in the weight algorithms and
is computed by a coordinate-by-coordinate moving sum in O(rs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class CombinationTerm:
    """One inclusion-exclusion term: sign * coeff * (sum over |d| = depth)."""

    q: int
    sign: int
    coeff: int
    depth: int


def combination_terms(nu: int, s: int) -> list[CombinationTerm]:
    """Terms for q = 0..min(s-1, nu); terms with negative depth are dropped."""
    if nu < 0:
        raise ValueError("nu must be >= 0")
    if s < 1:
        raise ValueError("s must be >= 1")
    return [
        CombinationTerm(q=q, sign=(-1) ** q, coeff=math.comb(s - 1, q), depth=nu - q)
        for q in range(min(s - 1, nu) + 1)
    ]


def bounded_compositions_count(i: Sequence[int], r: int) -> int:
    """Number of d in N_0^s with |d| = r and d <= i componentwise.

    Moving-sum recursion over coordinates; cost O(rs).  The result is at most
    C(s-1+r, s-1), which is asserted to fit in 64 bits.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    s = len(i)
    if s < 1:
        raise ValueError("i must have at least one coordinate")
    if any(v < 0 for v in i):
        raise ValueError("i must be componentwise >= 0")
    if math.comb(s - 1 + r, s - 1) >= 2**63:
        raise OverflowError("composition count upper bound exceeds 64-bit range")
    # counts[r'] = number of (d_1..d_j) with sum r' and d_v <= i_v
    counts = [1 if rp <= i[0] else 0 for rp in range(r + 1)]
    for j in range(1, s):
        cap = i[j]
        prefix = 0
        new = [0] * (r + 1)
        for rp in range(r + 1):
            prefix += counts[rp]
            if rp - cap - 1 >= 0:
                prefix -= counts[rp - cap - 1]
            new[rp] = prefix
        counts = new
    return counts[r]


def bounded_compositions_count_batch(I: np.ndarray, r: int) -> np.ndarray:
    """Vectorized bounded_compositions_count for an (N, s) array of caps."""
    I = np.asarray(I, dtype=np.int64)
    n, s = I.shape
    if math.comb(s - 1 + r, s - 1) >= 2**63:
        raise OverflowError("composition count upper bound exceeds 64-bit range")
    counts = (np.arange(r + 1)[None, :] <= I[:, 0:1]).astype(np.int64)
    for j in range(1, s):
        csum = np.cumsum(counts, axis=1)
        shifted = np.zeros_like(csum)
        # prefix sum over the moving window [max(0, r'-i_j), r']
        idx = np.arange(r + 1)[None, :] - I[:, j : j + 1] - 1
        valid = idx >= 0
        np.copyto(shifted, np.take_along_axis(csum, np.clip(idx, 0, r), axis=1), where=valid)
        counts = csum - shifted
    return counts[:, r]


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All d in N_0^parts with |d| = total, first coordinate descending.

    The enumeration order is fixed and is part of the weight-table contract:
    float accumulations over d happen in this order on every code path.
    """
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def num_compositions(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


def digit_length(a: int, base: int) -> int:
    """Smallest d with a < base**d (number of base-b digits of a)."""
    if a < 0:
        raise ValueError("a must be >= 0")
    if base == 2:
        return a.bit_length()
    d = 0
    p = 1
    while p <= a:
        p *= base
        d += 1
    return d


def indicator_K_d(a: Sequence[int], d: Sequence[int], base: int) -> bool:
    """Membership of the index vector a in K_d: a_j < base**d_j for all j."""
    return all(aj < base**dj for aj, dj in zip(a, d))


def indicator_K(a: Sequence[int], nu: int, base: int) -> bool:
    """Membership in K_nu = union of K_d over |d| = nu.

    Equivalent to: the total digit length of a is at most nu.
    """
    return sum(digit_length(aj, base) for aj in a) <= nu
