"""Digital net construction, digit interlacing, and t-value verification.

Nets are generated from m x m matrices over Z_b: the digits of coordinate j
of point number l are C_j applied to the base-b digits of l.  The bundled
generator builds base-2 Sobol matrices from direction numbers in the
published Joe-Kuo text format (an excerpt covering the first 32 dimensions
is embedded; QMC_DIRECTION_FILE or an explicit path selects a full file).

The t-value of a net is verified exhaustively: t is the smallest integer
such that every elementary interval of volume b^(t-m) contains exactly b^t
points.  A rank-based check over Z_2 (equivalent for digital nets) is
provided as an independent cross-check, and the worst t-value over all
two-dimensional coordinate projections is exposed separately: published
Sobol quality tables track that projection quantity, not the full
s-dimensional t-value.
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, replace
from typing import Iterable, TextIO

import numpy as np

from .counting import compositions, num_compositions
from .digits import max_depth

DIRECTION_FILE_ENV = "QMC_DIRECTION_FILE"

#: Joe-Kuo direction numbers (new-joe-kuo-6 search), dimensions 2..32.
#: Format per line: dimension, polynomial degree s, coefficient code a, m_1..m_s.
BUNDLED_DIRECTION_TEXT = """\
d       s       a       m_i
2       1       0       1
3       2       1       1 3
4       3       1       1 3 1
5       3       2       1 1 1
6       4       1       1 1 3 3
7       4       4       1 3 5 13
8       5       2       1 1 5 5 17
9       5       4       1 1 5 5 5
10      5       7       1 1 7 11 19
11      5       11      1 1 5 1 1
12      5       13      1 1 1 3 11
13      5       14      1 3 5 5 31
14      6       1       1 3 3 9 7 49
15      6       13      1 1 1 15 21 21
16      6       16      1 3 1 13 27 49
17      6       19      1 1 1 15 7 5
18      6       22      1 3 1 15 13 25
19      6       25      1 1 5 5 19 61
20      7       1       1 3 7 11 23 15 103
21      7       4       1 3 7 13 13 15 69
22      7       7       1 1 3 13 7 35 63
23      7       8       1 3 5 9 1 25 53
24      7       14      1 3 1 13 9 35 107
25      7       19      1 3 1 5 27 61 31
26      7       21      1 1 5 11 19 41 61
27      7       28      1 3 5 3 3 13 69
28      7       31      1 1 7 13 1 19 1
29      7       32      1 3 7 5 13 19 59
30      7       37      1 1 3 9 25 29 41
31      7       41      1 3 5 13 23 1 55
32      7       42      1 3 7 3 13 59 17
"""


class DirectionParseError(ValueError):
    """Malformed direction-number stream."""


class DimensionCapacityError(ValueError):
    """Requested dimension exceeds the loaded direction-number table."""


class TValueBudgetError(RuntimeError):
    """Exhaustive t verification would exceed the configured work budget."""


@dataclass(frozen=True)
class DirectionEntry:
    degree: int
    a: int
    m_init: tuple[int, ...]


@dataclass(frozen=True)
class DirectionTable:
    """Parsed Joe-Kuo table; entry j-2 drives Sobol dimension j (j >= 2)."""

    entries: tuple[DirectionEntry, ...]

    @property
    def max_dimension(self) -> int:
        return len(self.entries) + 1

    def entry(self, dim: int) -> DirectionEntry:
        if dim < 2 or dim > self.max_dimension:
            raise DimensionCapacityError(
                f"dimension {dim} not covered (table holds dimensions up to "
                f"{self.max_dimension})"
            )
        return self.entries[dim - 2]


def load_direction_numbers(stream: TextIO) -> DirectionTable:
    """Parse a Joe-Kuo direction-number stream.

    Expected layout: one header line, then per dimension a line of
    space-separated integers `d s a m_1 ... m_s`.
    """
    lines = stream.read().splitlines()
    if not lines:
        raise DirectionParseError("empty direction-number stream")
    entries = []
    expected_dim = 2
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split()
        try:
            d, deg, a = int(fields[0]), int(fields[1]), int(fields[2])
            m_init = tuple(int(f) for f in fields[3:])
        except (ValueError, IndexError) as exc:
            raise DirectionParseError(f"line {lineno}: malformed entry {line!r}") from exc
        if len(m_init) != deg:
            raise DirectionParseError(
                f"line {lineno}: expected {deg} initial direction numbers, got {len(m_init)}"
            )
        if d != expected_dim:
            raise DirectionParseError(
                f"line {lineno}: dimension {d} out of order (expected {expected_dim})"
            )
        if any(m % 2 == 0 or m >= 2**k for k, m in enumerate(m_init, start=1)):
            raise DirectionParseError(f"line {lineno}: direction numbers must be odd with m_k < 2^k")
        entries.append(DirectionEntry(deg, a, m_init))
        expected_dim += 1
    if not entries:
        raise DirectionParseError("direction-number stream has no data lines")
    return DirectionTable(tuple(entries))


def bundled_table() -> DirectionTable:
    return load_direction_numbers(io.StringIO(BUNDLED_DIRECTION_TEXT))


def active_table(path: str | None = None) -> DirectionTable:
    """Bundled table, unless a file path or QMC_DIRECTION_FILE overrides it."""
    path = path or os.environ.get(DIRECTION_FILE_ENV)
    if path:
        with open(path, "r", encoding="ascii") as fh:
            return load_direction_numbers(fh)
    return bundled_table()


@dataclass(frozen=True)
class GeneratingMatrices:
    """s generating matrices of shape (m, m) with entries in Z_base."""

    base: int
    m: int
    s: int
    matrices: np.ndarray  # (s, m, m) uint8

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=np.uint8)
        if mats.shape != (self.s, self.m, self.m):
            raise ValueError("matrices must have shape (s, m, m)")
        if mats.size and mats.max() >= self.base:
            raise ValueError("matrix entries must lie in Z_base")
        object.__setattr__(self, "matrices", mats)


def _direction_integers(entry: DirectionEntry, m: int) -> list[int]:
    """Direction integers m_1..m_m via the Sobol recurrence (m_k < 2^k, odd)."""
    deg, a = entry.degree, entry.a
    mv = list(entry.m_init)
    for k in range(deg + 1, m + 1):
        val = (mv[k - deg - 1] << deg) ^ mv[k - deg - 1]
        for i in range(1, deg):
            if (a >> (deg - 1 - i)) & 1:
                val ^= mv[k - i - 1] << i
        mv.append(val)
    return mv[:m]


def build_matrices(table: DirectionTable, s: int, m: int) -> GeneratingMatrices:
    """Sobol generating matrices for dimensions 1..s in base 2.

    Column k of C_j holds the first m digits of the k-th direction number of
    dimension j; dimension 1 is the van der Corput identity matrix.
    """
    if s < 1 or m < 1:
        raise ValueError("s and m must be >= 1")
    if s > table.max_dimension:
        raise DimensionCapacityError(
            f"requested {s} dimensions, table covers {table.max_dimension}"
        )
    mats = np.zeros((s, m, m), dtype=np.uint8)
    for j in range(s):
        if j == 0:
            cols = [1 << (m - k) for k in range(1, m + 1)]
        else:
            mv = _direction_integers(table.entry(j + 1), m)
            cols = [mv[k - 1] << (m - k) for k in range(1, m + 1)]
        for k, v in enumerate(cols):
            for i in range(m):
                mats[j, i, k] = (v >> (m - 1 - i)) & 1
    return GeneratingMatrices(base=2, m=m, s=s, matrices=mats)


@dataclass(frozen=True)
class DigitalNet:
    """b^m points in [0,1)^s with exact digit representations.

    `point_ints[l, j]` packs the first `depth` base-b digits of coordinate j
    of point l; the float coordinate is point_ints / b**depth.  `depth` is m
    for plain nets and alpha*m after interlacing.
    """

    base: int
    m: int
    s: int
    depth: int
    point_ints: np.ndarray  # (b^m, s) int64
    t_declared: int | None = None
    interlacing_order: int = 1
    t_upper_bound: int | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.point_ints, dtype=np.int64)
        if pts.shape != (self.base**self.m, self.s):
            raise ValueError("point_ints must have shape (base**m, s)")
        object.__setattr__(self, "point_ints", pts)

    @property
    def n_points(self) -> int:
        return self.base**self.m

    def points(self) -> np.ndarray:
        """Float coordinates (exact when base**depth is a power of two <= 2^53)."""
        return self.point_ints / float(self.base) ** self.depth

    def prefix(self, depth: int) -> np.ndarray:
        """Packed digit prefixes of every coordinate, truncated to `depth`."""
        if depth > self.depth:
            raise ValueError(f"net stores {self.depth} digits, requested {depth}")
        if self.base == 2:
            return self.point_ints >> (self.depth - depth)
        return self.point_ints // self.base ** (self.depth - depth)

    def with_t(self, t: int) -> "DigitalNet":
        return replace(self, t_declared=t)


def generate_net(matrices: GeneratingMatrices) -> DigitalNet:
    """All b^m points of the digital net defined by the generating matrices.

    Point l has digit vector C_j (l_0, ..., l_{m-1})^T over Z_b in coordinate
    j, with l_0 the least significant digit of l; point 0 is the origin.
    """
    b, m, s = matrices.base, matrices.m, matrices.s
    L = b**m
    ell = np.arange(L, dtype=np.int64)
    ell_digits = np.empty((L, m), dtype=np.int64)
    for k in range(m):
        ell_digits[:, k] = (ell // b**k) % b
    weights = np.array([b ** (m - 1 - i) for i in range(m)], dtype=np.int64)
    pts = np.empty((L, s), dtype=np.int64)
    for j in range(s):
        digs = (ell_digits @ matrices.matrices[j].T.astype(np.int64)) % b
        pts[:, j] = digs @ weights
    return DigitalNet(base=b, m=m, s=s, depth=m, point_ints=pts)


def sobol_net(s: int, m: int, table: DirectionTable | None = None) -> DigitalNet:
    """Base-2 Sobol digital net on s dimensions with 2^m points."""
    table = table or active_table()
    return generate_net(build_matrices(table, s, m))


def interlacing_t_bound(t: int, s: int, alpha: int) -> int:
    """Upper bound on the t-value produced by order-alpha digit interlacing."""
    return alpha * t + alpha * ((s * (alpha - 1)) // 2)


def interlace(net: DigitalNet, alpha: int) -> DigitalNet:
    """Digit-interlace blocks of alpha coordinates into one higher-order coordinate.

    Output coordinate c takes digit (i-1)*alpha + j from digit i of input
    coordinate (c-1)*alpha + j; output digit depth is alpha*m.  alpha = 1 is
    the identity.
    """
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if alpha == 1:
        return net
    if net.s % alpha != 0:
        raise ValueError(f"net dimension {net.s} not divisible by alpha={alpha}")
    if net.depth < net.m:
        raise ValueError("net must store at least m digits per coordinate")
    b, m = net.base, net.m
    out_depth = alpha * m
    if out_depth > max_depth(b):
        raise ValueError(f"interlaced depth {out_depth} overflows int64 digits")
    s_out = net.s // alpha
    src = net.prefix(m)
    out = np.zeros((net.n_points, s_out), dtype=np.int64)
    for c in range(s_out):
        for i in range(1, m + 1):
            for j in range(1, alpha + 1):
                # digit i of input coordinate (c*alpha + j-1), value in Z_b
                dig = (src[:, c * alpha + j - 1] // b ** (m - i)) % b
                out[:, c] += dig * b ** (out_depth - ((i - 1) * alpha + j))
    t_bound = None
    if net.t_declared is not None:
        t_bound = interlacing_t_bound(net.t_declared, s_out, alpha)
    return DigitalNet(
        base=b,
        m=m,
        s=s_out,
        depth=out_depth,
        point_ints=out,
        t_declared=None,
        interlacing_order=alpha,
        t_upper_bound=t_bound,
    )


DEFAULT_T_BUDGET = 2_000_000_000


def _interval_counts_ok(net: DigitalNet, d: tuple[int, ...], t: int) -> bool:
    """Check that every cell of the partition at depths d holds exactly b^t points."""
    b = net.base
    k = net.m - t
    key = np.zeros(net.n_points, dtype=np.int64)
    for j, dj in enumerate(d):
        pref = (
            net.point_ints[:, j] >> (net.depth - dj)
            if b == 2
            else net.point_ints[:, j] // b ** (net.depth - dj)
        )
        key = key * b**dj + pref
    counts = np.bincount(key, minlength=b**k)
    return bool(np.all(counts == b**t))


def minimal_t(net: DigitalNet, budget: int = DEFAULT_T_BUDGET) -> int:
    """Smallest t such that the (t, m, s)-net property holds, by exhaustive counting.

    Every elementary interval with |d| = m - t is checked to contain exactly
    b^t points.  Raises TValueBudgetError (never a wrong answer) when the
    scan s * b^m * #d would exceed `budget`.
    """
    m, s = net.m, net.s
    for t in range(m + 1):
        work = s * net.n_points * num_compositions(m - t, s)
        if work > budget:
            raise TValueBudgetError(
                f"t={t} check needs ~{work:.2e} units, budget {budget:.2e}; "
                "unverifiable at this size"
            )
        if all(_interval_counts_ok(net, d, t) for d in compositions(m - t, s)):
            return t
    return m


def verified_net(net: DigitalNet, budget: int = DEFAULT_T_BUDGET) -> DigitalNet:
    """Net with t_declared set to its exhaustively verified t-value."""
    return net.with_t(minimal_t(net, budget=budget))


def _row_bitmasks(matrices: GeneratingMatrices) -> list[list[int]]:
    mats = matrices.matrices
    out = []
    for j in range(matrices.s):
        rows = []
        for i in range(matrices.m):
            v = 0
            for k in range(matrices.m):
                v = (v << 1) | int(mats[j, i, k])
            rows.append(v)
        out.append(rows)
    return out


def _rank_gf2(rows: Iterable[int]) -> int:
    basis: list[int] = []
    for v in rows:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return len(basis)


def matrix_rank_t(matrices: GeneratingMatrices) -> int:
    """t-value from row ranks over Z_2 (independent of point generation).

    The digital net of `matrices` is a (t, m, s)-net iff for every d with
    |d| = m - t the first d_j rows of each C_j stack to full rank m - t.
    """
    if matrices.base != 2:
        raise ValueError("rank check implemented for base 2 only")
    rows = _row_bitmasks(matrices)
    m, s = matrices.m, matrices.s
    for t in range(m + 1):
        k = m - t
        ok = True
        for d in compositions(k, s):
            stacked = []
            for j in range(s):
                stacked.extend(rows[j][: d[j]])
            if _rank_gf2(stacked) != k:
                ok = False
                break
        if ok:
            return t
    return m


def _pair_t_rank(rows_a: list[int], rows_b: list[int], m: int) -> int:
    for t in range(m + 1):
        k = m - t
        if all(
            _rank_gf2(rows_a[:d1] + rows_b[: k - d1]) == k for d1 in range(k + 1)
        ):
            return t
    return m


def worst_pair_projection_t(table: DirectionTable, s: int, m: int) -> int:
    """Worst t-value over all two-dimensional coordinate projections.

    Published Sobol quality tables report the dimension at which each value
    of this quantity first occurs; it lower-bounds the full s-dimensional
    t-value and is much cheaper to evaluate.
    """
    mats = build_matrices(table, s, m)
    rows = _row_bitmasks(mats)
    worst = 0
    for j in range(1, s):
        for i in range(j):
            worst = max(worst, _pair_t_rank(rows[i], rows[j], m))
    return worst


def pair_t_first_occurrences(table: DirectionTable, m: int, s_max: int) -> dict[int, int]:
    """Dimension at which each worst-pair t-value first occurs, up to s_max."""
    mats = build_matrices(table, s_max, m)
    rows = _row_bitmasks(mats)
    firsts: dict[int, int] = {}
    worst = 0
    for s in range(2, s_max + 1):
        for i in range(s - 1):
            worst = max(worst, _pair_t_rank(rows[i], rows[s - 1], m))
        firsts.setdefault(worst, s)
    return firsts


def default_nu(m: int, alpha: int, t: int = 0) -> int:
    """Refinement level balancing data and quadrature error: round(m*a/(a+1)).

    Clipped into [0, m - t] so the net-weight simplification stays valid.
    """
    nu = round(m * alpha / (alpha + 1))
    return max(0, min(nu, m - t))


def schedule_m(nu: int, alpha: int) -> int:
    """Net size rule m = ceil((1 + 1/alpha) * nu + 4) used by the experiments."""
    return math.ceil((1 + 1 / alpha) * nu + 4)


def export_net(net: DigitalNet, csv_path: str, sidecar_path: str | None = None) -> None:
    """Write points as CSV `l,z_1,...,z_s` plus a JSON sidecar with net metadata."""
    pts = net.points()
    with open(csv_path, "w", encoding="ascii") as fh:
        fh.write("l," + ",".join(f"z_{j+1}" for j in range(net.s)) + "\n")
        for ell in range(net.n_points):
            fh.write(str(ell) + "," + ",".join(repr(float(v)) for v in pts[ell]) + "\n")
    sidecar_path = sidecar_path or csv_path + ".json"
    meta = {
        "base": net.base,
        "m": net.m,
        "s": net.s,
        "alpha": net.interlacing_order,
        "t": net.t_declared,
        "depth": net.depth,
    }
    with open(sidecar_path, "w", encoding="ascii") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def import_net(csv_path: str, sidecar_path: str | None = None) -> DigitalNet:
    """Rebuild a DigitalNet from export_net output (exact for depth <= 52)."""
    sidecar_path = sidecar_path or csv_path + ".json"
    with open(sidecar_path, "r", encoding="ascii") as fh:
        meta = json.load(fh)
    b, m, s, depth = meta["base"], meta["m"], meta["s"], meta["depth"]
    if depth > 52 and b == 2:
        raise ValueError("CSV float coordinates cannot carry more than 52 base-2 digits")
    pts = np.zeros((b**m, s), dtype=np.int64)
    with open(csv_path, "r", encoding="ascii") as fh:
        header = fh.readline()
        if not header.startswith("l,"):
            raise ValueError("missing net CSV header")
        for line in fh:
            fields = line.split(",")
            ell = int(fields[0])
            for j in range(s):
                x = float(fields[1 + j])
                num, den = x.as_integer_ratio()
                pts[ell, j] = num * b**depth // den
    return DigitalNet(
        base=b,
        m=m,
        s=s,
        depth=depth,
        point_ints=pts,
        t_declared=meta.get("t"),
        interlacing_order=meta.get("alpha", 1),
    )
