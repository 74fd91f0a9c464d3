"""Per-net-point weights encoding local data mass and response mass.

For a digital (t,m,s)-net and refinement level nu <= m - t, the weight of
net point z is an alternating combination of the level sums

    S_r(z) = sum over |d| = r of |X in I_d(z)|          (data counts)
    T_r(z) = sum over |d| = r of sum of y_n over X in I_d(z)

for r = nu - q, q = 0..qmax with qmax = min(s-1, nu).  S-contributions are
integers and each combination term carries the scale b^(qmax-q), so the
whole W_X numerator is an integer over the common denominator
N * b^(m-nu+qmax); floats are produced only at the end.  T accumulates
responses in a fixed order per method.

Two interchangeable level computations exist: a per-partition bucket count
(cheap when the number of refinement vectors is small) and the pairwise
digit-prefix scan (cheap for small N*L, and the only one that supports the
saturation-skipping optimization).  W_X is bit-identical between them; W_XY
agrees to the last few ulps and is bit-identical within a method.
"""

from __future__ import annotations

import hashlib
import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels, digits
from .counting import combination_terms, compositions, num_compositions
from .data import DataSet
from .netgen import DigitalNet

WEIGHT_MAGIC = b"QMCW"
WEIGHT_VERSION = 1
_METHOD_CODES = {"pairwise": 0, "bucket": 1, "oracle": 2}
_METHOD_NAMES = {v: k for k, v in _METHOD_CODES.items()}

#: Below this many (data point, net point) pairs the pairwise scan is used.
PAIRWISE_AUTO_LIMIT = 1 << 21


class NetConditionError(ValueError):
    """The net-weight simplification requires a known t with nu <= m - t."""


def neumaier_sum(values: np.ndarray) -> float:
    """Compensated sequential sum; mirrors the kernels' T accumulation."""
    s = 0.0
    c = 0.0
    for v in values:
        v = float(v)
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def exact_sum(values) -> float:
    """Exactly rounded sum (order independent); the canonical reduction for
    response moments and the order-0 level."""
    if isinstance(values, np.ndarray):
        values = values.tolist()
    return math.fsum(values)


def retained_levels(nu: int, s: int) -> range:
    """Levels r = nu - q needed by the combination terms."""
    return range(max(0, nu - s + 1), nu + 1)


def lemma4_budget(s: int, r: int, base: int, m: int) -> int:
    """Bound on the number of net points a data point can contribute to at level r."""
    return math.comb(s - 1 + r, s - 1) * base ** (m - r)


@dataclass(frozen=True)
class WeightSet:
    """Weights plus the retained level tables that allow later refinement."""

    base: int
    m: int
    s: int
    nu: int
    t_used: int | None
    alpha: int
    n_data: int
    w_x: np.ndarray  # (L,) float64
    w_xy: np.ndarray  # (L,) float64
    w_x_num: np.ndarray  # (L,) int64 exact numerators
    denominator: int  # N * b^(m - nu + min(s-1, nu))
    s_table: dict[int, np.ndarray]
    t_table: dict[int, np.ndarray]
    y_mean: float
    y_sq_mean: float
    method: str
    net_sha: str
    net_depth: int

    @property
    def n_points(self) -> int:
        return self.base**self.m

    def matches(self, net: DigitalNet) -> bool:
        return (
            net.base == self.base
            and net.m == self.m
            and net.s == self.s
            and net_fingerprint(net) == self.net_sha
        )


def net_fingerprint(net: DigitalNet) -> str:
    h = hashlib.sha256()
    h.update(
        struct.pack("<5q", net.base, net.m, net.s, net.depth, net.interlacing_order)
    )
    h.update(np.ascontiguousarray(net.point_ints, dtype="<i8").tobytes())
    return h.hexdigest()


def _bucket_level(net_pref, data_pref, y, base, r):
    """S_r, T_r by bucketing both point sets per refinement vector d.

    Exact for S; T adds the per-d partial sums in the fixed composition
    order (bincount itself accumulates in ascending data index).
    """
    L, s = net_pref.shape
    S = np.zeros(L, dtype=np.int64)
    T = np.zeros(L, dtype=np.float64)
    nbins = base**r
    for d in compositions(r, s):
        kd = np.zeros(data_pref.shape[0], dtype=np.int64)
        kn = np.zeros(L, dtype=np.int64)
        for j, dj in enumerate(d):
            div = base ** (r - dj)
            kd = kd * base**dj + data_pref[:, j] // div
            kn = kn * base**dj + net_pref[:, j] // div
        counts = np.bincount(kd, minlength=nbins)
        sums = np.bincount(kd, weights=y, minlength=nbins)
        S += counts[kn]
        T += sums[kn]
    return S, T


def _choose_method(n: int, L: int, method: str) -> str:
    if method == "auto":
        return "pairwise" if n * L <= PAIRWISE_AUTO_LIMIT else "bucket"
    if method not in _METHOD_CODES:
        raise ValueError(f"unknown method {method!r}")
    return method


def _level_tables(net: DigitalNet, data: DataSet, levels, method: str,
                  skip: bool = False, threads: int = 1, point_slice=slice(None)):
    """S_r/T_r arrays for each level in `levels` on the selected net points."""
    n = data.n
    y = data.Y
    s_tables: dict[int, np.ndarray] = {}
    t_tables: dict[int, np.ndarray] = {}
    zints = net.point_ints[point_slice]
    L = zints.shape[0]
    for r in levels:
        if r == 0:
            s_tables[0] = np.full(L, n, dtype=np.int64)
            t_tables[0] = np.full(L, exact_sum(y), dtype=np.float64)
            continue
        data_pref = data.prefix(r)
        if net.base == 2:
            net_pref = zints >> (net.depth - r)
        else:
            net_pref = zints // net.base ** (net.depth - r)
        if method == "bucket":
            if skip:
                raise ValueError("saturation skipping requires the pairwise method")
            S, T = _bucket_level(net_pref, data_pref, y, net.base, r)
        else:
            budget = min(lemma4_budget(net.s, r, net.base, net.m), net.n_points + 1)
            S, T, _, _ = _kernels.pairwise_st(
                data_pref, y, net_pref, net.base, r, budget, skip, threads
            )
        s_tables[r] = S
        t_tables[r] = T
    return s_tables, t_tables


def compute_S(net: DigitalNet, data: DataSet, r: int, method: str = "auto",
              threads: int = 1) -> np.ndarray:
    """S_r(z) for every net point z: data counts summed over all |d| = r cells."""
    _check_level_depth(net, data, r)
    method = _choose_method(data.n, net.n_points, method)
    s_tables, _ = _level_tables(net, data, [r], method, threads=threads)
    return s_tables[r]


def compute_T(net: DigitalNet, data: DataSet, r: int, method: str = "auto",
              threads: int = 1) -> np.ndarray:
    """T_r(z): response sums over all |d| = r cells containing z."""
    _check_level_depth(net, data, r)
    method = _choose_method(data.n, net.n_points, method)
    _, t_tables = _level_tables(net, data, [r], method, threads=threads)
    return t_tables[r]


def _check_level_depth(net: DigitalNet, data: DataSet, r: int) -> None:
    if data.n == 0:
        raise ValueError("cannot assemble weights for an empty dataset")
    if r < 0:
        raise ValueError("r must be >= 0")
    if r > data.prefix_depth or r > net.depth:
        raise ValueError(
            f"level {r} exceeds stored digit depth (data {data.prefix_depth}, net {net.depth})"
        )
    if data.base != net.base:
        raise ValueError("dataset and net bases differ")


def _resolve_t(net: DigitalNet, nu: int, validate: str) -> int | None:
    t = net.t_declared
    if validate == "force":
        if t is None or nu > net.m - t:
            warnings.warn(
                f"nu={nu} not validated against the net quality "
                f"(t={'unknown' if t is None else t}); the net-weight formula is "
                "applied as-is",
                RuntimeWarning,
                stacklevel=3,
            )
        return t
    if validate != "strict":
        raise ValueError(f"unknown validate mode {validate!r}")
    if t is None:
        raise NetConditionError(
            "net has no verified or declared t-value; verify with minimal_t, "
            "declare one, or pass validate='force'"
        )
    if nu > net.m - t:
        raise NetConditionError(
            f"nu={nu} exceeds m - t = {net.m - t}: the per-cell net-point count "
            "b^(m-nu+q) identity fails; reduce nu, grow the net, or use the "
            "generic brute-force weights"
        )
    return t


def _assemble(net: DigitalNet, data: DataSet, nu: int, t_used, s_tables, t_tables,
              method: str) -> WeightSet:
    n = data.n
    y_sq = exact_sum(data.Y * data.Y) / n if n else 0.0
    y_me = exact_sum(data.Y) / n if n else 0.0
    return _assemble_from_moments(net, nu, t_used, s_tables, t_tables, method,
                                  n, y_me, y_sq)


def _assemble_from_moments(net: DigitalNet, nu: int, t_used, s_tables, t_tables,
                           method: str, n: int, y_mean: float,
                           y_sq_mean: float) -> WeightSet:
    if n == 0:
        raise ValueError("cannot assemble weights for an empty dataset")
    b, m, s = net.base, net.m, net.s
    L = net.n_points
    terms = combination_terms(nu, s)
    # per-term scale b^(qmax - q) makes every term integral over the common
    # denominator N * b^(m - nu + qmax); qmax = min(s-1, nu) is the largest
    # occurring q, so the scale never exceeds b^nu
    qmax = min(s - 1, nu)
    bound = sum(
        t.coeff * b ** (qmax - t.q) * n * num_compositions(t.depth, s) for t in terms
    )
    if bound >= 2**62:
        raise OverflowError("exact weight numerators exceed the 64-bit range")
    num = np.zeros(L, dtype=np.int64)
    w_xy = np.zeros(L, dtype=np.float64)
    for t in terms:
        num += (t.sign * t.coeff * b ** (qmax - t.q)) * s_tables[t.depth]
        w_xy += t_tables[t.depth] * float(t.sign * t.coeff * b ** float(-t.q))
    denominator = n * b ** (m - nu + qmax)
    w_x = num / float(denominator)
    w_xy *= float(b) ** (nu - m) / n
    keep = set(retained_levels(nu, s))
    return WeightSet(
        base=b,
        m=m,
        s=s,
        nu=nu,
        t_used=t_used,
        alpha=net.interlacing_order,
        n_data=n,
        w_x=w_x,
        w_xy=w_xy,
        w_x_num=num,
        denominator=denominator,
        s_table={r: s_tables[r] for r in keep},
        t_table={r: t_tables[r] for r in keep},
        y_mean=y_mean,
        y_sq_mean=y_sq_mean,
        method=method,
        net_sha=net_fingerprint(net),
        net_depth=net.depth,
    )


def assemble_weights(net: DigitalNet, data: DataSet, nu: int, method: str = "auto",
                     validate: str = "strict", threads: int = 1) -> WeightSet:
    """Weights W_X and W_XY for every net point at refinement level nu.

    Requires a verified or declared t with nu <= m - t (validate="force"
    applies the formula regardless, which is how the large-scale experiments
    run when exhaustive verification is out of reach).
    """
    if nu < 0:
        raise ValueError("nu must be >= 0")
    _check_level_depth(net, data, nu)
    t_used = _resolve_t(net, nu, validate)
    method = _choose_method(data.n, net.n_points, method)
    levels = retained_levels(nu, net.s)
    s_tables, t_tables = _level_tables(net, data, levels, method, threads=threads)
    return _assemble(net, data, nu, t_used, s_tables, t_tables, method)


def assemble_weights_skipping(net: DigitalNet, data: DataSet, nu: int,
                              validate: str = "strict") -> WeightSet:
    """Pairwise weight computation with per-data-point saturation skipping.

    A data point is dropped for level r once it has contributed a nonzero
    count at b^(m-r) * C(s-1+r, s-1) net points; every later contribution is
    provably zero, so the result is bit-identical to the plain pairwise path.
    """
    if nu < 0:
        raise ValueError("nu must be >= 0")
    _check_level_depth(net, data, nu)
    t_used = _resolve_t(net, nu, validate)
    levels = retained_levels(nu, net.s)
    s_tables, t_tables = _level_tables(net, data, levels, "pairwise", skip=True)
    return _assemble(net, data, nu, t_used, s_tables, t_tables, "pairwise")


def skipping_visit_counts(net: DigitalNet, data: DataSet, r: int) -> tuple[int, int, int]:
    """(visited pairs, nonzero pairs, per-point budget) for the skipping scan at level r."""
    _check_level_depth(net, data, r)
    if r == 0:
        return 0, 0, 0
    budget = min(lemma4_budget(net.s, r, net.base, net.m), net.n_points + 1)
    data_pref = data.prefix(r)
    net_pref = net.prefix(r)
    _, _, visited, nonzero = _kernels.pairwise_st(
        data_pref, data.Y, net_pref, net.base, r, budget, True, 1
    )
    return int(visited), int(nonzero), budget


def extend_weights(ws: WeightSet, net_new: DigitalNet, data: DataSet, nu_new: int,
                   validate: str = "strict", threads: int = 1) -> WeightSet:
    """Refine a WeightSet to a larger net (m' >= m) and/or level (nu' >= nu).

    The first b^m points of `net_new` must be the original net (same
    generating matrices, extended precision).  Retained S/T tables are
    reused: old points only compute the levels above nu, new points compute
    the full window.  The result equals a fresh assemble_weights(net_new,
    data, nu_new) with the recorded method, bit for bit.
    """
    b, m_old, s = ws.base, ws.m, ws.s
    if net_new.base != b or net_new.s != s:
        raise ValueError("net' must share base and dimension with the original net")
    if net_new.m < m_old or nu_new < ws.nu:
        raise ValueError("extension requires m' >= m and nu' >= nu")
    if net_new.interlacing_order != ws.alpha:
        raise ValueError("net' must share the interlacing order")
    if data.n != ws.n_data:
        raise ValueError("extension must use the original dataset")
    L_old = b**m_old
    shift = net_new.depth - ws.net_depth
    if shift < 0:
        raise ValueError("net' stores fewer digits than the original net")
    head = net_new.point_ints[:L_old]
    trunc, rem = np.divmod(head, b**shift)
    if rem.any():
        raise ValueError("net' is not an extension: old points gained nonzero digits")
    h = hashlib.sha256()
    h.update(struct.pack("<5q", b, m_old, s, ws.net_depth, ws.alpha))
    h.update(np.ascontiguousarray(trunc, dtype="<i8").tobytes())
    if h.hexdigest() != ws.net_sha:
        raise ValueError("net' is not an extension of the weight set's net")
    if net_new.m == m_old and nu_new == ws.nu:
        return ws
    t_used = _resolve_t(net_new, nu_new, validate)
    levels = list(retained_levels(nu_new, s))
    s_tables: dict[int, np.ndarray] = {}
    t_tables: dict[int, np.ndarray] = {}
    old_missing = [r for r in levels if r > ws.nu]
    s_old, t_old = _level_tables(
        net_new, data, old_missing, ws.method, threads=threads, point_slice=slice(0, L_old)
    )
    s_new, t_new = _level_tables(
        net_new, data, levels, ws.method, threads=threads, point_slice=slice(L_old, None)
    )
    for r in levels:
        if r <= ws.nu:
            old_part_s = ws.s_table[r]
            old_part_t = ws.t_table[r]
        else:
            old_part_s = s_old[r]
            old_part_t = t_old[r]
        s_tables[r] = np.concatenate([old_part_s, s_new[r]])
        t_tables[r] = np.concatenate([old_part_t, t_new[r]])
    return _assemble(net_new, data, nu_new, t_used, s_tables, t_tables, ws.method)


def assemble_weights_streaming(net: DigitalNet, chunk_source, nu: int,
                               validate: str = "strict") -> WeightSet:
    """Weights from a dataset consumed as a stream of (X, Y) chunks.

    `chunk_source` is a callable returning a fresh iterable of (X, Y) array
    pairs; the stream is consumed once per retained level, so the dataset
    never needs to fit in memory (only the per-partition count/sum bins do,
    C(r+s-1, s-1) * base**r entries per level).  With the whole dataset in a
    single chunk the result is bit-identical to the in-memory bucket method;
    other chunkings agree on W_X exactly and on W_XY to rounding order.
    """
    if nu < 0:
        raise ValueError("nu must be >= 0")
    b, s = net.base, net.s
    t_used = _resolve_t(net, nu, validate)
    levels = [r for r in retained_levels(nu, s)]
    n_total = 0
    y_parts: list[float] = []
    y2_parts: list[float] = []
    s_tables: dict[int, np.ndarray] = {}
    t_tables: dict[int, np.ndarray] = {}
    first_pass = True
    for r in sorted(levels, reverse=True):
        if r == 0:
            continue
        if r > net.depth:
            raise ValueError(f"level {r} exceeds net digit depth {net.depth}")
        net_pref = net.prefix(r)
        dlist = list(compositions(r, s))
        nbins = b**r
        counts = {d: np.zeros(nbins, dtype=np.int64) for d in dlist}
        sums = {d: np.zeros(nbins, dtype=np.float64) for d in dlist}
        n_seen = 0
        for X, Y in chunk_source():
            X = np.asarray(X, dtype=np.float64)
            Y = np.asarray(Y, dtype=np.float64)
            if X.shape[1] != s:
                raise ValueError("chunk dimension does not match the net")
            pref = digits.pack_prefixes(X, b, r)
            for d in dlist:
                key = np.zeros(X.shape[0], dtype=np.int64)
                for j, dj in enumerate(d):
                    key = key * b**dj + pref[:, j] // b ** (r - dj)
                counts[d] += np.bincount(key, minlength=nbins)
                sums[d] += np.bincount(key, weights=Y, minlength=nbins)
            n_seen += X.shape[0]
            if first_pass:
                y_parts.append(math.fsum(Y.tolist()))
                y2_parts.append(math.fsum((Y * Y).tolist()))
        if first_pass:
            n_total = n_seen
            first_pass = False
        elif n_seen != n_total:
            raise ValueError("chunk stream changed length between passes")
        L = net.n_points
        S = np.zeros(L, dtype=np.int64)
        T = np.zeros(L, dtype=np.float64)
        for d in dlist:
            key = np.zeros(L, dtype=np.int64)
            for j, dj in enumerate(d):
                key = key * b**dj + net_pref[:, j] // b ** (r - dj)
            S += counts[d][key]
            T += sums[d][key]
        s_tables[r] = S
        t_tables[r] = T
    if first_pass:
        # nu = 0 (or s = 1 with nu = 0): one dedicated pass for the moments
        for X, Y in chunk_source():
            Y = np.asarray(Y, dtype=np.float64)
            n_total += len(Y)
            y_parts.append(math.fsum(Y.tolist()))
            y2_parts.append(math.fsum((Y * Y).tolist()))
    if 0 in levels:
        s_tables[0] = np.full(net.n_points, n_total, dtype=np.int64)
        t_tables[0] = np.full(net.n_points, math.fsum(y_parts), dtype=np.float64)
    if n_total == 0:
        raise ValueError("empty data stream")
    return _assemble_from_moments(
        net, nu, t_used, s_tables, t_tables, "bucket", n_total,
        math.fsum(y_parts) / n_total, math.fsum(y2_parts) / n_total,
    )


def save_weights(ws: WeightSet, path: str, include_tables: bool = True) -> None:
    """Binary weight file: fixed little-endian header, float64/int64 payload."""
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        fh.write(struct.pack("<I", WEIGHT_VERSION))
        t_code = -1 if ws.t_used is None else ws.t_used
        fh.write(
            struct.pack(
                "<10q",
                ws.base,
                ws.m,
                ws.s,
                ws.nu,
                t_code,
                ws.alpha,
                ws.n_data,
                ws.net_depth,
                _METHOD_CODES[ws.method],
                1 if include_tables else 0,
            )
        )
        fh.write(struct.pack("<2d", ws.y_mean, ws.y_sq_mean))
        fh.write(struct.pack("<q", ws.denominator))
        fh.write(bytes.fromhex(ws.net_sha))
        fh.write(np.ascontiguousarray(ws.w_x_num, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(ws.w_x, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ws.w_xy, dtype="<f8").tobytes())
        if include_tables:
            levels = sorted(ws.s_table)
            fh.write(struct.pack("<q", len(levels)))
            for r in levels:
                fh.write(struct.pack("<q", r))
                fh.write(np.ascontiguousarray(ws.s_table[r], dtype="<i8").tobytes())
                fh.write(np.ascontiguousarray(ws.t_table[r], dtype="<f8").tobytes())


def load_weights(path: str) -> WeightSet:
    with open(path, "rb") as fh:
        if fh.read(4) != WEIGHT_MAGIC:
            raise ValueError(f"{path}: not a weight file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != WEIGHT_VERSION:
            raise ValueError(f"{path}: unsupported weight file version {version}")
        base, m, s, nu, t_code, alpha, n_data, depth, mcode, has_tables = struct.unpack(
            "<10q", fh.read(80)
        )
        y_mean, y_sq_mean = struct.unpack("<2d", fh.read(16))
        (denominator,) = struct.unpack("<q", fh.read(8))
        net_sha = fh.read(32).hex()
        L = base**m
        w_x_num = np.frombuffer(fh.read(8 * L), dtype="<i8").astype(np.int64)
        w_x = np.frombuffer(fh.read(8 * L), dtype="<f8").astype(np.float64)
        w_xy = np.frombuffer(fh.read(8 * L), dtype="<f8").astype(np.float64)
        s_table: dict[int, np.ndarray] = {}
        t_table: dict[int, np.ndarray] = {}
        if has_tables:
            (nlevels,) = struct.unpack("<q", fh.read(8))
            for _ in range(nlevels):
                (r,) = struct.unpack("<q", fh.read(8))
                s_table[r] = np.frombuffer(fh.read(8 * L), dtype="<i8").astype(np.int64)
                t_table[r] = np.frombuffer(fh.read(8 * L), dtype="<f8").astype(np.float64)
    return WeightSet(
        base=base,
        m=m,
        s=s,
        nu=nu,
        t_used=None if t_code < 0 else t_code,
        alpha=alpha,
        n_data=n_data,
        w_x=w_x,
        w_xy=w_xy,
        w_x_num=w_x_num,
        denominator=denominator,
        s_table=s_table,
        t_table=t_table,
        y_mean=y_mean,
        y_sq_mean=y_sq_mean,
        method=_METHOD_NAMES[mcode],
        net_sha=net_sha,
        net_depth=depth,
    )


def weights_debug_dict(ws: WeightSet) -> dict:
    """JSON-friendly dump used by the CLI inspector."""
    return {
        "base": ws.base,
        "m": ws.m,
        "s": ws.s,
        "nu": ws.nu,
        "t_used": ws.t_used,
        "alpha": ws.alpha,
        "n_data": ws.n_data,
        "n_points": ws.n_points,
        "method": ws.method,
        "denominator": ws.denominator,
        "y_mean": ws.y_mean,
        "y_sq_mean": ws.y_sq_mean,
        "sum_w_x": float(ws.w_x.sum()),
        "sum_w_xy": float(ws.w_xy.sum()),
        "min_w_x": float(ws.w_x.min()),
        "max_w_x": float(ws.w_x.max()),
        "retained_levels": sorted(ws.s_table),
        "net_sha": ws.net_sha,
    }
