"""Ground-truth machinery the fast paths are verified against.

Walsh characters, the digit-position weight mu_alpha, the empirical-density
polynomial phi_K (computed two independent ways and cross-checked), and
brute-force weights by direct enumeration of every refinement vector and
direct geometric membership counting.  Cell indices are computed here with
exact integer arithmetic straight from the float bits, deliberately not
through the packed-prefix machinery used by the production weight paths.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .counting import combination_terms
from .data import DataSet
from .netgen import DigitalNet
from .weights import WeightSet, exact_sum, net_fingerprint

PHI_BUDGET = 50_000_000
BRUTE_BUDGET = 200_000_000


class BudgetError(RuntimeError):
    """Instance too large for the brute-force path."""


class OracleConsistencyError(AssertionError):
    """The two independent phi_K computations disagree."""


def _cell_index(x: float, base: int, depth: int) -> int:
    """floor(x * base**depth) via exact integer arithmetic on the float's bits."""
    if x == 1.0:
        x = math.nextafter(1.0, 0.0)
    num, den = x.as_integer_ratio()
    return num * base**depth // den


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    # local enumerator, kept separate from the production one on purpose
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def digit_expansion(x: float, base: int, depth: int) -> list[int]:
    """First `depth` canonical digits, most significant first."""
    cell = _cell_index(x, base, depth)
    digs = []
    for _ in range(depth):
        digs.append(cell % base)
        cell //= base
    return digs[::-1]


def walsh_eval_1d(k: int, x: float, base: int) -> complex:
    """The k-th base-b Walsh character at x.

    exp((2 pi i / b) * sum_i kappa_i * x_{i+1}) where kappa_i are the base-b
    digits of k (least significant first) and x_i the canonical fraction
    digits of x.  For base 2 the value is +-1.
    """
    if k == 0:
        return complex(1.0, 0.0)
    kd = []
    kk = k
    while kk:
        kd.append(kk % base)
        kk //= base
    xd = digit_expansion(x, base, len(kd))
    sigma = sum(kappa * xi for kappa, xi in zip(kd, xd)) % base
    if base == 2:
        return complex(1.0 if sigma == 0 else -1.0, 0.0)
    return cmath.exp(2j * cmath.pi * sigma / base)


def walsh_eval_digits(k: int, digits: Sequence[int], base: int) -> complex:
    """Walsh character from an explicit digit sequence (exact in any base).

    Floats cannot represent every base-b digit prefix exactly for b != 2;
    digit-domain evaluation sidesteps that for algebraic identity checks.
    """
    sigma = 0
    kk = k
    i = 0
    while kk:
        if i >= len(digits):
            raise ValueError(f"k={k} needs digit {i + 1}, only {len(digits)} stored")
        sigma += (kk % base) * digits[i]
        kk //= base
        i += 1
    sigma %= base
    if base == 2:
        return complex(1.0 if sigma == 0 else -1.0, 0.0)
    return cmath.exp(2j * cmath.pi * sigma / base)


def walsh_eval(k: Sequence[int], x: Sequence[float], base: int) -> complex:
    """Tensor-product Walsh character at a point of [0,1)^s."""
    out = complex(1.0, 0.0)
    for kj, xj in zip(k, x):
        out *= walsh_eval_1d(kj, xj, base)
    return out


def walsh_eval_points(k: Sequence[int], X: np.ndarray, base: int) -> np.ndarray:
    """Walsh character evaluated at every row of X (complex128)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    sigma = np.zeros(n, dtype=np.int64)
    for j, kj in enumerate(k):
        if kj == 0:
            continue
        kd = []
        while kj:
            kd.append(kj % base)
            kj //= base
        depth = len(kd)
        cells = np.array(
            [_cell_index(float(x), base, depth) for x in X[:, j]], dtype=np.int64
        )
        for i, kappa in enumerate(kd):
            # digit x_{i+1} sits at position depth-1-i of the cell index
            dig = (cells // base ** (depth - 1 - i)) % base
            sigma += kappa * dig
    sigma %= base
    if base == 2:
        return np.where(sigma == 0, 1.0, -1.0).astype(np.complex128)
    return np.exp(2j * np.pi * sigma / base)


def mu_alpha(k: int, alpha: int, base: int) -> int:
    """Sum of the positions of the min(alpha, r) most significant nonzero digits.

    Position a means the digit multiplying base**(a-1); mu_alpha(0) = 0.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    positions = []
    pos = 1
    while k:
        if k % base:
            positions.append(pos)
        k //= base
        pos += 1
    return sum(sorted(positions, reverse=True)[:alpha])


def mu_alpha_vector(k: Sequence[int], alpha: int, base: int) -> int:
    return sum(mu_alpha(kj, alpha, base) for kj in k)


def walsh_indices(nu: int, s: int, base: int) -> Iterator[tuple[int, ...]]:
    """All k in K_nu: vectors whose total digit length is at most nu."""

    def rec(j: int, remaining: int, prefix: tuple[int, ...]):
        if j == s:
            yield prefix
            return
        for length in range(remaining + 1):
            lo = 0 if length == 0 else base ** (length - 1)
            hi = 1 if length == 0 else base**length
            for kj in range(lo, hi):
                yield from rec(j + 1, remaining - length, prefix + (kj,))

    yield from rec(0, nu, ())


def data_walsh_coefficient(k: Sequence[int], data: DataSet, c_mode: str) -> complex:
    """Empirical Walsh coefficient (1/N) sum c_n omega_k(x_n)."""
    c = _coefficients(data, c_mode)
    vals = walsh_eval_points(k, data.X, data.base)
    return complex((vals * c).sum() / data.n)


def _coefficients(data: DataSet, c_mode: str) -> np.ndarray:
    if c_mode == "ones":
        return np.ones(data.n)
    if c_mode == "responses":
        return data.Y
    raise ValueError(f"unknown coefficient mode {c_mode!r}")


def phi_K(z: Sequence[float], data: DataSet, c_mode: str, nu: int,
          tol: float = 1e-9, budget: int = PHI_BUDGET) -> float:
    """The density polynomial phi_{K_nu}(z), computed two ways and cross-checked.

    (a) the direct Walsh double sum over all k in K_nu;
    (b) the counting form: inclusion-exclusion over |d| = nu - q of
        (b^{|d|}/N) * sum of c_n over data in the cell of z.

    Returns (b) after asserting both agree to `tol`; their agreement is the
    content of the interval-counting identity behind the weight formulas.
    """
    base, s, n = data.base, data.s, data.n
    ks = list(walsh_indices(nu, s, base))
    if len(ks) * n > budget:
        raise BudgetError(f"phi_K needs {len(ks) * n} Walsh evaluations, budget {budget}")
    c = _coefficients(data, c_mode)
    direct = 0j
    for k in ks:
        mu_k = (walsh_eval_points(k, data.X, base) * c).sum() / n
        direct += mu_k * np.conj(walsh_eval(k, z, base))
    counting = 0.0
    for term in combination_terms(nu, s):
        if term.depth == 0:
            counting += term.sign * term.coeff * float(c.sum()) / n
            continue
        for d in _compositions(term.depth, s):
            mask = np.ones(n, dtype=bool)
            for j, dj in enumerate(d):
                if dj == 0:
                    continue
                zcell = _cell_index(float(z[j]), base, dj)
                cells = np.array(
                    [_cell_index(float(x), base, dj) for x in data.X[:, j]]
                )
                mask &= cells == zcell
            counting += term.sign * term.coeff * base**term.depth * float(c[mask].sum()) / n
    if abs(direct.imag) > tol or abs(direct.real - counting) > tol:
        raise OracleConsistencyError(
            f"phi_K paths disagree: walsh={direct}, counting={counting}"
        )
    return counting


def net_walsh_mean(net: DigitalNet, k: Sequence[int]) -> complex:
    """(1/L) sum over net points of omega_k; 1 for k = 0, 0 on integrated modes.

    Digits come from the net's exact integer representation, so the value is
    exact in any base (net floats round across cell boundaries for b != 2).
    """
    b = net.base
    sigma = np.zeros(net.n_points, dtype=np.int64)
    for j, kj in enumerate(k):
        kk = int(kj)
        i = 1
        while kk:
            if i > net.depth:
                break  # digits beyond the stored depth are zero
            dig = (net.point_ints[:, j] // b ** (net.depth - i)) % b
            sigma += (kk % b) * dig
            kk //= b
            i += 1
    sigma %= b
    if b == 2:
        return complex(np.where(sigma == 0, 1.0, -1.0).sum() / net.n_points)
    vals = np.exp(2j * np.pi * sigma / b)
    return complex(vals.sum() / net.n_points)


@dataclass(frozen=True)
class GenericWeights:
    """Weights for an arbitrary representative point set (no net structure)."""

    points: np.ndarray
    nu: int
    w_x: np.ndarray
    w_xy: np.ndarray
    lost_mass: float


def _check_brute_budget(n: int, L: int, nu: int, s: int, budget: int) -> None:
    work = 0
    for term in combination_terms(nu, s):
        work += math.comb(term.depth + s - 1, s - 1) * (n + L) * s
    if work > budget:
        raise BudgetError(f"brute-force enumeration needs ~{work} steps, budget {budget}")


def brute_force_weights(P, data: DataSet, nu: int, budget: int = BRUTE_BUDGET):
    """Weights by direct enumeration of every |d| = nu - q and direct counting.

    With a digital net P (verified t, nu <= m - t) this returns a WeightSet
    whose integer numerators must coincide exactly with assemble_weights;
    the per-cell net counts b^(m-nu+q) are verified along the way.  With an
    arbitrary point array it returns GenericWeights; cells that hold data but
    no representative point contribute nothing, and their data mass is
    reported (with a warning) as `lost_mass`.
    """
    if isinstance(P, DigitalNet):
        return _brute_force_net(P, data, nu, budget)
    return _brute_force_generic(np.asarray(P, dtype=np.float64), data, nu, budget)


def _cells_of(points: np.ndarray, d: tuple[int, ...], base: int) -> list[tuple[int, ...]]:
    cols = []
    for j, dj in enumerate(d):
        cols.append([_cell_index(float(x), base, dj) for x in points[:, j]])
    return list(zip(*cols))


def _net_cells(net: DigitalNet, d: tuple[int, ...]) -> list[tuple[int, ...]]:
    # net coordinates are exact base-b rationals; for b != 2 their float
    # images round across cell boundaries, so cells come from the exact
    # integer representation
    b = net.base
    cols = []
    for j, dj in enumerate(d):
        div = b ** (net.depth - dj)
        cols.append([int(v) // div for v in net.point_ints[:, j]])
    return list(zip(*cols))


def _brute_force_net(net: DigitalNet, data: DataSet, nu: int, budget: int) -> WeightSet:
    if net.t_declared is None or nu > net.m - net.t_declared:
        raise ValueError("net path requires a declared t with nu <= m - t")
    if data.base != net.base:
        raise ValueError("dataset and net bases differ")
    b, m, s = net.base, net.m, net.s
    L = net.n_points
    n = data.n
    _check_brute_budget(n, L, nu, s, budget)
    num = np.zeros(L, dtype=np.int64)
    w_xy = np.zeros(L, dtype=np.float64)
    qmax = min(s - 1, nu)
    for term in combination_terms(nu, s):
        q, r = term.q, term.depth
        expected_cell = b ** (m - nu + q)
        t_level = np.zeros(L, dtype=np.float64)
        s_level = np.zeros(L, dtype=np.int64)
        for d in _compositions(r, s):
            data_cells = _cells_of(data.X, d, b)
            counts: dict[tuple[int, ...], int] = {}
            ysums: dict[tuple[int, ...], float] = {}
            for cell, yv in zip(data_cells, data.Y):
                counts[cell] = counts.get(cell, 0) + 1
                ysums[cell] = ysums.get(cell, 0.0) + float(yv)
            net_cells = _net_cells(net, d)
            percell: dict[tuple[int, ...], int] = {}
            for cell in net_cells:
                percell[cell] = percell.get(cell, 0) + 1
            if any(v != expected_cell for v in percell.values()):
                raise AssertionError(
                    f"net cell count != b^(m-nu+q) at d={d}; t-value too optimistic"
                )
            for ell, cell in enumerate(net_cells):
                s_level[ell] += counts.get(cell, 0)
                t_level[ell] += ysums.get(cell, 0.0)
        num += (term.sign * term.coeff * b ** (qmax - q)) * s_level
        w_xy += t_level * float(term.sign * term.coeff * float(b) ** (-q))
    denominator = n * b ** (m - nu + qmax)
    w_x = num / float(denominator)
    w_xy *= float(b) ** (nu - m) / n
    return WeightSet(
        base=b,
        m=m,
        s=s,
        nu=nu,
        t_used=net.t_declared,
        alpha=net.interlacing_order,
        n_data=n,
        w_x=w_x,
        w_xy=w_xy,
        w_x_num=num,
        denominator=denominator,
        s_table={},
        t_table={},
        y_mean=exact_sum(data.Y) / n if n else 0.0,
        y_sq_mean=exact_sum(data.Y * data.Y) / n if n else 0.0,
        method="oracle",
        net_sha=net_fingerprint(net),
        net_depth=net.depth,
    )


def generic_weights_as_weightset(net: DigitalNet, data: DataSet, nu: int,
                                 budget: int = BRUTE_BUDGET) -> WeightSet:
    """Generic-formula weights on a net's points, packaged as a WeightSet.

    Valid for any nu (the actual per-cell net counts are used), so this is
    the fallback when nu > m - t.  Exact integer numerators and level tables
    are not available on this route.
    """
    gw = _brute_force_generic(net.points(), data, nu, budget,
                              rep_cells=lambda d: _net_cells(net, d))
    n = data.n
    return WeightSet(
        base=net.base,
        m=net.m,
        s=net.s,
        nu=nu,
        t_used=net.t_declared,
        alpha=net.interlacing_order,
        n_data=n,
        w_x=gw.w_x,
        w_xy=gw.w_xy,
        w_x_num=np.zeros(net.n_points, dtype=np.int64),
        denominator=0,
        s_table={},
        t_table={},
        y_mean=exact_sum(data.Y) / n if n else 0.0,
        y_sq_mean=exact_sum(data.Y * data.Y) / n if n else 0.0,
        method="oracle",
        net_sha=net_fingerprint(net),
        net_depth=net.depth,
    )


def _brute_force_generic(points: np.ndarray, data: DataSet, nu: int,
                         budget: int, rep_cells=None) -> GenericWeights:
    """rep_cells overrides the representative points' cell computation (used
    for digital nets whose float coordinates are inexact in base != 2)."""
    b, s, n = data.base, data.s, data.n
    L = points.shape[0]
    _check_brute_budget(n, L, nu, s, budget)
    w_x = np.zeros(L, dtype=np.float64)
    w_xy = np.zeros(L, dtype=np.float64)
    lost = 0.0
    for term in combination_terms(nu, s):
        for d in _compositions(term.depth, s):
            data_cells = _cells_of(data.X, d, b)
            counts: dict[tuple[int, ...], int] = {}
            ysums: dict[tuple[int, ...], float] = {}
            for cell, yv in zip(data_cells, data.Y):
                counts[cell] = counts.get(cell, 0) + 1
                ysums[cell] = ysums.get(cell, 0.0) + float(yv)
            net_cells = rep_cells(d) if rep_cells is not None else _cells_of(points, d, b)
            percell: dict[tuple[int, ...], int] = {}
            for cell in net_cells:
                percell[cell] = percell.get(cell, 0) + 1
            for cell, cnt in counts.items():
                if cell not in percell:
                    lost += cnt / n
            for ell, cell in enumerate(net_cells):
                cx = counts.get(cell, 0)
                if cx:
                    w_x[ell] += term.sign * term.coeff * cx / (n * percell[cell])
                    w_xy[ell] += term.sign * term.coeff * ysums[cell] / (n * percell[cell])
    if lost > 0.0:
        warnings.warn(
            f"{lost:.3g} of the data mass (summed over partitions) lies in cells "
            "without representative points and is dropped",
            RuntimeWarning,
            stacklevel=2,
        )
    return GenericWeights(points=points, nu=nu, w_x=w_x, w_xy=w_xy, lost_mass=lost)
