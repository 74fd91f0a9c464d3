"""Base-b digit expansions of points in [0, 1).

All digit extraction is exact: a float is a binary rational, and digits are
obtained with integer arithmetic on its numerator/denominator, so two code
paths can never disagree about a digit.  Expansions are canonical (the finite
expansion is chosen, never a trailing run of b-1 digits), and the value 1.0
is clamped to the largest float below 1 so that every input lands in exactly
one elementary interval of [0, 1)^s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Stored digit depth for base-2 prefixes; every digit of a float in [0.5, 1)
#: is captured, and deeper digits of smaller floats are zero up to this depth.
DEPTH_BASE2 = 52

ONE_MINUS_ULP = math.nextafter(1.0, 0.0)


def max_depth(base: int) -> int:
    """Largest prefix depth whose packed value fits in a signed 64-bit int."""
    if base == 2:
        return 62
    d = 1
    while base ** (d + 1) < 2**62:
        d += 1
    return d


def default_depth(base: int) -> int:
    return DEPTH_BASE2 if base == 2 else min(32, max_depth(base))


def clamp_unit(x: float) -> float:
    """Map 1.0 to its predecessor float; reject values outside [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"coordinate {x!r} outside [0, 1]")
    return ONE_MINUS_ULP if x == 1.0 else x


@dataclass(frozen=True)
class DigitVector:
    """The first `depth` digits of the canonical base-b expansion of a point.

    Digits are most-significant first: value = sum(digits[i] * b**-(i+1)).
    """

    digits: tuple[int, ...]
    base: int
    depth: int

    def __post_init__(self):
        if len(self.digits) != self.depth:
            raise ValueError("digit count does not match depth")
        if any(d < 0 or d >= self.base for d in self.digits):
            raise ValueError(f"digit outside 0..{self.base - 1}")

    def value(self) -> float:
        """Value of the stored prefix (exact for base 2 up to float precision)."""
        acc = 0.0
        for d in reversed(self.digits):
            acc = (acc + d) / self.base
        return acc

    def to_int(self) -> int:
        """Packed prefix: sum(digits[i] * b**(depth-1-i))."""
        acc = 0
        for d in self.digits:
            acc = acc * self.base + d
        return acc

    @classmethod
    def from_int(cls, value: int, base: int, depth: int) -> "DigitVector":
        digs = []
        for _ in range(depth):
            digs.append(value % base)
            value //= base
        return cls(tuple(reversed(digs)), base, depth)


def prefix_int(x: float, base: int, depth: int) -> int:
    """floor(x * base**depth), computed exactly from the float's bits.

    This packs the first `depth` digits of the canonical expansion into one
    integer; comparing prefixes of two points to depth d is then an integer
    comparison of `prefix >> shift` (base 2) or `prefix // base**k`.
    """
    x = clamp_unit(x)
    num, den = x.as_integer_ratio()
    return num * base**depth // den


def digits_of(x: float, base: int, depth: int) -> DigitVector:
    """First `depth` digits of the canonical base-b expansion of x in [0, 1].

    x = 1.0 is clamped below 1 before expansion.  Raises ValueError outside
    [0, 1].
    """
    if base < 2:
        raise ValueError("base must be >= 2")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    p = prefix_int(x, base, depth)
    return DigitVector.from_int(p, base, depth)


def digitwise_add(a: DigitVector, b: DigitVector) -> DigitVector:
    """Digit-wise addition modulo the base (the group operation of digital nets)."""
    if a.base != b.base or a.depth != b.depth:
        raise ValueError("operands must share base and depth")
    return DigitVector(
        tuple((x + y) % a.base for x, y in zip(a.digits, b.digits)), a.base, a.depth
    )


def digitwise_sub(a: DigitVector, b: DigitVector) -> DigitVector:
    """Digit-wise subtraction modulo the base."""
    if a.base != b.base or a.depth != b.depth:
        raise ValueError("operands must share base and depth")
    return DigitVector(
        tuple((x - y) % a.base for x, y in zip(a.digits, b.digits)), a.base, a.depth
    )


def pack_prefixes(X: np.ndarray, base: int, depth: int) -> np.ndarray:
    """Packed digit prefixes for an (N, s) array of coordinates in [0, 1].

    Returns int64 of the same shape: entry = floor(x * base**depth), exact.
    Base 2 is vectorized (scaling by 2**depth is exact); other bases go
    through exact per-element integer arithmetic.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise ValueError("coordinates outside [0, 1]")
    if depth > max_depth(base):
        raise ValueError(f"depth {depth} overflows int64 prefixes in base {base}")
    if base == 2:
        Xc = np.where(X == 1.0, ONE_MINUS_ULP, X)
        return (Xc * np.float64(2.0**depth)).astype(np.int64)
    out = np.empty(X.shape, dtype=np.int64)
    flat_in = X.ravel()
    flat_out = out.ravel()
    for i, x in enumerate(flat_in):
        flat_out[i] = prefix_int(float(x), base, depth)
    return out
