"""Bounded-precision (BP) counts.

A BP number stores a nonnegative integer as ``alpha * 2**beta`` with an
``n_alpha``-bit mantissa and an ``n_beta``-bit exponent.  Conversion always
rounds *down*, i.e. it keeps the ``n_alpha`` leading binary digits of the value
and clears the rest, so a count stored in BP never exceeds the exact count.

Exact counts are plain Python ``int`` objects.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable

from .errors import BPOverflowError

__all__ = [
    "Precision",
    "BPNum",
    "truncate",
    "round_down",
    "bp_sum",
    "bp_shift",
    "bp_compare",
    "exponent_length",
    "auto_precision",
]


@dataclass(frozen=True)
class Precision:
    n_alpha: int
    n_beta: int

    def __post_init__(self):
        if self.n_alpha < 2:
            raise ValueError(f"n_alpha must be >= 2, got {self.n_alpha}")
        if self.n_beta < 1:
            raise ValueError(f"n_beta must be >= 1, got {self.n_beta}")

    @property
    def width(self) -> int:
        """Bits needed to store one value."""
        return self.n_alpha + self.n_beta

    @property
    def max_exponent(self) -> int:
        return (1 << self.n_beta) - 1


def truncate(x: int, n_alpha: int) -> int:
    """Keep the ``n_alpha`` most significant bits of ``x`` and zero the rest.

    No exponent bound is applied; this is the arithmetic core of
    :func:`round_down`.
    """
    drop = x.bit_length() - n_alpha
    if drop <= 0:
        return x
    return (x >> drop) << drop


@total_ordering
@dataclass(frozen=True)
class BPNum:
    """``alpha * 2**beta`` in normalized form.

    Normalization: ``beta == 0`` or the top mantissa bit is set, which makes
    the field pair unique for every representable value.
    """

    alpha: int
    beta: int
    precision: Precision

    def __post_init__(self):
        p = self.precision
        if not 0 <= self.alpha < (1 << p.n_alpha):
            raise ValueError(f"mantissa {self.alpha} does not fit in {p.n_alpha} bits")
        if not 0 <= self.beta <= p.max_exponent:
            raise BPOverflowError(f"exponent {self.beta} does not fit in {p.n_beta} bits")
        if self.beta > 0 and self.alpha < (1 << (p.n_alpha - 1)):
            raise ValueError("non-normalized BP number: leading mantissa bit clear with beta > 0")

    @property
    def value(self) -> int:
        return self.alpha << self.beta

    @classmethod
    def from_value(cls, x: int, precision: Precision) -> "BPNum":
        """Exact conversion; raises ``ValueError`` if ``x`` is not representable."""
        bp = round_down(x, precision)
        if bp.value != x:
            raise ValueError(f"{x} is not representable with an {precision.n_alpha}-bit mantissa")
        return bp

    def pack(self) -> int:
        """Field layout used on disk: mantissa in the low bits, exponent above."""
        return self.alpha | (self.beta << self.precision.n_alpha)

    @classmethod
    def unpack(cls, word: int, precision: Precision) -> "BPNum":
        alpha = word & ((1 << precision.n_alpha) - 1)
        return cls(alpha, word >> precision.n_alpha, precision)

    def __int__(self):
        return self.value

    def __lt__(self, other):
        if not isinstance(other, BPNum):
            return NotImplemented
        return bp_compare(self, other) < 0

    def __repr__(self):
        return f"BPNum({self.alpha}*2^{self.beta})"


def round_down(x: int, precision: Precision) -> BPNum:
    """Largest BP value ``<= x``.

    >>> round_down(374, Precision(4, 3))
    BPNum(11*2^5)
    """
    if x < 0:
        raise ValueError("BP numbers are nonnegative")
    beta = max(x.bit_length() - precision.n_alpha, 0)
    if beta > precision.max_exponent:
        raise BPOverflowError(
            f"value with {x.bit_length()} bits needs exponent {beta}, "
            f"but n_beta={precision.n_beta} allows at most {precision.max_exponent}"
        )
    return BPNum(x >> beta, beta, precision)


def bp_sum(terms: Iterable[BPNum], precision: Precision) -> BPNum:
    """Exact sum of the represented values, rounded down once."""
    terms = list(terms)
    if not terms:
        raise ValueError("bp_sum needs at least one term")
    return round_down(sum(t.value for t in terms), precision)


def bp_shift(x: BPNum, t: int) -> BPNum:
    """Multiply by ``2**t`` by moving the exponent; the mantissa is untouched."""
    if t < 0:
        raise ValueError("shift must be nonnegative")
    if x.alpha == 0 or t == 0:
        return x
    # a value with beta == 0 may carry leading zeros; renormalize before shifting
    if x.beta == 0:
        return round_down(x.value << t, x.precision)
    return BPNum(x.alpha, x.beta + t, x.precision)


def bp_compare(x: BPNum, y: BPNum) -> int:
    """Three-way comparison of represented values (-1, 0, 1)."""
    # normalized numbers with beta > 0 all have the same mantissa bit length,
    # so the exponent decides first
    if x.beta != y.beta and x.beta > 0 and y.beta > 0:
        return -1 if x.beta < y.beta else 1
    a, b = x.value, y.value
    return (a > b) - (a < b)


def exponent_length(k: int, n_alpha: int) -> int:
    """``ceil(log2(k + 1 - n_alpha))`` binary digits for the exponent."""
    if k + 1 <= n_alpha:
        raise ValueError(f"exponent length undefined for k={k}, n_alpha={n_alpha}")
    return (k - n_alpha).bit_length()


def auto_precision(k: int, n_alpha: int) -> Precision:
    """Precision whose exponent is wide enough for any count below ``2**(k+1)``.

    Normally equal to :func:`exponent_length`; one bit wider when
    ``k + 1 - n_alpha`` is an exact power of two.
    """
    if k + 1 <= n_alpha:
        return Precision(n_alpha, 1)
    return Precision(n_alpha, max(exponent_length(k, n_alpha), (k + 1 - n_alpha).bit_length()))


def log2_int(x: int) -> float:
    """``log2`` of an arbitrarily large positive integer."""
    if x <= 0:
        raise ValueError("log2 of a nonpositive integer")
    shift = max(x.bit_length() - 64, 0)
    return math.log2(x >> shift) + shift
