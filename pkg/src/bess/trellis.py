"""Full enumerative sphere shaping trellis.

Column ``n`` (``0 <= n <= N``) holds nodes for levels ``l = 1..L``; level ``l``
in column ``n`` stands for accumulated energy ``8(l-1) + n``.  Amplitude
``a = 2t+1`` raises the level by ``(a*a - 1)/8 = t(t+1)/2``, so connectivity
is fully described by a short list of level offsets.

Every trellis stores, per column, an active window ``[lo, hi]`` of levels and
the counts for those levels (bottom-up).  The full trellis uses ``[1, L]``
everywhere; band trellises narrow the windows.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvertibilityError
from .numerics import Precision, log2_int, round_down

__all__ = [
    "Alphabet",
    "TrellisParams",
    "Adjacency",
    "CountTrellis",
    "Validation",
    "node_energy",
    "build_full_adjacency",
    "build_full_trellis",
    "validate_invertibility",
    "input_length",
    "shaping_rate",
]


@dataclass(frozen=True)
class Alphabet:
    """Amplitudes ``1, 3, ..., M-1`` of M-ASK."""

    M: int

    def __post_init__(self):
        if self.M < 2 or self.M % 2:
            raise ValueError(f"M must be a positive even integer, got {self.M}")

    @property
    def amplitudes(self) -> tuple[int, ...]:
        return tuple(range(1, self.M, 2))

    @property
    def offsets(self) -> tuple[int, ...]:
        """Level increment of each amplitude, in amplitude order."""
        return tuple(t * (t + 1) // 2 for t in range(self.M // 2))

    def offset(self, amplitude: int) -> int:
        if amplitude < 1 or amplitude >= self.M or amplitude % 2 == 0:
            raise ValueError(f"{amplitude} is not in the {self.M}-ASK amplitude alphabet")
        return (amplitude * amplitude - 1) // 8

    def __len__(self):
        return self.M // 2


@dataclass(frozen=True)
class TrellisParams:
    N: int
    L: int
    M: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        Alphabet(self.M)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.M)

    @property
    def E_max(self) -> int:
        return 8 * (self.L - 1) + self.N

    @classmethod
    def from_energy(cls, N: int, E_max: int, M: int) -> "TrellisParams":
        """Largest trellis whose top level does not exceed ``E_max``."""
        if E_max < N:
            raise ValueError("E_max must be at least N (the all-ones sequence)")
        return cls(N, (E_max - N) // 8 + 1, M)


def node_energy(n: int, l: int) -> int:
    """Accumulated energy represented by node ``(n, l)``."""
    return 8 * (l - 1) + n


@dataclass(frozen=True)
class Adjacency:
    """0/1 connectivity between levels of adjacent columns.

    ``a[i][j] = 1`` (1-based) iff ``j - i`` is one of ``offsets``.  Stored as
    the offset set; :meth:`to_array` materializes the matrix.
    """

    size: int
    offsets: tuple[int, ...]

    def to_array(self) -> np.ndarray:
        a = np.zeros((self.size, self.size), dtype=np.int64)
        for i in range(self.size):
            for o in self.offsets:
                if 0 <= i + o < self.size:
                    a[i, i + o] = 1
        return a

    def display(self) -> list[list[int]]:
        """Highest index first in both rows and columns, as printed in the literature."""
        return self.to_array()[::-1, ::-1].tolist()


def build_full_adjacency(alphabet: Alphabet, L: int) -> Adjacency:
    return Adjacency(L, alphabet.offsets)


@dataclass(frozen=True)
class Validation:
    ok: bool
    node: Optional[tuple[int, int]] = None

    def __bool__(self):
        return self.ok


class CountTrellis:
    """Path counts over per-column active windows.

    Parameters
    ----------
    params : TrellisParams
    windows : sequence of (lo, hi)
        Active levels for columns ``0..N``.
    columns : sequence of sequences of int
        Counts for levels ``lo..hi`` of each column.
    mode : str
        ``"exact"``, ``"bp"``, ``"scalar"`` or ``"shift"``.
    precision : Precision, optional
        Set when counts are BP-representable.
    """

    def __init__(self, params: TrellisParams, windows, columns, *, mode="exact",
                 precision: Optional[Precision] = None, band=None):
        self.params = params
        self.windows = tuple((int(lo), int(hi)) for lo, hi in windows)
        self.mode = mode
        self.precision = precision
        self.band = band
        self._columns = None if columns is None else tuple(tuple(c) for c in columns)
        if len(self.windows) != params.N + 1:
            raise ValueError("need one window per column")
        self._offsets = params.alphabet.offsets

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def L(self) -> int:
        return self.params.L

    @property
    def offsets(self) -> tuple[int, ...]:
        return self._offsets

    def window(self, n: int) -> tuple[int, int]:
        return self.windows[n]

    def column(self, n: int) -> tuple[int, ...]:
        """Counts of column ``n`` for levels ``lo..hi``."""
        return self._columns[n]

    def count(self, n: int, l: int) -> int:
        lo, hi = self.windows[n]
        if lo <= l <= hi:
            return self.column(n)[l - lo]
        return 0

    @cached_property
    def k(self) -> int:
        return input_length(self)

    @property
    def rate(self) -> float:
        return shaping_rate(self)

    def matrix(self) -> list[list[int]]:
        """Counts as an ``L x (N+1)`` table, top row = level ``L``; zeros off-window."""
        return [[self.count(n, l) for n in range(self.N + 1)] for l in range(self.L, 0, -1)]

    def log2_count(self) -> float:
        return log2_int(self.count(0, 1))

    def _key(self):
        return (self.params, self.windows, self.mode, self.precision, self.band,
                tuple(self.column(n) for n in range(self.N + 1)))

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash((self.params, self.windows, self.mode))

    def __repr__(self):
        return f"{type(self).__name__}(N={self.N}, L={self.L}, M={self.params.M}, mode={self.mode!r})"


def next_column(succ: Sequence[int], succ_window, window, offsets,
                rounding: Optional[Callable[[int], int]] = None) -> list[int]:
    """Counts of one column from the counts of the column to its right.

    Each node sums its successors that fall inside ``succ_window``;
    ``rounding`` (if given) is applied once per node.
    """
    lo1, hi1 = succ_window
    lo, hi = window
    out = []
    for l in range(lo, hi + 1):
        acc = 0
        for o in offsets:
            j = l + o
            if j > hi1:
                break
            if j >= lo1:
                acc += succ[j - lo1]
        out.append(rounding(acc) if rounding is not None and acc else acc)
    return out


def bp_rounding(precision: Precision) -> Callable[[int], int]:
    def rd(x: int) -> int:
        return round_down(x, precision).value
    return rd


def recurse(windows, offsets, rounding=None, last=None, stop=0) -> list:
    """Right-to-left recursion from an all-ones (or given) last column.

    Returns a list indexed by column; entries left of ``stop`` are ``None``.
    """
    N = len(windows) - 1
    cols: list = [None] * (N + 1)
    lo, hi = windows[N]
    cols[N] = list(last) if last is not None else [1] * (hi - lo + 1)
    for n in range(N - 1, stop - 1, -1):
        cols[n] = next_column(cols[n + 1], windows[n + 1], windows[n], offsets, rounding)
    return cols


def build_full_trellis(params: TrellisParams, precision: Optional[Precision] = None) -> CountTrellis:
    """Full ESS trellis, exact or bounded-precision.

    Raises
    ------
    BPOverflowError
        If ``precision`` has too few exponent bits for the counts.
    """
    windows = [(1, params.L)] * (params.N + 1)
    rounding = bp_rounding(precision) if precision is not None else None
    cols = recurse(windows, params.alphabet.offsets, rounding)
    return CountTrellis(params, windows, cols, mode="bp" if precision else "exact",
                        precision=precision)


def validate_invertibility(trellis: CountTrellis, columns: Optional[range] = None) -> Validation:
    """Check that no node count exceeds the sum of its successors' counts.

    ``columns`` restricts the check to a subset of columns ``n < N``.
    """
    offsets = trellis.offsets
    N = trellis.N
    for n in (columns if columns is not None else range(N)):
        lo, hi = trellis.window(n)
        col = trellis.column(n)
        bound = next_column(trellis.column(n + 1), trellis.window(n + 1), (lo, hi), offsets)
        for i, (c, b) in enumerate(zip(col, bound)):
            if c > b:
                return Validation(False, (n, lo + i))
    return Validation(True)


def require_invertible(trellis: CountTrellis, columns=None) -> CountTrellis:
    v = validate_invertibility(trellis, columns)
    if not v:
        raise InvertibilityError(v.node)
    return trellis


def input_length(trellis: CountTrellis) -> int:
    """``floor(log2 c_{1,0})`` bits."""
    c = trellis.count(0, 1)
    if c <= 0:
        raise ValueError("trellis has no path from the origin")
    return c.bit_length() - 1


def shaping_rate(trellis: CountTrellis) -> float:
    """Input bits per amplitude."""
    return input_length(trellis) / trellis.N
