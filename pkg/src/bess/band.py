"""Band trellises and their cheap approximations.

A band trellis keeps only the nodes inside a diagonal strip of the full ESS
trellis: ``h_i`` nodes at the top of the last column, widening over the
``w_i`` rightmost columns to a height ``h = h_i + s(w_i - 1)``, and then
sliding down by ``s`` levels per column towards the origin.  Columns split
into three portions (right to left):

* initial: the ``w_i - 1`` rightmost columns,
* band: columns ``w_f - 1 .. N - w_i + 1``, each exactly ``h`` nodes high,
* final: the ``w_f - 1`` leftmost columns, clipped by level 1.

In band-relative coordinates every band column is produced from the next by
one fixed ``h x h`` matrix, so the columns grow asymptotically by its Perron
root.  That gives two cheaper ways to fill the band portion:

* scalar growth: ``b_n = floor(rho_bar * b_{n+1})`` with a backed-off
  ``rho_bar``,
* shift growth: ``b_n = 2**t * b_{n+p}``, i.e. BP exponents grow by ``t``
  every ``p`` columns while mantissas repeat.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ConvergenceError, InvertibilityError
from .numerics import Precision, truncate
from .trellis import (Adjacency, Alphabet, CountTrellis, TrellisParams, Validation, bp_rounding,
                      next_column, require_invertible, validate_invertibility)

__all__ = [
    "BandParams",
    "BandGeometry",
    "SpectralInfo",
    "ShiftPlan",
    "ScalarTrellis",
    "ShiftTrellis",
    "build_band_geometry",
    "build_band_adjacency",
    "build_band_trellis_exact",
    "ratio_vector",
    "spectral_radius",
    "build_scalar_trellis",
    "max_backoff",
    "backoff_sweep",
    "select_shift_plan",
    "make_shift_plan",
    "build_shift_trellis",
]


@dataclass(frozen=True)
class BandParams:
    N: int
    L: int
    M: int
    h_i: int
    w_i: int
    s: int

    def __post_init__(self):
        TrellisParams(self.N, self.L, self.M)
        if not 1 <= self.h_i <= self.L:
            raise ValueError(f"h_i must be in [1, L], got {self.h_i}")
        if not 1 <= self.w_i <= self.N + 1:
            raise ValueError(f"w_i must be in [1, N+1], got {self.w_i}")
        if self.s < 0:
            raise ValueError("slope must be nonnegative")
        if self.s == 0:
            if self.h_i != self.L:
                raise ValueError("a flat band (s=0) must span the whole trellis (h_i = L)")
        elif (self.L - self.h_i) % self.s:
            raise ValueError(f"L - h_i = {self.L - self.h_i} is not a multiple of s = {self.s}")
        if self.w_f < 1:
            raise ValueError(f"final width w_f = {self.w_f} < 1: the band cannot reach column 0")
        # the band's upper edge must still be at or above level 1 in column 0
        if self.floor_level(0) + self.h - 1 < 1:
            raise ValueError(
                f"origin (0, 1) lies above the band: w_f = {self.w_f} is too large for "
                f"h = {self.h}, s = {self.s}")

    @classmethod
    def full(cls, N: int, L: int, M: int, s: int = 1) -> "BandParams":
        """The degenerate band that covers the whole trellis."""
        return cls(N, L, M, L, N + 1, s)

    @property
    def trellis(self) -> TrellisParams:
        return TrellisParams(self.N, self.L, self.M)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.M)

    @property
    def E_max(self) -> int:
        return self.trellis.E_max

    @property
    def h(self) -> int:
        return self.h_i + self.s * (self.w_i - 1)

    @property
    def w_f(self) -> int:
        if self.s == 0:
            return self.N + 1
        return self.N + 1 - (self.L - self.h_i) // self.s

    def floor_level(self, n: int) -> int:
        """Unclipped lowest band level of column ``n`` (may be < 1)."""
        return self.L - self.h_i + 1 - self.s * (self.N - n)

    @property
    def band_columns(self) -> range:
        """Columns of the band portion, left to right."""
        return range(self.w_f - 1, self.N - self.w_i + 2)

    @property
    def final_columns(self) -> range:
        return range(0, self.w_f - 1)

    @property
    def initial_columns(self) -> range:
        return range(self.N - self.w_i + 2, self.N + 1)


@dataclass(frozen=True)
class BandGeometry:
    params: BandParams
    windows: tuple

    def portion(self, n: int) -> str:
        p = self.params
        if n in p.initial_columns:
            return "initial"
        if n in p.final_columns:
            return "final"
        return "band"

    def relative(self, n: int, l: int) -> int:
        """Band-relative index (1 = lowest band level) of level ``l``."""
        return l - self.params.floor_level(n) + 1

    def contains(self, n: int, l: int) -> bool:
        lo, hi = self.windows[n]
        return lo <= l <= hi


def build_band_geometry(params: BandParams) -> BandGeometry:
    windows = []
    for n in range(params.N + 1):
        lam = params.floor_level(n)
        windows.append((max(1, lam), min(params.L, lam + params.h - 1)))
    return BandGeometry(params, tuple(windows))


def build_band_adjacency(alphabet: Alphabet, s: int, h: int) -> Adjacency:
    """``h x h`` band matrix: offsets shifted down by the slope."""
    if h < 1 or s < 0:
        raise ValueError("need h >= 1 and s >= 0")
    return Adjacency(h, tuple(o - s for o in alphabet.offsets))


def _reachable(windows, offsets, upto: int) -> list[set]:
    """Levels reachable from the origin for columns ``0..upto``."""
    reach = [{1}]
    for n in range(1, upto + 1):
        lo, hi = windows[n]
        reach.append({l + o for l in reach[-1] for o in offsets if lo <= l + o <= hi})
    return reach


def _fill_final(cols, windows, offsets, upto: int, rounding, prune: bool):
    """Right-to-left recursion over columns ``upto-1 .. 0`` in place."""
    reach = _reachable(windows, offsets, upto) if prune else None
    for n in range(upto - 1, -1, -1):
        col = next_column(cols[n + 1], windows[n + 1], windows[n], offsets, rounding)
        if prune:
            lo = windows[n][0]
            col = [c if lo + i in reach[n] else 0 for i, c in enumerate(col)]
        cols[n] = col


def build_band_trellis_exact(params: BandParams, precision: Optional[Precision] = None,
                             prune: bool = True) -> CountTrellis:
    """Band trellis by windowed recursion (exact, or BP when ``precision`` is set).

    With ``prune`` the final-portion nodes that cannot be reached from the
    origin are set to zero; the codec never visits them.
    """
    geo = build_band_geometry(params)
    offsets = params.alphabet.offsets
    rounding = bp_rounding(precision) if precision is not None else None
    windows = geo.windows
    N = params.N
    cols: list = [None] * (N + 1)
    lo, hi = windows[N]
    cols[N] = [1] * (hi - lo + 1)
    stop = max(params.w_f - 1, 0)
    for n in range(N - 1, stop - 1, -1):
        cols[n] = next_column(cols[n + 1], windows[n + 1], windows[n], offsets, rounding)
    _fill_final(cols, windows, offsets, stop, rounding, prune)
    return CountTrellis(params.trellis, windows, cols, mode="bp" if precision else "exact",
                        precision=precision, band=params)


def _band_column(trellis: CountTrellis, n: int) -> tuple[int, ...]:
    p = trellis.band
    if p is None or n not in p.band_columns:
        raise ValueError(f"column {n} is not in the band portion")
    return trellis.column(n)


def ratio_vector(trellis: CountTrellis, n: int) -> list[Fraction]:
    """Element-wise ratios ``b_n / b_{n+1}`` in band-relative order (bottom first)."""
    b0 = _band_column(trellis, n)
    b1 = _band_column(trellis, n + 1)
    return [Fraction(a, b) for a, b in zip(b0, b1)]


@dataclass(frozen=True)
class SpectralInfo:
    rho: float
    vector: np.ndarray = field(repr=False)
    iterations: int
    residual: float


def spectral_radius(adjacency: Adjacency, tol: float = 1e-12, max_iter: int = 10**6) -> SpectralInfo:
    """Perron root of a nonnegative matrix by power iteration.

    Iterates on ``A + I``, which has the same Perron vector, to avoid the
    oscillation of power iteration on imprimitive matrices.  Convergence is
    guaranteed for irreducible matrices (every connected band); reducible
    ones with a defective top eigenvalue may hit ``max_iter``.
    """
    a = adjacency.to_array().astype(float)
    if (a < 0).any():
        raise ValueError("power iteration here assumes a nonnegative matrix")
    n = a.shape[0]
    if not np.linalg.matrix_power(a, n).any():
        # nilpotent: no cycles at all
        return SpectralInfo(0.0, np.zeros(n), 0, 0.0)
    shifted = a + np.eye(n)
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = shifted @ v
        lam = w.sum() / v.sum()
        w /= w.sum()
        residual = np.abs(a @ w - (lam - 1.0) * w).max() / max(np.abs(w).max(), 1e-300)
        v = w
        if residual <= tol * max(lam - 1.0, 1.0):
            break
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")
    # Rayleigh-type refinement on the converged vector
    rho = float((a @ v).sum() / v.sum())
    return SpectralInfo(rho, v, it, float(residual))


# -- scalar growth ---------------------------------------------------------------------------


class ScalarTrellis(CountTrellis):
    """Band trellis whose left band columns grow by a fixed factor ``rho_bar``."""

    def __init__(self, params: TrellisParams, windows, columns, *, rho_bar: Fraction, y: int,
                 band: BandParams, precision: Optional[Precision] = None, rho: float = float("nan")):
        super().__init__(params, windows, columns, mode="scalar", precision=precision, band=band)
        self.rho_bar = Fraction(rho_bar)
        self.y = y
        self.rho = rho

    def _key(self):
        return super()._key() + (self.rho_bar, self.y)


def _first_stored(params: BandParams, y: int) -> int:
    """Leftmost band column kept exactly when ``y`` extra columns are stored."""
    band = params.band_columns
    if len(band) == 0:
        raise ValueError("band portion is empty")
    if not 0 <= y <= len(band) - 1:
        raise ValueError(f"y must be in [0, {len(band) - 1}], got {y}")
    return params.N - params.w_i - y + 1


def _scalar_columns(params, base_cols, windows, n_min, rho_bar: Fraction, precision):
    """Columns with the band left of ``n_min`` grown by ``rho_bar`` from ``b_{n_min}``."""
    cols = list(base_cols)
    num, den = rho_bar.numerator, rho_bar.denominator
    rounding = bp_rounding(precision) if precision is not None else None
    for n in range(n_min - 1, params.w_f - 2, -1):
        col = [(num * v) // den for v in cols[n + 1]]
        cols[n] = [rounding(v) for v in col] if rounding else col
    return cols


def _band_valid(params, cols, windows, n_min) -> bool:
    offsets = params.alphabet.offsets
    for n in range(params.w_f - 1, n_min):
        bound = next_column(cols[n + 1], windows[n + 1], windows[n], offsets)
        if any(c > b for c, b in zip(cols[n], bound)):
            return False
    return True


def build_scalar_trellis(params: BandParams, y: int, rho_bar, precision: Optional[Precision] = None,
                         rho: float = float("nan")) -> ScalarTrellis:
    """Band trellis with the band portion grown by ``rho_bar`` left of the stored columns.

    Raises
    ------
    InvertibilityError
        If ``rho_bar`` is too large for this ``y``.
    """
    rho_bar = Fraction(rho_bar)
    base = build_band_trellis_exact(params, precision)
    n_min = _first_stored(params, y)
    geo_windows = base.windows
    cols = [list(base.column(n)) for n in range(params.N + 1)]
    cols = _scalar_columns(params, cols, geo_windows, n_min, rho_bar, precision)
    rounding = bp_rounding(precision) if precision is not None else None
    _fill_final(cols, geo_windows, params.alphabet.offsets, params.w_f - 1, rounding, True)
    trellis = ScalarTrellis(params.trellis, geo_windows, cols, rho_bar=rho_bar, y=y, band=params,
                            precision=precision, rho=rho)
    return require_invertible(trellis)


def max_backoff(params: BandParams, y: int, resolution: float = 1e-3,
                precision: Optional[Precision] = None, rho: Optional[float] = None) -> Fraction:
    """Largest growth factor on a ``resolution`` grid that keeps the trellis invertible.

    Bisection over multiples of ``resolution`` in ``[0, rho]``; feasibility is
    monotone because a smaller factor only lowers node counts.
    """
    if rho is None:
        rho = spectral_radius(build_band_adjacency(params.alphabet, params.s, params.h)).rho
    den = round(1 / resolution)
    if den < 1 or abs(den * resolution - 1) > 1e-9:
        raise ValueError("resolution must be the reciprocal of a positive integer")
    base = build_band_trellis_exact(params, precision)
    windows = base.windows
    n_min = _first_stored(params, y)
    cols = [list(base.column(n)) for n in range(params.N + 1)]

    def feasible(j: int) -> bool:
        c = _scalar_columns(params, cols, windows, n_min, Fraction(j, den), precision)
        return _band_valid(params, c, windows, n_min)

    lo, hi = 0, math.floor(rho * den)
    if feasible(hi):
        return Fraction(hi, den)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return Fraction(lo, den)


def backoff_sweep(params: BandParams, ys, resolution: float = 1e-3,
                  precision: Optional[Precision] = None):
    """Rows ``(y, rho_bar, k)`` of the maximal backoff for each stored-column count."""
    rho = spectral_radius(build_band_adjacency(params.alphabet, params.s, params.h)).rho
    rows = []
    for y in ys:
        rb = max_backoff(params, y, resolution, precision, rho=rho)
        t = build_scalar_trellis(params, y, rb, precision, rho=rho)
        c = t.count(0, 1)
        rows.append((y, rb, c.bit_length() - 1 if c else 0))
    return rows


# -- shift growth ----------------------------------------------------------------------------


def select_shift_plan(rho: float, p_max: int = 8) -> tuple[int, int]:
    """Period ``p`` and shift ``t`` with ``rho**p`` just above ``2**t``.

    Among ``p = 1..p_max`` with ``t = floor(p log2 rho) >= 1`` pick the smallest
    excess ``rho**p / 2**t - 1``; ties go to the smaller period.
    """
    if rho <= 1:
        raise ValueError("growth factor must exceed 1")
    best = None
    for p in range(1, p_max + 1):
        t = math.floor(p * math.log2(rho) + 1e-12)
        if t < 1:
            continue
        excess = rho**p / 2**t - 1
        if best is None or excess < best[0] - 1e-15:
            best = (excess, p, t)
    if best is None:
        raise ValueError(f"no period up to {p_max} reaches a factor of 2")
    return best[1], best[2]


@dataclass(frozen=True)
class ShiftPlan:
    rho: float
    p: int
    t: int
    y: int
    precision: Precision

    def __post_init__(self):
        if self.p < 1 or self.t < 1:
            raise ValueError("need p >= 1 and t >= 1")
        if self.y + 1 < self.p:
            raise ValueError(f"need at least p = {self.p} stored band columns, have y + 1 = {self.y + 1}")
        if self.t > self.p * math.log2(self.rho) + 1e-12:
            raise ValueError(f"2^{self.t} exceeds rho^{self.p}: shifts would overestimate growth")

    @property
    def rho_bar(self) -> float:
        """Equivalent per-column growth factor ``2**(t/p)``."""
        return 2 ** (self.t / self.p)

    def stored_columns(self, params: BandParams) -> range:
        """Columns kept in memory: band columns from ``b_{N-w_i-y+1}`` plus the initial portion."""
        return range(max(_first_stored(params, self.y), params.w_f - 1), params.N + 1)


def make_shift_plan(params: BandParams, precision: Precision, y: int, p_max: int = 8,
                    p: Optional[int] = None, t: Optional[int] = None) -> ShiftPlan:
    rho = spectral_radius(build_band_adjacency(params.alphabet, params.s, params.h)).rho
    if p is None or t is None:
        p, t = select_shift_plan(rho, p_max)
    return ShiftPlan(rho, p, t, y, precision)


class ShiftTrellis(CountTrellis):
    """Band trellis backed by a few stored BP columns.

    Only ``stored`` columns are static data.  Band columns left of them are
    derived on access by shifting a stored column; the final portion lives in
    a small working buffer computed at construction.
    """

    def __init__(self, band: BandParams, plan: ShiftPlan, stored: dict):
        geo = build_band_geometry(band)
        super().__init__(band.trellis, geo.windows, None, mode="shift",
                         precision=plan.precision, band=band)
        self.plan = plan
        self.stored = {n: tuple(stored[n]) for n in sorted(stored)}
        self.n_min = min(self.stored)
        expected = plan.stored_columns(band)
        if set(self.stored) != set(expected):
            raise ValueError("stored columns do not match the plan")
        self._final: list = [None] * max(band.w_f - 1, 0)
        cols = {}

        def col(n):
            return cols[n] if n in cols else self.column(n)

        offsets = band.alphabet.offsets
        reach = _reachable(self.windows, offsets, band.w_f - 1)
        na = plan.precision.n_alpha
        for n in range(band.w_f - 2, -1, -1):
            c = next_column(col(n + 1), self.windows[n + 1], self.windows[n], offsets,
                            lambda x: truncate(x, na))
            lo = self.windows[n][0]
            cols[n] = tuple(v if lo + i in reach[n] else 0 for i, v in enumerate(c))
        for n, c in cols.items():
            self._final[n] = c

    def _source(self, n: int) -> tuple[int, int]:
        """Stored column and shift count generating band column ``n < n_min``."""
        q = -(-(self.n_min - n) // self.plan.p)
        return n + q * self.plan.p, q * self.plan.t

    def column(self, n: int) -> tuple[int, ...]:
        if n >= self.n_min:
            return self.stored[n]
        if n < len(self._final) and self._final[n] is not None:
            return self._final[n]
        src, shift = self._source(n)
        return tuple(v << shift for v in self.stored[src])

    def count(self, n: int, l: int) -> int:
        lo, hi = self.windows[n]
        if not lo <= l <= hi:
            return 0
        if n >= self.n_min:
            return self.stored[n][l - lo]
        if n < len(self._final):
            return self._final[n][l - lo]
        src, shift = self._source(n)
        return self.stored[src][l - lo] << shift

    @property
    def static_nodes(self) -> int:
        return sum(len(c) for c in self.stored.values())

    @property
    def static_storage_bits(self) -> int:
        return self.static_nodes * self.plan.precision.width

    def static_storage_bytes(self) -> bytes:
        """Stored columns bit-packed right to left, each column bottom-up.

        The image depends only on the band shape near the last column, not on
        ``N``.
        """
        from .numerics import BPNum

        prec = self.plan.precision
        word = 0
        pos = 0
        for n in sorted(self.stored, reverse=True):
            for v in self.stored[n]:
                word |= BPNum.from_value(v, prec).pack() << pos
                pos += prec.width
        return word.to_bytes((pos + 7) // 8, "little")

    def _key(self):
        return (self.params, self.band, self.plan, tuple(sorted(self.stored.items())))


def stored_shift_columns(params: BandParams, plan: ShiftPlan) -> dict:
    """BP columns from the last column down to ``b_{N-w_i-y+1}``."""
    geo = build_band_geometry(params)
    offsets = params.alphabet.offsets
    rounding = bp_rounding(plan.precision)
    keep = plan.stored_columns(params)
    stored = {}
    lo, hi = geo.windows[params.N]
    stored[params.N] = [1] * (hi - lo + 1)
    for n in range(params.N - 1, keep.start - 1, -1):
        stored[n] = next_column(stored[n + 1], geo.windows[n + 1], geo.windows[n], offsets, rounding)
    return stored


def build_shift_trellis(params: BandParams, plan: ShiftPlan, validate: bool = True) -> ShiftTrellis:
    """Shift-based band trellis.

    Raises
    ------
    BPOverflowError
        If a stored count does not fit the plan's precision.
    InvertibilityError
        If the shifts overestimate growth for this ``y``.
    """
    trellis = ShiftTrellis(params, plan, stored_shift_columns(params, plan))
    if validate:
        require_invertible(trellis)
    return trellis
