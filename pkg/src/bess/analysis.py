"""Statistics and storage accounting for shapers."""
from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .band import BandParams, build_band_adjacency, ratio_vector, spectral_radius
from .codec import Shaper
from .errors import CapExceededError
from .numerics import Precision
from .trellis import CountTrellis, TrellisParams


@dataclass(frozen=True)
class SequenceStats:
    energy: int
    energy_variance: float
    energy_variance_exact: Fraction = field(repr=False)


def sequence_stats(amplitudes: Sequence[int]) -> SequenceStats:
    """Energy and population variance of the squared amplitudes."""
    if not amplitudes:
        raise ValueError("empty sequence")
    sq = [a * a for a in amplitudes]
    n = len(sq)
    mean = Fraction(sum(sq), n)
    var = sum((Fraction(x) - mean) ** 2 for x in sq) / n
    return SequenceStats(sum(sq), float(var), var)


@dataclass(frozen=True)
class EnsembleStats:
    mean_energy: float
    mean_energy_variance: float
    k: int
    rate: float
    rate_loss: Optional[float]
    sampling: str
    samples: int
    seed: Optional[int] = None
    std_energy: float = 0.0
    std_energy_variance: float = 0.0


def ensemble_stats(shaper: Shaper, sampling: Union[str, tuple] = "exhaustive", *,
                   cap: int = 1 << 16, k_exact: Optional[int] = None) -> EnsembleStats:
    """Averages over uniformly distributed input indices.

    ``sampling`` is ``"exhaustive"`` or ``("monte-carlo", n, seed)``.
    """
    k = shaper.k
    if sampling == "exhaustive":
        if (1 << k) > cap:
            raise CapExceededError(f"2^{k} indices exceed the exhaustive cap {cap}")
        indices = range(1 << k)
        label, seed = "exhaustive", None
    else:
        kind, n, seed = sampling
        if kind != "monte-carlo":
            raise ValueError(f"unknown sampling {kind!r}")
        rng = random.Random(seed)
        indices = [rng.getrandbits(k) if k else 0 for _ in range(n)]
        label = "monte-carlo"
    energies = []
    variances = []
    for m in indices:
        st = sequence_stats(shaper.encode(m))
        energies.append(st.energy)
        variances.append(st.energy_variance)
    count = len(energies)
    me = sum(energies) / count
    mv = sum(variances) / count
    se = math.sqrt(sum((e - me) ** 2 for e in energies) / count)
    sv = math.sqrt(sum((v - mv) ** 2 for v in variances) / count)
    loss = None if k_exact is None else (k_exact - k) / shaper.N
    return EnsembleStats(me, mv, k, k / shaper.N, loss, label, count, seed, se, sv)


def rate_loss_bound(n_alpha: int) -> float:
    """Worst-case bits per amplitude lost to an ``n_alpha``-bit mantissa."""
    if n_alpha < 2:
        raise ValueError("n_alpha must be >= 2")
    top = 1 << (n_alpha - 1)
    return math.log2(top) - math.log2(top - 1)


# -- storage ---------------------------------------------------------------------------------

SCHEMES = ("fp-ess", "bp-ess", "fp-bess", "bess", "shift")


@dataclass(frozen=True)
class StorageReport:
    """Memory needed to hold the counts of one shaper.

    ``bits`` uses the nominal per-node width; ``bits_alt`` the alternative
    FP width (``k + 1`` instead of ``k``) where that applies.
    """

    scheme: str
    nodes: Fraction
    bits_per_node: int
    portions: dict
    bits_alt: Optional[Fraction] = None

    @property
    def bits(self) -> Fraction:
        return self.nodes * self.bits_per_node

    @property
    def kilobytes(self) -> float:
        return float(self.bits) / 8 / 1000

    @property
    def megabytes(self) -> float:
        return float(self.bits) / 8 / 1e6

    def render(self) -> str:
        if self.megabytes >= 1:
            return f"{self.megabytes:.2f} MB"
        return f"{self.kilobytes:.2f} kB"


def band_node_counts(params: BandParams) -> dict:
    """Approximate node counts of the initial, band and final portions."""
    h, w_i, w_f = params.h, params.w_i, params.w_f
    return {
        "initial": Fraction(w_i * (params.h_i + h), 2),
        "band": Fraction(h * (params.N - w_f - w_i)),
        "final": Fraction(w_f * (h + 1), 2),
    }


def storage_report(scheme: str, params: Union[TrellisParams, BandParams],
                   precision: Optional[Precision] = None, y: Optional[int] = None,
                   k: Optional[int] = None) -> StorageReport:
    """Storage of one scheme; kB and MB are 1000-based.

    ``fp-ess``/``bp-ess`` count ``N * L`` nodes; ``fp-bess``/``bess`` use the
    band node formula; ``shift`` counts the initial portion plus ``y`` extra
    band columns.  FP schemes need ``k``.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if scheme in ("fp-ess", "fp-bess"):
        if k is None:
            raise ValueError("FP storage needs k")
        width, alt = k, k + 1
    else:
        if precision is None:
            raise ValueError(f"{scheme} storage needs a precision")
        width, alt = precision.width, None
    if scheme in ("fp-ess", "bp-ess"):
        nodes = Fraction(params.N * params.L)
        portions = {"full": nodes}
    else:
        if not hasattr(params, "w_f"):
            raise TypeError(f"{scheme} storage needs band parameters")
        portions = band_node_counts(params)
        if scheme == "shift":
            if y is None:
                raise ValueError("shift storage needs y")
            portions = {"initial": portions["initial"], "stored band": Fraction(y * params.h)}
        nodes = sum(portions.values())
    return StorageReport(scheme, nodes, width, portions,
                         None if alt is None else nodes * alt)


# rows of the storage-scaling table: (scheme, N, L, h_i, w_i, n_alpha, n_beta, k, y)
SCALING_ROWS = (
    ("fp-ess", 216, 184, None, None, None, None, 324, None),
    ("fp-ess", 432, 361, None, None, None, None, 648, None),
    ("fp-ess", 648, 538, None, None, None, None, 972, None),
    ("bp-ess", 216, 184, None, None, 10, 9, None, None),
    ("bp-ess", 432, 361, None, None, 11, 10, None, None),
    ("bp-ess", 648, 538, None, None, 12, 10, None, None),
    ("bess", 216, 184, 16, 40, 10, 9, None, None),
    ("bess", 432, 361, 16, 84, 14, 10, None, None),
    ("bess", 648, 538, 16, 124, 14, 10, None, None),
    ("shift", 216, 190, 16, 40, 13, 9, None, 4),
    ("shift", 432, 383, 16, 40, 13, 9, None, 4),
    ("shift", 648, 579, 16, 40, 13, 9, None, 4),
)


class _Shape:
    """Band dimensions without geometric validation (storage is a formula)."""

    def __init__(self, N, L, h_i, w_i, s=1):
        self.N, self.L, self.h_i, self.w_i = N, L, h_i, w_i
        self.h = h_i + s * (w_i - 1)
        self.w_f = N + 1 - (L - h_i) // s


def scaling_table() -> list[tuple]:
    """``(scheme, N, L, report)`` for every cell of the storage-scaling table."""
    rows = []
    for scheme, N, L, h_i, w_i, na, nb, k, y in SCALING_ROWS:
        prec = Precision(na, nb) if na else None
        params = TrellisParams(N, L, 8) if h_i is None else _Shape(N, L, h_i, w_i)
        rows.append((scheme, N, L, storage_report(scheme, params, prec, y, k)))
    return rows


# -- convergence -----------------------------------------------------------------------------


def convergence_profile(trellis: CountTrellis, rho: Optional[float] = None) -> list[tuple[int, float]]:
    """``(n, max_i |r_{i,n} - rho|)`` for every band column pair, right to left."""
    params = trellis.band
    if params is None:
        raise ValueError("convergence profile needs a band trellis")
    if rho is None:
        rho = spectral_radius(build_band_adjacency(params.alphabet, params.s, params.h)).rho
    rows = []
    for n in range(params.N - params.w_i, params.w_f - 2, -1):
        rows.append((n, max(abs(float(r) - rho) for r in ratio_vector(trellis, n))))
    return rows


def to_csv(header: Sequence[str], rows) -> str:
    """CSV text with floats at 12 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.12g}" if isinstance(v, float) else str(v) for v in row])
    return buf.getvalue()
