import math
from fractions import Fraction

import pytest

from bess import oracle
from bess.analysis import (SCALING_ROWS, band_node_counts, convergence_profile, ensemble_stats,
                           rate_loss_bound, scaling_table, sequence_stats, storage_report, to_csv)
from bess.band import BandParams, build_band_adjacency, build_band_trellis_exact, spectral_radius
from bess.codec import Shaper
from bess.errors import CapExceededError
from bess.numerics import Precision
from bess.trellis import Alphabet, TrellisParams, build_full_trellis

SMALL_BAND = BandParams(7, 8, 8, 3, 3, 1)


@pytest.mark.parametrize("seq, energy, var", [
    ((7, 3, 1, 1, 1, 1, 1), 63, Fraction(1920, 7)),
    ((3,) * 7, 63, 0),
    ((1,), 1, 0),
])
def test_sequence_stats(seq, energy, var):
    st = sequence_stats(seq)
    assert st.energy == energy
    assert st.energy_variance_exact == var
    assert st.energy_variance == pytest.approx(float(var))


def test_peaked_variance_rounds_to_one_decimal():
    assert round(sequence_stats((7, 3, 1, 1, 1, 1, 1)).energy_variance, 1) == 274.3


def test_sequence_stats_empty():
    with pytest.raises(ValueError):
        sequence_stats(())


def test_exhaustive_mean_energy_small_sphere():
    shaper = Shaper(build_full_trellis(TrellisParams(3, 4, 6)))
    first = oracle.enumerate_sphere(3, 6, 27)[:8]
    st = ensemble_stats(shaper)
    assert st.samples == 8 and st.sampling == "exhaustive"
    assert st.mean_energy == pytest.approx(sum(sum(a * a for a in s) for s in first) / 8)
    assert (st.k, st.rate) == (3, 1.0)


def test_band_trades_energy_for_variance():
    band = ensemble_stats(Shaper(build_band_trellis_exact(SMALL_BAND)))
    sphere = ensemble_stats(Shaper(build_full_trellis(TrellisParams(7, 8, 8))))
    assert band.mean_energy >= sphere.mean_energy
    assert band.mean_energy_variance <= sphere.mean_energy_variance


def test_monte_carlo_deterministic_and_close_to_exhaustive():
    shaper = Shaper(build_band_trellis_exact(SMALL_BAND))
    a = ensemble_stats(shaper, ("monte-carlo", 2000, 42))
    b = ensemble_stats(shaper, ("monte-carlo", 2000, 42))
    assert a == b
    ex = ensemble_stats(shaper)
    assert abs(a.mean_energy - ex.mean_energy) <= 3 * ex.std_energy / math.sqrt(2000)
    assert abs(a.mean_energy_variance - ex.mean_energy_variance) <= 3 * ex.std_energy_variance / math.sqrt(2000)


def test_ensemble_cap_and_bad_sampling():
    shaper = Shaper(build_band_trellis_exact(SMALL_BAND))
    with pytest.raises(CapExceededError):
        ensemble_stats(shaper, cap=100)
    with pytest.raises(ValueError):
        ensemble_stats(shaper, ("bootstrap", 10, 0))


def test_rate_loss_bound():
    assert rate_loss_bound(10) == pytest.approx(math.log2(512 / 511))
    assert round(rate_loss_bound(10), 5) == 0.00282
    assert rate_loss_bound(2) == 1
    with pytest.raises(ValueError):
        rate_loss_bound(1)


@pytest.mark.parametrize("n_alpha", [3, 4, 6, 10])
def test_measured_rate_loss_within_bound(n_alpha):
    params = BandParams(64, 65, 8, 3, 3, 1)
    k_exact = build_band_trellis_exact(params).k
    shaper = Shaper(build_band_trellis_exact(params, Precision(n_alpha, 7)))
    st = ensemble_stats(shaper, ("monte-carlo", 10, 0), k_exact=k_exact)
    assert 0 <= st.rate_loss <= rate_loss_bound(n_alpha)


def test_storage_examples():
    assert storage_report("fp-ess", TrellisParams(216, 184, 8), k=324).render() == "1.61 MB"
    assert storage_report("bp-ess", TrellisParams(216, 184, 8), Precision(10, 9)).render() == "94.39 kB"
    rows = {(s, N): rep for s, N, L, rep in scaling_table()}
    assert len(rows) == len(SCALING_ROWS) == 12
    assert rows["bess", 216].bits_per_node == 19
    assert rows["shift", 216].bits_per_node == 22


def test_band_node_counts_wide_band():
    class Shape:
        N, L, h_i, w_i, h, w_f = 216, 184, 16, 40, 55, 49
    counts = band_node_counts(Shape)
    assert counts == {"initial": 1420, "band": 55 * 127, "final": 49 * 28}


def test_storage_report_errors():
    with pytest.raises(ValueError):
        storage_report("nope", TrellisParams(3, 4, 6))
    with pytest.raises(ValueError):
        storage_report("fp-ess", TrellisParams(3, 4, 6))
    with pytest.raises(ValueError):
        storage_report("bess", SMALL_BAND)
    with pytest.raises(TypeError):
        storage_report("bess", TrellisParams(3, 4, 6), Precision(4, 4))
    with pytest.raises(ValueError):
        storage_report("shift", SMALL_BAND, Precision(4, 4))


def test_convergence_profile_small():
    rho = spectral_radius(build_band_adjacency(Alphabet(8), 1, 5)).rho
    prof = dict(convergence_profile(build_band_trellis_exact(SMALL_BAND)))
    assert sorted(prof) == [2, 3, 4]
    # the five ratios are 11/4, 17/7, 26/10, 27/12, 18/8; 11/4 is furthest from rho
    assert prof[3] == pytest.approx(abs(11 / 4 - rho))
    with pytest.raises(ValueError):
        convergence_profile(build_full_trellis(TrellisParams(3, 4, 6)))


def test_csv_format():
    text = to_csv(("n", "dev"), [(1, 1 / 3), (2, "x")])
    assert text == "n,dev\n1,0.333333333333\n2,x\n"
