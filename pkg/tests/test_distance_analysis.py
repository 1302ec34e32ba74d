"""Tests for synthetic-channel distance spectra and bounds."""

import math

import numpy as np
import pytest

from polar_utils.nonbinary_polar.analysis.distance_analysis import (
    BAD, GOOD, DistanceSpectrum, asymptotic_equidistant_bound, asymptotic_equidistant_dmin,
    bad_channel_spectrum, bin_distances, bound_comparison_almost_equidistant, bound_curve,
    conservation_check, conservation_totals, db_to_linear, equidistant_dmin_bound, good_channel_spectrum,
    is_equidistant, jensen_gap, psk_standard_dmin, q_function, reference_spectra, summary_row,
    union_bound,
)
from polar_utils.nonbinary_polar.core.exceptions import SpectrumError
from polar_utils.nonbinary_polar.core.kernels import (
    builtin_kernel, kernel_from_permutation, sasoglu_kernel, standard_kernel,
)
from polar_utils.nonbinary_polar.core.signal_sets import make_psk


def rounded(spectrum, digits=3):
    return [(round(d, digits), n) for d, n in spectrum.entries]


class TestGoodChannel:

    def test_standard_psk5(self, psk5):
        spectrum = good_channel_spectrum(standard_kernel(5), psk5)
        assert rounded(spectrum) == [(1.663, 2), (2.690, 2)]
        assert spectrum.kind == GOOD and spectrum.uniform

    def test_l5a_is_equidistant(self, psk5, l5a):
        spectrum = good_channel_spectrum(l5a, psk5)
        assert rounded(spectrum) == [(2.236, 4)]
        assert is_equidistant(spectrum)
        assert spectrum.d_min == pytest.approx(math.sqrt(5), abs=1e-9)

    def test_l4_and_standard_psk4(self, psk4):
        assert rounded(good_channel_spectrum(builtin_kernel("L4"), psk4)) == [(2.0, 1), (2.449, 2)]
        assert rounded(good_channel_spectrum(standard_kernel(4), psk4)) == [(2.0, 2), (2.828, 1)]

    def test_q3(self):
        psk3 = make_psk(3)
        assert rounded(good_channel_spectrum(builtin_kernel("L3"), psk3)) == [(2.449, 2)]
        assert rounded(good_channel_spectrum(standard_kernel(3), psk3)) == [(2.449, 2)]

    def test_standard_psk8(self, psk8):
        spectrum = good_channel_spectrum(standard_kernel(8), psk8)
        assert spectrum.d_min == pytest.approx(1.082, abs=1e-3)
        assert [n for _, n in spectrum.entries] == [2, 2, 2, 1]

    def test_m4_on_rotated_set(self, rotated4):
        spectrum = good_channel_spectrum(builtin_kernel("M4"), rotated4)
        assert rounded(spectrum) == [(2.309, 3)]
        assert spectrum.d_min == pytest.approx(math.sqrt(16 / 3), abs=1e-9)
        assert is_equidistant(spectrum)

    @pytest.mark.parametrize("name", ["L5a", "L5b", "L8", "L4"])
    def test_affine_kernels_are_uniform(self, name):
        kernel = builtin_kernel(name)
        assert good_channel_spectrum(kernel, make_psk(kernel.q)).uniform

    def test_sasoglu_is_not_uniform(self, psk5):
        spectrum = good_channel_spectrum(sasoglu_kernel(5), psk5)
        assert not spectrum.uniform
        assert spectrum.worst_dmin <= spectrum.d_min

    def test_sasoglu_psk5_reference_spectrum_is_not_equidistant(self, psk5):
        spectrum = good_channel_spectrum(sasoglu_kernel(5), psk5)
        assert rounded(spectrum) == [(2.236, 4)]
        assert not is_equidistant(spectrum)
        assert spectrum.worst_dmin == pytest.approx(psk_standard_dmin(5), abs=1e-9)

    @pytest.mark.parametrize("q", range(4, 9))
    def test_sasoglu_is_not_equidistant(self, q):
        sset = make_psk(q)
        assert not is_equidistant(good_channel_spectrum(sasoglu_kernel(q), sset))
        assert not any(is_equidistant(s) for s in reference_spectra(sasoglu_kernel(q), sset).values())

    @pytest.mark.parametrize("q", range(3, 9))
    def test_sasoglu_and_standard_share_dmin(self, q):
        sset = make_psk(q)
        standard = good_channel_spectrum(standard_kernel(q), sset)
        sasoglu = good_channel_spectrum(sasoglu_kernel(q), sset)
        assert sasoglu.worst_dmin == pytest.approx(standard.d_min, abs=1e-9)
        assert sasoglu.worst_dmin == pytest.approx(standard.worst_dmin, abs=1e-9)

    def test_every_reference_pair(self, psk5, l5a):
        spectra = reference_spectra(l5a, psk5)
        assert len(spectra) == 25
        assert all(rounded(s) == [(2.236, 4)] for s in spectra.values())

    def test_reference_out_of_range(self, psk5, l5a):
        with pytest.raises(SpectrumError):
            good_channel_spectrum(l5a, psk5, reference=(5, 0))

    def test_alphabet_mismatch(self, psk4, l5a):
        with pytest.raises(SpectrumError):
            good_channel_spectrum(l5a, psk4)

    @pytest.mark.parametrize("q", range(3, 9))
    def test_standard_closed_form(self, q):
        spectrum = good_channel_spectrum(standard_kernel(q), make_psk(q))
        assert spectrum.d_min == pytest.approx(psk_standard_dmin(q), abs=1e-9)

    def test_scales_with_energy(self, l5a):
        spectrum = good_channel_spectrum(l5a, make_psk(5, es=4.0))
        assert spectrum.d_min == pytest.approx(2 * math.sqrt(5), abs=1e-9)


class TestBadChannel:

    def test_standard_psk5(self, psk5):
        spectrum = bad_channel_spectrum(standard_kernel(5), psk5)
        assert spectrum.kind == BAD
        assert rounded(spectrum) == [(1.176, 4), (1.663, 2), (1.902, 4), (2.236, 8), (2.690, 2)]
        assert spectrum.total_count == 20

    def test_competitor_count(self, psk8, l8):
        assert bad_channel_spectrum(l8, psk8).total_count == 8 * 7

    def test_equidistance_undefined(self, psk5):
        with pytest.raises(SpectrumError):
            is_equidistant(bad_channel_spectrum(standard_kernel(5), psk5))


class TestBounds:

    def test_equidistant_bound_psk5(self, psk5):
        assert equidistant_dmin_bound(psk5) == pytest.approx(math.sqrt(5), abs=1e-12)

    @pytest.mark.parametrize("q", [3, 4, 5, 8, 16, 100, 10_000])
    def test_asymptotic_closed_form(self, q):
        assert equidistant_dmin_bound(make_psk(q)) == pytest.approx(asymptotic_equidistant_dmin(q), rel=1e-9)

    def test_asymptote_approaches_two(self):
        values = [asymptotic_equidistant_dmin(q) for q in (4, 16, 256, 10_000)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(2.0, abs=1e-3)

    @pytest.mark.parametrize("q", range(3, 9))
    def test_no_kernel_exceeds_bound(self, q, rng):
        sset = make_psk(q)
        bound = equidistant_dmin_bound(sset)
        for _ in range(50):
            kernel = kernel_from_permutation(q, rng.permutation(q))
            spectrum = good_channel_spectrum(kernel, sset)
            assert spectrum.worst_dmin <= bound + 1e-9
            assert is_equidistant(spectrum) == (spectrum.worst_dmin >= bound - 1e-9)

    @pytest.mark.parametrize("q", range(3, 9))
    def test_conservation_random_kernels(self, q, rng):
        sset = make_psk(q)
        for _ in range(1000):
            assert conservation_check(kernel_from_permutation(q, rng.permutation(q)), sset)

    def test_total_d_matches_energy(self, psk8, l8):
        assert good_channel_spectrum(l8, psk8).total_d == pytest.approx(2 * 2 * 8, rel=1e-9)

    def test_q_function(self):
        assert q_function(0.0) == pytest.approx(0.5)
        assert q_function(1.0) == pytest.approx(0.158655, abs=1e-6)
        np.testing.assert_allclose(q_function(np.array([0.0, 3.0])), [0.5, 1.349898e-3], rtol=1e-5)

    def test_union_bound_l5a(self, psk5, l5a):
        spectrum = good_channel_spectrum(l5a, psk5)
        for snr_db in (0.0, 4.0, 6.0, 10.0):
            snr = db_to_linear(snr_db)
            expected = 4 * q_function(math.sqrt(5) * math.sqrt(snr / 2))
            assert union_bound(spectrum, snr) == pytest.approx(expected, rel=1e-12)
        assert union_bound(spectrum, db_to_linear(6.0)) == pytest.approx(3.2e-3, rel=0.05)
        assert union_bound(spectrum, db_to_linear(4.0)) == pytest.approx(0.0244, rel=0.05)

    def test_union_bound_is_energy_invariant(self, l5a):
        a = good_channel_spectrum(l5a, make_psk(5))
        b = good_channel_spectrum(l5a, make_psk(5, es=3.0))
        assert union_bound(a, 2.0) == pytest.approx(union_bound(b, 2.0), rel=1e-12)

    def test_union_bound_rejects_nonpositive_snr(self, psk5, l5a):
        with pytest.raises(SpectrumError):
            union_bound(good_channel_spectrum(l5a, psk5), 0.0)

    def test_bound_curve_decreases(self, psk5, l5a):
        rows = bound_curve(good_channel_spectrum(l5a, psk5), [0, 2, 4, 6])
        values = [b for _, b in rows]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_asymptotic_bound(self):
        assert asymptotic_equidistant_bound(5, 2.0) == pytest.approx(4 * q_function(2.0))

    def test_jensen_gap(self):
        assert jensen_gap(1.5, 1.5) == pytest.approx(0.0, abs=1e-15)
        grid = np.linspace(0.05, 5.0, 100)
        for a in grid:
            assert jensen_gap(a, a) == pytest.approx(0.0, abs=1e-12)
            for b in grid:
                if a != b:
                    assert jensen_gap(a, b) > 0
        with pytest.raises(SpectrumError):
            jensen_gap(0.0, 1.0)

    def test_almost_equidistant_comparison(self):
        rows = bound_comparison_almost_equidistant([10.0, 15.0])
        assert all(r["ratio"] > 1 for r in rows)
        assert rows[1]["ratio"] > rows[0]["ratio"]


class TestSpectrumType:

    def test_binning(self):
        assert bin_distances(np.array([4.0, 1.0, 4.0 + 1e-13])) == ((1.0, 1), (2.0, 2))

    def test_rejects_unsorted_entries(self):
        with pytest.raises(SpectrumError):
            DistanceSpectrum(kind=GOOD, q=3, entries=((2.0, 1), (1.0, 1)))
        with pytest.raises(SpectrumError):
            DistanceSpectrum(kind="medium", q=3, entries=((1.0, 2),))

    def test_summary_cell(self, psk5, l5a):
        assert summary_row(good_channel_spectrum(l5a, psk5)) == "d_min 2.236, N(d) 4"
        assert good_channel_spectrum(l5a, psk5).describe() == "{2.236:4}"


class TestReferenceValues:

    def test_l8_good_spectrum(self, psk8, l8):
        assert rounded(good_channel_spectrum(l8, psk8)) == [(2.0, 6), (2.828, 1)]
        assert not is_equidistant(good_channel_spectrum(l8, psk8))

    def test_l5a_bad_spectrum(self, psk5, l5a):
        assert rounded(bad_channel_spectrum(l5a, psk5)) == [(1.176, 4), (1.663, 4), (1.902, 4), (2.236, 4), (2.690, 4)]

    def test_binary_bad_spectrum(self):
        assert rounded(bad_channel_spectrum(standard_kernel(2), make_psk(2))) == [(2.0, 2)]

    def test_equidistant_bounds(self, psk8, rotated4):
        assert equidistant_dmin_bound(psk8) == pytest.approx(math.sqrt(32 / 7), abs=1e-12)
        assert equidistant_dmin_bound(rotated4) == pytest.approx(2.309, abs=1e-3)

    def test_conservation_totals(self, psk5, rotated4):
        np.testing.assert_allclose(conservation_totals(standard_kernel(5), psk5), 20.0)
        np.testing.assert_allclose(conservation_totals(builtin_kernel("M4"), rotated4), 16.0)
        assert conservation_check(builtin_kernel("M4"), rotated4)

    def test_jensen_gap_grows_with_spread(self):
        assert jensen_gap(0.5, 3.0) > jensen_gap(1.0, 2.0) > 0

    def test_standard_psk8_row(self, psk8):
        assert summary_row(good_channel_spectrum(standard_kernel(8), psk8)) == "d_min 1.082, N(d) 2,2,2,1"
