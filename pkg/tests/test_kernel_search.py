"""Tests for the exhaustive permutation-kernel search."""

import math

import pytest

from polar_utils.nonbinary_polar.analysis.distance_analysis import (
    bad_channel_spectrum, db_to_linear, good_channel_spectrum, q_function,
)
from polar_utils.nonbinary_polar.analysis.kernel_search import (
    OBJECTIVE_UNION_BOUND, candidate_permutations, compare_spectra, search_permutations,
    weakest_reference_spectrum,
)
from polar_utils.nonbinary_polar.core.exceptions import SearchError, SpectrumError
from polar_utils.nonbinary_polar.core.kernels import builtin_kernel, sasoglu_kernel, standard_kernel
from polar_utils.nonbinary_polar.core.signal_sets import make_psk


class TestCompareSpectra:

    def test_larger_dmin_wins(self, psk5, l5a):
        good = good_channel_spectrum(l5a, psk5)
        standard = good_channel_spectrum(standard_kernel(5), psk5)
        assert compare_spectra(good, standard) == 1
        assert compare_spectra(standard, good) == -1
        assert compare_spectra(good, good) == 0

    def test_smaller_multiplicity_wins(self, psk4):
        l4 = good_channel_spectrum(builtin_kernel("L4"), psk4)
        standard = good_channel_spectrum(standard_kernel(4), psk4)
        assert l4.d_min == pytest.approx(standard.d_min)
        assert compare_spectra(l4, standard) == 1

    def test_rejects_mixed_alphabets(self, psk4, psk5, l5a):
        with pytest.raises(SpectrumError):
            compare_spectra(good_channel_spectrum(l5a, psk5), good_channel_spectrum(standard_kernel(4), psk4))

    def test_rejects_bad_spectra(self, psk5, l5a):
        bad = bad_channel_spectrum(l5a, psk5)
        with pytest.raises(SpectrumError):
            compare_spectra(bad, bad)


class TestWeakestReference:

    def test_uniform_kernel_matches_reference_pair(self, psk5, l5a):
        weakest = weakest_reference_spectrum(l5a, psk5)
        assert weakest.uniform
        assert weakest.entries == good_channel_spectrum(l5a, psk5).entries

    def test_non_uniform_kernel(self, psk5):
        kernel = sasoglu_kernel(5)
        weakest = weakest_reference_spectrum(kernel, psk5)
        assert not weakest.uniform
        assert compare_spectra(weakest, good_channel_spectrum(kernel, psk5)) <= 0
        assert weakest.d_min == pytest.approx(good_channel_spectrum(kernel, psk5).worst_dmin)


class TestCandidates:

    def test_fixed_zero(self):
        candidates = candidate_permutations(4, fix_zero=True)
        assert len(candidates) == 6
        assert all(pi[0] == 0 for pi in candidates)

    def test_full_space(self):
        assert len(candidate_permutations(4, fix_zero=False)) == 24


class TestSearch:

    def test_q3_every_kernel_is_optimal(self):
        report = search_permutations(make_psk(3))
        assert report.best_permutations == [(0, 1, 2), (0, 2, 1)]
        assert report.equidistant_found
        assert report.search_space_size == 2

    def test_q3_full_space(self):
        report = search_permutations(make_psk(3), full_space=True)
        assert report.search_space_size == 6
        assert len(report.best_permutations) == 6
        assert report.full_space

    def test_q5_finds_equidistant_kernels(self, psk5):
        report = search_permutations(psk5)
        assert report.equidistant_found
        assert (0, 2, 4, 1, 3) in report.best_permutations
        assert (0, 3, 1, 4, 2) in report.best_permutations
        assert report.best_spectrum.d_min == pytest.approx(math.sqrt(5), abs=1e-9)
        assert report.best_spectrum.d_min <= report.dmin_bound + 1e-9

    def test_q4_has_no_equidistant_kernel(self, psk4):
        report = search_permutations(psk4)
        assert not report.equidistant_found
        assert (0, 2, 1, 3) in report.best_permutations
        assert [(round(d, 3), n) for d, n in report.best_spectrum.entries] == [(2.0, 1), (2.449, 2)]

    def test_worker_count_does_not_change_result(self, psk5):
        assert (search_permutations(psk5, max_workers=1).best_permutations
                == search_permutations(psk5, max_workers=4).best_permutations)

    def test_best_kernels(self, psk5):
        kernels = search_permutations(psk5).best_kernels()
        assert any(k.same_table(builtin_kernel("L5a")) for k in kernels)

    def test_non_group_matched_set_searches_full_space(self, rotated4):
        report = search_permutations(rotated4)
        assert report.full_space
        assert report.search_space_size == 24

    def test_q_above_limit(self):
        with pytest.raises(SearchError):
            search_permutations(make_psk(9))

    def test_unknown_objective(self, psk5):
        with pytest.raises(SearchError):
            search_permutations(psk5, objective="entropy")

    def test_union_bound_objective(self, psk5):
        report = search_permutations(psk5, objective=OBJECTIVE_UNION_BOUND, objective_snr_db=6.0)
        assert (0, 2, 4, 1, 3) in report.best_permutations
        snr = db_to_linear(6.0)
        assert report.best_union_bound == pytest.approx(4 * q_function(math.sqrt(5) * math.sqrt(snr / 2)), rel=1e-9)
        assert report.objective_snr_db == 6.0

    def test_report_dict(self, psk5):
        data = search_permutations(psk5).to_dict()
        assert data["q"] == 5 and data["set"] == "psk5"
        assert data["equidistantFound"] is True
        assert [0, 2, 4, 1, 3] in data["bestPermutations"]
        assert data["bestSpectrum"]["entries"][0]["n"] == 4

    @pytest.mark.slow
    def test_q8_is_almost_equidistant(self, psk8):
        report = search_permutations(psk8)
        assert not report.equidistant_found
        assert [(round(d, 3), n) for d, n in report.best_spectrum.entries] == [(2.0, 6), (2.828, 1)]
        assert (0, 3, 6, 1, 4, 7, 2, 5) in report.best_permutations
