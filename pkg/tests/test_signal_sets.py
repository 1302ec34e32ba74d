"""Tests for q-PSK, the rotated 4-point set and distance queries."""

import itertools
import math

import numpy as np
import pytest

from polar_utils.nonbinary_polar.core.exceptions import SignalSetError
from polar_utils.nonbinary_polar.core.signal_sets import (
    SignalSet, energy_sum, is_group_matched, make_psk, make_rotated4, min_distance,
    pair_distance, signal_set_by_name, squared_distance_matrix,
)


class TestConstruction:

    def test_psk4_points(self):
        sset = make_psk(4)
        np.testing.assert_allclose(sset.points, [1, 1j, -1, -1j], atol=1e-12)
        assert sset.label == "psk4"

    def test_psk_points_have_energy_es(self):
        sset = make_psk(7, es=2.5)
        np.testing.assert_allclose(np.abs(sset.points) ** 2, 2.5, rtol=1e-12)

    def test_psk3_is_equilateral(self):
        sset = make_psk(3)
        for i, j in itertools.combinations(range(3), 2):
            assert pair_distance(sset, i, j) == pytest.approx(math.sqrt(3), abs=1e-9)

    def test_psk8_diameter(self):
        assert pair_distance(make_psk(8), 0, 4) == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("q, es", [(1, 1.0), (0, 1.0), (4, 0.0), (4, -1.0)])
    def test_psk_rejects_bad_arguments(self, q, es):
        with pytest.raises(SignalSetError):
            make_psk(q, es)

    def test_rotated4_coordinates(self, rotated4):
        np.testing.assert_allclose(
            rotated4.points,
            [1, complex(1 / 3, 2 * math.sqrt(2) / 3), -1, complex(-1 / 3, -2 * math.sqrt(2) / 3)],
            atol=1e-12,
        )

    def test_rotated4_distances(self, rotated4):
        assert pair_distance(rotated4, 0, 1) == pytest.approx(2 / math.sqrt(3), abs=1e-9)
        assert pair_distance(rotated4, 0, 3) == pytest.approx(math.sqrt(8 / 3), abs=1e-9)
        assert pair_distance(rotated4, 0, 2) == pytest.approx(2.0, abs=1e-9)

    def test_rotated4_design_equation(self, rotated4):
        d2 = squared_distance_matrix(rotated4)
        assert d2[0, 1] + d2[0, 2] == pytest.approx(2 * d2[0, 3], abs=1e-9)

    def test_rotated4_rejects_nonpositive_energy(self):
        with pytest.raises(SignalSetError):
            make_rotated4(0.0)

    def test_coincident_points_rejected(self):
        with pytest.raises(SignalSetError, match="coincident"):
            SignalSet(q=3, points=np.array([1, 1, -1], dtype=complex))

    def test_point_count_must_match_q(self):
        with pytest.raises(SignalSetError):
            SignalSet(q=4, points=np.array([1, -1], dtype=complex))

    def test_points_are_read_only(self, psk4):
        with pytest.raises(ValueError):
            psk4.points[0] = 0


class TestNames:

    @pytest.mark.parametrize("name", ["psk5", "PSK(5)", "psk:5"])
    def test_psk_spellings(self, name):
        assert signal_set_by_name(name).q == 5

    def test_psk_with_explicit_q(self):
        assert signal_set_by_name("psk", q=8).q == 8

    def test_psk_without_q(self):
        with pytest.raises(SignalSetError):
            signal_set_by_name("psk")

    def test_conflicting_q(self):
        with pytest.raises(SignalSetError):
            signal_set_by_name("psk5", q=4)
        with pytest.raises(SignalSetError):
            signal_set_by_name("rotated4", q=8)

    def test_unknown_name(self):
        with pytest.raises(SignalSetError):
            signal_set_by_name("qam16")


class TestDistances:

    def test_psk5_pair_distances(self, psk5):
        assert pair_distance(psk5, 0, 1) == pytest.approx(2 * math.sin(math.pi / 5), abs=1e-9)
        assert pair_distance(psk5, 0, 1) == pytest.approx(1.176, abs=1e-3)
        assert pair_distance(psk5, 0, 2) == pytest.approx(1.902, abs=1e-3)

    def test_self_distance_is_zero(self, rotated4):
        for k in range(4):
            assert pair_distance(rotated4, k, k) == 0.0

    def test_symmetry_and_triangle_inequality(self, rotated4, psk5):
        for sset in (rotated4, psk5):
            q = sset.q
            for i, j, k in itertools.product(range(q), repeat=3):
                assert pair_distance(sset, i, j) == pytest.approx(pair_distance(sset, j, i))
                assert pair_distance(sset, i, k) <= pair_distance(sset, i, j) + pair_distance(sset, j, k) + 1e-12

    @pytest.mark.parametrize("i, j", [(-1, 0), (0, 5), (7, 7)])
    def test_index_out_of_range(self, psk5, i, j):
        with pytest.raises(SignalSetError):
            pair_distance(psk5, i, j)

    @pytest.mark.parametrize("q", range(2, 9))
    def test_psk_energy_sum(self, q):
        assert energy_sum(make_psk(q, es=1.5)) == pytest.approx(2 * q * 1.5, rel=1e-9)

    def test_min_distance(self, psk8, rotated4):
        assert min_distance(psk8) == pytest.approx(2 * math.sin(math.pi / 8))
        assert min_distance(rotated4) == pytest.approx(2 / math.sqrt(3))


class TestGroupMatching:

    @pytest.mark.parametrize("q", range(2, 9))
    def test_psk_is_group_matched(self, q):
        assert is_group_matched(make_psk(q))

    def test_rotated4_is_not_group_matched(self, rotated4):
        assert not is_group_matched(rotated4)


def test_json_form(rotated4):
    data = rotated4.to_dict()
    assert data["q"] == 4 and data["es"] == 1.0 and len(data["points"]) == 4
    restored = SignalSet.from_dict(data)
    np.testing.assert_allclose(restored.points, rotated4.points)
    assert restored.fingerprint == rotated4.fingerprint


def test_malformed_json():
    with pytest.raises(SignalSetError):
        SignalSet.from_dict({"q": 2, "points": [[1.0]]})
