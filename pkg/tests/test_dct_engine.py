"""
Unit tests for the DCT engine.

Covers the naive-oracle equivalence, round trips, Parseval, linearity and
the batch driver's error context and worker independence.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.fft import dctn

from src.dct_engine import CosineTable, cosine_table, dct2_batch, dct2_forward, dct2_inverse
from src.errors import InvalidInputError, ShapeError
from tests.oracles import naive_dct2


class TestCosineTable:
    """Test cases for the cosine table."""

    @pytest.mark.parametrize("size", [1, 2, 3, 7, 8, 16])
    def test_rows_are_orthonormal(self, size):
        """Test that the cosine table is orthonormal."""
        table = CosineTable.build(size).coefficients
        np.testing.assert_allclose(table @ table.T, np.eye(size), atol=1e-12)

    def test_table_is_read_only_and_cached(self):
        """Test that cached tables are shared and read-only."""
        table = cosine_table(8)
        assert cosine_table(8) is table
        with pytest.raises(ValueError):
            table.coefficients[0, 0] = 1.0

    def test_rejects_empty_size(self):
        """Test that a zero-length table is a shape error."""
        with pytest.raises(ShapeError):
            CosineTable.build(0)


class TestForward:
    """Test cases for dct2_forward."""

    def test_constant_plane_has_only_dc(self):
        """Test that a constant plane keeps all energy in the DC term."""
        result = dct2_forward(np.full((4, 4), 5.0))
        assert result[0, 0] == pytest.approx(20.0, abs=1e-12)
        result[0, 0] = 0.0
        assert np.max(np.abs(result)) < 1e-12

    def test_two_by_two_matches_oracle(self):
        """Test a 2x2 plane against hand-computed coefficients."""
        plane = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_allclose(dct2_forward(plane), naive_dct2(plane), atol=1e-12)
        # DC is the scaled sum, (1 + 2 + 3 + 4) / 2
        assert dct2_forward(plane)[0, 0] == pytest.approx(5.0)

    def test_zero_plane(self):
        """Test that a zero plane has a zero spectrum."""
        assert not np.any(dct2_forward(np.zeros((5, 3))))

    def test_matches_naive_oracle_on_seeded_planes(self):
        """Test the transform against the naive double sum."""
        rng = np.random.default_rng(1234)
        worst = 0.0
        for _ in range(200):
            h, w = rng.integers(1, 17, size=2)
            plane = rng.standard_normal((h, w))
            worst = max(worst, float(np.max(np.abs(dct2_forward(plane) - naive_dct2(plane)))))
        assert worst < 1e-9

    def test_matches_scipy_orthonormal_dct(self):
        """Test agreement with scipy's orthonormal DCT-II."""
        plane = np.random.default_rng(7).standard_normal((12, 9))
        expected = dctn(plane, type=2, norm="ortho")
        np.testing.assert_allclose(dct2_forward(plane), expected, atol=1e-10)

    def test_float32_input_is_widened(self):
        """Test that float32 planes are transformed in float64."""
        plane = np.random.default_rng(3).standard_normal((6, 6)).astype(np.float32)
        assert dct2_forward(plane).dtype == np.float64

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_input_rejected(self, bad):
        """Test that NaN and infinity are invalid input."""
        plane = np.ones((4, 4))
        plane[1, 2] = bad
        with pytest.raises(InvalidInputError):
            dct2_forward(plane)

    def test_non_plane_rejected(self):
        """Test that the forward transform needs a 2-D plane."""
        with pytest.raises(ShapeError):
            dct2_forward(np.ones((2, 2, 2)))


class TestInverse:
    """Test cases for dct2_inverse and the round trip."""

    def test_dc_only_spectrum_inverts_to_constant(self):
        """Test that a DC-only spectrum inverts to a constant plane."""
        spectrum = np.zeros((4, 4))
        spectrum[0, 0] = 20.0
        np.testing.assert_allclose(dct2_inverse(spectrum), np.full((4, 4), 5.0), atol=1e-12)

    def test_zero_spectrum(self):
        """Test that a zero spectrum inverts to zeros."""
        assert not np.any(dct2_inverse(np.zeros((3, 3))))

    @pytest.mark.parametrize("height", [2, 4, 7, 8, 16, 32])
    @pytest.mark.parametrize("width", [2, 4, 7, 8, 16, 32])
    def test_round_trip(self, height, width):
        """Test that inverse after forward restores the plane."""
        plane = np.random.default_rng(height * 100 + width).standard_normal((height, width))
        assert np.max(np.abs(dct2_inverse(dct2_forward(plane)) - plane)) < 1e-9

    def test_non_finite_spectrum_rejected(self):
        """Test that a non-finite spectrum is invalid input."""
        spectrum = np.zeros((4, 4))
        spectrum[0, 0] = np.nan
        with pytest.raises(InvalidInputError):
            dct2_inverse(spectrum)


class TestProperties:
    """Property-based checks of the transform."""

    @settings(deadline=None, max_examples=50)
    @given(
        height=st.integers(min_value=1, max_value=16),
        width=st.integers(min_value=1, max_value=16),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_parseval(self, height, width, seed):
        """Test that the transform preserves energy."""
        plane = np.random.default_rng(seed).standard_normal((height, width))
        energy = float(np.sum(plane ** 2))
        spectral = float(np.sum(dct2_forward(plane) ** 2))
        assert math.isclose(energy, spectral, rel_tol=1e-9)

    @settings(deadline=None, max_examples=50)
    @given(
        a=st.floats(min_value=-10, max_value=10),
        b=st.floats(min_value=-10, max_value=10),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_linearity(self, a, b, seed):
        """Test that the transform is linear."""
        rng = np.random.default_rng(seed)
        x, y = rng.standard_normal((2, 8, 6))
        left = dct2_forward(a * x + b * y)
        right = a * dct2_forward(x) + b * dct2_forward(y)
        np.testing.assert_allclose(left, right, atol=1e-9)


class TestBatch:
    """Test cases for dct2_batch."""

    def test_constant_planes_give_dc_only(self):
        """Test the batch transform on constant planes."""
        tensor = np.stack([np.full((1, 4, 4), 1.0), np.full((1, 4, 4), 2.0)])
        result = dct2_batch(tensor)
        assert result.shape == (2, 1, 4, 4)
        np.testing.assert_allclose(result[:, 0, 0, 0], [4.0, 8.0])
        result[:, :, 0, 0] = 0.0
        assert np.max(np.abs(result)) < 1e-12

    def test_equals_per_plane_loop(self):
        """Test that the batch transform equals a per-plane loop."""
        tensor = np.random.default_rng(5).standard_normal((2, 3, 8, 8))
        result = dct2_batch(tensor)
        for n in range(2):
            for c in range(3):
                assert np.array_equal(result[n, c], dct2_forward(tensor[n, c]))

    def test_inverse_batch_round_trip(self):
        """Test the batch round trip."""
        tensor = np.random.default_rng(6).standard_normal((3, 2, 8, 4))
        restored = dct2_batch(dct2_batch(tensor), inverse=True)
        assert np.max(np.abs(restored - tensor)) < 1e-9

    def test_worker_count_does_not_change_bits(self):
        """Test that the worker count leaves the output bits unchanged."""
        tensor = np.random.default_rng(8).standard_normal((4, 5, 16, 16))
        assert np.array_equal(dct2_batch(tensor, workers=1), dct2_batch(tensor, workers=8))

    def test_empty_frame_count_rejected(self):
        """Test that a tensor with no frames is a shape error."""
        with pytest.raises(ShapeError):
            dct2_batch(np.zeros((0, 1, 4, 4)))

    def test_wrong_rank_rejected(self):
        """Test that the batch transform needs a rank-4 tensor."""
        with pytest.raises(ShapeError):
            dct2_batch(np.zeros((4, 4)))

    def test_error_names_plane_index(self):
        """Test that a bad plane is reported with its frame and channel."""
        tensor = np.zeros((2, 3, 4, 4))
        tensor[1, 2, 0, 0] = np.inf
        with pytest.raises(InvalidInputError, match=r"n=1, c=2"):
            dct2_batch(tensor)
