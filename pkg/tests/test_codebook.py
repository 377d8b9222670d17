import math

import numpy as np
import pytest

from beamcast.channel import UpaGeometry
from beamcast.codebook import beam_gain, dft_codebook, received_sample

GEOM_8X8 = UpaGeometry.from_carrier(8, 8, 60e9)


class TestDftCodebook:
    def test_degenerate_single_antenna(self):
        book = dft_codebook(UpaGeometry(1, 1, 0.005))
        np.testing.assert_allclose(book.matrix, [[1.0]], atol=1e-15)

    def test_two_by_two_gram_identity(self):
        book = dft_codebook(UpaGeometry(2, 2, 0.005))
        gram = book.matrix @ book.matrix.conj().T
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-12)

    def test_eight_by_eight_shapes_and_norms(self):
        book = dft_codebook(GEOM_8X8)
        assert book.matrix.shape == (64, 64)
        np.testing.assert_allclose(np.linalg.norm(book.matrix, axis=1), 1.0, atol=1e-12)

    def test_orthogonality_within_tolerance(self):
        book = dft_codebook(GEOM_8X8)
        gram = book.matrix @ book.matrix.conj().T
        assert np.max(np.abs(gram - np.eye(64))) < 1e-10

    def test_row_major_beam_order(self):
        book = dft_codebook(UpaGeometry(2, 3, 0.005))
        np.testing.assert_array_equal(book.beam_at(1, 2), book.beam(1 * 3 + 2))

    def test_beam_is_kron_of_dft_columns(self):
        geom = UpaGeometry(2, 2, 0.005)
        book = dft_codebook(geom)
        f2 = np.exp(-2j * np.pi * np.outer(np.arange(2), np.arange(2)) / 2) / math.sqrt(2)
        np.testing.assert_allclose(book.beam_at(1, 0), np.kron(f2[:, 1], f2[:, 0]), atol=1e-14)


class TestBeamGain:
    def test_matched_beam(self):
        book = dft_codebook(GEOM_8X8)
        w = book.beam(5)
        assert beam_gain(w, w) == pytest.approx(1.0, rel=1e-12)

    def test_orthogonal_beam(self):
        book = dft_codebook(GEOM_8X8)
        assert beam_gain(book.beam(0), book.beam(1)) == pytest.approx(0.0, abs=1e-20)

    def test_matches_elementwise_sum(self):
        rng = np.random.default_rng(3)
        h = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        w = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        expected = abs(sum(h[i].conjugate() * w[i] for i in range(16))) ** 2
        assert beam_gain(h, w) == pytest.approx(expected, rel=1e-12)

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(4)
        h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        w = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        rotated = h * np.exp(1j * 0.7)
        assert beam_gain(rotated, w) == pytest.approx(beam_gain(h, w), rel=1e-12)

    def test_energy_conservation(self):
        rng = np.random.default_rng(7)
        book = dft_codebook(GEOM_8X8)
        h = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        total = sum(beam_gain(h, book.beam(i)) for i in range(64))
        assert total == pytest.approx(np.linalg.norm(h) ** 2, rel=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            beam_gain(np.ones(4, dtype=complex), np.ones(8, dtype=complex))


class TestReceivedSample:
    def test_noiseless_unit_power(self):
        rng = np.random.default_rng(0)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        assert received_sample(h, w, 1.0, 1.0, 0.0) == pytest.approx(np.vdot(h, w))

    def test_zero_power_noise_only(self):
        noise = 0.3 - 0.1j
        assert received_sample(np.ones(2, dtype=complex), np.ones(2, dtype=complex), 0.0, 1.0, noise) == noise

    def test_power_scaling(self):
        h = np.array([1 + 0j, 2 + 0j])
        w = np.array([1 + 0j, 0j])
        s = np.exp(1j * 0.4)
        assert received_sample(h, w, 4.0, s, 0.0) == pytest.approx(2 * np.vdot(h, w) * s)

    def test_rejects_unnormalized_symbol(self):
        with pytest.raises(ValueError, match="unit magnitude"):
            received_sample(np.ones(2, dtype=complex), np.ones(2, dtype=complex), 1.0, 1.5, 0.0)
