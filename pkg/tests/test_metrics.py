import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risparafac.channel_model import ChannelPair, SystemDims, dft_phase, generate_channels
from risparafac.errors import DegenerateScalingError, DimensionError
from risparafac.metrics import NmseRecord, aligned_nmse, nmse, normalize_first_column, to_db
from risparafac.tensor_core import unfold_mode2

DIMS = SystemDims(M=6, K=5, N=3, P=3)


def random_scale(rng, n):
    return rng.uniform(0.1, 10.0, n) * np.exp(2j * np.pi * rng.random(n))


class TestNormalize:
    def test_already_canonical(self):
        pair = generate_channels(DIMS, 0, reference_column=True)
        h1, h2 = normalize_first_column(pair.h1, pair.h2)
        np.testing.assert_array_equal(h1, pair.h1)
        np.testing.assert_array_equal(h2, pair.h2)

    def test_first_column_is_ones(self):
        pair = generate_channels(DIMS, 1)
        h1, _ = normalize_first_column(pair.h1, pair.h2)
        np.testing.assert_allclose(h1[:, 0], 1.0, rtol=1e-15)

    def test_cancels_ambiguity(self):
        pair = generate_channels(DIMS, 2)
        twin = pair.rescaled(random_scale(np.random.default_rng(2), 3))
        a = normalize_first_column(pair.h1, pair.h2)
        b = normalize_first_column(twin.h1, twin.h2)
        np.testing.assert_allclose(b[0], a[0], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(b[1], a[1], rtol=1e-12, atol=1e-12)

    def test_preserves_tensor(self):
        pair = generate_channels(DIMS, 3)
        phi = dft_phase(3, 3)
        h1, h2 = normalize_first_column(pair.h1, pair.h2)
        np.testing.assert_allclose(unfold_mode2(h1, h2, phi), unfold_mode2(pair.h1, pair.h2, phi), rtol=1e-12, atol=1e-12)

    def test_zero_entry(self):
        h1 = np.ones((2, 3))
        h1[1, 0] = 0
        with pytest.raises(DegenerateScalingError):
            normalize_first_column(h1, np.ones((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            normalize_first_column(np.ones((2, 3)), np.ones((2, 3)))


class TestNmse:
    def test_exact(self):
        h = generate_channels(DIMS, 4).h1
        assert nmse(h, h) == 0.0

    def test_zero_estimate(self):
        h = generate_channels(DIMS, 5).h1
        assert nmse(h, np.zeros_like(h)) == pytest.approx(1.0, rel=1e-15)

    def test_doubled(self):
        h = generate_channels(DIMS, 6).h1
        assert nmse(h, 2 * h) == pytest.approx(1.0, rel=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            nmse(np.ones((2, 2)), np.ones((2, 3)))

    def test_zero_truth(self):
        with pytest.raises(ValueError):
            nmse(np.zeros((2, 2)), np.ones((2, 2)))

    def test_db_round_trip(self):
        rec = NmseRecord(nmse_h1=0.01, nmse_h2=2.5e-4)
        assert rec.nmse_h1_db == pytest.approx(-20.0, abs=1e-12)
        assert 10 ** (rec.nmse_h2_db / 10) == pytest.approx(2.5e-4, rel=1e-14)

    def test_db_special_values(self):
        assert to_db(0.0) == -math.inf
        assert math.isnan(to_db(math.nan))


class TestAlignedNmse:
    def test_identical(self):
        pair = generate_channels(DIMS, 7)
        rec = aligned_nmse(pair, pair)
        assert rec.nmse_h1 == 0.0 and rec.nmse_h2 == 0.0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_rescaled_twin(self, seed):
        rng = np.random.default_rng(seed)
        pair = generate_channels(DIMS, seed)
        rec = aligned_nmse(pair, pair.rescaled(random_scale(rng, 3)))
        assert rec.nmse_h1 <= 1e-20 and rec.nmse_h2 <= 1e-20

    def test_perturbation_on_h1(self):
        pair = generate_channels(DIMS, 8)
        rng = np.random.default_rng(8)
        delta = 1e-3 * (rng.standard_normal(pair.h1.shape) + 1j * rng.standard_normal(pair.h1.shape))
        delta[:, 0] = 0  # keeps the normalising column, so H2 is untouched
        rec = aligned_nmse(pair, ChannelPair(pair.h1 + delta, pair.h2))
        scale = pair.h1[:, :1]
        expected = np.linalg.norm(delta / scale) ** 2 / np.linalg.norm(pair.h1 / scale) ** 2
        assert rec.nmse_h1 == pytest.approx(expected, rel=1e-9)
        assert rec.nmse_h2 == 0.0

    def test_carries_metadata(self):
        pair = generate_channels(DIMS, 9)
        rec = aligned_nmse(pair, pair, seed=3, snr_db=10.0, dims=DIMS)
        assert (rec.seed, rec.snr_db, rec.dims) == (3, 10.0, DIMS)
