import numpy as np
from numpy.random import Philox

from kpzlab import rng


class TestPhiloxCore:
    def test_matches_numpy_reference(self):
        # numpy's Philox advances its counter before the first block, so its
        # block i equals our counter i + 1
        key = np.array([123456789, 987654321], dtype=np.uint64)
        raw = Philox(key=key).random_raw(12)
        ours = rng.philox_words(
            np.arange(1, 4, dtype=np.uint64), np.zeros(3, np.uint64), key[0], key[1]
        ).ravel()
        np.testing.assert_array_equal(raw, ours)

    def test_numpy_fallback_bit_identical(self):
        c0 = np.arange(100, dtype=np.uint64)
        c1 = np.arange(100, 200, dtype=np.uint64)
        a = rng.philox_words(c0, c1, 7, 9)
        b = rng._philox_words_numpy(c0, c1, 7, 9)
        np.testing.assert_array_equal(a, b)

    def test_uniforms_in_open_interval(self):
        w = rng.philox_words(np.arange(1000, dtype=np.uint64), np.zeros(1000, np.uint64), 1, 2)
        u = rng.words_to_uniform(w)
        assert np.all(u > 0) and np.all(u < 1)


class TestNormalMatrix:
    def test_deterministic(self):
        a = rng.normal_matrix(42, rng.STREAM_NOISE, 50, 64)
        b = rng.normal_matrix(42, rng.STREAM_NOISE, 50, 64)
        np.testing.assert_array_equal(a, b)

    def test_block_addressing_rows_and_cols(self):
        full = rng.normal_matrix(7, rng.STREAM_NOISE, 40, 70)
        sub = rng.normal_matrix(7, rng.STREAM_NOISE, 10, 33, row0=13, col0=21)
        np.testing.assert_array_equal(sub, full[13:23, 21:54])

    def test_streams_differ(self):
        a = rng.normal_matrix(42, rng.STREAM_NOISE, 20, 20)
        b = rng.normal_matrix(42, rng.STREAM_DRIVER, 20, 20)
        assert not np.allclose(a, b)
        assert abs(np.corrcoef(a.ravel(), b.ravel())[0, 1]) < 3.0 / np.sqrt(400)

    def test_key1_extra_substreams(self):
        a = rng.normal_matrix(42, rng.STREAM_BRIDGE, 20, 20, key1_extra=0)
        b = rng.normal_matrix(42, rng.STREAM_BRIDGE, 20, 20, key1_extra=1)
        assert not np.allclose(a, b)

    def test_multiseed_matches_per_seed_rows(self):
        seeds = [3, 99, 2 ** 40 + 5]
        batch = rng.normal_matrix_multiseed(seeds, rng.STREAM_NOISE, 17, 30)
        for s, row in zip(seeds, batch):
            ref = rng.normal_matrix(s, rng.STREAM_NOISE, 1, 30, row0=17)[0]
            np.testing.assert_array_equal(row, ref)

    def test_moments(self):
        z = rng.normal_matrix(5, rng.STREAM_NOISE, 200, 500)
        n = z.size
        assert abs(z.mean()) < 4.0 / np.sqrt(n)
        assert abs(z.std() - 1.0) < 4.0 / np.sqrt(2 * n)
        assert abs((z ** 3).mean()) < 4.0 * np.sqrt(15.0 / n)
