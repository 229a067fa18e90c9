"""AWGN channel, noise-variance convention and stream determinism."""

import numpy as np
import pytest

from gdrcomm.channel import ChannelSpec, RngStream, awgn, noise_variance


class TestNoiseVariance:
    def test_half_rate_ebn0_product_gives_unit_variance(self):
        assert noise_variance(0.5, 0.0) == 1.0

    def test_rate_six_sevenths_at_0db(self):
        assert noise_variance(6 / 7, 0.0) == pytest.approx(7 / 12, rel=1e-15)

    def test_rate_four_sevenths_at_10db(self):
        assert noise_variance(4 / 7, 10.0) == pytest.approx(7 / 80, rel=1e-15)

    def test_rejects_non_positive_rate(self):
        with pytest.raises(ValueError, match="positive"):
            noise_variance(0.0, 0.0)
        with pytest.raises(ValueError, match="positive"):
            noise_variance(-1.0, 0.0)

    def test_channel_spec_invariant(self):
        spec = ChannelSpec.at(3.0, 6 / 7)
        assert spec.sigma2 == 1.0 / (2 * (6 / 7) * 10 ** 0.3)
        assert spec.sigma2 > 0


class TestAwgn:
    def test_noiseless_is_identity(self):
        rng = RngStream(1, 0)
        x = np.array([0.3, -1.2, 4.0])
        y = awgn(x, 0.0, rng)
        np.testing.assert_array_equal(y, x)
        # the stream was not consumed, so a later draw matches a fresh one
        np.testing.assert_array_equal(rng.normal(size=3),
                                      RngStream(1, 0).normal(size=3))

    def test_moments_at_one_million_draws(self):
        # law of large numbers at 3-sigma bounds: mean +-0.004, var +-1%
        y = awgn(np.zeros(1_000_000), 1.0, RngStream(123, 5))
        assert abs(y.mean()) < 0.004
        assert abs(y.var() - 1.0) < 0.01

    def test_variance_scales(self):
        y = awgn(np.zeros(1_000_000), 0.25, RngStream(77, 1))
        assert abs(y.var() - 0.25) < 0.0025

    def test_tiny_variance_sup_norm(self):
        x = np.linspace(-1, 1, 1000)
        y = awgn(x, 1e-20, RngStream(9, 0))
        assert np.max(np.abs(y - x)) < 1e-9

    def test_deterministic_replay(self):
        x = np.ones(64)
        a = awgn(x, 0.7, RngStream(42, 3))
        b = awgn(x, 0.7, RngStream(42, 3))
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        x = np.zeros(64)
        a = awgn(x, 1.0, RngStream(42, 0))
        b = awgn(x, 1.0, RngStream(42, 1))
        assert not np.array_equal(a, b)

    def test_rejects_negative_variance(self):
        with pytest.raises(ValueError, match=">= 0"):
            awgn(np.zeros(3), -0.1, RngStream(1, 0))


class TestRngStream:
    def test_replay_integers_and_permutation(self):
        a, b = RngStream(5, 2), RngStream(5, 2)
        np.testing.assert_array_equal(a.integers(100, size=50),
                                      b.integers(100, size=50))
        np.testing.assert_array_equal(a.permutation(20), b.permutation(20))

    def test_integers_range(self):
        draws = RngStream(1, 0).integers(8, size=1000)
        assert draws.min() >= 0 and draws.max() < 8

    def test_negative_seed_is_accepted(self):
        a = RngStream(-3, 0).normal(size=4)
        b = RngStream(-3, 0).normal(size=4)
        np.testing.assert_array_equal(a, b)
