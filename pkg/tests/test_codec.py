"""m-hot codec: ranking, encoding, decoding, rate and capacity."""

from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdrcomm.codec import (INVALID_CODEWORD, GdrCodec, num_messages,
                           rank_subset, unrank_subset)


def floor_log2(x: int) -> int:
    # independent of the bit_length trick used by the implementation
    k = 0
    while 2 ** (k + 1) <= x:
        k += 1
    return k


class TestNumMessages:
    def test_one_hot_64(self):
        assert num_messages(64, 1) == 64

    def test_order4_of_8(self):
        assert num_messages(8, 4) == 64
        assert comb(8, 4) == 70

    def test_order2_of_8_via_enumeration(self):
        subsets = list(combinations(range(8), 2))
        assert len(subsets) == 28
        assert num_messages(8, 2) == 2 ** floor_log2(len(subsets))
        assert num_messages(8, 2) == 16

    def test_one_hot_reduces_to_floor_log2_m(self):
        for M in range(2, 65):
            assert num_messages(M, 1) == 2 ** floor_log2(M)

    @pytest.mark.parametrize("M,m", [(8, 0), (8, 5), (8, -1), (4, 3)])
    def test_order_out_of_range(self, M, m):
        with pytest.raises(ValueError, match="floor"):
            num_messages(M, m)

    def test_subset_count_overflow(self):
        assert comb(68, 34) > 2**63 - 1
        with pytest.raises(OverflowError):
            num_messages(68, 34)


class TestRanking:
    def test_first_subset(self):
        assert unrank_subset(0, 4, 2) == [0, 1]
        assert rank_subset([0, 1], 4, 2) == 0

    def test_enumerated_order_4_2(self):
        expected = [list(c) for c in combinations(range(4), 2)]
        assert expected == [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
        for i, subset in enumerate(expected):
            assert unrank_subset(i, 4, 2) == subset
            assert rank_subset(subset, 4, 2) == i

    def test_index_5_is_beyond_codec_range(self):
        # valid as pure combinatorics, rejected as a message index
        assert unrank_subset(5, 4, 2) == [2, 3]
        assert num_messages(4, 2) == 4
        codec = GdrCodec(M=4, m=2, n=7)
        with pytest.raises(ValueError, match="out of range"):
            codec.encode(5)

    def test_exhaustive_inverse_up_to_16(self):
        # itertools.combinations enumerates in lexicographic order
        for M in range(2, 17):
            for m in range(1, M // 2 + 1):
                for i, subset in enumerate(combinations(range(M), m)):
                    assert unrank_subset(i, M, m) == list(subset)
                    assert rank_subset(subset, M, m) == i

    def test_unrank_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            unrank_subset(comb(10, 3), 10, 3)
        with pytest.raises(ValueError, match="out of range"):
            unrank_subset(-1, 10, 3)

    @pytest.mark.parametrize("positions", [[1, 0], [2, 2], [0], [0, 1, 2]])
    def test_rank_rejects_bad_positions(self, positions):
        with pytest.raises(ValueError):
            rank_subset(positions, 4, 2)

    def test_rank_rejects_position_outside_vector(self):
        with pytest.raises(ValueError, match=r"\[0, 4\)"):
            rank_subset([1, 4], 4, 2)

    @given(st.integers(2, 40).flatmap(
        lambda M: st.tuples(st.just(M), st.integers(1, M // 2))))
    @settings(max_examples=100)
    def test_inverse_property(self, Mm):
        M, m = Mm
        total = comb(M, m)
        for index in {0, total // 2, total - 1}:
            assert rank_subset(unrank_subset(index, M, m), M, m) == index


class TestEncode:
    def test_one_hot_message_index_1(self):
        codec = GdrCodec(M=8, m=1, n=7)
        np.testing.assert_array_equal(codec.encode(1),
                                      [0, 1, 0, 0, 0, 0, 0, 0])

    def test_two_hot(self):
        codec = GdrCodec(M=4, m=2, n=7)
        np.testing.assert_array_equal(codec.encode(3), [0, 0.5, 0.5, 0])

    def test_four_hot_first(self):
        codec = GdrCodec(M=8, m=4, n=7)
        np.testing.assert_array_equal(
            codec.encode(0), [0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0])

    def test_out_of_range(self):
        codec = GdrCodec(M=8, m=1, n=7)
        with pytest.raises(ValueError, match="out of range"):
            codec.encode(8)
        with pytest.raises(ValueError, match="out of range"):
            codec.encode(-1)

    def test_codewords_are_m_hot_distributions(self):
        for M, m in [(6, 2), (8, 3), (12, 5), (16, 8)]:
            codec = GdrCodec(M=M, m=m, n=7)
            book = codec.codebook()
            assert book.shape == (codec.num_messages, M)
            np.testing.assert_allclose(book.sum(axis=1), 1.0, atol=1e-12)
            assert ((book == 0) | (book == 1.0 / m)).all()
            assert (np.count_nonzero(book, axis=1) == m).all()


class TestDecode:
    def test_top2_example(self):
        codec = GdrCodec(M=4, m=2, n=7)
        assert codec.decode([0.1, 0.35, 0.4, 0.15]) == 3

    def test_tie_break_lowest_index(self):
        codec = GdrCodec(M=4, m=2, n=7)
        assert codec.decode([0.25, 0.25, 0.25, 0.25]) == 0

    def test_invalid_codeword_sentinel(self):
        codec = GdrCodec(M=4, m=2, n=7)
        # subset {2, 3} has rank 5 >= num_messages = 4
        assert codec.decode([0.0, 0.1, 0.4, 0.5]) == INVALID_CODEWORD

    def test_round_trip_exhaustive_up_to_16(self):
        for M in range(2, 17):
            for m in range(1, M // 2 + 1):
                codec = GdrCodec(M=M, m=m, n=7)
                for s in range(codec.num_messages):
                    assert codec.decode(codec.encode(s)) == s

    def test_decode_batch_matches_scalar(self):
        rng = np.random.default_rng(11)
        for M, m in [(8, 1), (8, 4), (16, 3), (5, 2)]:
            codec = GdrCodec(M=M, m=m, n=7)
            P = rng.normal(size=(64, M))
            got = codec.decode_batch(P)
            assert got.shape == (64,)
            for row, value in zip(P, got):
                assert codec.decode(row) == value

    def test_decode_rejects_non_finite(self):
        codec = GdrCodec(M=4, m=1, n=7)
        with pytest.raises(ValueError, match="finite"):
            codec.decode([0.1, np.nan, 0.2, 0.3])

    @given(st.integers(2, 16).flatmap(
        lambda M: st.tuples(st.just(M), st.integers(1, M // 2),
                            st.integers(0, 10**6))))
    @settings(max_examples=150)
    def test_round_trip_property(self, Mms):
        M, m, raw = Mms
        codec = GdrCodec(M=M, m=m, n=7)
        s = raw % codec.num_messages
        assert codec.decode(codec.encode(s)) == s


class TestRateAndCapacity:
    def test_matched_rate_six_sevenths(self):
        for M, m in [(64, 1), (8, 4), (16, 2)]:
            codec = GdrCodec(M=M, m=m, n=7)
            assert Fraction(codec.bits_per_block, codec.n) == Fraction(6, 7)
            assert codec.data_rate() == 6 / 7

    def test_one_hot_8(self):
        assert GdrCodec(M=8, m=1, n=7).data_rate() == 3 / 7

    def test_rate_non_decreasing_in_order(self):
        for M in (8, 12, 16, 32):
            rates = [GdrCodec(M=M, m=m, n=7).data_rate()
                     for m in range(1, M // 2 + 1)]
            assert rates == sorted(rates)

    def test_capacity_matches_closed_form(self):
        # high-precision evaluations of log2(1 + 2k/7), k = 6 and 3
        assert GdrCodec(M=8, m=4, n=7).capacity(1.0) == pytest.approx(
            1.4405725913859813864, abs=1e-12)
        assert GdrCodec(M=8, m=1, n=7).capacity(1.0) == pytest.approx(
            0.89308479608348805295, abs=1e-12)

    def test_capacity_equal_codecs(self):
        a = GdrCodec(M=16, m=1, n=7)
        b = GdrCodec(M=8, m=2, n=7)
        for db in np.arange(-6.0, 12.1, 1.5):
            lin = 10 ** (db / 10)
            assert a.capacity(lin) == b.capacity(lin)

    def test_capacity_rejects_non_positive(self):
        codec = GdrCodec(M=8, m=1, n=7)
        with pytest.raises(ValueError, match="positive"):
            codec.capacity(0.0)
        with pytest.raises(ValueError, match="positive"):
            codec.capacity(-1.0)


class TestCodecValidation:
    def test_rejects_bad_order(self):
        with pytest.raises(ValueError, match="floor"):
            GdrCodec(M=8, m=5, n=7)

    def test_rejects_bad_channel_uses(self):
        with pytest.raises(ValueError, match="n must be >= 1"):
            GdrCodec(M=8, m=1, n=0)

    def test_immutable(self):
        codec = GdrCodec(M=8, m=1, n=7)
        with pytest.raises(AttributeError):
            codec.M = 16
