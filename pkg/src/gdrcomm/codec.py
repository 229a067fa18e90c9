"""Message representations: one-hot, bit vector and the m-hot GDR codec.

A message index is mapped to the m-subset of ``{0..M-1}`` with that
lexicographic rank (combinatorial number system), and the codeword is the
length-M probability vector holding 1/m at the subset positions. ``m == 1``
reduces to the conventional one-hot scheme. Only the lexicographically first
``2^floor(log2 C(M, m))`` subsets are used as messages, so the message count
is always a power of two; decoded subsets outside that range count as block
errors rather than being remapped.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

#: Sentinel returned by decode when the top-m subset is not a valid message.
INVALID_CODEWORD = -1

_INT64_MAX = (1 << 63) - 1


def _check_order(M: int, m: int) -> None:
    if M < 2:
        raise ValueError(f"vector size M must be >= 2, got {M}")
    if not 1 <= m <= M // 2:
        raise ValueError(
            f"order m must satisfy 1 <= m <= floor(M/2) = {M // 2}, got {m}")


def num_messages(M: int, m: int) -> int:
    """Number of usable messages: 2^floor(log2 C(M, m)).

    The subset count C(M, m) is computed exactly in integer arithmetic and
    must fit a signed 64-bit integer.
    """
    _check_order(M, m)
    total = comb(M, m)
    if total > _INT64_MAX:
        raise OverflowError(
            f"C({M}, {m}) = {total} exceeds 2**63 - 1")
    return 1 << (total.bit_length() - 1)


def unrank_subset(index: int, M: int, m: int) -> list[int]:
    """The ``index``-th m-subset of ``{0..M-1}`` in lexicographic order.

    Valid for any ``index`` in ``[0, C(M, m))``; the codec itself only uses
    the first ``num_messages(M, m)`` of them.
    """
    _check_order(M, m)
    total = comb(M, m)
    if not 0 <= index < total:
        raise ValueError(
            f"subset index {index} out of range [0, C({M},{m}) = {total})")
    out = []
    r = index
    x = 0
    for slots in range(m, 0, -1):
        # skip all subsets whose smallest remaining element is below x
        while comb(M - 1 - x, slots - 1) <= r:
            r -= comb(M - 1 - x, slots - 1)
            x += 1
        out.append(x)
        x += 1
    return out


def rank_subset(positions, M: int, m: int) -> int:
    """Lexicographic rank of an m-subset; inverse of :func:`unrank_subset`."""
    _check_order(M, m)
    pos = list(positions)
    if len(pos) != m:
        raise ValueError(f"expected {m} positions, got {len(pos)}")
    if any(p != int(p) for p in pos):
        raise ValueError(f"positions must be integers, got {pos}")
    pos = [int(p) for p in pos]
    if any(not 0 <= p < M for p in pos):
        raise ValueError(f"positions must lie in [0, {M}), got {pos}")
    if any(a >= b for a, b in zip(pos, pos[1:])):
        raise ValueError(f"positions must be strictly increasing, got {pos}")
    # hockey-stick sum of the subsets skipped before each chosen element
    rank = 0
    prev = -1
    for j, c in enumerate(pos):
        rank += comb(M - 1 - prev, m - j) - comb(M - c, m - j)
        prev = c
    return rank


@dataclass(frozen=True)
class GdrCodec:
    """An (M, m) message codec over n channel uses.

    ``M`` is the codeword vector size, ``m`` the number of non-zero entries
    (each 1/m), and ``n`` the number of real channel uses per message.
    Immutable after construction; safe for concurrent reads.
    """

    M: int
    m: int
    n: int

    def __post_init__(self):
        _check_order(self.M, self.m)
        if self.n < 1:
            raise ValueError(f"channel uses n must be >= 1, got {self.n}")
        num_messages(self.M, self.m)  # also validates the 64-bit bound

    @property
    def num_messages(self) -> int:
        return num_messages(self.M, self.m)

    @property
    def bits_per_block(self) -> int:
        """Information bits per message: floor(log2 C(M, m))."""
        return comb(self.M, self.m).bit_length() - 1

    def data_rate(self) -> float:
        """Information bits conveyed per channel use."""
        return self.bits_per_block / self.n

    def capacity(self, ebn0_linear: float) -> float:
        """Shannon capacity log2(1 + 1/sigma^2) in bits/s/Hz at this rate."""
        if ebn0_linear <= 0:
            raise ValueError(
                f"Eb/N0 must be positive, got {ebn0_linear}")
        return float(np.log2(1.0 + 2.0 * ebn0_linear * self.bits_per_block
                             / self.n))

    def encode(self, s: int) -> np.ndarray:
        """Codeword for message index ``s``: 1/m at m positions, 0 elsewhere."""
        if not 0 <= s < self.num_messages:
            raise ValueError(
                f"message index {s} out of range [0, {self.num_messages})")
        vec = np.zeros(self.M)
        vec[unrank_subset(s, self.M, self.m)] = 1.0 / self.m
        return vec

    def decode(self, p) -> int:
        """Message index recovered from the m highest-probability positions.

        Ties break toward the lowest index. Returns :data:`INVALID_CODEWORD`
        when the recovered subset is outside the usable message range.
        """
        p = np.asarray(p, dtype=np.float64)
        if p.shape != (self.M,):
            raise ValueError(f"expected {self.M} entries, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("probability vector contains non-finite entries")
        # stable sort on -p keeps ascending index order among equal values
        top = np.sort(np.argsort(-p, kind="stable")[:self.m])
        rank = rank_subset(top.tolist(), self.M, self.m)
        return rank if rank < self.num_messages else INVALID_CODEWORD

    def decode_batch(self, P: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`decode` over the rows of ``P``."""
        P = np.asarray(P, dtype=np.float64)
        if P.ndim != 2 or P.shape[1] != self.M:
            raise ValueError(
                f"expected shape (B, {self.M}), got {P.shape}")
        order = np.argsort(-P, axis=1, kind="stable")
        pos = np.sort(order[:, :self.m], axis=1)
        ranks = self._rank_rows(pos)
        return np.where(ranks < self.num_messages, ranks, INVALID_CODEWORD)

    def _rank_rows(self, pos: np.ndarray) -> np.ndarray:
        M, m = self.M, self.m
        table = np.zeros((M + 1, m + 1), dtype=np.int64)
        for a in range(M + 1):
            for b in range(m + 1):
                table[a, b] = comb(a, b)
        prev = np.concatenate(
            [np.full((pos.shape[0], 1), -1, dtype=pos.dtype), pos[:, :-1]],
            axis=1)
        cols = m - np.arange(m)
        terms = table[M - 1 - prev, cols] - table[M - pos, cols]
        return terms.sum(axis=1)

    def codebook(self) -> np.ndarray:
        """All codewords stacked row-wise, shape (num_messages, M)."""
        return np.stack([self.encode(s) for s in range(self.num_messages)])
