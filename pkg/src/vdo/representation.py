"""Sorted-grain codeword strings for committed distributions.

A distribution with denominator G maps to a string of G blocks: element x
contributes counts[x] consecutive copies of its codeword, in element order.
Block j is recoverable from quantile/cdf access alone, so a verifier can
probe the string of a committed distribution without learning it in full.

TV distance lower-bounds block Hamming distance exactly: two distributions
at TV distance d disagree on at least d*G sorted grains.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dist import GrainDistribution
from .rscode import BlockCode, element_code

_HEADER_LEN = 40


@dataclass(frozen=True)
class RepresentationString:
    """B = G codeword blocks of a sorted-grain encoding."""

    n: int
    grains: int
    code: BlockCode
    blocks: np.ndarray  # uint8 matrix, shape (G, n_c)

    @property
    def block_count(self) -> int:
        return self.grains

    @property
    def granularity(self) -> Fraction:
        return Fraction(1, self.grains)

    def block(self, j: int) -> bytes:
        if not 1 <= j <= self.grains:
            raise ValueError("block index out of range")
        return bytes(self.blocks[j - 1].tobytes())

    def to_bytes(self) -> bytes:
        head = b"".join(
            v.to_bytes(8, "little")
            for v in (
                self.grains,
                self.code.codeword_symbols,
                self.code.message_symbols,
                self.n,
                self.grains,
            )
        )
        return head + self.blocks.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "RepresentationString":
        if len(data) < _HEADER_LEN:
            raise ValueError("truncated representation")
        b, n_c, k_c, n, grains = (
            int.from_bytes(data[i : i + 8], "little") for i in range(0, 40, 8)
        )
        if b != grains:
            raise ValueError("inconsistent block count")
        body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER_LEN)
        if body.shape[0] != b * n_c:
            raise ValueError("representation length mismatch")
        return cls(n, grains, BlockCode(k_c, n_c), body.reshape(b, n_c).copy())


def build_representation(
    q: GrainDistribution, code: BlockCode | None = None
) -> RepresentationString:
    code = code or element_code(q.n)
    table = code.encode_table(q.n)
    reps = np.repeat(np.arange(1, q.n + 1, dtype=np.int64), np.asarray(q.counts))
    return RepresentationString(q.n, q.grains, code, table[reps])


def reconstruct_distribution(rep: RepresentationString) -> GrainDistribution | None:
    """Inverse of build_representation; None when any block fails to decode,
    elements fall outside [1, n], or the element sequence is unsorted."""
    elems = decode_blocks(rep.blocks, rep.code, rep.n)
    if elems is None:
        return None
    counts = np.bincount(elems - 1, minlength=rep.n)
    return GrainDistribution(rep.n, rep.grains, counts.tolist())


def decode_blocks(blocks: np.ndarray, code: BlockCode, n: int) -> np.ndarray | None:
    """Vector decode of a block matrix; None unless every row is a codeword
    for an element of [1, n] and rows are sorted by element."""
    if blocks.ndim != 2 or blocks.shape[1] != code.codeword_symbols:
        return None
    k = code.message_symbols
    msg = blocks[:, :k].astype(np.int64)
    vals = np.zeros(blocks.shape[0], dtype=np.int64)
    for i in range(k):
        vals = (vals << 8) | msg[:, i]
    if (vals < 1).any() or (vals > n).any():
        return None
    table = code.encode_table(n)
    if not (table[vals] == blocks).all():
        return None
    if (np.diff(vals) < 0).any():
        return None
    return vals


def query_block(j: int, quantile_fn, cdf_fn, code: BlockCode, grains: int) -> bytes:
    """Block j via one quantile query and one cdf query.

    quantile_fn maps a grain index g to the smallest element whose cdf
    (in grains) reaches g; cdf_fn returns cumulative grains. The cdf call
    locates j inside the element's run and validates j <= cdf(x).
    """
    if not 1 <= j <= grains:
        raise ValueError("block index out of range")
    x = quantile_fn(j)
    hi = cdf_fn(x)
    if not j <= hi:
        raise ValueError("quantile answer does not cover the block")
    return code.encode_int(x)


def hamming_block_distance(a: RepresentationString, b: RepresentationString) -> Fraction:
    """Fraction of block positions that differ."""
    if a.grains != b.grains or a.code != b.code:
        raise ValueError("representation shape mismatch")
    diff = int((a.blocks != b.blocks).any(axis=1).sum())
    return Fraction(diff, a.grains)


def hamming_symbol_distance(a: RepresentationString, b: RepresentationString) -> Fraction:
    """Fraction of symbol positions that differ; at least block distance
    times the code's relative distance."""
    if a.grains != b.grains or a.code != b.code:
        raise ValueError("representation shape mismatch")
    diff = int((a.blocks != b.blocks).sum())
    return Fraction(diff, a.grains * a.code.codeword_symbols)


def representation_test(
    blocks: np.ndarray,
    code: BlockCode,
    n: int,
    grains: int,
    dist_fn,
    delta_c: Fraction,
    slack: Fraction,
    threshold: Fraction | None = None,
) -> tuple[bool, Fraction | None]:
    """Decision over an alleged representation string.

    Rejects unless every block decodes to an element of [1, n] and decoded
    elements are nondecreasing; otherwise reconstructs the distribution and
    accepts iff dist_fn(q) <= threshold (default delta_c + slack). Returns
    (verdict, measured distance or None).
    """
    if blocks.shape != (grains, code.codeword_symbols):
        return False, None
    elems = decode_blocks(blocks, code, n)
    if elems is None:
        return False, None
    counts = np.bincount(elems - 1, minlength=n)
    q = GrainDistribution(n, grains, counts.tolist())
    delta = dist_fn(q)
    limit = threshold if threshold is not None else Fraction(delta_c) + Fraction(slack)
    return delta <= limit, delta
