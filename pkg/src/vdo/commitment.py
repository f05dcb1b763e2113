"""Succinct distribution commitments with locally checkable openings.

The committer builds a full binary tree over the (power-of-two padded)
domain. Each leaf holds an element's grain count; each internal node holds
the sum of its children's counts plus a keyed SHA-256 hash of the two child
labels. The digest is the root label together with the tree geometry, and
an opening authenticates one element's pdf and cdf with a leaf-to-root
sibling path.

Hashing is domain-separated: 0x00 for leaf labels, 0x01 for internal
nodes, 0x02 for the digest header, with the session salt prepended.
The cdf is not hashed anywhere; it is checked arithmetically against the
masses of left siblings on the path, which the hashes do bind.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.random import Generator

from .dist import GrainDistribution
from .exactmath import frac_ceil

HASH_LEN = 32
_LEAF_TAG = b"\x00"
_NODE_TAG = b"\x01"
_HEAD_TAG = b"\x02"


class CollisionEvidence(Exception):
    """Two verified openings assigned different labels to one tree node."""

    def __init__(self, node: tuple[int, int], first, second):
        super().__init__(f"conflicting labels for node {node}")
        self.node = node
        self.first = first
        self.second = second


@dataclass(frozen=True)
class HashKey:
    """Session hash key: a fresh salt chosen by the verifier."""

    salt: bytes
    security_param: int = 128

    def __post_init__(self):
        if len(self.salt) != 16:
            raise ValueError("salt must be 16 bytes")
        if self.security_param < 128:
            raise ValueError("security parameter below 128 bits")

    def to_bytes(self) -> bytes:
        return self.salt + self.security_param.to_bytes(4, "little")

    @classmethod
    def from_bytes(cls, data: bytes) -> "HashKey":
        if len(data) != 20:
            raise ValueError("bad key encoding")
        return cls(bytes(data[:16]), int.from_bytes(data[16:20], "little"))


@dataclass(frozen=True)
class NodeLabel:
    """Mass (grain count) and hash of one tree node."""

    mass: int
    digest: bytes

    def to_bytes(self) -> bytes:
        return self.mass.to_bytes(8, "little") + self.digest


@dataclass(frozen=True)
class Digest:
    """Root label plus tree geometry. root.digest binds the geometry fields."""

    root: NodeLabel
    padded_size: int
    domain_size: int
    denominator: int

    def to_bytes(self) -> bytes:
        return (
            self.domain_size.to_bytes(8, "little")
            + self.denominator.to_bytes(8, "little")
            + self.padded_size.to_bytes(8, "little")
            + self.root.to_bytes()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Digest":
        if len(data) != 24 + 8 + HASH_LEN:
            raise ValueError("bad digest encoding")
        n = int.from_bytes(data[0:8], "little")
        g = int.from_bytes(data[8:16], "little")
        p = int.from_bytes(data[16:24], "little")
        mass = int.from_bytes(data[24:32], "little")
        return cls(NodeLabel(mass, bytes(data[32:])), p, n, g)

    ENCODED_LEN = 24 + 8 + HASH_LEN


@dataclass(frozen=True)
class OpeningProof:
    """Authenticated pdf/cdf claim for one element.

    path runs leaf to root: (sibling label, sibling_is_left). Left siblings'
    masses accumulate into the cdf.
    """

    element: int
    claimed_pdf: int
    claimed_cdf: int
    path: tuple[tuple[NodeLabel, bool], ...]

    def to_bytes(self) -> bytes:
        out = [
            self.element.to_bytes(8, "little"),
            self.claimed_pdf.to_bytes(8, "little"),
            self.claimed_cdf.to_bytes(8, "little"),
            len(self.path).to_bytes(1, "little"),
        ]
        for label, is_left in self.path:
            out.append(label.to_bytes())
            out.append(b"\x01" if is_left else b"\x00")
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "OpeningProof":
        if len(data) < 25:
            raise ValueError("truncated opening")
        element = int.from_bytes(data[0:8], "little")
        pdf = int.from_bytes(data[8:16], "little")
        cdf = int.from_bytes(data[16:24], "little")
        depth = data[24]
        rec = 8 + HASH_LEN + 1
        if len(data) != 25 + depth * rec:
            raise ValueError("opening length mismatch")
        path = []
        off = 25
        for _ in range(depth):
            mass = int.from_bytes(data[off : off + 8], "little")
            h = bytes(data[off + 8 : off + 8 + HASH_LEN])
            side = data[off + 8 + HASH_LEN]
            if side not in (0, 1):
                raise ValueError("bad direction byte")
            path.append((NodeLabel(mass, h), side == 1))
            off += rec
        return cls(element, pdf, cdf, tuple(path))

    @staticmethod
    def encoded_len(depth: int) -> int:
        return 25 + depth * (8 + HASH_LEN + 1)


class TreeAux:
    """All node labels of a committed tree, heap-indexed (root at 1)."""

    __slots__ = ("padded", "depth", "masses", "hashes")

    def __init__(self, padded: int, masses: np.ndarray, hashes: list[bytes]):
        self.padded = padded
        self.depth = padded.bit_length() - 1
        self.masses = masses
        self.hashes = hashes

    def label(self, idx: int) -> NodeLabel:
        return NodeLabel(int(self.masses[idx]), self.hashes[idx])


def _hash_leaf(salt: bytes, mass: int) -> bytes:
    return hashlib.sha256(salt + _LEAF_TAG + mass.to_bytes(8, "little")).digest()


def _hash_node(salt: bytes, left: NodeLabel, right: NodeLabel) -> bytes:
    return hashlib.sha256(
        salt + _NODE_TAG + left.to_bytes() + right.to_bytes()
    ).digest()


def _hash_header(salt: bytes, n: int, grains: int, padded: int, root_hash: bytes) -> bytes:
    return hashlib.sha256(
        salt
        + _HEAD_TAG
        + n.to_bytes(8, "little")
        + grains.to_bytes(8, "little")
        + padded.to_bytes(8, "little")
        + root_hash
    ).digest()


def gen(kappa: int, n: int, rng: Generator) -> HashKey:
    """Fresh verifier-chosen key; kappa must be at least 128."""
    if kappa < 128:
        raise ValueError("security parameter below 128 bits")
    salt = bytes(int(b) for b in rng.integers(0, 256, size=16))
    return HashKey(salt, kappa)


def digest(key: HashKey, q: GrainDistribution) -> tuple[Digest, TreeAux]:
    """Commit to q. Deterministic in (key, q); aux holds every node label."""
    padded = 1 if q.n == 1 else 1 << (q.n - 1).bit_length()
    size = 2 * padded
    masses = np.zeros(size, dtype=object)
    masses[padded : padded + q.n] = q.counts
    for i in range(padded - 1, 0, -1):
        masses[i] = masses[2 * i] + masses[2 * i + 1]
    salt = key.salt
    hashes: list[bytes] = [b""] * size
    for i in range(padded, size):
        hashes[i] = _hash_leaf(salt, int(masses[i]))
    for i in range(padded - 1, 0, -1):
        left = NodeLabel(int(masses[2 * i]), hashes[2 * i])
        right = NodeLabel(int(masses[2 * i + 1]), hashes[2 * i + 1])
        hashes[i] = _hash_node(salt, left, right)
    aux = TreeAux(padded, masses, hashes)
    root_hash = _hash_header(salt, q.n, q.grains, padded, hashes[1])
    d = Digest(NodeLabel(int(masses[1]), root_hash), padded, q.n, q.grains)
    return d, aux


def open_element(x: int, key: HashKey, d: Digest, aux: TreeAux) -> OpeningProof:
    """Opening for element x: pdf, cdf and the sibling path."""
    if not 1 <= x <= d.domain_size:
        raise ValueError(f"element {x} outside [1, {d.domain_size}]")
    idx = aux.padded + x - 1
    pdf = int(aux.masses[idx])
    path = []
    cdf = pdf
    while idx > 1:
        sib = idx ^ 1
        sib_is_left = sib < idx
        label = aux.label(sib)
        if sib_is_left:
            cdf += label.mass
        path.append((label, sib_is_left))
        idx //= 2
    return OpeningProof(x, pdf, cdf, tuple(path))


def verify_opening(x: int, proof: OpeningProof, key: HashKey, d: Digest) -> bool:
    """Accept iff the path reproduces the digest, every level is mass-additive,
    and the claimed cdf equals the leaf mass plus all left-sibling masses.
    """
    if d.denominator < 1 or d.padded_size < 1:
        return False
    if d.padded_size & (d.padded_size - 1):
        return False
    if not d.padded_size // 2 < d.domain_size <= d.padded_size:
        return False
    if d.root.mass != d.denominator:
        return False
    if not 1 <= x <= d.domain_size or proof.element != x:
        return False
    depth = d.padded_size.bit_length() - 1
    if len(proof.path) != depth:
        return False
    if not 0 <= proof.claimed_pdf <= d.denominator:
        return False
    # direction bits must match the element's position
    leaf_pos = x - 1
    for level, (_, sib_is_left) in enumerate(proof.path):
        expect_left = (leaf_pos >> level) & 1 == 1
        if sib_is_left != expect_left:
            return False
    mass = proof.claimed_pdf
    node_hash = _hash_leaf(key.salt, mass)
    cdf = proof.claimed_pdf
    for label, sib_is_left in proof.path:
        if not 0 <= label.mass <= d.denominator:
            return False
        cur = NodeLabel(mass, node_hash)
        if sib_is_left:
            cdf += label.mass
            node_hash = _hash_node(key.salt, label, cur)
        else:
            node_hash = _hash_node(key.salt, cur, label)
        mass += label.mass
    if mass != d.root.mass:
        return False
    if cdf != proof.claimed_cdf:
        return False
    root_hash = _hash_header(
        key.salt, d.domain_size, d.denominator, d.padded_size, node_hash
    )
    return root_hash == d.root.digest


def quantile_open(
    mu: Fraction, key: HashKey, d: Digest, aux: TreeAux
) -> tuple[int, OpeningProof]:
    """Open the smallest x with cdf(x) >= mu."""
    mu = Fraction(mu)
    if not 0 < mu <= 1:
        raise ValueError("quantile argument must lie in (0, 1]")
    g = frac_ceil(mu * d.denominator)
    return quantile_open_grain(g, key, d, aux)


def quantile_open_grain(
    g: int, key: HashKey, d: Digest, aux: TreeAux
) -> tuple[int, OpeningProof]:
    """Quantile opening for the grain-grid mass g/G; walks the mass tree."""
    if not 1 <= g <= d.denominator:
        raise ValueError("grain index out of range")
    idx = 1
    remaining = g
    while idx < aux.padded:
        left = 2 * idx
        lm = int(aux.masses[left])
        if remaining <= lm:
            idx = left
        else:
            remaining -= lm
            idx = left + 1
    x = idx - aux.padded + 1
    return x, open_element(x, key, d, aux)


def quantile_valid(g: int, proof: OpeningProof) -> bool:
    """Receiver-side check that the opened element covers mass g/G:
    cdf - pdf < g <= cdf (half-open grain interval)."""
    return proof.claimed_cdf - proof.claimed_pdf < g <= proof.claimed_cdf


# -- extraction ----------------------------------------------------------------

EXTRACT_RUN_COEFF = 8


def canonical_distribution(n: int, grains: int) -> GrainDistribution:
    """Deterministic fallback output: grains spread as evenly as possible."""
    base, extra = divmod(grains, n)
    counts = [base + (1 if i < extra else 0) for i in range(n)]
    return GrainDistribution(n, grains, counts)


@dataclass
class ExtractReport:
    """Extraction outcome: the bound distribution, or collision evidence."""

    distribution: GrainDistribution
    collision: CollisionEvidence | None
    runs: int
    openings_seen: int
    known_nodes: int


def _record_path(
    known: dict[tuple[int, int], NodeLabel],
    proof: OpeningProof,
    salt: bytes,
) -> None:
    """Store every node label pinned by a verified opening.

    Nodes are addressed (level, index) with level 0 at the leaves; raises
    CollisionEvidence when a label contradicts one seen before.
    """
    depth = len(proof.path)
    pos = proof.element - 1
    mass = proof.claimed_pdf
    node_hash = _hash_leaf(salt, mass)
    for level, (sib, sib_is_left) in enumerate(proof.path):
        cur = NodeLabel(mass, node_hash)
        for lab, p in ((cur, pos), (sib, pos ^ 1)):
            prev = known.get((level, p))
            if prev is None:
                known[(level, p)] = lab
            elif prev != lab:
                raise CollisionEvidence((level, p), prev, lab)
        if sib_is_left:
            node_hash = _hash_node(salt, sib, cur)
        else:
            node_hash = _hash_node(salt, cur, sib)
        mass += sib.mass
        pos //= 2
    root = NodeLabel(mass, node_hash)
    prev = known.get((depth, 0))
    if prev is None:
        known[(depth, 0)] = root
    elif prev != root:
        raise CollisionEvidence((depth, 0), prev, root)


def extract(
    adversary,
    key: HashKey,
    d: Digest,
    eta: Fraction | float = 1,
) -> ExtractReport:
    """Recover the unique distribution a replayable opener is bound to.

    Runs the adversary ceil(8*N/eta) times with fresh run indices, keeps
    openings that verify, and assembles node labels. Mass of maximal
    subtrees that were never pinned is spread evenly over their in-range
    leaves (leftmost leaves take the remainder; subtrees consisting only
    of padding give their mass to element N). Conflicting labels witness a
    hash collision: the report carries the evidence and a canonical output.
    """
    n = d.domain_size
    runs = frac_ceil(Fraction(EXTRACT_RUN_COEFF * n) / Fraction(eta))
    known: dict[tuple[int, int], NodeLabel] = {}
    depth = d.padded_size.bit_length() - 1
    seen = 0
    processed_ids: set[int] = set()
    retained: list[OpeningProof] = []  # keeps ids stable while deduplicating
    try:
        for r in range(runs):
            for proof in adversary.opening_run(r):
                if not isinstance(proof, OpeningProof):
                    continue
                if id(proof) in processed_ids:
                    continue
                processed_ids.add(id(proof))
                retained.append(proof)
                if verify_opening(proof.element, proof, key, d):
                    seen += 1
                    _record_path(known, proof, key.salt)
    except CollisionEvidence as ev:
        return ExtractReport(
            canonical_distribution(n, d.denominator), ev, runs, seen, len(known)
        )

    counts = [0] * n

    def spread(level: int, pos: int, mass: int) -> None:
        width = 1 << level
        first = pos * width  # leaf positions covered, 0-based
        lo = first
        hi = min(first + width, n)  # clip padding
        if hi <= lo:
            counts[n - 1] += mass
            return
        k = hi - lo
        base, extra = divmod(mass, k)
        for i in range(lo, hi):
            counts[i] += base + (1 if i - lo < extra else 0)

    def walk(level: int, pos: int, mass: int) -> None:
        if level == 0:
            counts[pos if pos < n else n - 1] += mass
            return
        left = known.get((level - 1, 2 * pos))
        right = known.get((level - 1, 2 * pos + 1))
        if left is not None and right is not None:
            walk(level - 1, 2 * pos, left.mass)
            walk(level - 1, 2 * pos + 1, right.mass)
        else:
            spread(level, pos, mass)

    walk(depth, 0, d.denominator)
    out = GrainDistribution(n, d.denominator, counts)
    return ExtractReport(out, None, runs, seen, len(known))
