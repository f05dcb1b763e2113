"""Canonical message encodings and session transcripts.

Every protocol message is one framed record:

    seq:u32 | type:u8 | payload_len:u32 | payload

All integers are little-endian. Quantile probes carry a grain index g
(the probed mass is g/G for the committed denominator G); batched replies
answer a query set positionally.

Transcripts record direction, framing and counters. Payload retention can
be disabled for bulk runs; byte counters are exact either way because every
record length is computable from the structured message.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .commitment import Digest, HashKey, OpeningProof

HEADER_LEN = 9


class MsgType(IntEnum):
    KEY = 1
    DIGEST = 2
    QUERY_SET = 3
    OPENING = 4
    OPENING_BATCH = 5
    BACKEND_SELECT = 6
    BACKEND_DATA = 7
    VERDICT = 8


class ProbeKind(IntEnum):
    ELEMENT = 1
    QUANTILE = 2


class Reason(IntEnum):
    ACCEPT = 0
    BAD_DIGEST = 1
    MALFORMED = 2
    INVALID_OPENING = 3
    QUANTILE_INVALID = 4
    IDENTITY_FAIL = 5
    PROPERTY_REJECT = 6
    BACKEND_MISMATCH = 7
    BACKEND_REJECT = 8


@dataclass(frozen=True)
class KeyMsg:
    key: HashKey

    TYPE = MsgType.KEY

    def payload(self) -> bytes:
        return self.key.to_bytes()

    def payload_len(self) -> int:
        return 20


@dataclass(frozen=True)
class DigestMsg:
    digest: Digest

    TYPE = MsgType.DIGEST

    def payload(self) -> bytes:
        return self.digest.to_bytes()

    def payload_len(self) -> int:
        return Digest.ENCODED_LEN


@dataclass(frozen=True)
class QuerySet:
    """Ordered probe batch: kinds[i] says whether values[i] is an element
    or a quantile grain index."""

    kinds: np.ndarray  # u8 per probe
    values: np.ndarray  # i64 per probe

    TYPE = MsgType.QUERY_SET

    def __len__(self) -> int:
        return int(self.kinds.shape[0])

    def payload(self) -> bytes:
        count = len(self)
        return (
            count.to_bytes(4, "little")
            + np.asarray(self.kinds, dtype="u1").tobytes()
            + np.asarray(self.values, dtype="<i8").tobytes()
        )

    def payload_len(self) -> int:
        return 4 + 9 * len(self)

    @classmethod
    def from_payload(cls, data: bytes) -> "QuerySet":
        count = int.from_bytes(data[:4], "little")
        kinds = np.frombuffer(data, dtype="u1", count=count, offset=4)
        values = np.frombuffer(data, dtype="<i8", count=count, offset=4 + count)
        return cls(kinds, values)

    @classmethod
    def elements(cls, xs: np.ndarray) -> "QuerySet":
        xs = np.asarray(xs, dtype=np.int64)
        return cls(np.full(xs.shape[0], ProbeKind.ELEMENT, dtype="u1"), xs)

    @classmethod
    def quantiles(cls, grains: np.ndarray) -> "QuerySet":
        gs = np.asarray(grains, dtype=np.int64)
        return cls(np.full(gs.shape[0], ProbeKind.QUANTILE, dtype="u1"), gs)

    @classmethod
    def concat(cls, *sets: "QuerySet") -> "QuerySet":
        return cls(
            np.concatenate([s.kinds for s in sets]),
            np.concatenate([s.values for s in sets]),
        )


@dataclass(frozen=True)
class OpeningMsg:
    proof: OpeningProof

    TYPE = MsgType.OPENING

    def payload(self) -> bytes:
        return self.proof.to_bytes()

    def payload_len(self) -> int:
        return OpeningProof.encoded_len(len(self.proof.path))


class OpeningBatch:
    """Positional answers to a QuerySet.

    Stored deduplicated: `proofs` holds distinct openings, `index[i]` picks
    the proof answering probe i. The wire encoding repeats each record in
    full, so byte counts match per-probe framing; refusals are encoded as a
    zeroed record and index -1.
    """

    TYPE = MsgType.OPENING_BATCH

    def __init__(self, proofs: list[OpeningProof], index: np.ndarray, depth: int):
        self.proofs = proofs
        self.index = np.asarray(index, dtype=np.int64)
        self.depth = depth

    def __len__(self) -> int:
        return int(self.index.shape[0])

    @classmethod
    def from_proof_list(cls, proofs: list[OpeningProof | None], depth: int) -> "OpeningBatch":
        distinct: list[OpeningProof] = []
        where: dict[int, int] = {}
        index = np.empty(len(proofs), dtype=np.int64)
        for i, p in enumerate(proofs):
            if p is None:
                index[i] = -1
                continue
            k = id(p)
            j = where.get(k)
            if j is None:
                j = len(distinct)
                where[k] = j
                distinct.append(p)
            index[i] = j
        return cls(distinct, index, depth)

    def record_len(self) -> int:
        return OpeningProof.encoded_len(self.depth)

    def payload_len(self) -> int:
        return 4 + len(self) * self.record_len()

    def payload(self) -> bytes:
        rec = self.record_len()
        blank = b"\x00" * rec
        encoded = [p.to_bytes() for p in self.proofs]
        for e in encoded:
            if len(e) != rec:
                raise ValueError("inconsistent opening depth in batch")
        body = b"".join(encoded[j] if j >= 0 else blank for j in self.index.tolist())
        return len(self).to_bytes(4, "little") + body

    @classmethod
    def from_payload(cls, data: bytes, depth: int) -> "OpeningBatch":
        rec = OpeningProof.encoded_len(depth)
        count = int.from_bytes(data[:4], "little")
        if len(data) != 4 + count * rec:
            raise ValueError("opening batch length mismatch")
        blank = b"\x00" * rec
        proofs: list[OpeningProof] = []
        index = np.empty(count, dtype=np.int64)
        seen: dict[bytes, int] = {}
        for i in range(count):
            chunk = data[4 + i * rec : 4 + (i + 1) * rec]
            if chunk == blank:
                index[i] = -1
                continue
            j = seen.get(chunk)
            if j is None:
                j = len(proofs)
                seen[chunk] = j
                proofs.append(OpeningProof.from_bytes(chunk))
            index[i] = j
        return cls(proofs, index, depth)


@dataclass(frozen=True)
class BackendSelect:
    backend_id: int
    params: bytes = b""

    TYPE = MsgType.BACKEND_SELECT

    def payload(self) -> bytes:
        return self.backend_id.to_bytes(1, "little") + self.params

    def payload_len(self) -> int:
        return 1 + len(self.params)


@dataclass(frozen=True)
class BackendData:
    blob: bytes

    TYPE = MsgType.BACKEND_DATA

    def payload(self) -> bytes:
        return self.blob

    def payload_len(self) -> int:
        return len(self.blob)


@dataclass(frozen=True)
class Verdict:
    accept: bool
    reason: Reason

    TYPE = MsgType.VERDICT

    def payload(self) -> bytes:
        return bytes([1 if self.accept else 0, int(self.reason)])

    def payload_len(self) -> int:
        return 2


Message = (
    KeyMsg
    | DigestMsg
    | QuerySet
    | OpeningMsg
    | OpeningBatch
    | BackendSelect
    | BackendData
    | Verdict
)


def frame(seq: int, msg) -> bytes:
    payload = msg.payload()
    return (
        seq.to_bytes(4, "little")
        + bytes([int(msg.TYPE)])
        + len(payload).to_bytes(4, "little")
        + payload
    )


def frame_len(msg) -> int:
    return HEADER_LEN + msg.payload_len()


@dataclass
class TranscriptEntry:
    seq: int
    sender: str  # "V" or "P"
    msg_type: MsgType
    length: int  # full framed length
    payload: bytes | None  # retained only when recording payloads


@dataclass
class SessionTranscript:
    """Ordered, byte-exact protocol record with usage counters."""

    record_payloads: bool = True
    entries: list[TranscriptEntry] = field(default_factory=list)
    d_samples: int = 0
    q_probes: int = 0
    q_samples: int = 0
    bytes_sent: int = 0  # verifier -> prover
    bytes_received: int = 0  # prover -> verifier
    rounds: int = 0
    _next_seq: int = 0
    _last_sender: str | None = None

    def log(self, sender: str, msg) -> int:
        seq = self._next_seq
        self._next_seq += 1
        length = frame_len(msg)
        payload = msg.payload() if self.record_payloads else None
        self.entries.append(
            TranscriptEntry(seq, sender, MsgType(msg.TYPE), length, payload)
        )
        if sender == "V":
            self.bytes_sent += length
        else:
            self.bytes_received += length
        if sender != self._last_sender:
            self.rounds += 1
            self._last_sender = sender
        return seq

    @property
    def message_count(self) -> int:
        return len(self.entries)

    def total_bytes(self) -> int:
        return self.bytes_sent + self.bytes_received

    def to_text(self) -> str:
        """One record per line: seq sender type length hexpayload."""
        lines = []
        for e in self.entries:
            hexpart = e.payload.hex() if e.payload is not None else "-"
            lines.append(f"{e.seq} {e.sender} {e.msg_type.name} {e.length} {hexpart}")
        return "\n".join(lines) + "\n"

    def recompute_counters(self) -> tuple[int, int]:
        sent = sum(e.length for e in self.entries if e.sender == "V")
        recv = sum(e.length for e in self.entries if e.sender == "P")
        return sent, recv
