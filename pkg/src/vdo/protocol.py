"""The verified distribution oracle session.

A session establishes query access to whatever distribution the digest
binds the prover to, guaranteed close to the unknown sampled distribution:

  1. verifier sends a fresh hash key; prover replies with a digest
     (rejected unless the root mass equals the declared denominator);
  2. the verifier ships one batch holding its quantile draws (reference
     samples) and every element probe of the identity test, the prover
     answers positionally, and the identity verdict is computed locally —
     four messages total;
  3. the query phase sends the generator's probes and returns verified
     (pdf, cdf) answers.

Rejection is immediate and terminal per message. All randomness comes from
streams derived from the session seed, so a session replays byte-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from numpy.random import Generator

from . import commitment as cm
from .constants import Constants, get_constants
from .dist import GrainDistribution
from .rngutil import rng_from
from .testers import DSampler, IdentityResult, IdentityTestRun
from .wire import (
    BackendData,
    BackendSelect,
    DigestMsg,
    KeyMsg,
    OpeningBatch,
    ProbeKind,
    QuerySet,
    Reason,
    SessionTranscript,
    Verdict,
)

MAX_DENOMINATOR = 1 << 61


@dataclass
class QueryGenerator:
    """Produces the query-phase probe list from (N, eps, denominator, rng)."""

    name: str
    make: Callable[[int, Fraction, int, Generator], QuerySet]
    time_budget: str = "poly(log N) per probe"

    def probes(self, n: int, epsilon: Fraction, denominator: int, rng: Generator) -> QuerySet:
        return self.make(n, epsilon, denominator, rng)


def element_generator(xs) -> QueryGenerator:
    fixed = np.asarray(xs, dtype=np.int64)
    return QueryGenerator("fixed-elements", lambda n, e, g, rng: QuerySet.elements(fixed))


def quantile_sampling_generator(count: int) -> QueryGenerator:
    def make(n, epsilon, denominator, rng):
        gs = rng.integers(1, denominator + 1, size=count, dtype=np.int64)
        return QuerySet.quantiles(gs)

    return QueryGenerator("quantile-sampling", make, "O(count) random grains")


def empty_generator() -> QueryGenerator:
    def make(n, epsilon, denominator, rng):
        return QuerySet.elements(np.empty(0, dtype=np.int64))

    return QueryGenerator("empty", make, "O(1)")


@dataclass
class VerifierConfig:
    n: int
    epsilon: Fraction
    kappa: int = 128
    generator: QueryGenerator | None = None
    amplification: int = 1
    record_payloads: bool = False
    constants: Constants | None = None

    def __post_init__(self):
        self.epsilon = Fraction(self.epsilon)
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0,1)")
        if self.amplification < 1:
            raise ValueError("amplification must be at least 1")


@dataclass
class ProbeAnswer:
    kind: int  # ProbeKind
    probe: int  # element or grain index
    element: int
    pdf_grains: int
    cdf_grains: int


@dataclass
class SessionResult:
    accept: bool
    reason: Reason
    answered: list[ProbeAnswer]
    transcript: SessionTranscript
    digest: cm.Digest | None = None
    key: cm.HashKey | None = None
    identity: IdentityResult | None = None
    verified_openings: frozenset[tuple[int, int, int]] = frozenset()

    @property
    def denominator(self) -> int | None:
        return self.digest.denominator if self.digest else None


class HonestProver:
    """Prover that commits to a fixed distribution and answers faithfully."""

    def __init__(self, q: GrainDistribution):
        self.q = q
        self.key: cm.HashKey | None = None
        self.digest: cm.Digest | None = None
        self.aux: cm.TreeAux | None = None
        self._opened: dict[int, cm.OpeningProof] = {}

    def receive_key(self, key: cm.HashKey) -> DigestMsg:
        self.key = key
        self.digest, self.aux = cm.digest(key, self.q)
        self._opened = {}
        return DigestMsg(self.digest)

    # -- opening helpers -----------------------------------------------------

    def _proof_for(self, x: int) -> cm.OpeningProof:
        p = self._opened.get(x)
        if p is None:
            p = cm.open_element(x, self.key, self.digest, self.aux)
            self._opened[x] = p
        return p

    def _quantile_elements(self, grains: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.q._cum, grains, side="left").astype(np.int64) + 1

    def resolve_queries(self, qs: QuerySet) -> np.ndarray:
        """Element answered at each probe position."""
        values = np.asarray(qs.values, dtype=np.int64)
        kinds = np.asarray(qs.kinds)
        out = values.copy()
        quant = kinds == ProbeKind.QUANTILE
        if quant.any():
            out[quant] = self._quantile_elements(values[quant])
        return out

    def answer_queries(self, qs: QuerySet) -> OpeningBatch:
        elements = self.resolve_queries(qs)
        depth = self.digest.padded_size.bit_length() - 1
        distinct, inverse = np.unique(elements, return_inverse=True)
        proofs = [self._proof_for(int(x)) for x in distinct]
        return OpeningBatch(proofs, inverse.astype(np.int64), depth)

    def backend_payload(self, select: BackendSelect) -> BackendData:
        from .argument import honest_backend_payload

        return honest_backend_payload(self, select)

    # -- extraction interface --------------------------------------------------

    def opening_run(self, run_index: int, per_run: int = 32):
        """Replayable opening oracle: run r opens a deterministic window of
        elements, cycling through the whole domain across runs."""
        if self.digest is None:
            return []
        n = self.q.n
        start = (run_index * per_run) % n
        out = []
        for i in range(min(per_run, n)):
            x = 1 + (start + i) % n
            out.append(self._proof_for(x))
        return out


class SessionRejected(Exception):
    def __init__(self, reason: Reason):
        super().__init__(reason.name)
        self.reason = reason


class VerifiedOracleSession:
    """Verifier-side session driver. Use establish(), then query_set()/backend
    exchanges, then conclude()."""

    def __init__(
        self,
        config: VerifierConfig,
        prover,
        d_sampler: DSampler,
        seed: int,
    ):
        self.config = config
        self.prover = prover
        self.d_sampler = d_sampler
        self.seed = seed
        self.cons = config.constants or get_constants()
        self.transcript = SessionTranscript(record_payloads=config.record_payloads)
        self.key: cm.HashKey | None = None
        self.digest: cm.Digest | None = None
        self.identity: IdentityResult | None = None
        self.reason: Reason = Reason.ACCEPT
        self._concluded = False
        # every (element, pdf, cdf) that passed verification this session
        self.verified_openings: set[tuple[int, int, int]] = set()

    # -- low-level exchange -----------------------------------------------------

    def _send(self, msg) -> None:
        self.transcript.log("V", msg)

    def _receive(self, msg, expected_type) -> None:
        if msg is None or not isinstance(msg, expected_type):
            raise SessionRejected(Reason.MALFORMED)
        self.transcript.log("P", msg)

    def _exchange_queries(self, qs: QuerySet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Send a QuerySet, verify the positional answers, return per-probe
        (element, pdf, cdf) arrays."""
        self._send(qs)
        self.transcript.q_probes += len(qs)
        try:
            batch = self.prover.answer_queries(qs)
        except Exception:
            raise SessionRejected(Reason.MALFORMED)
        if batch is None or not isinstance(batch, OpeningBatch):
            raise SessionRejected(Reason.MALFORMED)
        self._receive_batch(batch)
        depth = self.digest.padded_size.bit_length() - 1
        if len(batch) != len(qs) or batch.depth != depth:
            raise SessionRejected(Reason.MALFORMED)
        if len(qs) == 0:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty.copy(), empty.copy()
        if (batch.index < 0).any():  # refusal / malformed record
            raise SessionRejected(Reason.MALFORMED)
        for p in batch.proofs:
            if not cm.verify_opening(p.element, p, self.key, self.digest):
                raise SessionRejected(Reason.INVALID_OPENING)
            self.verified_openings.add((p.element, p.claimed_pdf, p.claimed_cdf))
        pe = np.asarray([p.element for p in batch.proofs], dtype=np.int64)
        ppdf = np.asarray([p.claimed_pdf for p in batch.proofs], dtype=np.int64)
        pcdf = np.asarray([p.claimed_cdf for p in batch.proofs], dtype=np.int64)
        elems = pe[batch.index]
        pdfs = ppdf[batch.index]
        cdfs = pcdf[batch.index]
        values = np.asarray(qs.values, dtype=np.int64)
        kinds = np.asarray(qs.kinds)
        is_elem = kinds == ProbeKind.ELEMENT
        if (elems[is_elem] != values[is_elem]).any():
            raise SessionRejected(Reason.INVALID_OPENING)
        is_quant = kinds == ProbeKind.QUANTILE
        if is_quant.any():
            g = values[is_quant]
            lo = cdfs[is_quant] - pdfs[is_quant]
            hi = cdfs[is_quant]
            if ((g <= lo) | (g > hi)).any():
                raise SessionRejected(Reason.QUANTILE_INVALID)
        return elems, pdfs, cdfs

    def _receive_batch(self, batch: OpeningBatch) -> None:
        try:
            self.transcript.log("P", batch)
        except Exception:  # unencodable batch (e.g. mixed proof depths)
            raise SessionRejected(Reason.MALFORMED)

    # -- phase 1 ------------------------------------------------------------------

    def establish(self) -> bool:
        """Key/digest exchange plus the interactive identity test. Returns
        False (with .reason set) on rejection."""
        cfg = self.config
        try:
            key = cm.gen(cfg.kappa, cfg.n, rng_from(self.seed, "key"))
            self.key = key
            self._send(KeyMsg(key))
            try:
                dmsg = self.prover.receive_key(key)
            except Exception:
                raise SessionRejected(Reason.MALFORMED)
            self._receive(dmsg, DigestMsg)
            d = dmsg.digest
            if (
                d.domain_size != cfg.n
                or d.denominator < 1
                or d.denominator > MAX_DENOMINATOR
                or d.padded_size < 1
                or d.padded_size & (d.padded_size - 1)
                or not d.padded_size // 2 < d.domain_size <= d.padded_size
                or d.root.mass != d.denominator
            ):
                raise SessionRejected(Reason.BAD_DIGEST)
            self.digest = d

            votes = 0
            for rep in range(cfg.amplification):
                if self._identity_round(rep):
                    votes += 1
            if 2 * votes <= cfg.amplification:
                raise SessionRejected(Reason.IDENTITY_FAIL)
            return True
        except SessionRejected as rej:
            self.reason = rej.reason
            return False

    def _identity_round(self, rep: int) -> bool:
        cfg = self.config
        g = self.digest.denominator
        run = IdentityTestRun(
            cfg.n,
            cfg.epsilon,
            rng_from(self.seed, "tail", rep),
            rng_from(self.seed, "pairs", rep),
            self.cons,
        )
        s_tail = run.s_tail
        q_grains = rng_from(self.seed, "qgrains", rep).integers(
            1, g + 1, size=s_tail, dtype=np.int64
        )
        element_probes = run.plan(self.d_sampler, rng_from(self.seed, "mix", rep))
        qs = QuerySet.concat(
            QuerySet.quantiles(q_grains), QuerySet.elements(element_probes)
        )
        elems, pdfs, cdfs = self._exchange_queries(qs)
        self.transcript.q_samples += s_tail
        q_elems = elems[:s_tail]
        q_pdfs = pdfs[:s_tail]
        res = run.complete(pdfs[s_tail:], q_elems, q_pdfs, g)
        res.counters.q_samples = s_tail
        self.identity = res
        self.transcript.d_samples = self.d_sampler.draws
        return res.accept

    # -- phase 2 ------------------------------------------------------------------

    def query_set(self, qs: QuerySet) -> list[ProbeAnswer] | None:
        """Run one query-phase batch; None means the session rejected."""
        try:
            elems, pdfs, cdfs = self._exchange_queries(qs)
        except SessionRejected as rej:
            self.reason = rej.reason
            return None
        values = np.asarray(qs.values, dtype=np.int64)
        kinds = np.asarray(qs.kinds)
        return [
            ProbeAnswer(int(k), int(v), int(e), int(p), int(c))
            for k, v, e, p, c in zip(kinds, values, elems, pdfs, cdfs)
        ]

    def backend_exchange(self, select: BackendSelect) -> BackendData | None:
        self._send(select)
        try:
            data = self.prover.backend_payload(select)
        except Exception:
            self.reason = Reason.MALFORMED
            return None
        if data is None or not isinstance(data, BackendData):
            self.reason = Reason.MALFORMED
            return None
        self.transcript.log("P", data)
        return data

    # -- conclusion ------------------------------------------------------------------

    def conclude(self, accept: bool, reason: Reason, answered=None) -> SessionResult:
        if not self._concluded:
            self._send(Verdict(accept, reason))
            self._concluded = True
        self.transcript.d_samples = self.d_sampler.draws
        return SessionResult(
            accept,
            reason,
            answered or [],
            self.transcript,
            self.digest,
            self.key,
            self.identity,
            frozenset(self.verified_openings),
        )


def run_oracle_session(
    config: VerifierConfig,
    prover,
    d_sampler: DSampler,
    seed: int,
) -> SessionResult:
    """The full oracle protocol: establish, run the generator's probes,
    output verified (probe, pdf, cdf) answers."""
    session = VerifiedOracleSession(config, prover, d_sampler, seed)
    if not session.establish():
        return session.conclude(False, session.reason)
    generator = config.generator or empty_generator()
    qs = generator.probes(
        config.n, config.epsilon, session.digest.denominator, rng_from(seed, "gen")
    )
    answered = session.query_set(qs)
    if answered is None:
        return session.conclude(False, session.reason)
    return session.conclude(True, Reason.ACCEPT, answered)
