"""General-property arguments over a committed distribution.

After the oracle session establishes a committed distribution close to the
sampled one, a proximity backend checks that the committed distribution is
close to the property. Two reference backends ship:

  full-reveal  — the prover sends the whole distribution; the verifier
                 recomputes the digest (binding it to the committed one)
                 and evaluates the property distance directly.
  spot-check   — the prover sends the sorted-grain representation string;
                 the verifier probes random blocks against verified
                 quantile openings, then decides on the sent string.

Both have linear communication; the interface accepts sublinear backends
with the same message shapes. The acceptance threshold for the committed
distance is the midpoint delta_c + (delta_f - delta_c)/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.random import Generator

from . import commitment as cm
from .constants import Constants, get_constants
from .dist import GrainDistribution
from .exactmath import frac_ceil
from .properties import GeneralProperty
from .protocol import SessionResult, VerifiedOracleSession, VerifierConfig
from .representation import (
    RepresentationString,
    build_representation,
    representation_test,
)
from .rngutil import rng_from
from .rscode import element_code
from .testers import DSampler
from .wire import BackendData, BackendSelect, QuerySet, Reason

FULL_REVEAL_ID = 1
SPOT_CHECK_ID = 2


@dataclass
class BackendOutcome:
    accept: bool
    reason: Reason
    measured: Fraction | None = None
    probe_mismatch: bool = False
    representation_ok: bool | None = None


class ProximityBackend:
    """Verifier side of a proximity check against the committed distribution.

    verify() may only learn about the committed distribution through the
    session's verified openings.
    """

    backend_id: int
    name: str

    def select_msg(self) -> BackendSelect:
        return BackendSelect(self.backend_id)

    def honest_blob(self, q: GrainDistribution) -> bytes:
        raise NotImplementedError

    def verify(
        self,
        blob: bytes,
        session: VerifiedOracleSession,
        prop: GeneralProperty,
        delta_c: Fraction,
        delta_f: Fraction,
        rng: Generator,
    ) -> BackendOutcome:
        raise NotImplementedError


def distance_threshold(delta_c: Fraction, delta_f: Fraction) -> Fraction:
    return Fraction(delta_c) + (Fraction(delta_f) - Fraction(delta_c)) / 2


class FullRevealBackend(ProximityBackend):
    backend_id = FULL_REVEAL_ID
    name = "full-reveal"

    def honest_blob(self, q: GrainDistribution) -> bytes:
        return q.to_bytes()

    def verify(self, blob, session, prop, delta_c, delta_f, rng) -> BackendOutcome:
        try:
            q = GrainDistribution.from_bytes(blob)
        except (ValueError, OverflowError):
            return BackendOutcome(False, Reason.MALFORMED)
        if q.n != session.config.n or q.grains != session.digest.denominator:
            return BackendOutcome(False, Reason.BACKEND_MISMATCH)
        recomputed, _ = cm.digest(session.key, q)
        if recomputed != session.digest:
            return BackendOutcome(False, Reason.BACKEND_MISMATCH)
        rho = (Fraction(delta_f) - Fraction(delta_c)) / 20
        delta = prop.dist(q.n, q, rho)
        ok = delta <= distance_threshold(delta_c, delta_f)
        return BackendOutcome(
            ok, Reason.ACCEPT if ok else Reason.BACKEND_REJECT, delta
        )


class SpotCheckBackend(ProximityBackend):
    """Probes k random blocks of the sent representation string against the
    committed distribution, then decides on the sent string. A string that
    disagrees with the committed representation on a fraction f of blocks
    escapes the probes with probability (1-f)^k."""

    backend_id = SPOT_CHECK_ID
    name = "spot-check"

    def __init__(self, probe_budget: int | None = None, constants: Constants | None = None):
        self.probe_budget = probe_budget
        self.cons = constants or get_constants()

    def budget(self, delta_c: Fraction, delta_f: Fraction) -> int:
        if self.probe_budget is not None:
            return self.probe_budget
        eps_prime = (Fraction(delta_f) - Fraction(delta_c)) / 20
        return frac_ceil(Fraction(self.cons.c_spot) / eps_prime)

    def honest_blob(self, q: GrainDistribution) -> bytes:
        return build_representation(q).to_bytes()

    def verify(self, blob, session, prop, delta_c, delta_f, rng) -> BackendOutcome:
        n = session.config.n
        grains = session.digest.denominator
        code = element_code(n)
        try:
            rep = RepresentationString.from_bytes(blob)
        except ValueError:
            return BackendOutcome(False, Reason.MALFORMED)
        if rep.n != n or rep.grains != grains or rep.code != code:
            return BackendOutcome(False, Reason.BACKEND_MISMATCH)
        k = self.budget(delta_c, delta_f)
        probes = rng.integers(1, grains + 1, size=k, dtype=np.int64)
        answered = session.query_set(QuerySet.quantiles(probes))
        if answered is None:
            return BackendOutcome(False, session.reason)
        table = code.encode_table(n)
        opened = table[np.asarray([a.element for a in answered], dtype=np.int64)]
        sent = rep.blocks[probes - 1]
        mismatch = bool((opened != sent).any())
        if mismatch:
            return BackendOutcome(
                False, Reason.BACKEND_MISMATCH, probe_mismatch=True
            )
        rho = (Fraction(delta_f) - Fraction(delta_c)) / 20
        ok, delta = representation_test(
            rep.blocks,
            code,
            n,
            grains,
            lambda q: prop.dist(n, q, rho),
            delta_c,
            rho,
            threshold=distance_threshold(delta_c, delta_f),
        )
        return BackendOutcome(
            ok,
            Reason.ACCEPT if ok else Reason.BACKEND_REJECT,
            delta,
            probe_mismatch=False,
            representation_ok=ok,
        )


def backend_registry() -> dict[str, type]:
    return {"full-reveal": FullRevealBackend, "spot-check": SpotCheckBackend}


def backend_by_id(backend_id: int) -> ProximityBackend:
    if backend_id == FULL_REVEAL_ID:
        return FullRevealBackend()
    if backend_id == SPOT_CHECK_ID:
        return SpotCheckBackend()
    raise ValueError(f"unknown backend id {backend_id}")


def honest_backend_payload(prover, select: BackendSelect) -> BackendData:
    backend = backend_by_id(select.backend_id)
    return BackendData(backend.honest_blob(prover.q))


@dataclass
class GeneralArgumentResult:
    accept: bool
    reason: Reason
    session: SessionResult
    backend: BackendOutcome | None = None

    @property
    def measured(self) -> Fraction | None:
        return self.backend.measured if self.backend else None


def general_argument_epsilon(delta_c: Fraction, delta_f: Fraction) -> Fraction:
    delta_c, delta_f = Fraction(delta_c), Fraction(delta_f)
    if not delta_c < delta_f:
        raise ValueError("need delta_c < delta_f")
    return (delta_f - delta_c) / 10


def run_general_argument(
    prop: GeneralProperty,
    n: int,
    delta_c: Fraction,
    delta_f: Fraction,
    d_sampler: DSampler,
    prover,
    backend: ProximityBackend,
    seed: int,
    constants: Constants | None = None,
    record_payloads: bool = False,
) -> GeneralArgumentResult:
    """Oracle-session phase 1 with honest Q = D, then the backend phase.
    Accepts iff both phases accept."""
    epsilon = general_argument_epsilon(delta_c, delta_f)
    config = VerifierConfig(
        n,
        epsilon,
        constants=constants,
        record_payloads=record_payloads,
    )
    session = VerifiedOracleSession(config, prover, d_sampler, seed)
    if not session.establish():
        return GeneralArgumentResult(
            False, session.reason, session.conclude(False, session.reason)
        )
    data = session.backend_exchange(backend.select_msg())
    if data is None:
        return GeneralArgumentResult(
            False, session.reason, session.conclude(False, session.reason)
        )
    outcome = backend.verify(
        data.blob, session, prop, delta_c, delta_f, rng_from(seed, "backend")
    )
    result = session.conclude(outcome.accept, outcome.reason)
    return GeneralArgumentResult(outcome.accept, outcome.reason, result, outcome)
