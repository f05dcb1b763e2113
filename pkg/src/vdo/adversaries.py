"""Scripted cheating provers for empirical soundness measurement.

Scripts are deterministic given their seed, implement the prover responder
interface, and expose the replayable opening oracle the extractor needs.
They measure soundness against fixed strategies; no collision search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import commitment as cm
from .dist import GrainDistribution
from .protocol import HonestProver
from .rngutil import rng_from
from .wire import BackendData, BackendSelect, OpeningBatch, QuerySet


class AdversaryScript(HonestProver):
    """Base: honest behavior plus a strategy label; subclasses deviate."""

    strategy = "honest"

    def __init__(self, q: GrainDistribution, seed: int = 0):
        super().__init__(q)
        self.seed = seed
        self._calls = 0

    def describe(self) -> str:
        return self.strategy


class FarCommitAdversary(AdversaryScript):
    """Commits to its own distribution and answers honestly from it.

    Cheats only in the choice of committed distribution; every opening
    verifies, so rejection must come from the testing layers.
    """

    strategy = "far-commit"


def far_commit_adversary(q_far: GrainDistribution, seed: int = 0) -> FarCommitAdversary:
    return FarCommitAdversary(q_far, seed)


class InconsistentOpeningAdversary(AdversaryScript):
    """Perturbs claimed pdf values without recomputing the tree.

    Each answered position is flipped independently with probability
    flip_prob (the claimed pdf is bumped by one grain, path untouched), so
    any flipped opening fails verification.
    """

    strategy = "inconsistent-opening"

    def __init__(self, q: GrainDistribution, flip_prob, seed: int = 0):
        super().__init__(q, seed)
        from fractions import Fraction

        self.flip_prob = Fraction(flip_prob)
        if not 0 <= self.flip_prob <= 1:
            raise ValueError("flip probability out of range")

    def _flip_mask(self, count: int, stream: str) -> np.ndarray:
        rng = rng_from(self.seed, "flip", stream, self._calls)
        self._calls += 1
        p = self.flip_prob
        draws = rng.integers(0, p.denominator, size=count)
        return draws < p.numerator

    def _perturb(self, proof: cm.OpeningProof) -> cm.OpeningProof:
        bump = proof.claimed_pdf + 1
        return cm.OpeningProof(proof.element, bump, proof.claimed_cdf + 1, proof.path)

    def answer_queries(self, qs: QuerySet) -> OpeningBatch:
        batch = super().answer_queries(qs)
        mask = self._flip_mask(len(batch), "answers")
        if not mask.any():
            return batch
        proofs = list(batch.proofs)
        index = batch.index.copy()
        for i in np.nonzero(mask)[0]:
            j = int(index[i])
            perturbed = self._perturb(proofs[j])
            index[i] = len(proofs)
            proofs.append(perturbed)
        return OpeningBatch(proofs, index, batch.depth)

    def opening_run(self, run_index: int, per_run: int = 32):
        proofs = super().opening_run(run_index, per_run)
        mask = self._flip_mask(len(proofs), f"run{run_index}")
        return [
            self._perturb(p) if flip else p for p, flip in zip(proofs, mask)
        ]


class SelectiveRefusalAdversary(AdversaryScript):
    """Honest except that openings for a blocked element set are refused
    (a zeroed record in the batch, which the verifier treats as malformed)."""

    strategy = "selective-refusal"

    def __init__(self, q: GrainDistribution, blocked, seed: int = 0):
        super().__init__(q, seed)
        self.blocked = frozenset(int(x) for x in blocked)

    def answer_queries(self, qs: QuerySet) -> OpeningBatch:
        batch = super().answer_queries(qs)
        if not self.blocked:
            return batch
        elements = np.asarray([p.element for p in batch.proofs], dtype=np.int64)
        refuse = np.isin(elements, np.asarray(sorted(self.blocked), dtype=np.int64))
        if not refuse.any():
            return batch
        index = batch.index.copy()
        index[refuse[batch.index]] = -1
        return OpeningBatch(batch.proofs, index, batch.depth)

    def opening_run(self, run_index: int, per_run: int = 32):
        return [
            p
            for p in super().opening_run(run_index, per_run)
            if p.element not in self.blocked
        ]


class BackendSwapAdversary(AdversaryScript):
    """Runs the commitment phase honestly but computes the backend payload
    from a different distribution than the committed one."""

    strategy = "backend-swap"

    def __init__(self, commit_q: GrainDistribution, reveal_q: GrainDistribution, seed: int = 0):
        super().__init__(commit_q, seed)
        self.reveal_q = reveal_q

    def backend_payload(self, select: BackendSelect) -> BackendData:
        from .argument import backend_by_id

        return BackendData(backend_by_id(select.backend_id).honest_blob(self.reveal_q))


@dataclass(frozen=True)
class AdversarySpec:
    """Declarative adversary description, constructible inside workers."""

    strategy: str
    params: tuple = ()

    def build(self, q: GrainDistribution, seed: int) -> AdversaryScript:
        return build_adversary(self.strategy, q, seed, *self.params)


def build_adversary(strategy: str, q: GrainDistribution, seed: int, *params) -> AdversaryScript:
    if strategy == "honest":
        return AdversaryScript(q, seed)
    if strategy == "far-commit":
        return FarCommitAdversary(q, seed)
    if strategy == "inconsistent-opening":
        (flip_prob,) = params
        return InconsistentOpeningAdversary(q, flip_prob, seed)
    if strategy == "selective-refusal":
        (blocked,) = params
        return SelectiveRefusalAdversary(q, blocked, seed)
    if strategy == "backend-swap":
        (reveal_q,) = params
        return BackendSwapAdversary(q, reveal_q, seed)
    raise ValueError(f"unknown adversary strategy: {strategy}")


def adversary_registry() -> tuple[str, ...]:
    return (
        "honest",
        "far-commit",
        "inconsistent-opening",
        "selective-refusal",
        "backend-swap",
    )
