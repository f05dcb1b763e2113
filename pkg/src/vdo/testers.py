"""Identity testing against a reference-distribution oracle.

The identity tester reduces "is D equal to the committed Q" to uniformity
over a pair domain. The reference distribution is mixed half-and-half with
uniform (full support), snapped down to the grid of multiples of 1/(6N)
(granular), and each sample x is lifted to a pair (x, slot). When D equals
Q the pair stream is exactly uniform over a set of size 6N; a collision
count then separates uniform from far-from-uniform.

All probability arithmetic is exact. The oracle abstraction lets the same
code run against a local distribution or against verified openings from
the commitment protocol; only integer grain counts cross the interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.random import Generator

from .constants import Constants, get_constants
from .dist import GrainDistribution
from .exactmath import ceil_mul_sqrt, frac_ceil, round_to_unit


class RefOracle:
    """Query access to a reference distribution, in grains over a shared G.

    pdf/cdf return exact rationals; the grain variants are the hot path.
    sample() draws from the reference distribution itself.
    """

    @property
    def denominator(self) -> int:
        raise NotImplementedError

    @property
    def domain_size(self) -> int:
        raise NotImplementedError

    def pdf_grains(self, x: int) -> int:
        return int(self.pdf_grains_batch(np.asarray([x], dtype=np.int64))[0])

    def cdf_grains(self, x: int) -> int:
        raise NotImplementedError

    def pdf(self, x: int) -> Fraction:
        return Fraction(self.pdf_grains(x), self.denominator)

    def cdf(self, x: int) -> Fraction:
        return Fraction(self.cdf_grains(x), self.denominator)

    def pdf_grains_batch(self, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: Generator) -> int:
        raise NotImplementedError

    def sample_batch(self, k: int, rng: Generator) -> np.ndarray:
        return np.asarray([self.sample(rng) for _ in range(k)], dtype=np.int64)


class LocalOracle(RefOracle):
    """Oracle backed by an in-memory distribution."""

    def __init__(self, q: GrainDistribution):
        self.q = q

    @property
    def denominator(self) -> int:
        return self.q.grains

    @property
    def domain_size(self) -> int:
        return self.q.n

    def pdf_grains(self, x: int) -> int:
        return self.q.pdf_grains(x)

    def cdf_grains(self, x: int) -> int:
        return self.q.cdf_grains(x)

    def pdf_grains_batch(self, xs: np.ndarray) -> np.ndarray:
        return self.q._counts_arr[np.asarray(xs, dtype=np.int64) - 1]

    def sample(self, rng: Generator) -> int:
        return self.q.sample(rng)

    def sample_batch(self, k: int, rng: Generator) -> np.ndarray:
        return self.q.sample_batch(k, rng)


class DSampler:
    """Declared sampler for the unknown distribution; counts every draw."""

    def __init__(self, d: GrainDistribution):
        self._d = d
        self.draws = 0

    @property
    def domain_size(self) -> int:
        return self._d.n

    def draw(self, rng: Generator) -> int:
        self.draws += 1
        return self._d.sample(rng)

    def draw_batch(self, k: int, rng: Generator) -> np.ndarray:
        self.draws += k
        return self._d.sample_batch(k, rng)


# -- mixing and granularization ------------------------------------------------


def mix_half_uniform_pdf(oracle: RefOracle, x: int) -> Fraction:
    """pdf of x under the half-uniform mixture: pdf(x)/2 + 1/(2N)."""
    n = oracle.domain_size
    return Fraction(oracle.pdf_grains(x), 2 * oracle.denominator) + Fraction(1, 2 * n)


def mixed_sample(d_sampler: DSampler, n: int, rng: Generator) -> int:
    """One draw from the half-uniform mixture of the unknown distribution."""
    if rng.integers(0, 2) == 0:
        return d_sampler.draw(rng)
    return int(rng.integers(1, n + 1))


def mixed_sample_batch(d_sampler: DSampler, n: int, k: int, rng: Generator) -> np.ndarray:
    coins = rng.integers(0, 2, size=k)
    take = int(coins.sum())
    out = rng.integers(1, n + 1, size=k, dtype=np.int64)
    if take:
        out[coins == 1] = d_sampler.draw_batch(take, rng)
    return out


def granularity_ratio(q_prime_x: Fraction, m: int) -> Fraction:
    """Ratio by which a mixture probability shrinks onto the 1/m grid:
    floor(p*m)/(m*p). Equals 1 exactly when p is a multiple of 1/m."""
    q_prime_x = Fraction(q_prime_x)
    if q_prime_x <= 0:
        raise ValueError("mixture probability must be positive")
    floored = (q_prime_x * m).numerator // (q_prime_x * m).denominator
    return Fraction(floored, 1) / (m * q_prime_x)


def _slot_counts(pdf_grains: np.ndarray, n: int, grains: int) -> np.ndarray:
    """slots(x) = floor(6N * mixed_pdf(x)) = floor(3*(N*c + G)/G), exact in int64
    for N*G below 2^61; falls back to object math above that."""
    c = np.asarray(pdf_grains, dtype=np.int64)
    if n * grains < (1 << 61):
        return (3 * (n * c + grains)) // grains
    big = 3 * (n * c.astype(object) + grains)
    return np.asarray([int(v) // grains for v in big], dtype=np.int64)


@dataclass
class GranularizedView:
    """Granular reduction parameters for one reference distribution.

    m = 6N slots in total; element x keeps slots(x) = floor(m * mixed_pdf(x))
    of them and the remainder collects in an overflow element N+1 whose slot
    count is only known up to the tail estimate.
    """

    n: int
    grains: int
    tail_slots: int  # estimated slots of the overflow element, in [0, m]
    tail_exact: bool = False

    @property
    def m(self) -> int:
        return 6 * self.n

    @property
    def tail_estimate(self) -> Fraction:
        return Fraction(self.tail_slots, self.m)

    def slots(self, pdf_grains: int) -> int:
        if not 0 <= pdf_grains <= self.grains:
            raise ValueError("pdf grains out of range")
        return int(_slot_counts(np.asarray([pdf_grains]), self.n, self.grains)[0])

    def theta(self, pdf_grains: int) -> Fraction:
        """Keep-probability of an element with the given reference pdf."""
        return Fraction(
            self.slots(pdf_grains) * self.grains,
            3 * (self.n * pdf_grains + self.grains),
        )


def exact_tail_slots(pdf_grains_all: np.ndarray, n: int, grains: int) -> int:
    """Overflow slot count m - sum_x slots(x), exact from all N pdf values."""
    slots = _slot_counts(pdf_grains_all, n, grains)
    return 6 * n - int(slots.sum())


def estimate_tail_mass(oracle: RefOracle, s: int, rng: Generator) -> Fraction:
    """Estimate the granularization overflow mass, rounded to the 1/m grid.

    Draws s samples from the half-uniform mixture (a fair coin picks an
    oracle sample or a uniform element) and averages 1 - theta over them;
    the average is clamped to [0,1] and rounded to the nearest multiple of
    1/m. When s is at least N the estimate is replaced by the exact overflow
    mass computed from all N probabilities, which the same query budget
    affords.
    """
    n = oracle.domain_size
    g = oracle.denominator
    m = 6 * n
    if s < 1:
        raise ValueError("sample budget must be positive")
    if s >= n:
        all_pdf = oracle.pdf_grains_batch(np.arange(1, n + 1, dtype=np.int64))
        return Fraction(exact_tail_slots(all_pdf, n, g), m)
    coins = rng.integers(0, 2, size=s)
    take = int(coins.sum())
    xs = rng.integers(1, n + 1, size=s, dtype=np.int64)
    if take:
        xs[coins == 1] = oracle.sample_batch(take, rng)
    pdfs = oracle.pdf_grains_batch(xs)
    # sum of (1 - theta) grouped by distinct pdf value keeps the rationals small
    acc = Fraction(0)
    vals, cnts = np.unique(pdfs, return_counts=True)
    slots = _slot_counts(vals, n, g)
    for c, cnt, sl in zip(vals.tolist(), cnts.tolist(), slots.tolist()):
        denom = 3 * (n * int(c) + g)
        acc += cnt * Fraction(denom - int(sl) * g, denom)
    est = acc / s
    est = min(max(est, Fraction(0)), Fraction(1))
    return round_to_unit(est, m)


def pair_map(x: int, view: GranularizedView, rng: Generator, pdf_grains: int | None = None) -> tuple[int, int]:
    """Lift an element of the granular distribution to a pair (x, slot).

    Over x drawn from the granular distribution the output is uniform on a
    set of size m. x = N+1 uses the (estimated) overflow slot count;
    an estimate of zero degenerates to slot 1.
    """
    if x == view.n + 1:
        m_x = max(1, view.tail_slots)
    else:
        if pdf_grains is None:
            raise ValueError("pdf grain count required for in-range elements")
        m_x = view.slots(pdf_grains)
        if m_x == 0:
            raise ArithmeticError("sampled element has zero slots; corrupt input")
    return x, 1 + int(rng.integers(0, m_x))


# -- uniformity test -------------------------------------------------------------


@dataclass
class UniformityResult:
    accept: bool
    samples: int
    collisions: int
    statistic: Fraction
    threshold: Fraction


def uniformity_sample_budget(m: int, epsilon: Fraction, constants: Constants | None = None) -> int:
    c = (constants or get_constants()).c_unif
    return ceil_mul_sqrt(Fraction(c) / (Fraction(epsilon) ** 2), m)


def uniformity_test(samples, m: int, epsilon: Fraction) -> UniformityResult:
    """Collision-count uniformity test over a domain of size m.

    Accepts iff the fraction of colliding pairs is at most (1 + eps^2/2)/m.
    Samples may be any hashable values or an integer-encoded array.
    """
    epsilon = Fraction(epsilon)
    arr = np.asarray(samples)
    s = arr.shape[0]
    if s < 2:
        raise ValueError("need at least two samples")
    if arr.ndim == 2:  # pair rows -> single integer key
        arr = arr[:, 0].astype(np.int64) * (int(arr[:, 1].max()) + 1) + arr[:, 1]
    _, cnt = np.unique(arr, return_counts=True)
    cnt = cnt[cnt > 1]
    collisions = int((cnt * (cnt - 1) // 2).sum())
    total_pairs = s * (s - 1) // 2
    stat = Fraction(collisions, total_pairs)
    threshold = (1 + epsilon**2 / 2) / m
    return UniformityResult(stat <= threshold, s, collisions, stat, threshold)


# -- identity test ----------------------------------------------------------------


@dataclass
class IdentityCounters:
    d_samples: int = 0
    q_element_queries: int = 0
    q_samples: int = 0


@dataclass
class IdentityResult:
    accept: bool
    uniformity: UniformityResult | None
    tail: Fraction | None
    counters: IdentityCounters = field(default_factory=IdentityCounters)


def identity_d_budget(n: int, epsilon: Fraction, constants: Constants | None = None) -> int:
    """D-sample budget: ceil(c_id * sqrt(6(N+1)) * (3/eps)^2), exactly."""
    c = (constants or get_constants()).c_id
    eps = Fraction(epsilon)
    return ceil_mul_sqrt(Fraction(c) * Fraction(9) / (eps * eps), 6 * (n + 1))


def tail_sample_budget(epsilon: Fraction, constants: Constants | None = None) -> int:
    c = (constants or get_constants()).c_tail
    eps = Fraction(epsilon)
    return frac_ceil(Fraction(c) / (eps**4))


def check_epsilon(n: int, epsilon: Fraction, constants: Constants | None = None) -> None:
    cons = constants or get_constants()
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise ValueError("distance parameter must lie in (0,1)")
    # soft sanity floor ~ N^(-1/4): eps^4 * N must exceed coeff^4
    coeff = cons.eps_floor_coeff
    if eps**4 * n <= coeff**4:
        raise ValueError(
            f"distance parameter {eps} too small for domain {n} "
            f"(floor ~ {coeff}/N^(1/4))"
        )


class IdentityTestRun:
    """One identity-test execution, split into plan and completion.

    plan() fixes every probe before any reference answer is consumed, so a
    protocol can ship all probes in one batch: the element-probe list is
    [uniform tail draws | exact-tail sweep | mixed D-samples]. complete()
    consumes positional pdf answers plus the step-1 quantile samples (with
    their pdfs) and produces the verdict.
    """

    def __init__(
        self,
        n: int,
        epsilon: Fraction,
        rng_tail: Generator,
        rng_pairs: Generator,
        constants: Constants | None = None,
    ):
        self.n = n
        self.epsilon = Fraction(epsilon)
        self.cons = constants or get_constants()
        check_epsilon(n, self.epsilon, self.cons)
        self.rng_tail = rng_tail
        self.rng_pairs = rng_pairs
        self.s_tail = tail_sample_budget(self.epsilon, self.cons)
        self.s_d = identity_d_budget(n, self.epsilon, self.cons)
        self.tail_exact = self.s_tail >= n
        self._planned = False

    def plan(self, d_sampler: DSampler, rng_mix: Generator) -> np.ndarray:
        """Element-probe list; consumes exactly s_d draws from the sampler."""
        n = self.n
        if self.tail_exact:
            tail_xs = np.arange(1, n + 1, dtype=np.int64)
            self._tail_uniform = np.empty(0, dtype=np.int64)
            self._tail_coins = None
        else:
            coins = self.rng_tail.integers(0, 2, size=self.s_tail)
            self._tail_coins = coins
            self._tail_uniform = self.rng_tail.integers(
                1, n + 1, size=int((coins == 0).sum()), dtype=np.int64
            )
            tail_xs = self._tail_uniform
        self._mixed = mixed_sample_batch(d_sampler, n, self.s_d, rng_mix)
        self._tail_probe_count = tail_xs.shape[0]
        self._planned = True
        return np.concatenate([tail_xs, self._mixed])

    def complete(
        self,
        probe_pdfs: np.ndarray,
        q_sample_elements: np.ndarray,
        q_sample_pdfs: np.ndarray,
        grains: int,
    ) -> IdentityResult:
        """Finish the test from positional pdf answers (grain counts)."""
        if not self._planned:
            raise RuntimeError("plan() must run first")
        n, m = self.n, 6 * self.n
        probe_pdfs = np.asarray(probe_pdfs, dtype=np.int64)
        k = self._tail_probe_count
        tail_pdfs, mixed_pdfs = probe_pdfs[:k], probe_pdfs[k:]

        counters = IdentityCounters(
            d_samples=self.s_d,
            q_element_queries=int(probe_pdfs.shape[0]),
            q_samples=int(q_sample_elements.shape[0]),
        )

        if self.tail_exact:
            tail_slots = exact_tail_slots(tail_pdfs, n, grains)
            tail = Fraction(tail_slots, m)
        else:
            tail = self._sampled_tail(
                tail_pdfs, q_sample_elements, q_sample_pdfs, grains
            )
            tail_slots = int(tail * m)
        view = GranularizedView(n, grains, tail_slots, self.tail_exact)

        # granular filter: keep x with probability theta(x), else overflow
        slots = _slot_counts(mixed_pdfs, n, grains)
        denom = 3 * (n * mixed_pdfs.astype(np.int64) + grains)
        keep_num = slots * grains
        u = self.rng_pairs.integers(0, denom)
        kept = u < keep_num
        elements = np.where(kept, self._mixed, n + 1)
        slot_bound = np.where(kept, slots, max(1, tail_slots))
        pair_slot = 1 + self.rng_pairs.integers(0, slot_bound)
        keys = elements * np.int64(m + 2) + pair_slot

        unif = uniformity_test(keys, m, self.epsilon / 3)
        return IdentityResult(unif.accept, unif, tail, counters)

    def _sampled_tail(
        self,
        uniform_pdfs: np.ndarray,
        q_sample_elements: np.ndarray,
        q_sample_pdfs: np.ndarray,
        grains: int,
    ) -> Fraction:
        """Monte Carlo tail estimate mixing oracle samples with uniform draws."""
        coins = self._tail_coins
        n, m = self.n, 6 * self.n
        need = int((coins == 1).sum())
        if need > q_sample_elements.shape[0]:
            raise ValueError("not enough reference samples for the tail estimate")
        pdfs = np.empty(self.s_tail, dtype=np.int64)
        pdfs[coins == 0] = uniform_pdfs
        pdfs[coins == 1] = q_sample_pdfs[:need]
        acc = Fraction(0)
        vals, cnts = np.unique(pdfs, return_counts=True)
        slots = _slot_counts(vals, n, grains)
        for c, cnt, sl in zip(vals.tolist(), cnts.tolist(), slots.tolist()):
            denom = 3 * (n * int(c) + grains)
            acc += cnt * Fraction(denom - int(sl) * grains, denom)
        est = acc / self.s_tail
        est = min(max(est, Fraction(0)), Fraction(1))
        return round_to_unit(est, m)


def identity_test(
    oracle: RefOracle,
    d_sampler: DSampler,
    n: int,
    epsilon: Fraction,
    rng: Generator,
    constants: Constants | None = None,
) -> IdentityResult:
    """Standalone identity test: accept when D equals the reference, reject
    w.h.p. when their TV distance exceeds epsilon. Draws its reference
    samples directly from the oracle."""
    from .rngutil import rng_from

    seed = int(rng.integers(0, 1 << 62))
    run = IdentityTestRun(
        n,
        epsilon,
        rng_from(seed, "tail"),
        rng_from(seed, "pairs"),
        constants,
    )
    probes = run.plan(d_sampler, rng_from(seed, "mix"))
    probe_pdfs = oracle.pdf_grains_batch(probes)
    if run.tail_exact:
        q_elems = np.empty(0, dtype=np.int64)
        q_pdfs = np.empty(0, dtype=np.int64)
    else:
        q_elems = oracle.sample_batch(run.s_tail, rng_from(seed, "qsamples"))
        q_pdfs = oracle.pdf_grains_batch(q_elems)
    res = run.complete(probe_pdfs, q_elems, q_pdfs, oracle.denominator)
    res.counters.q_samples = 0 if run.tail_exact else run.s_tail
    return res
