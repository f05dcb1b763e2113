from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vdo.dist import (
    BucketHistogram,
    GrainDistribution,
    bucket_index,
    default_grains,
    exact_histogram,
    element_buckets,
    from_weights,
    num_buckets,
    point_mass,
    quantile,
    random_distribution,
    tv_distance,
    uniform,
)
from vdo.rngutil import rng_from

from conftest import bucket_oracle, tv_oracle


def small_dists(max_n=5, max_g=12):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_n))
        g = draw(st.integers(1, max_g))
        cuts = sorted(draw(st.lists(st.integers(0, g), min_size=n - 1, max_size=n - 1)))
        bounds = [0] + cuts + [g]
        return GrainDistribution(n, g, [bounds[i + 1] - bounds[i] for i in range(n)])

    return build()


class TestConstruction:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            GrainDistribution(2, 4, (1, 2))  # does not sum to G
        with pytest.raises(ValueError):
            GrainDistribution(2, 4, (5, -1))
        with pytest.raises(ValueError):
            GrainDistribution(0, 4, ())

    def test_default_grains_at_least_n_squared(self):
        for n in (2, 3, 100, 1000, 1024):
            assert default_grains(n) >= n * n
        assert default_grains(4) == 16

    def test_serialization_roundtrip(self, small_dist):
        blob = small_dist.to_bytes()
        assert len(blob) == 16 + 8 * 4
        assert GrainDistribution.from_bytes(blob) == small_dist
        assert int.from_bytes(blob[:8], "little") == 4  # N first, little-endian


class TestTV:
    def test_identity(self, small_dist):
        assert tv_distance(small_dist, small_dist) == 0

    def test_disjoint(self):
        assert tv_distance(point_mass(2, 1, 4), point_mass(2, 2, 4)) == 1

    def test_direct_value(self):
        p = GrainDistribution(2, 2, (1, 1))
        q = GrainDistribution(2, 4, (1, 3))
        assert tv_distance(p, q) == F(1, 4)

    def test_domain_mismatch(self):
        with pytest.raises(ValueError):
            tv_distance(uniform(2, 4), uniform(3, 6))

    @given(small_dists(), small_dists(), small_dists())
    @settings(max_examples=150, deadline=None)
    def test_metric_axioms(self, a, b, c):
        if not (a.n == b.n == c.n):
            return
        dab = tv_distance(a, b)
        assert dab == tv_distance(b, a)
        assert (dab == 0) == (a.probabilities() == b.probabilities())
        assert dab <= tv_distance(a, c) + tv_distance(c, b)

    @given(small_dists(), small_dists())
    @settings(max_examples=100, deadline=None)
    def test_matches_direct_definition(self, a, b):
        if a.n != b.n:
            return
        assert tv_distance(a, b) == tv_oracle(a, b)


class TestCdfQuantile:
    def test_cdf_examples(self, small_dist):
        assert small_dist.cdf(2) == F(8, 16)
        assert small_dist.cdf(4) == 1
        assert small_dist.cdf(3) == F(16, 16)
        with pytest.raises(ValueError):
            small_dist.cdf(5)

    def test_quantile_examples(self, small_dist):
        assert quantile(small_dist, F(5, 16)) == 2
        assert quantile(small_dist, F(1)) == 3  # last positive-mass element
        assert quantile(small_dist, F(4, 16)) == 1  # boundary hits cdf exactly
        with pytest.raises(ValueError):
            quantile(small_dist, F(0))
        with pytest.raises(ValueError):
            quantile(small_dist, F(17, 16))

    @given(small_dists())
    @settings(max_examples=100, deadline=None)
    def test_quantile_cdf_consistency(self, d):
        # for every positive-mass x, any mass inside its grain run maps back to x
        for x in range(1, d.n + 1):
            if d.pdf_grains(x) == 0:
                continue
            lo = d.cdf(x) - d.pdf(x)
            for num in (1, d.pdf_grains(x)):
                mu = lo + F(num, d.grains)
                assert d.quantile(mu) == x

    @given(small_dists())
    @settings(max_examples=50, deadline=None)
    def test_quantile_never_returns_zero_mass(self, d):
        for g in range(1, d.grains + 1):
            assert d.pdf_grains(d.quantile_grain(g)) > 0


class TestSampling:
    def test_point_mass_always_atom(self, rng):
        d = point_mass(8, 5)
        assert all(d.sample(rng) == 5 for _ in range(50))

    def test_fixed_seed_reproducible(self):
        d = random_distribution(32, rng_from(1, "d"))
        a = d.sample_batch(100, rng_from(9, "s")).tolist()
        b = d.sample_batch(100, rng_from(9, "s")).tolist()
        assert a == b

    def test_uniform_frequencies_within_5_sigma(self):
        n, draws = 16, 100_000
        d = uniform(n)
        xs = d.sample_batch(draws, rng_from(3, "u"))
        counts = np.bincount(xs - 1, minlength=n)
        mean = draws / n
        sigma = (draws * (1 / n) * (1 - 1 / n)) ** 0.5
        assert (np.abs(counts - mean) <= 5 * sigma).all()

    def test_chi_square_marginal(self):
        from scipy.stats import chisquare

        n, draws = 64, 100_000
        d = random_distribution(n, rng_from(8, "chi"))
        xs = d.sample_batch(draws, rng_from(8, "draws"))
        counts = np.bincount(xs - 1, minlength=n)
        expected = np.array([c / d.grains * draws for c in d.counts])
        keep = expected > 0
        _, pval = chisquare(counts[keep], expected[keep] * counts[keep].sum() / expected[keep].sum())
        assert pval > 1e-3


class TestBuckets:
    def test_below_floor_goes_to_zero(self):
        assert bucket_index(F(4, 1000), F(1, 2), 100) == 0

    def test_interval_example(self):
        # 0.005 * 1.5^3 = 0.016875 <= 0.02 < 0.0253125
        assert bucket_index(F(2, 100), F(1, 2), 100) == 3

    def test_prob_one_is_highest_bucket(self):
        for tau, n in ((F(1, 2), 100), (F(1, 5), 4), (F(1, 10), 64)):
            assert bucket_index(F(1), tau, n) == num_buckets(tau, n) - 1

    def test_boundary_tau_over_n(self):
        # exactly tau/N lands in the first interval, which is bucket 0
        assert bucket_index(F(1, 200), F(1, 2), 100) == 0

    @given(
        st.integers(1, 40),
        st.fractions(min_value=F(1, 100), max_value=F(99, 100)),
        st.integers(2, 64),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_literal_scan(self, num, tau, n):
        prob = F(num, 40)
        if prob > 1:
            return
        assert bucket_index(prob, tau, n) == bucket_oracle(prob, tau, n)

    @given(small_dists(), st.fractions(min_value=F(1, 10), max_value=F(4, 5)))
    @settings(max_examples=60, deadline=None)
    def test_partition(self, d, tau):
        # every element maps to exactly one bucket and ids stay in range
        buckets = element_buckets(d, tau)
        assert buckets.shape[0] == d.n
        assert (buckets >= 0).all()
        assert (buckets < num_buckets(tau, d.n)).all()


class TestExactHistogram:
    def test_uniform_single_bucket(self):
        h = exact_histogram(uniform(64), F(1, 10))
        nonzero = [m for m in h.masses if m > 0]
        assert nonzero == [F(1)]

    def test_point_mass_top_bucket(self):
        h = exact_histogram(point_mass(64, 7), F(1, 10))
        assert h.masses[-1] == 1

    def test_small_case_matches_per_element_assignment(self):
        d = GrainDistribution(4, 16, (4, 4, 8, 0))
        tau = F(1, 2)
        h = exact_histogram(d, tau)
        expected = [F(0)] * num_buckets(tau, 4)
        for x in range(1, 5):
            expected[bucket_oracle(d.pdf(x), tau, 4)] += d.pdf(x)
        assert list(h.masses) == expected

    @given(small_dists(), st.fractions(min_value=F(1, 10), max_value=F(4, 5)))
    @settings(max_examples=60, deadline=None)
    def test_masses_sum_to_one(self, d, tau):
        assert sum(exact_histogram(d, tau).masses) == 1


class TestFromWeights:
    def test_exact_when_divisible(self):
        d = from_weights(4, [1, 1, 1, 1], 16)
        assert d.counts == (4, 4, 4, 4)

    def test_rounding_preserves_total(self):
        d = from_weights(3, [1, 1, 1], 16)
        assert sum(d.counts) == 16
