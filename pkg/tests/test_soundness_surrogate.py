"""Empirical soundness surrogates: whenever an adversarial session accepts,
the distribution extracted from the digest is close to the sampled one and
consistent with every verified answer."""

from fractions import Fraction as F

from vdo.adversaries import FarCommitAdversary
from vdo.argument import FullRevealBackend, distance_threshold, run_general_argument
from vdo.commitment import extract
from vdo.dist import random_distribution, shift_mass, tv_distance, uniform
from vdo.properties import make_fixed_target
from vdo.protocol import VerifierConfig, empty_generator, run_oracle_session
from vdo.rngutil import rng_from
from vdo.testers import DSampler

N = 64
EPS = F(1, 2)


def test_accepting_sessions_have_close_extraction():
    # far-commit at several committed distances; every accepting session's
    # extracted distribution must lie within eps + slack of D (slack = the
    # tester's resolution, eps/2 here)
    d = uniform(N)
    accepted = 0
    for i, delta in enumerate((F(0), F(1, 8), F(1, 4), F(3, 4))):
        q = shift_mass(d, delta, rng_from(i, "q")) if delta else d
        for s in range(15):
            adv = FarCommitAdversary(q, seed=s)
            cfg = VerifierConfig(N, EPS, generator=empty_generator())
            res = run_oracle_session(cfg, adv, DSampler(d), seed=1000 * i + s)
            if not res.accept:
                continue
            accepted += 1
            adv2 = FarCommitAdversary(q, seed=s)
            adv2.receive_key(res.key)
            report = extract(adv2, res.key, res.digest, eta=1)
            measured = tv_distance(d, report.distribution)
            assert measured <= EPS + EPS / 2
            for x, pdf, cdf in res.verified_openings:
                assert pdf == report.distribution.pdf_grains(x)
                assert cdf == report.distribution.cdf_grains(x)
    assert accepted > 0  # the near cases must produce accepting sessions


def test_accepting_general_argument_bounds_property_distance():
    # in accepting runs of the general argument, the revealed (and by the
    # digest check, committed) distribution sits below the decision
    # threshold and close to D
    n = 64
    target = random_distribution(n, rng_from(5, "T"), grains=n * n * 5)
    prop = make_fixed_target(target)
    dc, df = F(0), F(3, 5)
    accepted = 0
    for s in range(10):
        d = shift_mass(target, F(1, 5), rng_from(s, "d"))
        res = run_general_argument(
            prop, n, dc, df, DSampler(d), FarCommitAdversary(d, seed=s),
            FullRevealBackend(), seed=s,
        )
        if res.accept:
            accepted += 1
            assert res.measured is not None
            assert res.measured <= distance_threshold(dc, df)
    assert accepted > 0
