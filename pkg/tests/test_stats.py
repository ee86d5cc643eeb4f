"""Tests for distance moment formulas, tail bounds, and their MC checks."""

import math

import pytest

from btem.errors import ParameterError
from btem.stats import (
    SCENARIOS,
    expected_cross_distance,
    mc_distance_moments,
    mc_tail_exceedance,
    moments_cross_template_pair,
    moments_same_template_pair,
    moments_sample_to_fixed_point,
    moments_sample_to_own_template,
    tail_bound_own_template,
    tail_bound_pair_deviation,
    tail_bound_sample_deviation,
)


def analytic(scenario, n, q, d=None):
    if scenario == "own-template":
        return moments_sample_to_own_template(n, q)
    if scenario == "same-pair":
        return moments_same_template_pair(n, q)
    return moments_cross_template_pair(n, q, d)


class TestMomentFormulas:
    def test_own_template_hand_values(self):
        mean, var = moments_sample_to_own_template(1000, 0.1)
        assert mean == pytest.approx(100.0)
        assert var == pytest.approx(90.0)

    def test_own_template_small_q(self):
        mean, var = moments_sample_to_own_template(1000, 1e-12)
        assert mean == pytest.approx(1e-9)
        assert var == pytest.approx(1e-9, rel=1e-9)

    def test_q_range_enforced(self):
        for bad in (0.0, 0.5, -0.1, 0.7):
            with pytest.raises(ParameterError):
                moments_sample_to_own_template(1000, bad)
            with pytest.raises(ParameterError):
                moments_same_template_pair(1000, bad)

    def test_fixed_point_reduces_at_zero_distance(self):
        assert moments_sample_to_fixed_point(500, 0.2, 0) == \
            moments_sample_to_own_template(500, 0.2)

    def test_fixed_point_hand_value(self):
        mean, var = moments_sample_to_fixed_point(1000, 0.1, 500)
        assert mean == pytest.approx(100 + 500 * 0.8)
        assert var == pytest.approx(90.0)

    def test_fixed_point_d_range(self):
        with pytest.raises(ParameterError):
            moments_sample_to_fixed_point(10, 0.1, 11)
        with pytest.raises(ParameterError):
            moments_sample_to_fixed_point(10, 0.1, -1)

    def test_same_pair_hand_values(self):
        mean, var = moments_same_template_pair(1000, 0.1)
        assert mean == pytest.approx(180.0)
        # n p (1 - p) with p = 0.18
        assert var == pytest.approx(147.6)
        # equivalent factored form
        assert var == pytest.approx(2 * 1000 * 0.1 * 0.9 * (1 - 0.2 + 0.02))

    def test_cross_mean_hand_values(self):
        assert expected_cross_distance(1000, 0.1, 0) == pytest.approx(180.0)
        assert expected_cross_distance(1000, 0.1, 500) == pytest.approx(500.0)

    def test_cross_noiseless_recovers_distance(self):
        # q = 0 is legal here and the mean is exactly the template distance
        assert expected_cross_distance(1000, 0.0, 123) == 123.0
        assert moments_cross_template_pair(1000, 0.0, 123).variance == 0.0

    def test_cross_variance_matches_same_pair(self):
        same = moments_same_template_pair(800, 0.15)
        cross = moments_cross_template_pair(800, 0.15, 300)
        assert cross.variance == pytest.approx(same.variance)

    def test_cross_mean_at_zero_distance_equals_same_pair(self):
        for q in (0.01, 0.1, 0.3, 0.49):
            assert expected_cross_distance(600, q, 0) == pytest.approx(
                moments_same_template_pair(600, q).mean
            )

    def test_cross_mean_monotone_in_d(self):
        vals = [expected_cross_distance(100, 0.2, d) for d in range(0, 101, 10)]
        assert vals == sorted(vals)


class TestTailBounds:
    def test_own_template_hand_value(self):
        assert tail_bound_own_template(1000, 0.1, 2.0) == pytest.approx(
            math.exp(-100.0 / 3.0)
        )

    def test_trivial_at_lam_one(self):
        assert tail_bound_own_template(1000, 0.1, 1.0) == 1.0

    def test_lam_below_one_rejected(self):
        with pytest.raises(ParameterError):
            tail_bound_own_template(1000, 0.1, 0.9)

    def test_bounds_clip_to_probability_range(self):
        for n in (1, 10, 100, 10_000):
            for eps in (0.0, 0.01, 0.5, 2.0):
                b = tail_bound_sample_deviation(n, eps)
                assert 0.0 <= b <= 1.0
        assert tail_bound_pair_deviation(10, 0.1, 2, 0.0) == 1.0

    def test_monotone_in_deviation(self):
        vals = [tail_bound_sample_deviation(500, e) for e in (0.05, 0.1, 0.2, 0.4)]
        assert vals == sorted(vals, reverse=True)

    def test_vanishes_for_large_n(self):
        assert tail_bound_own_template(10**7, 0.1, 1.5) < 1e-100


class TestMonteCarlo:
    def test_deterministic_given_seed(self):
        a = mc_distance_moments("own-template", 64, 0.2, trials=500, seed=42)
        b = mc_distance_moments("own-template", 64, 0.2, trials=500, seed=42)
        assert a == b

    def test_seed_changes_draws(self):
        a = mc_distance_moments("own-template", 64, 0.2, trials=500, seed=1)
        b = mc_distance_moments("own-template", 64, 0.2, trials=500, seed=2)
        assert a != b

    def test_validation(self):
        with pytest.raises(ParameterError):
            mc_distance_moments("bogus", 10, 0.1)
        with pytest.raises(ParameterError):
            mc_distance_moments("own-template", 10, 0.1, trials=1)
        with pytest.raises(ParameterError):
            mc_distance_moments("cross-pair", 10, 0.1)  # d required

    def test_noiseless_pairs_have_zero_variance(self):
        m = mc_distance_moments("cross-pair", 32, 0.0, d=10, trials=100, seed=0)
        assert m.mean == 10.0
        assert m.variance == 0.0

    def test_agreement_with_analytic_formulas(self):
        # 5 sigma acceptance per scenario across independent seeds;
        # allow one excursion in the 60 checks
        n, trials, d = 200, 1500, 60
        fails = 0
        for seed in range(20):
            for scenario in SCENARIOS:
                dd = d if scenario == "cross-pair" else None
                emp = mc_distance_moments(scenario, n, 0.15, d=dd,
                                          trials=trials, seed=seed)
                ref = analytic(scenario, n, 0.15, dd)
                tol = 5.0 * math.sqrt(ref.variance / trials)
                if abs(emp.mean - ref.mean) > tol:
                    fails += 1
        assert fails <= 1

    def test_variance_agrees_loosely(self):
        ref = analytic("own-template", 300, 0.25)
        emp = mc_distance_moments("own-template", 300, 0.25,
                                  trials=20_000, seed=3)
        assert emp.variance == pytest.approx(ref.variance, rel=0.1)

    def test_tail_exceedance_below_bound(self):
        n, q, lam = 400, 0.1, 1.4
        bound = tail_bound_own_template(n, q, lam)
        for seed in range(5):
            rate = mc_tail_exceedance(n, q, lam, trials=4000, seed=seed)
            # the Chernoff bound must dominate up to MC noise
            assert rate <= bound + 5.0 * math.sqrt(bound * (1 - bound) / 4000)
