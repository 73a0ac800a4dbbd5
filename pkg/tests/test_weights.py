"""Tests for distribution-shift weight construction."""

import numpy as np
import pytest

from limitcurves.data import PolicySpec, TrialDataset, TrialDesign
from limitcurves.weights import (
    action_probability_ratios,
    bounded_weight_arrays,
    bounded_weights,
    policy_ratio,
)


class TestPolicyRatio:
    def test_treat_all_uniform_binary(self):
        design = TrialDesign.uniform(2)
        policy = PolicySpec.constant(1)
        assert policy_ratio(policy, design, [0.0], 1) == 2.0
        assert policy_ratio(policy, design, [0.0], 0) == 0.0

    def test_policy_equals_design(self):
        design = TrialDesign.uniform(3)
        policy = PolicySpec.uniform()
        for a in range(3):
            assert policy_ratio(policy, design, [0.0], a) == 1.0

    def test_matched_strategy_is_one(self):
        design = TrialDesign.uniform(2)
        policy = PolicySpec.constant(1)
        assert policy_ratio(policy, design, [0.0], 0, split_strategy="matched") == 1.0
        assert policy_ratio(policy, design, [0.0], 1, split_strategy="matched") == 1.0

    def test_out_of_range_action(self):
        with pytest.raises(ValueError):
            policy_ratio(PolicySpec.uniform(), TrialDesign.uniform(2), [0.0], 2)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(0)
        m = 25
        trial = TrialDataset(
            rng.normal(size=(m, 2)), rng.integers(0, 2, m), rng.normal(size=m), 2
        )
        design = TrialDesign([0.25, 0.75])
        policy = PolicySpec.constant(1)
        ratios = action_probability_ratios(policy, design, trial)
        for i in range(m):
            assert ratios[i] == policy_ratio(policy, design, trial.x[i], int(trial.actions[i]))


class TestBoundedWeights:
    def test_calibrated_identity(self):
        pair = bounded_weights(1.0, 1.0, 1.0)
        assert pair.lower == 1.0 and pair.upper == 1.0

    def test_hand_case(self):
        pair = bounded_weights(2.0, 2.0, 2.0)
        assert pair.lower == 2.0 and pair.upper == 8.0

    def test_zero_ratio(self):
        pair = bounded_weights(3.0, 0.0, 2.0)
        assert pair.lower == 0.0 and pair.upper == 0.0

    def test_rejects_nonpositive_odds(self):
        with pytest.raises(ValueError):
            bounded_weights(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            bounded_weights(-1.0, 1.0, 1.0)

    def test_rejects_gamma_below_one(self):
        with pytest.raises(ValueError):
            bounded_weights(1.0, 1.0, 0.5)

    def test_gamma_squared_links_bounds(self):
        # exact with a dyadic factor, tight numerically otherwise
        pair = bounded_weights(1.7, 0.9, 2.0)
        assert pair.lower * 4.0 == pair.upper
        pair = bounded_weights(1.7, 0.9, 1.9)
        assert pair.lower * 1.9**2 == pytest.approx(pair.upper, rel=1e-12)

    def test_monotone_in_gamma(self):
        rng = np.random.default_rng(1)
        odds = rng.lognormal(0.0, 1.0, 50)
        ratios = rng.random(50) * 2
        prev_low, prev_up = bounded_weight_arrays(odds, ratios, 1.0)
        for gamma in (1.5, 2.0, 4.0):
            low, up = bounded_weight_arrays(odds, ratios, gamma)
            assert np.all(low <= prev_low + 1e-15)
            assert np.all(up >= prev_up - 1e-15)
            prev_low, prev_up = low, up

    def test_array_alignment_checked(self):
        with pytest.raises(ValueError):
            bounded_weight_arrays(np.ones(3), np.ones(4), 1.0)
