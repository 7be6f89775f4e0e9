"""Tests for the closed-form predictors, exact recurrences, and statistics.

Expected values come from independent oracles: exact enumeration over all
proposer sequences (computed with Fraction arithmetic and frozen below),
the exact one-step moment recurrence, and the closed-form heritage of the
proposer-takes-all fraction (beta-shaped limit with variance scaling
n/(n+a+b), itself cross-checked against the recurrence).
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stakesim import (
    BetaParams,
    ExperimentConfig,
    Regime,
    beta_limit_params,
    constant_matrix,
    custom_matrix,
    empirical_stats,
    exact_stake_moments,
    frd_matrix,
    ks_distance,
    limiting_mean_fraction,
    predict,
    predict_fraction,
    predict_mean_stake,
    predict_var_stake,
    run_experiment,
)
from stakesim.errors import (
    DegenerateBeta,
    DegenerateDenominator,
    InsufficientSamples,
    SupercriticalUnsupported,
    UnbalancedMatrix,
)

LN1000 = math.log(1000.0)


class TestPredictMeanStake:
    def test_direct_substitution(self):
        assert predict_mean_stake(50, 150, 200, 1000) == pytest.approx(100_000.0)

    def test_vanishing_share_term(self):
        # l = 0 (winner-takes-all): the leading term is identically zero;
        # the fraction's law comes from the beta limit instead
        assert predict_mean_stake(0, 200, 200, 1000) == 0.0

    def test_tenth_share_node(self):
        # l = 10, w = 110 corresponds to a 1/10 initial share at K = 200
        mean = predict_mean_stake(10, 110, 200, 1000)
        assert mean == pytest.approx(0.1 * 200 * 1000)

    def test_rejects_bad_ranges(self):
        with pytest.raises(ValueError):
            predict_mean_stake(150, 50, 200, 10)


class TestPredictVarStake:
    def test_critical_direct_substitution(self):
        var, regime = predict_var_stake(50, 150, 200, 1000)
        assert regime is Regime.CRITICAL
        assert var == pytest.approx(2500.0 * 1000 * LN1000)

    def test_uniform_dividend_has_zero_variance(self):
        # w = l: every slot pays the same row regardless of the proposer
        var, regime = predict_var_stake(40, 40, 200, 1000)
        assert regime is Regime.SUBCRITICAL
        assert var == 0.0

    def test_supercritical_rejected(self):
        with pytest.raises(SupercriticalUnsupported):
            predict_var_stake(0, 200, 200, 1000)

    def test_zero_horizon(self):
        assert predict_var_stake(50, 150, 200, 0)[0] == 0.0

    def test_tenth_share_fraction_variance(self):
        # (K-w) l n ln n / (Kn + S0)^2 for the 1/10-share node
        var, _ = predict_var_stake(10, 110, 200, 1000)
        assert var / 200_100.0**2 == pytest.approx(1.5527e-4, rel=1e-3)


class TestPredictFraction:
    def test_equal_split(self):
        mean, var = predict_fraction(50, 150, 200, 1000, 100)
        assert mean == pytest.approx(0.5, abs=5e-4)
        assert var == pytest.approx(4.3130e-4, rel=1e-3)

    def test_one_third_split(self):
        params = frd_matrix([100 / 3, 200 / 3], 200).balanced
        mean, var = predict_fraction(params.l[0], params.w[0], 200, 1000, 100)
        assert mean == pytest.approx(1 / 3, abs=5e-4)
        assert var == pytest.approx(3.8338e-4, rel=1e-3)

    def test_fraction_variance_vanishes(self):
        _, var = predict_fraction(50, 150, 200, 10**9, 100)
        assert var < 1e-8

    @pytest.mark.parametrize("n", [8, 64, 512, 4096, 10**6])
    def test_critical_variance_decays_past_n8(self, n):
        _, a = predict_fraction(50, 150, 200, n, 100)
        _, b = predict_fraction(50, 150, 200, 2 * n, 100)
        assert b < a


class TestLimitingMeanFraction:
    def test_degenerate_denominator(self):
        with pytest.raises(DegenerateDenominator):
            limiting_mean_fraction(0, 200, 200)

    @given(
        stakes=st.lists(st.floats(0.01, 1e6), min_size=1, max_size=8),
        budget=st.floats(0.1, 1e4),
    )
    @settings(max_examples=300, deadline=None)
    def test_shared_reward_fixed_point(self, stakes, budget):
        # l/(K-w+l) = alpha S(0) v / (alpha S(0)) = v: the long-run mean
        # fraction equals the initial fraction for every node
        matrix = frd_matrix(stakes, budget)
        total = sum(stakes)
        for node in range(len(stakes)):
            limit = limiting_mean_fraction(
                matrix.balanced.l[node], matrix.balanced.w[node], budget
            )
            assert limit == pytest.approx(stakes[node] / total, rel=1e-9, abs=1e-12)


class TestPredictAssembly:
    def test_shared_reward_prediction(self):
        prediction = predict(frd_matrix([50, 50], 200), 0, 100.0, 1000)
        assert prediction.regime is Regime.CRITICAL
        assert prediction.mean_stake == pytest.approx(100_000.0)
        assert prediction.var_stake == pytest.approx(2500.0 * 1000 * LN1000)
        assert prediction.leading_order_only

    def test_supercritical_rejected(self):
        with pytest.raises(SupercriticalUnsupported):
            predict(constant_matrix(2, 200), 0, 100.0, 1000)

    def test_unbalanced_rejected(self):
        matrix = custom_matrix([[120, 40, 40], [30, 130, 40], [40, 40, 120]])
        with pytest.raises(UnbalancedMatrix):
            predict(matrix, 0, 200.0, 10)


# --- exact recurrence as the independent oracle --------------------------------

# all proposer sequences of the 3-node matrix [[2,1,1],[1,2,1],[1,1,2]]
# (w=2, l=1, K=4) from stakes [1,2,3], enumerated exactly with Fractions;
# probability-weighted means at n=8:
ENUMERATED_MEANS_N8 = (
    Fraction(1865401, 169728),   # node 0
    Fraction(38, 3),             # node 1
    Fraction(2434375, 169728),   # node 2
)


class TestExactStakeMoments:
    def test_matches_exact_enumeration(self):
        for node, (s0, expected) in enumerate(zip((1, 2, 3), ENUMERATED_MEANS_N8)):
            mean, _ = exact_stake_moments(s0, 6.0, 2.0, 1.0, 4.0, 8)
            assert mean == pytest.approx(float(expected), abs=1e-10), node

    @pytest.mark.parametrize("stakes,node", [((50.0, 50.0), 0), ((10.0, 90.0), 0), ((10.0, 90.0), 1)])
    @pytest.mark.parametrize("n", [1, 10, 1000])
    def test_winner_takes_all_matches_polya_law(self, stakes, node, n):
        # independent closed form for the proposer-takes-all fraction:
        # mean stays at v0 and Var[v(n)] = Var_beta * n / (n + a + b)
        budget = 200.0
        total = sum(stakes)
        mean, var = exact_stake_moments(stakes[node], total, budget, 0.0, budget, n)
        grown = total + n * budget
        beta = beta_limit_params(stakes, budget, node)
        assert mean / grown == pytest.approx(stakes[node] / total, rel=1e-12)
        expected = beta.variance * n / (n + beta.a + beta.b)
        assert var / grown**2 == pytest.approx(expected, rel=1e-9)

    def test_critical_leading_order_is_close_at_n1000(self):
        mean, var = exact_stake_moments(50.0, 100.0, 150.0, 50.0, 200.0, 1000)
        lead, _ = predict_var_stake(50.0, 150.0, 200.0, 1000)
        assert 0.97 <= var / lead <= 1.0
        assert mean / (100.0 + 1000 * 200.0) == pytest.approx(0.5, rel=1e-12)

    def test_subcritical_leading_order_is_close_at_n10000(self):
        _, var = exact_stake_moments(1.0, 6.0, 2.0, 1.0, 4.0, 10_000)
        lead, regime = predict_var_stake(1.0, 2.0, 4.0, 10_000)
        assert regime is Regime.SUBCRITICAL
        assert 0.95 <= var / lead <= 1.0


class TestMeanFractionsSumToOne:
    @given(
        l_values=st.lists(st.floats(0.01, 5.0), min_size=1, max_size=8),
        factor=st.floats(1.02, 2.0),
        n=st.integers(1, 10**6),
    )
    @settings(max_examples=300, deadline=None)
    def test_total_predicted_stake_is_budget_times_n(self, l_values, factor, n):
        # a balanced matrix with off-diagonal column sums L and row sum
        # K = factor * L has w_i = K - L + l_i; predicted stakes sum to K*n
        L = sum(l_values)
        budget = factor * L
        total = sum(
            predict_mean_stake(l, budget - L + l, budget, n) for l in l_values
        )
        assert total == pytest.approx(budget * n, rel=1e-9)


class TestBetaLimit:
    def test_equal_split(self):
        beta = beta_limit_params([50, 50], 200, 0)
        assert (beta.a, beta.b) == (0.25, 0.25)
        assert beta.variance == pytest.approx(1 / 6)

    def test_one_third_split(self):
        beta = beta_limit_params([33.33, 66.67], 200, 0)
        assert beta.a == pytest.approx(1 / 6, abs=1e-4)
        assert beta.b == pytest.approx(1 / 3, abs=1e-4)
        assert beta.variance == pytest.approx(0.148, abs=1e-3)

    def test_tenth_share_marginal(self):
        beta = beta_limit_params([10, 30, 30, 30], 200, 0)
        assert (beta.a, beta.b) == (0.05, 0.45)
        assert beta.variance == pytest.approx(0.06)

    def test_mean_is_initial_fraction(self):
        assert beta_limit_params([10, 30, 30, 30], 200, 0).mean == pytest.approx(0.1)

    def test_degenerate(self):
        with pytest.raises(DegenerateBeta):
            beta_limit_params([0, 100], 200, 0)
        with pytest.raises(DegenerateBeta):
            beta_limit_params([100], 200, 0)


class TestEmpiricalStats:
    def test_hand_arithmetic(self):
        stats = empirical_stats([0.4, 0.5, 0.6], bins=10)
        assert stats.mean == pytest.approx(0.5)
        assert stats.variance == pytest.approx(0.01)
        assert stats.count == 3

    def test_constant_vector(self):
        assert empirical_stats([0.3, 0.3, 0.3]).variance == 0.0

    def test_histogram_counts_sum_to_count_with_boundary_sample(self):
        stats = empirical_stats([0.0, 0.25, 0.5, 1.0], bins=4)
        assert stats.bin_counts.sum() == 4
        assert stats.bin_counts.tolist() == [1, 1, 1, 1]  # 1.0 lands in the last bin

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamples):
            empirical_stats([0.5])

    def test_bad_bins(self):
        with pytest.raises(ValueError):
            empirical_stats([0.1, 0.2], bins=0)

    def test_out_of_range_sample(self):
        with pytest.raises(ValueError):
            empirical_stats([0.5, 1.5])


def _final_fractions(scheme: str, reps: int, seed: int) -> np.ndarray:
    config = ExperimentConfig(
        initial_stakes=(50.0, 50.0),
        scheme=scheme,
        reward_budget_K=200.0,
        steps_n=1000,
        repetitions=reps,
        base_seed=seed,
    )
    return run_experiment(config).final_fractions[:, 0]


class TestKsDistance:
    def test_self_consistency(self):
        samples = np.random.Generator(np.random.PCG64(1234)).beta(0.25, 0.25, size=10_000)
        assert ks_distance(samples, BetaParams(0.25, 0.25)) < 0.02

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamples):
            ks_distance([0.5] * 99, BetaParams(0.25, 0.25))

    def test_winner_takes_all_converges_toward_beta(self):
        # At n=1000 the sup distance is pinned at ~0.068 by the atom of
        # never-selected runs: P(never) = 0.0869 sits at the minimum
        # attainable fraction 50/200100, where the beta CDF is already
        # 0.0678.  The distance shrinks like n^(-1/4) as the horizon grows.
        d = ks_distance(_final_fractions("constant", 4000, 8801), BetaParams(0.25, 0.25))
        assert 0.05 < d < 0.095

    def test_shared_reward_is_far_from_beta(self):
        # concentrated near 1/2 while Beta(0.25, 0.25) spreads to the edges;
        # measured sup distance ~0.477, an order of magnitude above the
        # winner-takes-all distance, which is what separates the schemes
        d = ks_distance(_final_fractions("frd", 4000, 8802), BetaParams(0.25, 0.25))
        assert d > 0.4
