"""Tests for the core urn process: state, sampling, reward application."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stakesim import (
    apply_reward,
    constant_matrix,
    fractional_stakes,
    frd_matrix,
    new_state,
    recorded_steps,
    select_proposer,
    simulate_trajectory,
)
from stakesim.errors import (
    DimensionMismatch,
    EmptyStakeSet,
    NegativeStake,
    ZeroTotalStake,
)


class TestNewState:
    def test_equal_two_node_start(self):
        state = new_state([50, 50])
        assert state.total == 100.0
        assert state.initial_total == 100.0
        assert state.step == 0

    def test_single_node(self):
        state = new_state([100])
        assert fractional_stakes(state).tolist() == [1.0]

    def test_zero_stake_node_is_valid(self):
        state = new_state([0, 100])
        assert fractional_stakes(state)[0] == 0.0

    def test_empty_rejected(self):
        with pytest.raises(EmptyStakeSet):
            new_state([])

    def test_negative_rejected(self):
        with pytest.raises(NegativeStake):
            new_state([-1.0, 5.0])

    def test_all_zero_rejected(self):
        with pytest.raises(ZeroTotalStake):
            new_state([0.0, 0.0])


class TestFractionalStakes:
    def test_symmetric(self):
        assert fractional_stakes(new_state([50, 50])).tolist() == [0.5, 0.5]

    def test_one_third_split(self):
        fractions = fractional_stakes(new_state([33.33, 66.67]))
        assert fractions[0] == pytest.approx(0.3333, abs=1e-4)
        assert fractions[1] == pytest.approx(0.6667, abs=1e-4)

    def test_proportional(self):
        fractions = fractional_stakes(new_state([10, 20, 30, 40]))
        np.testing.assert_allclose(fractions, [0.1, 0.2, 0.3, 0.4], rtol=1e-15)

    def test_sums_to_one(self):
        fractions = fractional_stakes(new_state([3.7, 11.1, 0.04, 295.0]))
        assert abs(fractions.sum() - 1.0) < 1e-12


class TestSelectProposer:
    def test_draw_in_first_interval(self):
        assert select_proposer(new_state([50, 50]), 0.3) == 0

    def test_draw_in_second_interval(self):
        assert select_proposer(new_state([50, 50]), 0.75) == 1

    def test_boundary_is_half_open(self):
        # draw exactly at the cumulative boundary belongs to the next node
        assert select_proposer(new_state([50, 50]), 0.5) == 1

    def test_zero_stake_node_never_selected(self):
        state = new_state([0, 100])
        for draw in (0.0, 0.3, 0.999999):
            assert select_proposer(state, draw) == 1

    def test_draw_out_of_range(self):
        with pytest.raises(ValueError):
            select_proposer(new_state([50, 50]), 1.0)

    def test_frequency_matches_fraction(self):
        # 1e6 single-step draws from [30, 70]: node 1 comes up 0.7 +- 0.003
        state = new_state([30.0, 70.0])
        draws = np.random.Generator(np.random.PCG64(2024)).random(1_000_000)
        hits = sum(select_proposer(state, u) for u in draws.tolist())
        assert abs(hits / 1_000_000 - 0.7) <= 0.003


class TestApplyReward:
    def test_shared_reward_row(self):
        state = new_state([100, 100])
        matrix = frd_matrix([100, 100], 200)
        assert matrix.entries.tolist() == [[150.0, 50.0], [50.0, 150.0]]
        nxt = apply_reward(state, 0, matrix)
        assert nxt.stakes.tolist() == [250.0, 150.0]
        assert nxt.step == 1

    def test_winner_takes_all_row(self):
        nxt = apply_reward(new_state([100, 100]), 1, constant_matrix(2, 200))
        assert nxt.stakes.tolist() == [100.0, 300.0]

    def test_total_grows_by_budget(self):
        state = new_state([12.5, 87.5])
        for matrix in (frd_matrix([12.5, 87.5], 200), constant_matrix(2, 200)):
            for proposer in (0, 1):
                assert apply_reward(state, proposer, matrix).total == 300.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            apply_reward(new_state([1, 2, 3]), 0, constant_matrix(2, 200))


class TestSimulateTrajectory:
    def test_zero_steps_is_identity(self):
        state = new_state([50, 50])
        trajectory, final = simulate_trajectory(state, frd_matrix([50, 50], 200), 0, seed=1)
        assert final.stakes.tolist() == [50.0, 50.0]
        assert final.step == 0
        assert trajectory.proposers.size == 0

    def test_zero_stake_node_absorbs_under_shared_reward(self):
        # l_0 = 0 and selection probability 0: node 0 stays at 0 forever
        matrix = frd_matrix([0, 100], 200)
        _, final = simulate_trajectory(new_state([0, 100]), matrix, 500, seed=9)
        assert final.stakes[0] == 0.0
        assert final.total == 100.0 + 500 * 200.0

    def test_same_seed_same_path(self):
        state = new_state([30, 70])
        matrix = frd_matrix([30, 70], 200)
        t1, f1 = simulate_trajectory(state, matrix, 300, seed=77)
        t2, f2 = simulate_trajectory(state, matrix, 300, seed=77)
        assert np.array_equal(t1.proposers, t2.proposers)
        assert np.array_equal(f1.stakes, f2.stakes)

    def test_proposer_count_and_snapshots(self):
        state = new_state([30, 70])
        matrix = constant_matrix(2, 200)
        trajectory, final = simulate_trajectory(state, matrix, 95, seed=5, record_stride=20)
        assert trajectory.proposers.shape == (95,)
        assert trajectory.snapshot_steps.tolist() == [0, 20, 40, 60, 80, 95]
        assert np.all(np.diff(trajectory.snapshot_steps) > 0)
        assert np.array_equal(trajectory.snapshot_stakes[-1], final.stakes)

    def test_stride_zero_records_final_only(self):
        trajectory, final = simulate_trajectory(
            new_state([30, 70]), constant_matrix(2, 200), 12, seed=5, record_stride=0
        )
        assert trajectory.snapshot_steps.tolist() == [12]
        assert np.array_equal(trajectory.snapshot_stakes[0], final.stakes)


def test_recorded_steps_policy():
    assert recorded_steps(10, 0) == [10]
    assert recorded_steps(10, 4) == [0, 4, 8, 10]
    assert recorded_steps(10, 5) == [0, 5, 10]
    assert recorded_steps(0, 0) == [0]
    assert recorded_steps(0, 3) == [0]
    with pytest.raises(ValueError):
        recorded_steps(-1, 0)


stake_lists = st.lists(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False), min_size=1, max_size=6
).filter(lambda s: sum(s) > 0)


class TestProcessInvariants:
    @given(stakes=stake_lists, n=st.integers(0, 64), budget=st.floats(0.5, 500.0))
    @settings(max_examples=200, deadline=None)
    def test_conservation_and_nonnegativity(self, stakes, n, budget):
        state = new_state(stakes)
        matrix = frd_matrix(stakes, budget)
        _, final = simulate_trajectory(state, matrix, n, seed=0)
        expected_total = state.initial_total + n * budget
        assert final.total == pytest.approx(expected_total, rel=1e-12)
        # recomputed sum agrees with the tracked total
        assert float(final.stakes.sum()) == pytest.approx(final.total, rel=1e-9)
        assert np.all(final.stakes >= state.stakes)

    def test_total_is_exact_for_representable_budget(self):
        # integer-valued budget: the tracked total is exactly S(0) + n*K
        state = new_state([50.0, 50.0])
        _, final = simulate_trajectory(state, constant_matrix(2, 200), 1000, seed=3)
        assert final.total == 100.0 + 1000 * 200.0

    @given(stakes=stake_lists, seed=st.integers(0, 2**32))
    @settings(max_examples=100, deadline=None)
    def test_fractions_sum_to_one(self, stakes, seed):
        _, final = simulate_trajectory(
            new_state(stakes), frd_matrix(stakes, 200.0), 32, seed=seed
        )
        assert abs(fractional_stakes(final).sum() - 1.0) < 1e-12
