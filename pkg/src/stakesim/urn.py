"""The stake-evolution process: state, proposer sampling, reward application.

One slot: a proposer is elected with probability equal to its fractional
stake, then row g of the reward matrix is added to all stakes.  The total
stake therefore grows by exactly the row sum K each slot.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyStakeSet, NegativeStake, ZeroTotalStake

if TYPE_CHECKING:  # pragma: no cover
    from .schemes import RewardMatrix


def stake_vector(values: Sequence[float]) -> np.ndarray:
    """Validate and normalize a stake vector to a float64 array.

    Raises EmptyStakeSet / NegativeStake / ZeroTotalStake.
    """
    stakes = np.array(values, dtype=np.float64)
    if stakes.ndim != 1 or stakes.size == 0:
        raise EmptyStakeSet("need a non-empty 1-D stake vector")
    if not np.all(np.isfinite(stakes)) or np.any(stakes < 0):
        raise NegativeStake("stakes must be finite and >= 0")
    if float(stakes.sum()) <= 0.0:
        raise ZeroTotalStake("at least one stake must be positive")
    stakes.setflags(write=False)
    return stakes


@dataclass(frozen=True)
class UrnState:
    """Per-node absolute stakes after `step` slots.

    `total` is tracked analytically (one add of the row sum per slot, never
    re-summed from the stake vector), so the selection denominator does not
    accumulate summation error over long horizons.
    """

    stakes: np.ndarray
    step: int
    initial_total: float
    total: float

    @property
    def num_nodes(self) -> int:
        return int(self.stakes.shape[0])


@dataclass(frozen=True)
class Trajectory:
    """One realized path: the proposer chosen at every step, plus stake
    snapshots at the recording steps (always including the final step)."""

    proposers: np.ndarray        # (n,) int64
    snapshot_steps: np.ndarray   # strictly increasing, int64
    snapshot_stakes: np.ndarray  # (len(snapshot_steps), m)


def new_state(initial_stakes: Sequence[float]) -> UrnState:
    """Build the step-0 state from initial stake amounts."""
    stakes = stake_vector(initial_stakes)
    total = float(stakes.sum())
    return UrnState(stakes=stakes, step=0, initial_total=total, total=total)


def fractional_stakes(state: UrnState) -> np.ndarray:
    """Fractions stake_i / total; they sum to 1 up to float rounding."""
    return state.stakes / state.total


def select_proposer(state: UrnState, uniform_draw: float) -> int:
    """Map a uniform draw in [0, 1) to a node index.

    Node g owns the half-open interval [C_{g-1}, C_g) of the cumulative
    fractions built in ascending node order, so zero-stake nodes (empty
    intervals) are never selected.
    """
    if not 0.0 <= uniform_draw < 1.0:
        raise ValueError(f"draw must lie in [0, 1), got {uniform_draw!r}")
    threshold = uniform_draw * state.total
    acc = 0.0
    last_positive = -1
    for g, s in enumerate(state.stakes.tolist()):
        if s > 0.0:
            last_positive = g
        acc += s
        if threshold < acc:
            return g
    # float edge: the running sum of stakes can land a hair below the
    # analytic total; the draw then belongs to the last non-empty interval
    return last_positive


def apply_reward(state: UrnState, proposer: int, matrix: "RewardMatrix") -> UrnState:
    """Add row `proposer` of the reward matrix to all stakes; one slot elapses."""
    if matrix.num_nodes != state.num_nodes:
        raise DimensionMismatch(
            f"matrix is {matrix.num_nodes}x{matrix.num_nodes}, state has {state.num_nodes} nodes"
        )
    if not 0 <= proposer < state.num_nodes:
        raise IndexError(f"proposer index {proposer} out of range")
    stakes = state.stakes + matrix.entries[proposer]
    stakes.setflags(write=False)
    return UrnState(
        stakes=stakes,
        step=state.step + 1,
        initial_total=state.initial_total,
        total=state.total + matrix.row_sum,
    )


def recorded_steps(n: int, stride: int) -> list[int]:
    """Steps at which state is recorded.

    stride == 0 records only the final step; stride >= 1 records step 0,
    every multiple of the stride, and always the final step.
    """
    if n < 0 or stride < 0:
        raise ValueError("n and stride must be >= 0")
    if stride == 0:
        return [n]
    steps = list(range(0, n + 1, stride))
    if steps[-1] != n:
        steps.append(n)
    return steps


def simulate_trajectory(
    initial: UrnState,
    matrix: "RewardMatrix",
    n: int,
    seed: int,
    record_stride: int = 0,
) -> tuple[Trajectory, UrnState]:
    """Run n select/apply slots from a PCG64 stream initialized with `seed`.

    One uniform draw is consumed per slot, so identical seeds reproduce the
    trajectory bit for bit.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    steps = recorded_steps(n, record_stride)
    gen = np.random.Generator(np.random.PCG64(seed))
    state = initial
    proposers = np.empty(n, dtype=np.int64)
    snap_steps: list[int] = []
    snaps: list[np.ndarray] = []
    next_record = 0
    if steps[next_record] == 0:
        snap_steps.append(0)
        snaps.append(np.array(state.stakes))
        next_record += 1
    for k in range(n):
        g = select_proposer(state, gen.random())
        proposers[k] = g
        state = apply_reward(state, g, matrix)
        if next_record < len(steps) and k + 1 == steps[next_record]:
            snap_steps.append(k + 1)
            snaps.append(np.array(state.stakes))
            next_record += 1
    trajectory = Trajectory(
        proposers=proposers,
        snapshot_steps=np.array(snap_steps, dtype=np.int64),
        snapshot_stakes=np.array(snaps) if snaps else np.empty((0, state.num_nodes)),
    )
    return trajectory, state
