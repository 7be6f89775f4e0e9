"""Deterministic, repetition-parallel experiment runner.

Reproducibility contract: repetition r draws its proposer sequence from its
own PCG64 stream seeded with base_seed XOR r, and all cross-repetition
aggregates are either per-repetition rows (final fractions), integer counts,
or exact integer moment sums.  Nothing depends on chunk boundaries, worker
count, or merge order, so a run is reproducible bit for bit and partial runs
over repetition ranges concatenate into exactly the single-shot result.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    ConfigMismatch,
    DimensionMismatch,
    InsufficientSamples,
    NonpositiveBudget,
    OverlappingRanges,
    ResourceLimit,
    RowSumMismatch,
)
from .schemes import ROW_SUM_RTOL, RewardMatrix, constant_matrix, custom_matrix, frd_matrix
from .urn import recorded_steps, stake_vector

SCHEMES = ("constant", "frd", "custom")

# per-chunk memory budgets (numbers of float64 values); pure performance
# knobs: results do not depend on them
_DRAW_BUDGET = 1 << 23
_RECORD_BUDGET = 1 << 22
_MAX_CHUNK = 8192

DEFAULT_MAX_RESULT_ELEMENTS = 100_000_000


@dataclass(frozen=True)
class RecordPolicy:
    """What to record during a run.

    stride 0 keeps only the final state; stride >= 1 also records step 0,
    every multiple of the stride, and the final step.  track_nodes None
    means all nodes.
    """

    stride: int = 0
    histogram_bins: int = 100
    track_nodes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.stride < 0:
            raise ValueError("stride must be >= 0")
        if self.histogram_bins < 1:
            raise ValueError("histogram_bins must be >= 1")
        if self.track_nodes is not None:
            nodes = tuple(int(i) for i in self.track_nodes)
            if len(set(nodes)) != len(nodes):
                raise ValueError("track_nodes must not repeat")
            object.__setattr__(self, "track_nodes", nodes)


@dataclass(frozen=True)
class ExperimentConfig:
    initial_stakes: tuple[float, ...]
    scheme: str
    reward_budget_K: float
    steps_n: int
    repetitions: int
    base_seed: int
    record: RecordPolicy = field(default_factory=RecordPolicy)
    custom_entries: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        stakes = stake_vector(self.initial_stakes)
        object.__setattr__(self, "initial_stakes", tuple(float(s) for s in stakes))
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if (self.custom_entries is None) != (self.scheme != "custom"):
            raise ValueError("custom_entries must be given exactly when scheme is 'custom'")
        if self.custom_entries is not None:
            object.__setattr__(
                self,
                "custom_entries",
                tuple(tuple(float(x) for x in row) for row in self.custom_entries),
            )
        if self.reward_budget_K <= 0:
            raise NonpositiveBudget(f"reward_budget_K must be > 0, got {self.reward_budget_K!r}")
        object.__setattr__(self, "reward_budget_K", float(self.reward_budget_K))
        if self.steps_n < 0:
            raise ValueError("steps_n must be >= 0")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must be an unsigned 64-bit integer")
        m = len(self.initial_stakes)
        if self.record.track_nodes is not None:
            for i in self.record.track_nodes:
                if not 0 <= i < m:
                    raise ValueError(f"track_nodes entry {i} out of range for {m} nodes")

    @property
    def num_nodes(self) -> int:
        return len(self.initial_stakes)

    def tracked_nodes(self) -> tuple[int, ...]:
        if self.record.track_nodes is not None:
            return self.record.track_nodes
        return tuple(range(self.num_nodes))

    def reward_matrix(self) -> RewardMatrix:
        if self.scheme == "constant":
            return constant_matrix(self.num_nodes, self.reward_budget_K)
        if self.scheme == "frd":
            return frd_matrix(self.initial_stakes, self.reward_budget_K)
        matrix = custom_matrix(self.custom_entries)
        if matrix.num_nodes != self.num_nodes:
            raise DimensionMismatch(
                f"custom matrix is {matrix.num_nodes}x{matrix.num_nodes}, "
                f"config has {self.num_nodes} nodes"
            )
        if abs(matrix.row_sum - self.reward_budget_K) > ROW_SUM_RTOL * self.reward_budget_K:
            raise RowSumMismatch(0, matrix.row_sum)
        return matrix


# --- exact streaming moments -------------------------------------------------

_SCALE_BITS = 1074  # every float64 in [0, 1] is an integer multiple of 2**-1074
_SCALE = 1 << _SCALE_BITS
_SQ_SCALE = 1 << (2 * _SCALE_BITS)


def _exact_sums(values: np.ndarray) -> tuple[int, int]:
    """Exact integer sums of values and squared values (scaled)."""
    s = 0
    s2 = 0
    for v in values.tolist():
        p, q = v.as_integer_ratio()
        s += p * (_SCALE // q)
        s2 += p * p * (_SQ_SCALE // (q * q))
    return s, s2


class RunningMoments:
    """Streaming count/mean/variance over values in [0, 1].

    Sums are exact integers, so accumulation is associative: any grouping of
    the same repetitions yields bit-identical mean and variance.  Memory is
    O(1) per cell regardless of repetition count.
    """

    __slots__ = ("count", "sum_scaled", "sumsq_scaled")

    def __init__(self, count: int = 0, sum_scaled: int = 0, sumsq_scaled: int = 0):
        self.count = count
        self.sum_scaled = sum_scaled
        self.sumsq_scaled = sumsq_scaled

    def add_values(self, values: np.ndarray) -> None:
        s, s2 = _exact_sums(np.asarray(values, dtype=np.float64))
        self.add_sums(len(values), s, s2)

    def add_sums(self, count: int, sum_scaled: int, sumsq_scaled: int) -> None:
        self.count += count
        self.sum_scaled += sum_scaled
        self.sumsq_scaled += sumsq_scaled

    def merged(self, other: "RunningMoments") -> "RunningMoments":
        return RunningMoments(
            self.count + other.count,
            self.sum_scaled + other.sum_scaled,
            self.sumsq_scaled + other.sumsq_scaled,
        )

    @property
    def mean(self) -> float:
        if self.count == 0:
            return float("nan")
        return float(Fraction(self.sum_scaled, self.count * _SCALE))

    @property
    def variance(self) -> float:
        """Unbiased variance (divisor count - 1); nan below 2 samples."""
        if self.count < 2:
            return float("nan")
        numerator = self.count * self.sumsq_scaled - self.sum_scaled * self.sum_scaled
        return float(Fraction(numerator, self.count * (self.count - 1) * _SQ_SCALE))

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunningMoments):
            return NotImplemented
        return (
            self.count == other.count
            and self.sum_scaled == other.sum_scaled
            and self.sumsq_scaled == other.sumsq_scaled
        )

    def __repr__(self) -> str:
        return f"RunningMoments(count={self.count}, mean={self.mean}, variance={self.variance})"


@dataclass(frozen=True)
class TimeSeries:
    """Cross-repetition fraction statistics at the recorded steps."""

    steps: tuple[int, ...]
    nodes: tuple[int, ...]
    cells: tuple[tuple[RunningMoments, ...], ...]  # [step][node]

    @property
    def count(self) -> int:
        return self.cells[0][0].count if self.cells else 0

    def mean(self) -> np.ndarray:
        return np.array([[cell.mean for cell in row] for row in self.cells])

    def variance(self) -> np.ndarray:
        return np.array([[cell.variance for cell in row] for row in self.cells])

    def merged(self, other: "TimeSeries") -> "TimeSeries":
        if self.steps != other.steps or self.nodes != other.nodes:
            raise ConfigMismatch("time series cover different steps or nodes")
        cells = tuple(
            tuple(a.merged(b) for a, b in zip(ra, rb))
            for ra, rb in zip(self.cells, other.cells)
        )
        return TimeSeries(steps=self.steps, nodes=self.nodes, cells=cells)


@dataclass(eq=False)
class ExperimentResult:
    """Final fractions per repetition plus optional per-step statistics.

    final_fractions row i belongs to absolute repetition rep_range[0] + i.
    """

    config: ExperimentConfig
    rep_range: tuple[int, int]
    final_fractions: np.ndarray   # (reps, m)
    proposer_counts: np.ndarray   # (m,) int64, summed over reps and steps
    time_series: TimeSeries | None


def _chunk_size(n: int, recorded: int, tracked: int) -> int:
    cap = _MAX_CHUNK
    if n > 0:
        cap = min(cap, max(1, _DRAW_BUDGET // n))
    if recorded * tracked > 0:
        cap = min(cap, max(1, _RECORD_BUDGET // (recorded * tracked)))
    return cap


def _chunk_task(payload) -> tuple[np.ndarray, np.ndarray, list | None]:
    """Simulate repetitions [rep_start, rep_stop); one PCG64 stream each.

    Row-wise the arithmetic is identical to the single-trajectory path in
    urn.py (same cumulative sums, same adds, same analytic total), so the
    two routes agree bit for bit.
    """
    (entries, row_sum, stakes0, n, base_seed, rep_start, rep_stop, steps, track) = payload
    count = rep_stop - rep_start
    m = entries.shape[0]
    draws = np.empty((count, n))
    for i in range(count):
        bitgen = np.random.PCG64(base_seed ^ (rep_start + i))
        np.random.Generator(bitgen).random(n, out=draws[i])
    initial = np.asarray(stakes0, dtype=np.float64)
    stakes = np.tile(initial, (count, 1))
    total = float(initial.sum())
    counts = np.zeros(m, dtype=np.int64)
    rec = None
    next_rec = 0
    track_idx = None
    if steps is not None:
        track_idx = np.asarray(track, dtype=np.intp)
        rec = np.empty((count, len(steps), len(track)))
        if steps[0] == 0:
            rec[:, 0, :] = stakes[:, track_idx] / total
            next_rec = 1
    for step in range(n):
        thresholds = draws[:, step] * total
        cums = np.cumsum(stakes, axis=1)
        mask = thresholds[:, None] < cums
        proposers = mask.argmax(axis=1)
        missed = ~mask[:, -1]
        if missed.any():
            # the draw fell past the float sum of stakes: assign the last
            # node with positive stake, as the scalar path does
            rev = stakes[missed, ::-1] > 0
            proposers[missed] = m - 1 - rev.argmax(axis=1)
        counts += np.bincount(proposers, minlength=m)
        stakes += entries[proposers]
        total += row_sum
        if rec is not None and next_rec < len(steps) and step + 1 == steps[next_rec]:
            rec[:, next_rec, :] = stakes[:, track_idx] / total
            next_rec += 1
    fractions = stakes / total
    moments = None
    if rec is not None:
        moments = [
            [_exact_sums(rec[:, t, j]) for j in range(len(track))]
            for t in range(len(steps))
        ]
    return fractions, counts, moments


def run_experiment(
    config: ExperimentConfig,
    *,
    workers: int = 1,
    rep_range: tuple[int, int] | None = None,
    max_result_elements: int = DEFAULT_MAX_RESULT_ELEMENTS,
) -> ExperimentResult:
    """Run the configured experiment over a range of repetitions.

    `rep_range` (default: all repetitions) selects a half-open block of
    repetition indices; partial results over adjacent blocks merge into
    exactly the full-run result (see merge_results).  `workers` > 1 farms
    fixed-size chunks to a process pool; the output is identical to the
    serial run.
    """
    matrix = config.reward_matrix()
    m = matrix.num_nodes
    start, stop = rep_range if rep_range is not None else (0, config.repetitions)
    if not 0 <= start < stop <= config.repetitions:
        raise ValueError(f"rep_range {(start, stop)} invalid for {config.repetitions} repetitions")
    reps = stop - start
    if reps * m > max_result_elements:
        raise ResourceLimit(
            f"{reps} repetitions x {m} nodes exceeds the cap of {max_result_elements} values"
        )
    n = config.steps_n
    stride = config.record.stride
    steps = tuple(recorded_steps(n, stride)) if stride > 0 else None
    track = config.tracked_nodes()
    chunk = _chunk_size(n, len(steps) if steps else 0, len(track))
    bounds = [(a, min(a + chunk, stop)) for a in range(start, stop, chunk)]
    payloads = [
        (matrix.entries, matrix.row_sum, config.initial_stakes, n,
         config.base_seed, a, b, steps, track)
        for a, b in bounds
    ]
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_chunk_task, payloads))
    else:
        outputs = [_chunk_task(p) for p in payloads]

    final_fractions = np.concatenate([o[0] for o in outputs], axis=0)
    proposer_counts = np.zeros(m, dtype=np.int64)
    for _, chunk_counts, _ in outputs:
        proposer_counts += chunk_counts
    series = None
    if steps is not None:
        cells = [[RunningMoments() for _ in track] for _ in steps]
        for (a, b), (_, _, moments) in zip(bounds, outputs):
            for t in range(len(steps)):
                for j in range(len(track)):
                    s, s2 = moments[t][j]
                    cells[t][j].add_sums(b - a, s, s2)
        series = TimeSeries(
            steps=steps, nodes=track, cells=tuple(tuple(row) for row in cells)
        )
    return ExperimentResult(
        config=config,
        rep_range=(start, stop),
        final_fractions=final_fractions,
        proposer_counts=proposer_counts,
        time_series=series,
    )


def time_series_stats(config: ExperimentConfig, *, workers: int = 1) -> TimeSeries:
    """Cross-repetition mean and unbiased variance of the tracked nodes'
    fractions at every recorded step."""
    if config.record.stride < 1:
        raise ValueError("time series need record.stride >= 1")
    if config.repetitions < 2:
        raise InsufficientSamples("time series need at least 2 repetitions")
    return run_experiment(config, workers=workers).time_series


def merge_results(partials: Sequence[ExperimentResult]) -> ExperimentResult:
    """Concatenate partial results over adjacent repetition ranges.

    The merge is bit-exact: with ranges tiling [0, repetitions) the merged
    result equals the single-shot run.  Raises ConfigMismatch when configs
    differ and OverlappingRanges when ranges overlap or leave gaps.
    """
    if not partials:
        raise ValueError("nothing to merge")
    first = partials[0]
    for p in partials[1:]:
        if p.config != first.config:
            raise ConfigMismatch("partial results come from different configs")
        if (p.time_series is None) != (first.time_series is None):
            raise ConfigMismatch("partial results disagree on time-series recording")
    ordered = sorted(partials, key=lambda p: p.rep_range[0])
    for prev, nxt in zip(ordered, ordered[1:]):
        if nxt.rep_range[0] != prev.rep_range[1]:
            raise OverlappingRanges(
                f"ranges {prev.rep_range} and {nxt.rep_range} overlap or leave a gap"
            )
    series = ordered[0].time_series
    for p in ordered[1:]:
        if series is not None:
            series = series.merged(p.time_series)
    counts = np.zeros_like(first.proposer_counts)
    for p in ordered:
        counts += p.proposer_counts
    return ExperimentResult(
        config=first.config,
        rep_range=(ordered[0].rep_range[0], ordered[-1].rep_range[1]),
        final_fractions=np.concatenate([p.final_fractions for p in ordered], axis=0),
        proposer_counts=counts,
        time_series=series,
    )
