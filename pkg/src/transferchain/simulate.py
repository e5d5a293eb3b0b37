"""Seeded Monte Carlo trajectories of a finite Markov chain.

Random numbers come from SplitMix64 (Steele, Lea & Flood 2014) used as a
counter-based generator. Plan ``i`` gets its own stream whose starting state
is the ``i``-th SplitMix64 output of the master stream seeded with ``seed``;
the uniform used at year ``t`` is output number ``t + 1`` of that plan's
stream, i.e. ``mix64(key_i + (t + 1) * GOLDEN)``. Every draw is therefore a
pure function of ``(seed, plan_index, year)``, so the statistics do not depend
on chunking or on how work is spread across threads.

Next states are drawn by inverse CDF: one uniform per plan-year compared
against the cumulative sums of the current state's row.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .contingency import ContingencyTable
from .errors import InsufficientDataError, LabelError
from .markov import TransitionMatrix

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_NEG_53 = 2.0**-53
CHUNK = 1 << 16
MIN_SOJOURN_SAMPLES = 30
_COUNT_FIELDS = (
    "occupancy_counts", "transition_counts", "triple_counts", "initial_counts",
    "k_step_counts", "sojourn_histogram", "censored_histogram",
)


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 output function (wrapping uint64 arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def plan_keys(seed: int, plan_index: np.ndarray) -> np.ndarray:
    """Per-plan stream states: output ``plan_index + 1`` of SplitMix64 seeded by ``seed``."""
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    base = mix64(np.array([seed], dtype=np.uint64))
    idx = np.asarray(plan_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(base + (idx + np.uint64(1)) * GOLDEN)


def uniforms(keys: np.ndarray, step: int) -> np.ndarray:
    """Uniform [0, 1) draws number ``step`` for each stream in ``keys``."""
    with np.errstate(over="ignore"):
        z = mix64(keys + np.uint64(step + 1) * GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53


def _cumulative(p: np.ndarray) -> np.ndarray:
    cum = np.cumsum(p, axis=1)
    cum[:, -1] = 1.0
    return cum


def _draw(cum: np.ndarray, current: np.ndarray, u: np.ndarray) -> np.ndarray:
    nxt = (u[:, np.newaxis] >= cum[current]).sum(axis=1)
    return np.minimum(nxt, cum.shape[1] - 1)


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    n_plans: int
    horizon_years: int
    initial_state: str | None = None
    initial_distribution: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.n_plans < 1 or self.horizon_years < 1:
            raise ValueError("n_plans and horizon_years must be positive")
        if self.initial_state is not None and self.initial_distribution is not None:
            raise ValueError("give either initial_state or initial_distribution, not both")
        if self.initial_distribution is not None:
            dist = np.asarray(self.initial_distribution, dtype=float)
            if np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-9:
                raise ValueError("initial_distribution must be a probability vector")
            object.__setattr__(self, "initial_distribution", tuple(float(x) for x in dist))


@dataclass(frozen=True, eq=False)
class TrajectoryStats:
    """Aggregated counts over all simulated plans.

    Index conventions: ``occupancy_counts[t, j]`` plans in state ``j`` at year
    ``t``; ``transition_counts[i, j]`` and ``triple_counts[h, i, j]`` count
    consecutive year pairs and triples; ``k_step_counts[i, k, j]`` counts plans
    that started in ``i`` and sit in ``j`` at year ``k``. Run lengths are kept
    as histograms ``sojourn_histogram[j, L]`` (completed runs) and
    ``censored_histogram[j, L]`` (runs still open at the horizon).
    """

    states: tuple[str, ...]
    n_plans: int
    horizon_years: int
    occupancy_counts: np.ndarray
    transition_counts: np.ndarray
    triple_counts: np.ndarray
    initial_counts: np.ndarray
    k_step_counts: np.ndarray
    sojourn_histogram: np.ndarray
    censored_histogram: np.ndarray

    def __post_init__(self):
        for name in _COUNT_FIELDS:
            getattr(self, name).setflags(write=False)

    @property
    def occupancy(self) -> np.ndarray:
        return self.occupancy_counts / self.n_plans

    @property
    def k_step_frequency(self) -> np.ndarray:
        """Empirical ``P(X_k = j | X_0 = i)``; NaN for starting states never used."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.k_step_counts / self.initial_counts[:, np.newaxis, np.newaxis]

    def sojourn_samples(self, state) -> np.ndarray:
        j = self.states.index(str(state))
        return np.repeat(np.arange(self.sojourn_histogram.shape[1]), self.sojourn_histogram[j])

    def censored_samples(self, state) -> np.ndarray:
        j = self.states.index(str(state))
        return np.repeat(np.arange(self.censored_histogram.shape[1]), self.censored_histogram[j])

    def __eq__(self, other):
        if not isinstance(other, TrajectoryStats):
            return NotImplemented
        return (
            (self.states, self.n_plans, self.horizon_years)
            == (other.states, other.n_plans, other.horizon_years)
            and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in _COUNT_FIELDS)
        )

    def digest(self) -> str:
        """SHA-256 over every count array; equal stats give equal digests."""
        h = hashlib.sha256(repr((self.states, self.n_plans, self.horizon_years)).encode())
        for name in _COUNT_FIELDS:
            h.update(np.ascontiguousarray(getattr(self, name), dtype=np.int64).tobytes())
        return h.hexdigest()


def _initial_states(tm, config, keys):
    if config.initial_distribution is not None:
        dist = np.asarray(config.initial_distribution, dtype=float)
        if dist.size != tm.n_states:
            raise LabelError(f"initial distribution has {dist.size} entries for {tm.n_states} states")
        cum = _cumulative(dist[np.newaxis, :])
        return _draw(cum, np.zeros(keys.size, dtype=np.intp), uniforms(keys, 0))
    label = config.initial_state if config.initial_state is not None else tm.states[0]
    if str(label) not in tm.states:
        raise LabelError(f"initial state {label!r} is not one of {list(tm.states)}")
    return np.full(keys.size, tm.states.index(str(label)), dtype=np.intp)


def generate_paths(tm: TransitionMatrix, config: SimulationConfig, start: int = 0, stop: int | None = None) -> np.ndarray:
    """State indices of plans ``start..stop-1`` as an ``(n, horizon_years)`` array."""
    stop = config.n_plans if stop is None else stop
    keys = plan_keys(config.seed, np.arange(start, stop, dtype=np.uint64))
    cum = _cumulative(np.asarray(tm.p))
    paths = np.empty((keys.size, config.horizon_years), dtype=np.intp)
    paths[:, 0] = _initial_states(tm, config, keys)
    for t in range(1, config.horizon_years):
        paths[:, t] = _draw(cum, paths[:, t - 1], uniforms(keys, t))
    return paths


def _chunk_counts(paths: np.ndarray, n: int):
    plans, horizon = paths.shape
    occupancy = np.stack([np.bincount(paths[:, t], minlength=n) for t in range(horizon)])
    pairs = np.bincount((paths[:, :-1] * n + paths[:, 1:]).ravel(), minlength=n * n)
    triples = np.bincount(
        (paths[:, :-2] * n * n + paths[:, 1:-1] * n + paths[:, 2:]).ravel(), minlength=n**3
    )
    first = paths[:, 0]
    initial = np.bincount(first, minlength=n)
    kstep = np.bincount(
        (first[:, np.newaxis] * horizon * n + np.arange(horizon) * n + paths).ravel(),
        minlength=n * horizon * n,
    )

    # runs: a new run starts at year 0 and wherever the state changes
    starts_mask = np.ones_like(paths, dtype=bool)
    starts_mask[:, 1:] = paths[:, 1:] != paths[:, :-1]
    flat_starts = np.flatnonzero(starts_mask.ravel())
    row = flat_starts // horizon
    row_end = (row + 1) * horizon
    ends = np.minimum(np.append(flat_starts[1:], plans * horizon), row_end)
    lengths = ends - flat_starts
    run_state = paths.ravel()[flat_starts]
    censored = ends == row_end
    width = horizon + 1
    done = np.bincount(run_state[~censored] * width + lengths[~censored], minlength=n * width)
    open_ = np.bincount(run_state[censored] * width + lengths[censored], minlength=n * width)

    return (
        occupancy,
        pairs.reshape(n, n),
        triples.reshape(n, n, n),
        initial,
        kstep.reshape(n, horizon, n),
        done.reshape(n, width),
        open_.reshape(n, width),
    )


def simulate_trajectories(tm: TransitionMatrix, config: SimulationConfig, workers: int = 1) -> TrajectoryStats:
    """Simulate ``config.n_plans`` independent plans and aggregate their statistics."""
    n = tm.n_states
    bounds = [(s, min(s + CHUNK, config.n_plans)) for s in range(0, config.n_plans, CHUNK)]

    def run(bound):
        return _chunk_counts(generate_paths(tm, config, *bound), n)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    totals = [np.sum([part[i] for part in parts], axis=0).astype(np.int64) for i in range(7)]
    return TrajectoryStats(tm.states, config.n_plans, config.horizon_years, *totals)


def empirical_transition_table(stats: TrajectoryStats) -> ContingencyTable:
    """Counts of consecutive year pairs, ready for ``estimate_from_counts``."""
    return ContingencyTable(stats.states, stats.states, stats.transition_counts)


def empirical_sojourn_mean(stats: TrajectoryStats, state, censoring: str = "adjust") -> float:
    """Mean holding time in ``state`` estimated from simulated runs.

    ``censoring="exclude"`` is the plain mean of completed runs. Within a
    finite horizon that mean is biased low, because long runs are the ones
    most likely to be cut off. ``censoring="adjust"`` (the default) is the
    geometric maximum-likelihood estimate: every observed year of every run,
    completed or not, over the number of completed runs, where an open run of
    ``c`` observed years contributes ``c - 1`` stays.
    """
    j = stats.states.index(str(state)) if str(state) in stats.states else None
    if j is None:
        raise LabelError(f"unknown state {state!r}")
    lengths = np.arange(stats.sojourn_histogram.shape[1])
    done = stats.sojourn_histogram[j]
    n_done = int(done.sum())
    if n_done < MIN_SOJOURN_SAMPLES:
        raise InsufficientDataError(
            f"only {n_done} completed runs in state {state!r}; need {MIN_SOJOURN_SAMPLES}"
        )
    completed_years = float(done @ lengths)
    if censoring == "exclude":
        return completed_years / n_done
    if censoring != "adjust":
        raise ValueError(f"censoring must be 'adjust' or 'exclude', got {censoring!r}")
    open_runs = stats.censored_histogram[j]
    open_stays = float(open_runs @ np.maximum(lengths - 1, 0))
    return (completed_years + open_stays) / n_done


def empirical_sojourn_stderr(stats: TrajectoryStats, state, censoring: str = "adjust") -> float:
    """Standard error matching :func:`empirical_sojourn_mean`."""
    mean = empirical_sojourn_mean(stats, state, censoring)
    j = stats.states.index(str(state))
    done = stats.sojourn_histogram[j]
    n_done = int(done.sum())
    if censoring == "adjust":
        # delta method on the geometric MLE: Var(1/q) ~ m (m - 1) / n
        return float(np.sqrt(mean * (mean - 1.0) / n_done))
    lengths = np.arange(done.size)
    var = float(done @ (lengths - mean) ** 2) / max(n_done - 1, 1)
    return float(np.sqrt(var / n_done))


@dataclass(frozen=True, eq=False)
class AbsorptionTally:
    states: tuple[str, ...]
    n_walks: int
    absorbed_counts: np.ndarray  # per state; nonzero only for absorbing states
    unabsorbed: int
    total_steps: int

    def frequency(self, state) -> float:
        return float(self.absorbed_counts[self.states.index(str(state))]) / self.n_walks


def simulate_absorption(
    tm: TransitionMatrix,
    start,
    n_walks: int,
    seed: int,
    max_steps: int = 10_000,
) -> AbsorptionTally:
    """Run walks from ``start`` until each hits an absorbing state.

    Uses the same per-walk streams as :func:`simulate_trajectories`. Walks
    still moving after ``max_steps`` are reported as ``unabsorbed``.
    """
    n = tm.n_states
    origin = tm.index(start)
    absorbing = np.diag(np.asarray(tm.p)) >= 1.0 - 1e-12
    cum = _cumulative(np.asarray(tm.p))
    counts = np.zeros(n, dtype=np.int64)
    unabsorbed = 0
    total_steps = 0
    for lo in range(0, n_walks, CHUNK * 4):
        hi = min(lo + CHUNK * 4, n_walks)
        keys = plan_keys(seed, np.arange(lo, hi, dtype=np.uint64))
        current = np.full(hi - lo, origin, dtype=np.intp)
        live = np.flatnonzero(~absorbing[current])
        step = 1
        while live.size and step <= max_steps:
            current[live] = _draw(cum, current[live], uniforms(keys[live], step))
            total_steps += live.size
            live = live[~absorbing[current[live]]]
            step += 1
        unabsorbed += live.size
        done = np.ones(hi - lo, dtype=bool)
        done[live] = False
        counts += np.bincount(current[done], minlength=n)
    return AbsorptionTally(tm.states, n_walks, counts, int(unabsorbed), int(total_steps))
