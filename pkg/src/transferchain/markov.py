"""Discrete-time Markov chain analysis on a finite labelled state space.

Covers estimation from a table of year-to-year counts, k-step transition
matrices, state classification, the stationary distribution and limiting
matrix, mean holding times, the time needed to come close to the limit, and
absorption probabilities for chains with absorbing states.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .contingency import ContingencyTable
from .errors import (
    ConvergenceError,
    DegenerateTableError,
    DimensionError,
    InfiniteSojournError,
    LabelError,
    NoAbsorbingStateError,
    NonAbsorbingChainError,
    NoUniqueLimitError,
)
from .numerics import as_matrix, check_stochastic, eig_two_state, identity, mat_mul, mat_pow, solve_linear

EDGE_TOL = 1e-12
ABSORBING_TOL = 1e-12
SPECTRAL_CHECK_TOL = 1e-9
HORIZON_CAP = 10_000


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix ``p`` whose rows and columns follow ``states``."""

    states: tuple[str, ...]
    p: np.ndarray

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        p = check_stochastic(self.p)
        if p.shape[0] != len(states):
            raise DimensionError(f"{len(states)} labels for a {p.shape[0]}-state matrix")
        if len(set(states)) != len(states):
            raise LabelError("state labels must be unique")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_array(cls, p, states=None) -> "TransitionMatrix":
        p = as_matrix(p)
        if states is None:
            states = [str(i) for i in range(p.shape[0])]
        return cls(tuple(states), p)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index(self, state) -> int:
        try:
            return self.states.index(str(state))
        except ValueError:
            raise LabelError(f"unknown state {state!r}; states are {list(self.states)}") from None

    def prob(self, i, j) -> float:
        return float(self.p[self.index(i), self.index(j)])

    def __eq__(self, other):
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return self.states == other.states and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash((self.states, self.p.tobytes()))

    def __repr__(self):
        return f"TransitionMatrix(states={self.states!r}, p={self.p.tolist()!r})"


@dataclass(frozen=True)
class ChainClassification:
    irreducible: bool
    aperiodic: bool
    recurrent_states: frozenset[str]
    absorbing_states: frozenset[str]
    communicating_classes: tuple[frozenset[str], ...]
    periods: tuple[int, ...]  # aligned with communicating_classes

    @property
    def transient_states(self) -> frozenset[str]:
        everything = frozenset().union(*self.communicating_classes)
        return everything - self.recurrent_states


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    states: tuple[str, ...]
    pi: np.ndarray

    def __getitem__(self, state) -> float:
        return float(self.pi[self.states.index(str(state))])

    def __eq__(self, other):
        if not isinstance(other, StationaryDistribution):
            return NotImplemented
        return self.states == other.states and np.array_equal(self.pi, other.pi)

    def as_dict(self) -> dict[str, float]:
        return {s: float(v) for s, v in zip(self.states, self.pi)}


@dataclass(frozen=True, eq=False)
class AbsorptionResult:
    """Fundamental-matrix quantities of an absorbing chain.

    ``b[i, j]`` is the probability that a walk started in transient state
    ``transient_states[i]`` ends in ``absorbing_states[j]``;
    ``expected_steps[i]`` is the mean number of steps until absorption.
    """

    transient_states: tuple[str, ...]
    absorbing_states: tuple[str, ...]
    b: np.ndarray
    expected_steps: np.ndarray
    fundamental: np.ndarray

    def probability(self, start, target) -> float:
        i = self.transient_states.index(str(start))
        j = self.absorbing_states.index(str(target))
        return float(self.b[i, j])


def estimate_from_counts(table: ContingencyTable) -> TransitionMatrix:
    """Row-wise maximum-likelihood estimate ``n_ij / n_i.``.

    Columns are matched to rows by label, so a table whose column order differs
    from its row order is realigned before dividing.
    """
    rows, cols = table.row_labels, table.col_labels
    if len(rows) != len(cols) or set(rows) != set(cols):
        raise LabelError(f"row labels {list(rows)} and column labels {list(cols)} differ")
    order = [cols.index(r) for r in rows]
    counts = table.counts[:, order].astype(float)
    totals = counts.sum(axis=1)
    if np.any(totals == 0):
        empty = [r for r, t in zip(rows, totals) if t == 0]
        raise DegenerateTableError(f"no transitions observed out of {empty}")
    return TransitionMatrix(rows, counts / totals[:, np.newaxis])


def round_transition_matrix(tm: TransitionMatrix, decimals: int = 3) -> TransitionMatrix:
    """Round off-diagonal entries to ``decimals`` places; diagonals absorb the remainder.

    Reproduces hand calculations that work from a matrix printed to three
    decimals while keeping every row summing to one.
    """
    p = np.round(np.array(tm.p), decimals)
    np.fill_diagonal(p, 0.0)
    np.fill_diagonal(p, np.round(1.0 - p.sum(axis=1), decimals))
    return TransitionMatrix(tm.states, p)


def k_step(tm: TransitionMatrix, k: int) -> TransitionMatrix:
    """The k-step transition matrix ``P**k``.

    Two-state chains are cross-checked against the spectral form
    ``Q diag(1, lam**k) Q^-1``; a disagreement above 1e-9 raises
    ``ArithmeticError``.
    """
    pk = mat_pow(tm.p, k)
    if tm.n_states == 2:
        spectral = eig_two_state(tm.p).power(k)
        gap = float(np.max(np.abs(spectral - pk)))
        if gap > SPECTRAL_CHECK_TOL:
            raise ArithmeticError(f"matrix power and spectral form disagree by {gap:.3g}")
    # repeated products can leave entries a few ulps outside [0, 1]
    return TransitionMatrix(tm.states, np.clip(pk, 0.0, 1.0))


def _reachability(support: np.ndarray) -> np.ndarray:
    n = support.shape[0]
    reach = support | np.eye(n, dtype=bool)
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    return reach


def _period(members: list[int], support: np.ndarray) -> int:
    # gcd of level[u] + 1 - level[v] over the edges of a BFS-levelled class
    inside = set(members)
    level = {members[0]: 0}
    queue = deque([members[0]])
    g = 0
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(support[u]):
            v = int(v)
            if v not in inside:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, abs(level[u] + 1 - level[v]))
    return g


def classify(tm: TransitionMatrix) -> ChainClassification:
    """Communicating classes, recurrence, absorption and periodicity.

    An edge i -> j exists when ``P_ij > 1e-12``. In a finite chain a state is
    recurrent exactly when its class is closed. A class with no cycles at all
    (a transient singleton without a self-loop) reports period 0.
    """
    support = tm.p > EDGE_TOL
    reach = _reachability(support)
    mutual = reach & reach.T
    n = tm.n_states
    seen: set[int] = set()
    classes: list[list[int]] = []
    for i in range(n):
        if i in seen:
            continue
        members = [int(j) for j in np.flatnonzero(mutual[i])]
        seen.update(members)
        classes.append(members)

    recurrent: set[str] = set()
    periods = []
    aperiodic = True
    for members in classes:
        outside = np.setdiff1d(np.arange(n), members)
        closed = not support[np.ix_(members, outside)].any()
        period = _period(members, support)
        periods.append(period)
        if closed:
            recurrent.update(tm.states[m] for m in members)
            aperiodic = aperiodic and period == 1
    absorbing = {s for i, s in enumerate(tm.states) if tm.p[i, i] >= 1.0 - ABSORBING_TOL}

    return ChainClassification(
        irreducible=len(classes) == 1,
        aperiodic=aperiodic,
        recurrent_states=frozenset(recurrent),
        absorbing_states=frozenset(absorbing),
        communicating_classes=tuple(frozenset(tm.states[m] for m in c) for c in classes),
        periods=tuple(periods),
    )


def stationary_distribution(tm: TransitionMatrix) -> StationaryDistribution:
    """Unique limiting distribution of an irreducible aperiodic chain.

    Two states use ``pi_0 = P10 / (P01 + P10)``. Larger chains solve
    ``pi P = pi`` with the last balance equation replaced by ``sum(pi) = 1``,
    then confirm the answer is a fixed point under ten further steps.
    """
    info = classify(tm)
    if not info.irreducible:
        raise NoUniqueLimitError(
            f"chain has {len(info.communicating_classes)} communicating classes"
        )
    if not info.aperiodic:
        raise NoUniqueLimitError(f"chain is periodic with period {info.periods[0]}")
    p = tm.p
    n = tm.n_states
    if n == 1:
        pi = np.array([1.0])
    elif n == 2:
        a, b = p[0, 1], p[1, 0]
        pi = np.array([b, a]) / (a + b)
    else:
        system = np.array(p.T - np.eye(n))
        system[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        pi = np.asarray(solve_linear(system, rhs)).ravel()
        walked = pi.copy()
        for _ in range(10):
            walked = walked @ p
        drift = float(np.max(np.abs(walked - pi)))
        if drift > 1e-6:
            raise ArithmeticError(f"stationary solve is not a fixed point (drift {drift:.3g})")
    pi = np.clip(pi, 0.0, 1.0)
    pi = pi / pi.sum()
    pi.setflags(write=False)
    return StationaryDistribution(tm.states, pi)


def limiting_matrix(tm: TransitionMatrix) -> TransitionMatrix:
    pi = stationary_distribution(tm).pi
    return TransitionMatrix(tm.states, np.tile(pi, (tm.n_states, 1)))


def expected_sojourn(tm: TransitionMatrix, state) -> float:
    """Mean number of consecutive years spent in ``state`` once entered: ``1 / (1 - P_ii)``."""
    i = tm.index(state)
    stay = tm.p[i, i]
    if stay >= 1.0 - ABSORBING_TOL:
        raise InfiniteSojournError(f"state {state!r} is absorbing")
    return float(1.0 / (1.0 - stay))


def sojourn_from_limit(tm: TransitionMatrix, pi: StationaryDistribution) -> dict[str, float]:
    """Two-state holding times written through the limiting probabilities.

    State 0 uses ``pi_0 / (pi_1 P10)`` and state 1 uses
    ``(1 - pi_0) / (pi_1 P10)``. With an exact ``pi`` both reduce to
    ``1 / (1 - P_ii)`` by the balance ``pi_0 P01 = pi_1 P10``; with a rounded
    ``pi`` they reproduce the figures of a hand calculation.
    """
    if tm.n_states != 2:
        raise DimensionError("sojourn_from_limit is defined for two-state chains")
    p10 = tm.p[1, 0]
    pi0, pi1 = float(pi.pi[0]), float(pi.pi[1])
    return {
        tm.states[0]: float(pi0 / (pi1 * p10)),
        tm.states[1]: float((1.0 - pi0) / (pi1 * p10)),
    }


def convergence_horizon(tm: TransitionMatrix, tol: float = 0.005) -> int:
    """Smallest k with ``max |P**k - P**inf| < tol`` (entrywise max-norm)."""
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol!r}")
    limit = limiting_matrix(tm).p
    pk = np.eye(tm.n_states)
    for k in range(HORIZON_CAP + 1):
        if np.max(np.abs(pk - limit)) < tol:
            return k
        pk = pk @ tm.p
    raise ConvergenceError(f"no k <= {HORIZON_CAP} brings P**k within {tol} of the limit")


def second_eigenvalue(tm: TransitionMatrix) -> float:
    if tm.n_states != 2:
        raise DimensionError("second_eigenvalue is defined for two-state chains")
    return float(tm.p[0, 0] + tm.p[1, 1] - 1.0)


def absorption_probabilities(tm: TransitionMatrix) -> AbsorptionResult:
    """Absorption probabilities ``B = N R`` and mean absorption times ``N 1``.

    ``N = (I - T)^-1`` is the fundamental matrix over the transient states,
    ``T`` the transient-to-transient block and ``R`` the transient-to-absorbing
    block.
    """
    info = classify(tm)
    absorbing = [i for i, s in enumerate(tm.states) if s in info.absorbing_states]
    if not absorbing:
        raise NoAbsorbingStateError("chain has no absorbing state")
    transient = [i for i in range(tm.n_states) if i not in absorbing]
    reach = _reachability(tm.p > EDGE_TOL)
    trapped = [tm.states[i] for i in transient if not reach[i, absorbing].any()]
    if trapped:
        raise NonAbsorbingChainError(f"states {trapped} can never reach an absorbing state")

    t_block = tm.p[np.ix_(transient, transient)]
    r_block = tm.p[np.ix_(transient, absorbing)]
    if transient:
        lhs = identity(len(transient)) - t_block
        fundamental = solve_linear(lhs, identity(len(transient)))
        b = solve_linear(lhs, r_block)
        steps = np.asarray(solve_linear(lhs, np.ones(len(transient)))).ravel()
    else:
        fundamental = np.zeros((0, 0))
        b = np.zeros((0, len(absorbing)))
        steps = np.zeros(0)
    steps = np.array(steps)
    steps.setflags(write=False)
    return AbsorptionResult(
        transient_states=tuple(tm.states[i] for i in transient),
        absorbing_states=tuple(tm.states[i] for i in absorbing),
        b=b,
        expected_steps=steps,
        fundamental=fundamental,
    )


def chapman_kolmogorov(tm: TransitionMatrix, k: int, r: int) -> np.ndarray:
    """``P**(k-r) @ P**r`` for ``0 <= r <= k``; equals ``P**k``."""
    if not 0 <= r <= k:
        raise ValueError(f"need 0 <= r <= k, got r={r}, k={k}")
    return mat_mul(mat_pow(tm.p, k - r), mat_pow(tm.p, r))


def return_probability_partial_sum(tm: TransitionMatrix, state, terms: int) -> float:
    """``sum_{k=1}^{terms} P**k[i, i]``; grows without bound for a recurrent state."""
    i = tm.index(state)
    pk = np.eye(tm.n_states)
    total = 0.0
    for _ in range(terms):
        pk = pk @ tm.p
        total += pk[i, i]
    return total

