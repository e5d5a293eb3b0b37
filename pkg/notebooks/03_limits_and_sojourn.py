"""
Long-run behaviour: classification, limit, holding times, horizon
=================================================================
"""
import numpy as np

from transferchain.csvio import bundled_table1_path, parse_contingency_csv
from transferchain.markov import (
    StationaryDistribution,
    classify,
    convergence_horizon,
    estimate_from_counts,
    expected_sojourn,
    limiting_matrix,
    return_probability_partial_sum,
    round_transition_matrix,
    sojourn_from_limit,
    stationary_distribution,
)

tm = estimate_from_counts(parse_contingency_csv(bundled_table1_path()))
info = classify(tm)
print("irreducible:", info.irreducible, " aperiodic:", info.aperiodic,
      " recurrent:", sorted(info.recurrent_states))

# Recurrence shows up as divergent sums of return probabilities.
for terms in (10, 100, 1000):
    print(terms, "terms:", round(return_probability_partial_sum(tm, "payer", terms), 2))

pi = stationary_distribution(tm)
print("stationary:", pi.as_dict())
print("limiting matrix:\n", limiting_matrix(tm).p.round(3))

for s in tm.states:
    print(f"mean years as {s}: {expected_sojourn(tm, s):.4f}")

# The same holding times written through 3-decimal limiting probabilities
rounded = round_transition_matrix(tm)
pi3 = StationaryDistribution(pi.states, np.round(stationary_distribution(rounded).pi, 3))
print("via rounded limit:", {s: round(v, 2) for s, v in sojourn_from_limit(rounded, pi3).items()})

for tol in (0.05, 0.01, 0.005, 0.001):
    print(f"within {tol} of the limit after {convergence_horizon(tm, tol)} years")
