"""
From counts to multi-year projections
=====================================

Estimate the one-step matrix, project it forward, and check the matrix
power against the two-state spectral form.
"""
import numpy as np

from transferchain.csvio import bundled_table1_path, parse_contingency_csv
from transferchain.markov import estimate_from_counts, k_step, round_transition_matrix
from transferchain.numerics import eig_two_state

tm = estimate_from_counts(parse_contingency_csv(bundled_table1_path()))
print("one-step matrix (full precision):")
print(tm.p)

# Working from the 3-decimal matrix reproduces hand calculations exactly.
rounded = round_transition_matrix(tm, 3)
for k in (1, 2, 8, 10):
    print(f"P^{k}: exact {np.round(k_step(tm, k).p, 3).tolist()}  "
          f"3-dp input {np.round(k_step(rounded, k).p, 3).tolist()}")

es = eig_two_state(tm.p)
print("eigenvalues:", es.eigenvalues)
print("Q =", es.q.round(3).tolist())
print("max |Q diag(1, lam^10) Q^-1 - P^10| =", np.abs(es.power(10) - k_step(tm, 10).p).max())
