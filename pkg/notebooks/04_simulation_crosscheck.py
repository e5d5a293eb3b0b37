"""
Monte Carlo cross-check
=======================

Simulate a million plans that all start as payers and compare the empirical
frequencies with the analytic answers.
"""
import time

import numpy as np

from transferchain.csvio import bundled_table1_path, parse_contingency_csv
from transferchain.markov import estimate_from_counts, expected_sojourn, k_step, stationary_distribution
from transferchain.simulate import (
    SimulationConfig,
    empirical_sojourn_mean,
    empirical_sojourn_stderr,
    empirical_transition_table,
    simulate_trajectories,
)

tm = estimate_from_counts(parse_contingency_csv(bundled_table1_path()))
config = SimulationConfig(seed=2014, n_plans=1_000_000, horizon_years=41, initial_state="payer")

t0 = time.perf_counter()
stats = simulate_trajectories(tm, config, workers=4)
print(f"simulated in {time.perf_counter() - t0:.1f} s, digest {stats.digest()[:16]}")

print("year 10 from payer: simulated", stats.k_step_frequency[0, 10].round(4),
      "exact", k_step(tm, 10).p[0].round(4))
print("year 40 occupancy:", stats.occupancy[40].round(4),
      "stationary", stationary_distribution(tm).pi.round(4))

for s in tm.states:
    adj = empirical_sojourn_mean(stats, s)
    naive = empirical_sojourn_mean(stats, s, censoring="exclude")
    print(f"{s}: exact {expected_sojourn(tm, s):.3f}, censoring-adjusted {adj:.3f} "
          f"(se {empirical_sojourn_stderr(stats, s):.3f}), completed runs only {naive:.3f}")

again = estimate_from_counts(empirical_transition_table(stats))
print("re-estimated one-step matrix:\n", np.round(again.p, 4))
