"""
The pass line as an absorbing chain
===================================
"""
from transferchain.csvio import bundled_table1_path, parse_contingency_csv
from transferchain.markov import absorption_probabilities, estimate_from_counts, stationary_distribution
from transferchain.simulate import simulate_absorption
from transferchain.validation import build_craps_chain, compare_with_pool

chain = build_craps_chain()
res = absorption_probabilities(chain)
for start in res.transient_states:
    i = res.transient_states.index(start)
    print(f"{start:>8}: P(win) = {res.probability(start, 'win'):.6f}, "
          f"mean rolls = {res.expected_steps[i]:.3f}")

print("244/495 =", 244 / 495)
tally = simulate_absorption(chain, "comeout", 1_000_000, seed=7)
print("simulated:", tally.frequency("win"))

pi = stationary_distribution(estimate_from_counts(parse_contingency_csv(bundled_table1_path())))
print(compare_with_pool(pi).as_dict())
