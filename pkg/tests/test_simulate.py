import numpy as np
import pytest

from transferchain.errors import InsufficientDataError, LabelError
from transferchain.markov import TransitionMatrix, estimate_from_counts, expected_sojourn, k_step
from transferchain.numerics import chi_square_sf
from transferchain.simulate import (
    SimulationConfig,
    empirical_sojourn_mean,
    empirical_sojourn_stderr,
    empirical_transition_table,
    generate_paths,
    mix64,
    plan_keys,
    simulate_trajectories,
    uniforms,
)

HALF = TransitionMatrix.from_array([[0.5, 0.5], [0.5, 0.5]])
FLIP = TransitionMatrix.from_array([[0.0, 1.0], [1.0, 0.0]])
STAY = TransitionMatrix.from_array(np.eye(2))


@pytest.fixture(scope="module")
def big_run():
    from transferchain.contingency import ContingencyTable

    tm = estimate_from_counts(ContingencyTable.from_counts([[31, 8], [19, 55]]))
    return tm, simulate_trajectories(tm, SimulationConfig(seed=2024, n_plans=10**6, horizon_years=11, initial_state="0"))


class TestGenerator:
    def test_splitmix_reference_values(self):
        # first outputs of SplitMix64 seeded with 0 (reference C implementation)
        state = np.array([0], dtype=np.uint64)
        outs = []
        for _ in range(3):
            with np.errstate(over="ignore"):
                state = state + np.uint64(0x9E3779B97F4A7C15)
            outs.append(int(mix64(state)[0]))
        assert outs == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]

    def test_uniform_range_and_balance(self):
        keys = plan_keys(99, np.arange(200_000, dtype=np.uint64))
        u = uniforms(keys, 3)
        assert u.min() >= 0.0 and u.max() < 1.0
        counts = np.bincount((u * 20).astype(int), minlength=20)
        expected = u.size / 20
        stat = float(((counts - expected) ** 2 / expected).sum())
        assert chi_square_sf(stat, 19) > 1e-4

    def test_streams_differ_across_seeds_and_plans(self):
        a = plan_keys(1, np.arange(1000, dtype=np.uint64))
        b = plan_keys(2, np.arange(1000, dtype=np.uint64))
        assert np.unique(a).size == 1000
        assert not np.any(a == b)

    def test_seed_range(self):
        with pytest.raises(ValueError):
            SimulationConfig(seed=-1, n_plans=1, horizon_years=1)
        SimulationConfig(seed=2**64 - 1, n_plans=1, horizon_years=1)


class TestDeterminism:
    def test_repeat_is_identical(self, table1_chain):
        cfg = SimulationConfig(seed=7, n_plans=150_000, horizon_years=12, initial_state="1")
        a = simulate_trajectories(table1_chain, cfg)
        b = simulate_trajectories(table1_chain, cfg)
        assert a == b and a.digest() == b.digest()

    def test_parallel_matches_serial(self, table1_chain):
        cfg = SimulationConfig(seed=7, n_plans=150_000, horizon_years=12, initial_state="1")
        assert simulate_trajectories(table1_chain, cfg, workers=4) == simulate_trajectories(table1_chain, cfg)

    def test_paths_depend_only_on_plan_index(self, table1_chain):
        cfg = SimulationConfig(seed=3, n_plans=1000, horizon_years=9)
        full = generate_paths(table1_chain, cfg)
        np.testing.assert_array_equal(generate_paths(table1_chain, cfg, 250, 600), full[250:600])

    def test_seed_changes_output(self, table1_chain):
        a = simulate_trajectories(table1_chain, SimulationConfig(1, 5000, 5))
        b = simulate_trajectories(table1_chain, SimulationConfig(2, 5000, 5))
        assert a != b


class TestStats:
    def test_identity_chain(self):
        stats = simulate_trajectories(STAY, SimulationConfig(5, 1000, 6, initial_state="0"))
        np.testing.assert_array_equal(stats.occupancy[:, 0], 1.0)
        table = empirical_transition_table(stats)
        assert table.counts[0, 1] == table.counts[1, 0] == 0

    def test_bookkeeping(self, table1_chain):
        cfg = SimulationConfig(11, 20_000, 15, initial_distribution=(0.3, 0.7))
        stats = simulate_trajectories(table1_chain, cfg)
        np.testing.assert_allclose(stats.occupancy.sum(axis=1), 1.0, atol=1e-9)
        assert stats.transition_counts.sum() == cfg.n_plans * (cfg.horizon_years - 1)
        assert stats.triple_counts.sum() == cfg.n_plans * (cfg.horizon_years - 2)
        years = np.arange(stats.sojourn_histogram.shape[1])
        total = (stats.sojourn_histogram @ years).sum() + (stats.censored_histogram @ years).sum()
        assert total == cfg.n_plans * cfg.horizon_years
        assert stats.censored_histogram.sum() == cfg.n_plans
        assert abs(stats.initial_counts[0] / cfg.n_plans - 0.3) < 4 * np.sqrt(0.21 / cfg.n_plans)

    def test_single_plan_two_years(self, table1_chain):
        stats = simulate_trajectories(table1_chain, SimulationConfig(0, 1, 2, initial_state="0"))
        table = empirical_transition_table(stats)
        assert table.counts.sum() == 1 and table.counts.max() == 1

    def test_unknown_initial_state(self, table1_chain):
        with pytest.raises(LabelError):
            simulate_trajectories(table1_chain, SimulationConfig(0, 10, 3, initial_state="x"))

    def test_k_step_frequencies(self, big_run):
        tm, stats = big_run
        n = stats.n_plans
        for k in range(stats.horizon_years):
            exact = k_step(tm, k).p[0]
            freq = stats.k_step_frequency[0, k]
            se = np.sqrt(exact * (1 - exact) / n)
            assert np.all(np.abs(freq - exact) <= 4 * se + 1e-12)
        assert abs(stats.k_step_frequency[0, 10, 0] - 0.557) < 3 * np.sqrt(0.557 * 0.443 / n) + 0.0005
        assert np.all(np.isnan(stats.k_step_frequency[1]))

    def test_round_trip_estimate(self, big_run):
        tm, stats = big_run
        again = estimate_from_counts(empirical_transition_table(stats))
        assert np.max(np.abs(again.p - tm.p)) < 0.005

    def test_markov_property(self, big_run):
        tm, stats = big_run
        c = stats.triple_counts
        for i in range(2):
            for j in range(2):
                # compare P(j | i, h=0) against P(j | i, h=1)
                n0, n1 = c[0, i].sum(), c[1, i].sum()
                p0, p1 = c[0, i, j] / n0, c[1, i, j] / n1
                pooled = (c[0, i, j] + c[1, i, j]) / (n0 + n1)
                se = np.sqrt(pooled * (1 - pooled) * (1 / n0 + 1 / n1))
                assert abs(p0 - p1) <= 4 * se
                assert abs(p0 - tm.p[i, j]) <= 4 * np.sqrt(tm.p[i, j] * (1 - tm.p[i, j]) / n0)


@pytest.fixture(scope="module")
def long_run():
    from transferchain.contingency import ContingencyTable

    tm = estimate_from_counts(ContingencyTable.from_counts([[31, 8], [19, 55]]))
    stats = simulate_trajectories(tm, SimulationConfig(seed=77, n_plans=10**5, horizon_years=100, initial_state="0"))
    return tm, stats


class TestSojourn:
    @pytest.mark.parametrize("state", ["0", "1"])
    def test_table1_chain(self, long_run, state):
        tm, stats = long_run
        mean = empirical_sojourn_mean(stats, state)
        se = empirical_sojourn_stderr(stats, state)
        assert abs(mean - expected_sojourn(tm, state)) < 3 * se

    def test_completed_only_mean_is_biased_low(self, long_run):
        tm, stats = long_run
        naive = empirical_sojourn_mean(stats, "0", censoring="exclude")
        se = empirical_sojourn_stderr(stats, "0", censoring="exclude")
        assert expected_sojourn(tm, "0") - naive > 10 * se

    def test_fair_coin(self):
        stats = simulate_trajectories(HALF, SimulationConfig(4, 50_000, 30))
        for s in "01":
            assert abs(empirical_sojourn_mean(stats, s) - 2.0) < 3 * empirical_sojourn_stderr(stats, s)

    def test_deterministic_cycle(self):
        stats = simulate_trajectories(FLIP, SimulationConfig(4, 100, 10))
        for s in "01":
            samples = stats.sojourn_samples(s)
            assert samples.size > 0 and np.all(samples == 1)
            assert empirical_sojourn_mean(stats, s, censoring="exclude") == 1.0
            assert empirical_sojourn_mean(stats, s) == 1.0

    def test_insufficient(self):
        stats = simulate_trajectories(STAY, SimulationConfig(4, 100, 10, initial_state="0"))
        with pytest.raises(InsufficientDataError):
            empirical_sojourn_mean(stats, "0")
