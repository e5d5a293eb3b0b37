import itertools
from fractions import Fraction

import numpy as np
import pytest

from transferchain.markov import StationaryDistribution, absorption_probabilities, classify
from transferchain.simulate import simulate_absorption
from transferchain.validation import (
    CRAPS_STATES,
    build_craps_chain,
    compare_with_pool,
    craps_win_probability,
    dice_ways,
)

WIN = Fraction(244, 495)


def pass_line_by_enumeration():
    """Exact rational win probability from the 36 come-out outcomes."""
    rolls = [a + b for a, b in itertools.product(range(1, 7), repeat=2)]
    total = Fraction(0)
    for r in rolls:
        if r in (7, 11):
            total += Fraction(1, 36)
        elif r in (4, 5, 6, 8, 9, 10):
            make, seven = rolls.count(r), rolls.count(7)
            total += Fraction(1, 36) * Fraction(make, make + seven)
    return total


def test_enumeration_oracle():
    assert pass_line_by_enumeration() == WIN
    closed = Fraction(2, 9) + 2 * (
        Fraction(3, 36) * Fraction(3, 9) + Fraction(4, 36) * Fraction(4, 10) + Fraction(5, 36) * Fraction(5, 11)
    )
    assert closed == WIN


def test_dice_ways():
    assert [dice_ways(k) for k in range(2, 13)] == [1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1]


def test_chain_rows():
    chain = build_craps_chain()
    assert chain.states == CRAPS_STATES
    assert chain.prob("comeout", "win") == pytest.approx(8 / 36, abs=1e-15)
    assert chain.prob("comeout", "lose") == pytest.approx(4 / 36, abs=1e-15)
    assert chain.prob("point6", "point6") == pytest.approx(25 / 36, abs=1e-15)
    for k, ways in zip((4, 5, 6, 8, 9, 10), (3, 4, 5, 5, 4, 3)):
        assert chain.prob("comeout", f"point{k}") == ways / 36
        assert chain.prob(f"point{k}", "win") == ways / 36
        assert chain.prob(f"point{k}", "lose") == 6 / 36
    assert np.max(np.abs(chain.p.sum(axis=1) - 1)) <= 1e-15


def test_classification():
    info = classify(build_craps_chain())
    assert info.absorbing_states == {"win", "lose"}
    assert info.recurrent_states == {"win", "lose"}
    assert info.transient_states == set(CRAPS_STATES) - {"win", "lose"}


def test_win_probability():
    assert abs(craps_win_probability() - 244 / 495) < 1e-12


def test_absorption_rows():
    res = absorption_probabilities(build_craps_chain())
    assert res.probability("comeout", "win") + res.probability("comeout", "lose") == pytest.approx(1, abs=1e-12)
    assert res.probability("point4", "win") == pytest.approx(res.probability("point10", "win"), abs=1e-15)
    assert res.probability("point5", "win") == pytest.approx(4 / 10, abs=1e-12)
    assert res.probability("point6", "win") == pytest.approx(5 / 11, abs=1e-12)


def test_simulated_pass_line():
    n = 10**7
    tally = simulate_absorption(build_craps_chain(), "comeout", n, seed=495)
    assert tally.unabsorbed == 0
    p = 244 / 495
    assert abs(tally.frequency("win") - p) <= 4 * np.sqrt(p * (1 - p) / n)
    assert tally.frequency("win") + tally.frequency("lose") == 1.0


def test_compare_with_pool(table1_chain):
    from transferchain.markov import stationary_distribution

    report = compare_with_pool(stationary_distribution(table1_chain))
    assert report.receiver_probability == pytest.approx(0.444, abs=1e-3)
    assert report.craps_win == pytest.approx(0.4929, abs=1e-4)
    assert report.difference == pytest.approx(0.0489, abs=1e-3)
    assert report.craps_advantage == report.difference


def test_compare_equal_case():
    pi = StationaryDistribution(("payer", "receiver"), np.array([1 - 244 / 495, 244 / 495]))
    assert abs(compare_with_pool(pi).difference) < 1e-12


def test_compare_certain_receiver():
    pi = StationaryDistribution(("payer", "receiver"), np.array([0.0, 1.0]))
    report = compare_with_pool(pi)
    assert report.difference == pytest.approx(1 - 244 / 495, abs=1e-15)
    assert report.craps_advantage == pytest.approx(244 / 495 - 1, abs=1e-15)
