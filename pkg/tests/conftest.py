import numpy as np
import pytest

from transferchain.contingency import ContingencyTable
from transferchain.markov import TransitionMatrix, estimate_from_counts

TABLE1 = [[31, 8], [19, 55]]


@pytest.fixture
def table1():
    return ContingencyTable.from_counts(TABLE1, ["0", "1"])


@pytest.fixture
def table1_chain(table1):
    return estimate_from_counts(table1)


def random_stochastic(rng, n, zero_prob=0.0):
    p = rng.random((n, n)) + 1e-3
    if zero_prob:
        p[rng.random((n, n)) < zero_prob] = 0.0
        p[np.arange(n), rng.integers(0, n, n)] += 0.5
    return TransitionMatrix.from_array(p / p.sum(axis=1, keepdims=True))


_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion reported in the run summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE.append((marker.args[0], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {label}")
