"""Contingency tables and the Pearson chi-square test of independence."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTableError, DimensionError, LabelError
from .numerics import as_matrix, chi_square_sf


class Correction(str, enum.Enum):
    NONE = "none"
    YATES = "yates"


class Decision(str, enum.Enum):
    REJECT = "reject"
    FAIL_TO_REJECT = "fail_to_reject"


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Nonnegative integer counts with ordered row and column labels."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts)
        if counts.ndim != 2:
            raise DimensionError(f"counts must be 2-D, got shape {counts.shape}")
        if counts.size and not np.all(np.equal(np.mod(counts, 1), 0)):
            raise ValueError("counts must be integers")
        counts = counts.astype(np.int64)
        rows, cols = tuple(map(str, self.row_labels)), tuple(map(str, self.col_labels))
        if counts.shape != (len(rows), len(cols)):
            raise DimensionError(
                f"counts shape {counts.shape} does not match {len(rows)} x {len(cols)} labels"
            )
        if len(rows) < 2 or len(cols) < 2:
            raise DimensionError("a contingency table needs at least 2 rows and 2 columns")
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise LabelError("row and column labels must be unique")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if counts.sum() < 1:
            raise DegenerateTableError("table has no observations")
        counts.setflags(write=False)
        object.__setattr__(self, "row_labels", rows)
        object.__setattr__(self, "col_labels", cols)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_counts(cls, counts, labels=None, col_labels=None) -> "ContingencyTable":
        """Build a table, defaulting labels to ``"0", "1", ...``."""
        counts = np.asarray(counts)
        rows = labels if labels is not None else [str(i) for i in range(counts.shape[0])]
        cols = col_labels if col_labels is not None else (
            labels if labels is not None else [str(j) for j in range(counts.shape[1])]
        )
        return cls(tuple(rows), tuple(cols), counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def __eq__(self, other):
        if not isinstance(other, ContingencyTable):
            return NotImplemented
        return (
            self.row_labels == other.row_labels
            and self.col_labels == other.col_labels
            and np.array_equal(self.counts, other.counts)
        )

    def __hash__(self):
        return hash((self.row_labels, self.col_labels, self.counts.tobytes()))


@dataclass(frozen=True, eq=False)
class TestResult:
    statistic: float
    df: int
    p_value: float
    correction: Correction
    expected: np.ndarray

    __test__ = False  # keep pytest from collecting this class


def expected_counts(table: ContingencyTable) -> np.ndarray:
    """Expected cell counts under independence, ``row_total * col_total / N``."""
    rows, cols = table.row_totals, table.col_totals
    if np.any(rows == 0) or np.any(cols == 0):
        raise DegenerateTableError("every row and column total must be positive")
    return as_matrix(np.outer(rows, cols) / table.total)


def chi_square_test(table: ContingencyTable, correction: Correction | str = Correction.NONE) -> TestResult:
    """Pearson chi-square test of independence.

    With ``correction="yates"`` each ``|O - E|`` is reduced by 0.5 (floored at
    zero) before squaring.
    """
    correction = Correction(correction)
    expected = expected_counts(table)
    dev = np.abs(table.counts - expected)
    if correction is Correction.YATES:
        dev = np.maximum(dev - 0.5, 0.0)
    statistic = float(np.sum(dev**2 / expected))
    r, c = table.counts.shape
    df = (r - 1) * (c - 1)
    return TestResult(statistic, df, chi_square_sf(statistic, df), correction, expected)


def independence_decision(result: TestResult, alpha: float = 0.05) -> Decision:
    """Reject independence iff ``p_value < alpha``; a tie keeps the null."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return Decision.REJECT if result.p_value < alpha else Decision.FAIL_TO_REJECT
