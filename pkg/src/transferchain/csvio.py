"""Readers for the two CSV inputs: a contingency table and a transition matrix.

Both use the same grid layout::

    corner,a,b
    a,31,8
    b,19,55

The first row holds column labels, the first column row labels, and the
top-left cell is ignored. Labels are limited to ``[A-Za-z0-9_-]``; quoting
is not supported. Blank lines are skipped.
"""
from __future__ import annotations

import csv
import hashlib
import io
import re
from importlib import resources
from pathlib import Path

import numpy as np

from .contingency import ContingencyTable
from .errors import DegenerateTableError, DimensionError, ParseError, StochasticityError
from .markov import TransitionMatrix

LABEL_RE = re.compile(r"^[A-Za-z0-9_-]+$")
MATRIX_ROW_TOL = 1e-6


def bundled_table1_path() -> Path:
    return Path(str(resources.files("transferchain") / "data" / "table1.csv"))


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_text(path) -> str:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8") from exc


def _grid(text: str):
    """Split into ``(line_no, cells)`` rows and validate the label frame."""
    rows = []
    for line_no, cells in enumerate(csv.reader(io.StringIO(text), quoting=csv.QUOTE_NONE), start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        rows.append((line_no, [c.strip() for c in cells]))
    if not rows:
        raise ParseError("file is empty")
    header_line, header = rows[0]
    col_labels = header[1:]
    width = len(header)
    for col, label in enumerate(col_labels, start=2):
        if not LABEL_RE.match(label):
            raise ParseError(f"bad column label {label!r}", header_line, col)
    body = rows[1:]
    for line_no, cells in body:
        if len(cells) != width:
            raise ParseError(f"expected {width} cells, found {len(cells)}", line_no)
        if not LABEL_RE.match(cells[0]):
            raise ParseError(f"bad row label {cells[0]!r}", line_no, 1)
    if len(body) < 2 or len(col_labels) < 2:
        raise ParseError(
            f"need at least 2 rows and 2 columns, got {len(body)} x {len(col_labels)}",
            header_line,
        )
    return col_labels, body


def parse_contingency_text(text: str) -> ContingencyTable:
    col_labels, body = _grid(text)
    counts = []
    for line_no, cells in body:
        row = []
        for col, cell in enumerate(cells[1:], start=2):
            if not re.fullmatch(r"\+?\d+", cell):
                if re.fullmatch(r"-\d+", cell):
                    raise ParseError(f"negative count {cell}", line_no, col)
                raise ParseError(f"count must be a nonnegative integer, got {cell!r}", line_no, col)
            row.append(int(cell))
        counts.append(row)
    try:
        return ContingencyTable(tuple(c[0] for _, c in body), tuple(col_labels), np.array(counts))
    except (DimensionError, DegenerateTableError) as exc:
        raise ParseError(str(exc)) from exc
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def parse_contingency_csv(path) -> ContingencyTable:
    return parse_contingency_text(_read_text(path))


def read_matrix_text(text: str) -> tuple[TransitionMatrix, float]:
    """Parse a transition matrix and renormalise its rows.

    Returns the matrix and the largest absolute row-sum correction applied.
    Rows further than 1e-6 from summing to one raise ``StochasticityError``.
    """
    col_labels, body = _grid(text)
    row_labels = [c[0] for _, c in body]
    if len(row_labels) != len(col_labels):
        raise ParseError(f"matrix must be square, got {len(row_labels)} x {len(col_labels)}")
    if set(row_labels) != set(col_labels) or len(set(row_labels)) != len(row_labels):
        raise ParseError("row and column labels must name the same states")
    values = []
    for line_no, cells in body:
        row = []
        for col, cell in enumerate(cells[1:], start=2):
            try:
                x = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", line_no, col) from None
            if not np.isfinite(x):
                raise ParseError(f"not a finite number: {cell!r}", line_no, col)
            row.append(x)
        values.append(row)
    p = np.array(values)[:, [col_labels.index(r) for r in row_labels]]
    if np.any(p < 0) or np.any(p > 1):
        raise StochasticityError("transition probabilities must lie in [0, 1]")
    sums = p.sum(axis=1)
    delta = float(np.max(np.abs(sums - 1.0)))
    if delta > MATRIX_ROW_TOL:
        raise StochasticityError(f"row sums deviate from 1 by up to {delta:.3g}")
    return TransitionMatrix(tuple(row_labels), p / sums[:, np.newaxis]), delta


def read_matrix_csv(path) -> tuple[TransitionMatrix, float]:
    return read_matrix_text(_read_text(path))


def parse_matrix_csv(path) -> TransitionMatrix:
    return read_matrix_csv(path)[0]


def format_matrix_csv(tm: TransitionMatrix, corner: str = "state") -> str:
    """Inverse of :func:`parse_matrix_csv` at full double precision."""
    lines = [",".join([corner, *tm.states])]
    for label, row in zip(tm.states, tm.p):
        lines.append(",".join([label, *(repr(float(x)) for x in row)]))
    return "\n".join(lines) + "\n"
