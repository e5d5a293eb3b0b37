"""The analysis report: assembly, JSON round-trip and a plain-text rendering."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .contingency import ContingencyTable, chi_square_test, independence_decision
from .errors import InfiniteSojournError
from .markov import (
    StationaryDistribution,
    classify,
    convergence_horizon,
    eig_two_state,
    estimate_from_counts,
    expected_sojourn,
    k_step,
    limiting_matrix,
    round_transition_matrix,
    sojourn_from_limit,
    stationary_distribution,
)

SCHEMA_VERSION = 1
DEFAULT_STEPS = (1, 8, 10)


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


@dataclass(frozen=True)
class AnalysisReport:
    """Everything ``analyze`` computes, held as JSON-ready values.

    Field order is the key order of the JSON output.
    """

    schema: int
    tool_version: str
    input_digest: str
    settings: dict
    table: dict
    test: dict
    transition: dict
    k_step_results: list
    eigen: dict | None
    classification: dict
    stationary: dict
    limiting: list
    sojourn: dict
    horizon: dict

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisReport":
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in data]
        if missing:
            raise ValueError(f"report is missing {missing}")
        return cls(**{n: data[n] for n in names})


def render_json(payload) -> str:
    if isinstance(payload, AnalysisReport):
        payload = payload.to_dict()
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def parse_report(text: str) -> AnalysisReport:
    return AnalysisReport.from_dict(json.loads(text))


def build_report(
    table: ContingencyTable,
    input_digest: str = "",
    correction: str = "none",
    alpha: float = 0.05,
    paper_rounding: bool = False,
    tol: float = 0.005,
    steps=DEFAULT_STEPS,
) -> AnalysisReport:
    """Run the whole pipeline on a table of year-to-year counts.

    With ``paper_rounding`` the transition matrix is rounded to three decimals
    before anything is derived from it, and two-state holding times are
    computed from the three-decimal limiting probabilities.
    """
    result = chi_square_test(table, correction)
    decision = independence_decision(result, alpha)
    tm = estimate_from_counts(table)
    if paper_rounding:
        tm = round_transition_matrix(tm, 3)

    info = classify(tm)
    pi = stationary_distribution(tm)
    if paper_rounding and tm.n_states == 2:
        rounded_pi = StationaryDistribution(pi.states, np.round(pi.pi, 3))
        sojourn = sojourn_from_limit(tm, rounded_pi)
    else:
        sojourn = {}
        for s in tm.states:
            try:
                sojourn[s] = expected_sojourn(tm, s)
            except InfiniteSojournError:
                sojourn[s] = None

    eigen = None
    if tm.n_states == 2:
        es = eig_two_state(tm.p)
        eigen = {"eigenvalues": list(es.eigenvalues), "q": _floats(es.q), "q_inv": _floats(es.q_inv)}

    return AnalysisReport(
        schema=SCHEMA_VERSION,
        tool_version=__version__,
        input_digest=input_digest,
        settings={
            "correction": str(result.correction.value),
            "alpha": float(alpha),
            "paper_rounding": bool(paper_rounding),
        },
        table={
            "row_labels": list(table.row_labels),
            "col_labels": list(table.col_labels),
            "counts": table.counts.tolist(),
        },
        test={
            "statistic": result.statistic,
            "df": result.df,
            "p_value": result.p_value,
            "correction": result.correction.value,
            "decision": decision.value,
            "expected": _floats(result.expected),
        },
        transition={
            "states": list(tm.states),
            "p": _floats(tm.p),
            "p_3dp": _floats(np.round(tm.p, 3)),
        },
        k_step_results=[{"k": int(k), "p": _floats(k_step(tm, k).p)} for k in steps],
        eigen=eigen,
        classification=classification_dict(info),
        stationary={"states": list(pi.states), "pi": _floats(pi.pi)},
        limiting=_floats(limiting_matrix(tm).p),
        sojourn=sojourn,
        horizon={"years": convergence_horizon(tm, tol), "tol": float(tol)},
    )


def classification_dict(info) -> dict:
    return {
        "irreducible": info.irreducible,
        "aperiodic": info.aperiodic,
        "recurrent_states": sorted(info.recurrent_states),
        "absorbing_states": sorted(info.absorbing_states),
        "communicating_classes": [sorted(c) for c in info.communicating_classes],
    }


def format_matrix(states, p, decimals: int = 3, indent: str = "  ") -> str:
    width = max(len(s) for s in states)
    cell = decimals + 4
    head = indent + " " * width + " " + " ".join(s.rjust(cell) for s in states)
    rows = [
        indent + s.ljust(width) + " " + " ".join(f"{x:{cell}.{decimals}f}" for x in row)
        for s, row in zip(states, p)
    ]
    return "\n".join([head, *rows])


def render_human(report: AnalysisReport) -> str:
    t, tr = report.test, report.transition
    states = tr["states"]
    out = [
        f"Pearson chi-square test ({t['correction']} correction)",
        f"  statistic = {t['statistic']:.4f}, df = {t['df']}, p = {t['p_value']:.3g}",
        f"  decision at alpha = {report.settings['alpha']}: {t['decision']}",
        "",
        "One-step transition matrix" + (" (rounded to 3 decimals)" if report.settings["paper_rounding"] else ""),
        format_matrix(states, tr["p"]),
    ]
    for item in report.k_step_results:
        if item["k"] == 1:
            continue
        out += ["", f"{item['k']}-step transition matrix", format_matrix(states, item["p"])]
    if report.eigen is not None:
        out += ["", f"Eigenvalues: 1, {report.eigen['eigenvalues'][1]:.3f}"]
    c = report.classification
    out += [
        "",
        f"Irreducible: {c['irreducible']}; aperiodic: {c['aperiodic']}; "
        f"recurrent: {', '.join(c['recurrent_states']) or '-'}",
        "",
        "Limiting matrix",
        format_matrix(states, report.limiting),
        "Stationary: " + ", ".join(f"{s} = {v:.3f}" for s, v in zip(states, report.stationary["pi"])),
        "",
        "Mean years in state: "
        + ", ".join(f"{s} = {'inf' if v is None else f'{v:.2f}'}" for s, v in report.sojourn.items()),
        f"Years to come within {report.horizon['tol']} of the limit: {report.horizon['years']}",
    ]
    return "\n".join(out) + "\n"
