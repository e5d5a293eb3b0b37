"""Command-line front end.

Every subcommand prints JSON (``--format json``, the default) or a short
text rendering (``--format human``). Errors go to stderr as a JSON object and
set a nonzero exit status specific to the error class.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .contingency import chi_square_test
from .csvio import bundled_table1_path, file_digest, parse_contingency_csv, read_matrix_csv
from .errors import InfiniteSojournError, InsufficientDataError, ParseError, TransferChainError
from .markov import (
    StationaryDistribution,
    classify,
    convergence_horizon,
    estimate_from_counts,
    expected_sojourn,
    k_step,
    limiting_matrix,
    round_transition_matrix,
    second_eigenvalue,
    sojourn_from_limit,
    stationary_distribution,
)
from .report import SCHEMA_VERSION, build_report, classification_dict, format_matrix, render_human, render_json
from .simulate import (
    SimulationConfig,
    empirical_sojourn_mean,
    empirical_sojourn_stderr,
    empirical_transition_table,
    simulate_trajectories,
)
from .validation import build_craps_chain, compare_with_pool, craps_win_probability

# Figures printed in the source analysis of the 2014-2015 data, three decimals unless noted.
PUBLISHED = {
    "p1": [[0.795, 0.205], [0.257, 0.743]],
    "p8": [[0.559, 0.441], [0.552, 0.448]],
    "p10": [[0.557, 0.443], [0.555, 0.445]],
    "p_inf": [[0.556, 0.444], [0.556, 0.444]],
    "pi": [0.556, 0.444],
    "second_eigenvalue": 0.538,
    "sojourn": [4.87, 3.89],
    "chi_square": 31.1584,
    "p_value_below": 0.00001,
    "craps_win": 0.493,
    "receiver_limit": 0.444,
}


def _envelope(command: str, body: dict) -> dict:
    return {"schema": SCHEMA_VERSION, "command": command, "tool_version": __version__, **body}


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


def cmd_analyze(args):
    table = parse_contingency_csv(args.input)
    report = build_report(
        table,
        input_digest=file_digest(args.input),
        correction=args.correction,
        alpha=args.alpha,
        paper_rounding=args.paper_rounding,
        tol=args.tol,
    )
    if args.format == "human":
        return render_human(report)
    return render_json(report)


def _load_matrix(args):
    tm, delta = read_matrix_csv(args.matrix)
    return tm, {"input_digest": file_digest(args.matrix), "renormalization_delta": delta}


def cmd_project(args):
    tm, meta = _load_matrix(args)
    pk = k_step(tm, args.years)
    if args.format == "human":
        return f"{args.years}-step transition matrix\n{format_matrix(tm.states, pk.p)}\n"
    return render_json(_envelope("project", {**meta, "states": list(tm.states), "years": args.years, "p": _floats(pk.p)}))


def cmd_stationary(args):
    tm, meta = _load_matrix(args)
    pi = stationary_distribution(tm)
    if args.format == "human":
        lines = [f"{s}: {v:.3f}" for s, v in zip(pi.states, pi.pi)]
        return "\n".join(["Stationary distribution", *lines]) + "\n"
    body = {
        **meta,
        "states": list(tm.states),
        "pi": _floats(pi.pi),
        "limiting": _floats(limiting_matrix(tm).p),
        "classification": classification_dict(classify(tm)),
    }
    return render_json(_envelope("stationary", body))


def cmd_sojourn(args):
    tm, meta = _load_matrix(args)
    years = {}
    for s in tm.states:
        try:
            years[s] = expected_sojourn(tm, s)
        except InfiniteSojournError:
            years[s] = None
    if args.format == "human":
        return "".join(f"{s}: {'inf' if v is None else f'{v:.2f}'} years\n" for s, v in years.items())
    return render_json(_envelope("sojourn", {**meta, "sojourn": years}))


def cmd_horizon(args):
    tm, meta = _load_matrix(args)
    years = convergence_horizon(tm, args.tol)
    if args.format == "human":
        return f"{years} years to come within {args.tol} of the limiting matrix\n"
    return render_json(_envelope("horizon", {**meta, "years": years, "tol": args.tol}))


def cmd_simulate(args):
    tm, meta = _load_matrix(args)
    config = SimulationConfig(args.seed, args.plans, args.years, initial_state=args.initial)
    stats = simulate_trajectories(tm, config, workers=args.workers)
    start = tm.index(config.initial_state or tm.states[0])
    sojourn = {}
    for s in tm.states:
        try:
            sojourn[s] = {
                "mean": empirical_sojourn_mean(stats, s),
                "stderr": empirical_sojourn_stderr(stats, s),
                "completed_runs": int(stats.sojourn_histogram[tm.index(s)].sum()),
            }
        except InsufficientDataError:
            sojourn[s] = None
    body = {
        **meta,
        "seed": args.seed,
        "plans": args.plans,
        "years": args.years,
        "initial": tm.states[start],
        "stats_digest": stats.digest(),
        "states": list(tm.states),
        "final_occupancy": _floats(stats.occupancy[-1]),
        "transition_counts": stats.transition_counts.tolist(),
        "k_step_frequency": _floats(stats.k_step_frequency[start]),
        "sojourn": sojourn,
    }
    if stats.transition_counts.sum() > 0 and np.all(stats.transition_counts.sum(axis=1) > 0):
        body["reestimated_p"] = _floats(estimate_from_counts(empirical_transition_table(stats)).p)
    if args.format == "human":
        lines = [
            f"{args.plans} plans x {args.years} years, seed {args.seed}, start {tm.states[start]}",
            "Occupancy in final year: "
            + ", ".join(f"{s} = {v:.4f}" for s, v in zip(tm.states, stats.occupancy[-1])),
        ]
        for s, v in sojourn.items():
            if v is not None:
                lines.append(f"Mean years in {s}: {v['mean']:.3f} (se {v['stderr']:.3f})")
        return "\n".join(lines) + "\n"
    return render_json(_envelope("simulate", body))


def _craps_and_pool(pi: StationaryDistribution) -> dict:
    chain = build_craps_chain()
    cmp = compare_with_pool(pi)
    return {
        "win_probability": craps_win_probability(),
        "win_fraction": str(Fraction(244, 495)),
        "states": list(chain.states),
        "comparison": cmp.as_dict(),
    }


def cmd_craps(args):
    table = parse_contingency_csv(args.input or bundled_table1_path())
    pi = stationary_distribution(estimate_from_counts(table))
    body = _craps_and_pool(pi)
    if args.format == "human":
        c = body["comparison"]
        return (
            f"Pass-line win probability: {body['win_probability']:.4f} (244/495)\n"
            f"Long-run probability of receiving funds: {c['receiver_probability']:.3f}\n"
            f"Difference: {c['difference']:.4f}\n"
        )
    return render_json(_envelope("craps", body))


def reproduce(path=None) -> dict:
    """Recompute every published figure from the bundled counts, both numerically and at 3 decimals."""
    path = path or bundled_table1_path()
    table = parse_contingency_csv(path)
    exact = estimate_from_counts(table)
    rounded = round_transition_matrix(exact, 3)
    test = chi_square_test(table)

    def matrices(tm):
        return {
            "p1": tm.p,
            "p8": k_step(tm, 8).p,
            "p10": k_step(tm, 10).p,
            "p_inf": limiting_matrix(tm).p,
        }

    ex, rd = matrices(exact), matrices(rounded)
    rows = []
    for key in ("p1", "p8", "p10", "p_inf"):
        rows.append({
            "quantity": key,
            "published": PUBLISHED[key],
            "exact": _floats(ex[key]),
            "paper_rounding": _floats(rd[key]),
            "exact_matches_3dp": bool(np.array_equal(np.round(ex[key], 3), PUBLISHED[key])),
            "paper_rounding_matches_3dp": bool(np.array_equal(np.round(rd[key], 3), PUBLISHED[key])),
        })
    pi_ex, pi_rd = stationary_distribution(exact), stationary_distribution(rounded)
    rows.append({
        "quantity": "pi",
        "published": PUBLISHED["pi"],
        "exact": _floats(pi_ex.pi),
        "paper_rounding": _floats(pi_rd.pi),
        "exact_matches_3dp": bool(np.array_equal(np.round(pi_ex.pi, 3), PUBLISHED["pi"])),
        "paper_rounding_matches_3dp": bool(np.array_equal(np.round(pi_rd.pi, 3), PUBLISHED["pi"])),
    })
    lam_ex, lam_rd = second_eigenvalue(exact), second_eigenvalue(rounded)
    rows.append({
        "quantity": "second_eigenvalue",
        "published": PUBLISHED["second_eigenvalue"],
        "exact": lam_ex,
        "paper_rounding": lam_rd,
        "exact_matches_3dp": round(lam_ex, 3) == PUBLISHED["second_eigenvalue"],
        "paper_rounding_matches_3dp": round(lam_rd, 3) == PUBLISHED["second_eigenvalue"],
    })
    soj_ex = [expected_sojourn(exact, s) for s in exact.states]
    soj_rd = list(sojourn_from_limit(rounded, StationaryDistribution(pi_rd.states, np.round(pi_rd.pi, 3))).values())
    rows.append({
        "quantity": "sojourn_years",
        "published": PUBLISHED["sojourn"],
        "exact": soj_ex,
        "paper_rounding": soj_rd,
        "exact_matches_2dp": [round(v, 2) for v in soj_ex] == PUBLISHED["sojourn"],
        "paper_rounding_matches_2dp": [round(v, 2) for v in soj_rd] == PUBLISHED["sojourn"],
    })
    return _envelope("paper", {
        "input_digest": file_digest(path),
        "chi_square": {
            "published_statistic": PUBLISHED["chi_square"],
            "recomputed_statistic": test.statistic,
            "p_value": test.p_value,
            "published_p_value_bound": PUBLISHED["p_value_below"],
            "conclusion_matches": test.p_value < PUBLISHED["p_value_below"],
            "note": "the published statistic is not reproducible from the published counts; "
                    "the recomputed Pearson statistic is reported instead",
        },
        "comparisons": rows,
        "horizon": {"years": convergence_horizon(exact, 0.005), "tol": 0.005},
        "classification": classification_dict(classify(exact)),
        "craps": _craps_and_pool(pi_ex),
    })


def cmd_paper(args):
    body = reproduce()
    if args.format == "json":
        return render_json(body)
    chi = body["chi_square"]
    out = [
        f"chi-square: published {chi['published_statistic']}, recomputed {chi['recomputed_statistic']:.4f}, "
        f"p = {chi['p_value']:.2e} (< {chi['published_p_value_bound']}: {chi['conclusion_matches']})",
    ]
    for row in body["comparisons"]:
        flags = [k for k in row if k.endswith(("3dp", "2dp"))]
        out.append(f"{row['quantity']}: published {row['published']}; " + ", ".join(f"{k}={row[k]}" for k in flags))
    out.append(f"horizon: {body['horizon']['years']} years at tol {body['horizon']['tol']}")
    out.append(f"craps win: {body['craps']['win_probability']:.6f} ({body['craps']['win_fraction']})")
    return "\n".join(out) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transferchain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "human"), default="json")
    common.add_argument("--out", type=Path, help="write output here instead of stdout")

    p = sub.add_parser("analyze", parents=[common], help="full analysis of a contingency CSV")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--correction", choices=("none", "yates"), default="none")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--paper-rounding", action="store_true")
    p.add_argument("--tol", type=float, default=0.005)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("project", parents=[common], help="k-step transition matrix")
    p.add_argument("--matrix", required=True, type=Path)
    p.add_argument("--years", required=True, type=int)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("stationary", parents=[common], help="stationary distribution")
    p.add_argument("--matrix", required=True, type=Path)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("sojourn", parents=[common], help="mean years spent in each state")
    p.add_argument("--matrix", required=True, type=Path)
    p.set_defaults(func=cmd_sojourn)

    p = sub.add_parser("horizon", parents=[common], help="years until close to the limit")
    p.add_argument("--matrix", required=True, type=Path)
    p.add_argument("--tol", type=float, default=0.005)
    p.set_defaults(func=cmd_horizon)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo trajectories")
    p.add_argument("--matrix", required=True, type=Path)
    p.add_argument("--plans", required=True, type=int)
    p.add_argument("--years", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--initial")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("craps", parents=[common], help="pass-line odds against the pool")
    p.add_argument("--input", type=Path, help="contingency CSV (default: bundled 2014-2015 counts)")
    p.set_defaults(func=cmd_craps)

    p = sub.add_parser("paper", parents=[common], help="reproduce every published figure")
    p.set_defaults(func=cmd_paper)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
    except TransferChainError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        if isinstance(exc, ParseError):
            payload.update(line=exc.line, column=exc.column)
        sys.stderr.write(json.dumps(payload) + "\n")
        return exc.exit_code
    except ValueError as exc:
        payload = {"error": "ValueError", "message": str(exc), "exit_code": 1}
        sys.stderr.write(json.dumps(payload) + "\n")
        return 1
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
