"""Pass-line craps as an absorbing chain, and its comparison with the transfer pool."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov import StationaryDistribution, TransitionMatrix, absorption_probabilities

POINTS = (4, 5, 6, 8, 9, 10)
CRAPS_STATES = ("comeout",) + tuple(f"point{k}" for k in POINTS) + ("win", "lose")


def dice_ways(total: int) -> int:
    """Number of the 36 ordered two-dice outcomes summing to ``total``."""
    return sum(1 for a in range(1, 7) for b in range(1, 7) if a + b == total)


def build_craps_chain() -> TransitionMatrix:
    """Transition matrix of one pass-line bet.

    The come-out roll wins on 7 or 11, loses on 2, 3 or 12 and otherwise
    establishes a point. From a point the shooter wins by repeating it, loses
    on a 7, and stays put on anything else.
    """
    idx = {s: i for i, s in enumerate(CRAPS_STATES)}
    ways = np.zeros((len(CRAPS_STATES), len(CRAPS_STATES)), dtype=np.int64)
    ways[idx["comeout"], idx["win"]] = dice_ways(7) + dice_ways(11)
    ways[idx["comeout"], idx["lose"]] = dice_ways(2) + dice_ways(3) + dice_ways(12)
    for k in POINTS:
        here = idx[f"point{k}"]
        ways[idx["comeout"], here] = dice_ways(k)
        ways[here, idx["win"]] = dice_ways(k)
        ways[here, idx["lose"]] = dice_ways(7)
        ways[here, here] = 36 - dice_ways(k) - dice_ways(7)
    ways[idx["win"], idx["win"]] = 36
    ways[idx["lose"], idx["lose"]] = 36
    return TransitionMatrix(CRAPS_STATES, ways / 36)


def craps_win_probability() -> float:
    """Probability that a pass-line bet placed on the come-out roll wins (244/495)."""
    return absorption_probabilities(build_craps_chain()).probability("comeout", "win")


@dataclass(frozen=True)
class ComparisonReport:
    craps_win: float
    receiver_probability: float
    difference: float
    craps_advantage: float
    receiver_state: str

    def as_dict(self) -> dict:
        return {
            "craps_win_probability": self.craps_win,
            "receiver_state": self.receiver_state,
            "receiver_probability": self.receiver_probability,
            "difference": self.difference,
            "craps_advantage": self.craps_advantage,
        }


def compare_with_pool(pi: StationaryDistribution, receiver=None) -> ComparisonReport:
    """Set the long-run chance of receiving funds against the pass-line win chance.

    ``receiver`` defaults to a state labelled ``"receiver"`` if present, otherwise
    the second state. ``difference`` is the absolute gap between the two
    probabilities and ``craps_advantage`` the signed ``craps_win - receiver_probability``.
    """
    if receiver is None:
        receiver = "receiver" if "receiver" in pi.states else pi.states[1]
    p_recv = pi[receiver]
    win = craps_win_probability()
    return ComparisonReport(win, p_recv, abs(win - p_recv), win - p_recv, str(receiver))
