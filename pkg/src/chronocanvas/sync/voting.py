"""Plurality and Condorcet tallies.

Rankings are sequences of option ids, most preferred first. Options a voter
leaves out rank below every listed option and tie among themselves, so a
ranking is a strict partial order. All ties resolve toward the smallest
option id.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

from ..errors import InvalidBallot, NoBallots

METHODS = ("plurality", "condorcet")


@dataclass(frozen=True)
class Outcome:
    winner: str
    method: str
    condorcet_winner: bool | None = None  # None for plurality
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "winner": self.winner,
            "method": self.method,
            "condorcet_winner": self.condorcet_winner,
            "detail": self.detail,
        }


def validate_choice(options: Sequence[str], choice: str) -> str:
    if choice not in options:
        raise InvalidBallot(f"unknown option {choice!r}")
    return choice


def validate_ranking(options: Sequence[str], ranking: Iterable[str]) -> tuple[str, ...]:
    ranking = tuple(ranking)
    if not ranking:
        raise InvalidBallot("empty ranking")
    if len(set(ranking)) != len(ranking):
        raise InvalidBallot(f"ranking {ranking} repeats an option")
    unknown = [r for r in ranking if r not in options]
    if unknown:
        raise InvalidBallot(f"ranking names unknown option(s) {unknown}")
    return ranking


def _best(scores: dict[str, float]) -> str:
    return min(scores, key=lambda opt: (-scores[opt], opt))


def plurality(options: Sequence[str], choices: Iterable[str]) -> Outcome:
    choices = list(choices)
    if not choices:
        raise NoBallots("no ballots cast")
    counts = Counter(validate_choice(options, c) for c in choices)
    scores = {opt: counts.get(opt, 0) for opt in options}
    return Outcome(_best(scores), "plurality", None, {"counts": scores})


def pairwise_counts(
    options: Sequence[str], rankings: Iterable[Sequence[str]]
) -> dict[str, dict[str, int]]:
    """``d[x][y]`` = number of voters strictly preferring x to y."""
    d = {x: {y: 0 for y in options if y != x} for x in options}
    for ranking in rankings:
        pos = {opt: i for i, opt in enumerate(ranking)}
        unranked = len(ranking)
        for x in options:
            px = pos.get(x, unranked)
            if px == unranked:
                continue
            for y in options:
                if y != x and px < pos.get(y, unranked):
                    d[x][y] += 1
    return d


def copeland_scores(options: Sequence[str], d: dict[str, dict[str, int]]) -> dict[str, int]:
    """Number of strict pairwise victories per option."""
    return {x: sum(1 for y in options if y != x and d[x][y] > d[y][x]) for x in options}


def condorcet(options: Sequence[str], rankings: Iterable[Sequence[str]]) -> Outcome:
    """Condorcet winner if one exists, else the Copeland leader."""
    rankings = [validate_ranking(options, r) for r in rankings]
    if not rankings:
        raise NoBallots("no ballots cast")
    d = pairwise_counts(options, rankings)
    copeland = copeland_scores(options, d)
    detail: dict[str, Any] = {"pairwise": d, "copeland": copeland}
    winners = [x for x in options if copeland[x] == len(options) - 1]
    if winners:
        return Outcome(winners[0], "condorcet", True, detail)
    return Outcome(_best(copeland), "condorcet", False, detail)


def tally(method: str, options: Sequence[str], ballots: Iterable[Any]) -> Outcome:
    if method == "plurality":
        return plurality(options, ballots)
    if method == "condorcet":
        return condorcet(options, ballots)
    raise ValueError(f"unknown voting method {method!r}")
