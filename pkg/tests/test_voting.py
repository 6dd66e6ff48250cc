from __future__ import annotations

import random

import pytest

from chronocanvas.errors import InvalidBallot, NoBallots
from chronocanvas.sync.voting import condorcet, pairwise_counts, plurality, tally
from oracles import condorcet_winner_oracle, copeland_oracle, pairwise_matrix, plurality_oracle, random_profile


def test_plurality_majority():
    assert plurality("XYZ", ["X", "X", "Y"]).winner == "X"


def test_plurality_tie_goes_to_smallest_id():
    assert plurality(["b", "a"], ["b", "a"]).winner == "a"


def test_condorcet_winner():
    out = condorcet("XYZ", [["X", "Y", "Z"], ["X", "Z", "Y"], ["Y", "X", "Z"]])
    assert (out.winner, out.condorcet_winner) == ("X", True)
    d = out.detail["pairwise"]
    assert (d["X"]["Y"], d["Y"]["X"], d["X"]["Z"], d["Z"]["X"]) == (2, 1, 3, 0)


def test_condorcet_cycle_falls_back():
    rankings = [["X", "Y", "Z"], ["Y", "Z", "X"], ["Z", "X", "Y"]]
    assert condorcet_winner_oracle("XYZ", rankings) is None
    out = condorcet("XYZ", rankings)
    assert (out.winner, out.condorcet_winner) == ("X", False)
    assert out.detail["copeland"] == {"X": 1, "Y": 1, "Z": 1}


def test_cycle_is_order_independent():
    rankings = [["Z", "X", "Y"], ["X", "Y", "Z"], ["Y", "Z", "X"]]
    assert condorcet("ZYX", rankings).winner == condorcet("XYZ", rankings[::-1]).winner == "X"


@pytest.mark.parametrize("ranking", [[], ["X", "X"], ["X", "W"]])
def test_invalid_rankings(ranking):
    with pytest.raises(InvalidBallot):
        condorcet("XYZ", [ranking])


def test_no_ballots():
    with pytest.raises(NoBallots):
        plurality("XY", [])
    with pytest.raises(NoBallots):
        condorcet("XY", [])


def test_unknown_method():
    with pytest.raises(ValueError):
        tally("borda", "XY", [["X"]])


def test_profiles_against_oracles():
    rng = random.Random(12)
    for _ in range(500):
        options, rankings = random_profile(rng)
        assert pairwise_counts(options, rankings) == {
            x: {y: v for y, v in row.items() if y != x}
            for x, row in pairwise_matrix(options, rankings).items()
        }
        expected = condorcet_winner_oracle(options, rankings) or copeland_oracle(options, rankings)
        assert condorcet(options, rankings).winner == expected
        firsts = [r[0] for r in rankings]
        assert plurality(options, firsts).winner == plurality_oracle(options, firsts)
