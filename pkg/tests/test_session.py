from __future__ import annotations

import pytest

from chronocanvas.errors import (
    BarrierBlocked,
    ClockRegression,
    EmptyParticipants,
    IllegalMove,
    InvalidBallot,
    InvalidModeTree,
    NotInstructor,
    NotRealtimeScope,
    NotSeatHolder,
    PollRequired,
    ScenarioError,
    WindowClosed,
    WindowNotOpen,
)
from chronocanvas.schema import fixture_path, load_scenario, replay_scenario
from chronocanvas.sync import (
    ModeNode,
    Participant,
    Realtime,
    Seat,
    Session,
    StragglerPolicy,
    Timeslot,
    WaitForMe,
    open_session,
)
from helpers import build


def wfm(*points, policy=None, **kw):
    return ModeNode(WaitForMe(frozenset(points), policy or StragglerPolicy(), **kw))


# -- opening ------------------------------------------------------------------------


def test_fig2_everyone_starts_at_a(fig2):
    session = open_session(fig2, ["A", "B"], wfm("d"))
    assert session.positions == {"A": "a", "B": "a"}
    assert [e.kind for e in session.log] == ["SessionOpened"]


def test_empty_participants(fig2):
    with pytest.raises(EmptyParticipants):
        open_session(fig2, [], wfm("d"))


def test_overlapping_child_scopes(fig1):
    tree = ModeNode(WaitForMe(), children=(
        ModeNode(Realtime(), frozenset({"n", "o"})),
        ModeNode(Realtime(), frozenset({"o", "p"})),
    ))
    with pytest.raises(InvalidModeTree):
        open_session(fig1, ["A"], tree)


@pytest.mark.parametrize("tree", [
    ModeNode(WaitForMe(frozenset({"zz"}))),
    ModeNode(Timeslot({"zz": (0, 1)})),
    ModeNode(WaitForMe(), frozenset({"m"})),
    ModeNode(WaitForMe(), children=(ModeNode(Realtime(), frozenset({"zz"})),)),
])
def test_invalid_trees(fig1, tree):
    with pytest.raises(InvalidModeTree):
        open_session(fig1, ["A"], tree)


def test_observer_without_flows(fig2):
    session = open_session(fig2, ["A", "B", "C"], wfm("d"))
    assert session.positions["C"] is None
    with pytest.raises(IllegalMove):
        session.advance("C", "b", 1)


# -- movement and barriers ----------------------------------------------------------


def test_independent_branches(fig2):
    session = open_session(fig2, ["A", "B"], wfm("d"))
    session.advance("A", "b", 10)
    assert session.positions == {"A": "b", "B": "a"}
    with pytest.raises(IllegalMove):
        session.advance("B", "b", 11)  # A's flow, not B's


def test_barrier_blocks_until_all_arrive(fig2):
    session = open_session(fig2, ["A", "B"], wfm("d"))
    session.advance("A", "b", 10)
    with pytest.raises(BarrierBlocked) as err:
        session.advance("A", "d", 20)
    assert err.value.waiting_for == ("B",)
    assert session.positions["A"] == "b"
    status = session.barrier_status("d")
    assert (status.arrived, status.waiting_for, status.released) == ({"A"}, {"B"}, False)

    session.advance("B", "c", 30)
    session.advance("B", "d", 40)
    assert session.positions == {"A": "d", "B": "d"}
    status = session.barrier_status("d")
    assert (status.arrived, status.waiting_for, status.released) == ({"A", "B"}, frozenset(), True)
    kinds = [e.kind for e in session.log]
    assert kinds.count("BarrierReleased") == 1 and kinds[-2:] == ["Moved", "Moved"]


def test_waiting_participant_cannot_wander(fig2):
    session = open_session(fig2, ["A", "B"], wfm("d"))
    session.advance("A", "b", 1)
    with pytest.raises(BarrierBlocked):
        session.advance("A", "d", 2)
    with pytest.raises(BarrierBlocked):
        session.advance("A", "d", 3)
    with pytest.raises(IllegalMove):
        session.finish("A", 4)


def test_quorum_with_timeout_marks_straggler(fig2):
    session = open_session(fig2, ["A", "B"], wfm("d", policy=StragglerPolicy("quorum", 1, 60)))
    session.advance("A", "b", 0)
    with pytest.raises(BarrierBlocked):
        session.advance("A", "d", 10)
    assert not session.barrier_status("d", now=69).released
    status = session.barrier_status("d", now=70)
    assert status.released and status.stragglers == {"B"}
    assert session.next_deadline() == 70
    session.tick(100)
    assert session.positions["A"] == "d"
    assert session.barriers["d"].released_at == 70
    assert session.barriers["d"].stragglers == ("B",)
    session.advance("B", "c", 110)
    session.advance("B", "d", 120)  # latched: passes straight through
    assert session.positions["B"] == "d"


def test_quorum_without_timeout_releases_at_quorum(fig1):
    session = open_session(fig1, ["A", "B", "C"], wfm("n", policy=StragglerPolicy("quorum", 2)))
    with pytest.raises(BarrierBlocked):
        session.advance("A", "n", 1)
    session.advance("B", "n", 2)
    assert session.positions == {"A": "n", "B": "n", "C": "m"}
    assert session.barriers["n"].stragglers == ("C",)


def test_timeout_policy_fires_on_next_event(fig2):
    session = open_session(fig2, ["A", "B"], wfm("d", policy=StragglerPolicy("timeout", timeout=30)))
    session.advance("A", "b", 0)
    with pytest.raises(BarrierBlocked):
        session.advance("A", "d", 5)
    session.advance("B", "c", 50)  # any later event first fires the timer at 35
    released = [e for e in session.log if e.kind == "BarrierReleased"]
    assert [e.at for e in released] == [35.0]


def test_instructor_excluded_and_may_force(fig2):
    people = [Participant("A"), Participant("B"), Participant("T", "instructor")]
    comp = fig2.copy()
    comp.add_flow("a", "b", ["T"]).add_flow("b", "d", ["T"])
    session = open_session(comp, people, wfm("d"))
    assert session.barriers["d"].counted == {"A", "B"}
    session.advance("A", "b", 1)
    with pytest.raises(BarrierBlocked):
        session.advance("A", "d", 2)
    with pytest.raises(NotInstructor):
        session.force_release("A", "d", 3)
    session.force_release("T", "d", 4)
    assert session.positions["A"] == "d"
    assert session.barriers["d"].forced


def test_clock_regression(fig2):
    session = open_session(fig2, ["A", "B"], wfm("d"))
    session.advance("A", "b", 10)
    with pytest.raises(ClockRegression):
        session.advance("B", "c", 5)


def test_finish_only_from_sink(fig2):
    session = open_session(fig2, ["A", "B"], ModeNode(WaitForMe()))
    with pytest.raises(IllegalMove):
        session.finish("A", 1)
    session.advance("A", "b", 2)
    session.advance("A", "d", 3)
    session.finish("A", 4)
    assert session.snapshot()["positions"]["A"] == "done"


# -- timeslots ----------------------------------------------------------------------


def slotted(windows, late="block"):
    return ModeNode(Timeslot(windows, late))


def test_window_not_open(fig2):
    session = open_session(fig2, ["A", "B"], slotted({"b": (100, 200)}))
    with pytest.raises(WindowNotOpen):
        session.advance("A", "b", 50)
    session.advance("A", "b", 100)


def test_window_closed_block_or_allow(fig2):
    blocked = open_session(fig2, ["A", "B"], slotted({"b": (0, 10)}))
    with pytest.raises(WindowClosed):
        blocked.advance("A", "b", 11)
    lenient = open_session(fig2, ["A", "B"], slotted({"b": (0, 10)}, late="allow"))
    lenient.advance("A", "b", 11)
    assert lenient.log[-1].data["late"] is True


def test_timeslot_statuses(fig2):
    session = open_session(fig2, ["A", "B"], slotted({"a": (0, 100), "b": (0, 300), "c": (150, 300)}))
    assert {s.status for s in session.timeslot_check(50)} == {"on_track"}
    session.advance("A", "b", 60)
    statuses = {s.participant: s.status for s in session.timeslot_check(120)}
    assert statuses == {"A": "on_track", "B": "behind"}


def test_staggered_windows_match_containment():
    comp = build([("s", "x"), ("s", "y"), ("s", "z")])
    windows = {"s": (0, 10), "x": (10, 20), "y": (20, 30), "z": (30, 40)}
    session = open_session(comp, ["P", "Q", "R"], ModeNode(Timeslot(windows)))
    session.advance("P", "x", 10)
    session.advance("Q", "y", 20)
    for now in range(0, 45, 3):
        for status in session.timeslot_check(now):
            lo, hi = windows[status.module]
            expected = "ahead" if now < lo else "behind" if now > hi else "on_track"
            assert status.status == expected


# -- polls and seats ----------------------------------------------------------------


def realtime(seat=Seat(), voting="plurality"):
    return ModeNode(Realtime(voting, seat))


def test_fixed_seat_rejects_others(fig1):
    session = open_session(fig1, ["A", "B"], realtime(Seat("fixed", "A")))
    poll = session.open_poll("n", ["o", "p"], 0)
    with pytest.raises(NotSeatHolder):
        session.cast_ballot(poll, "B", 1, choice="o")
    session.cast_ballot(poll, "A", 2, choice="p")
    assert session.tally(poll, 3).winner == "p"


def test_duplicate_ballot_replaces(fig1):
    session = open_session(fig1, ["A", "B"], realtime())
    poll = session.open_poll("n", ["o", "p"], 0)
    session.cast_ballot(poll, "A", 1, choice="o")
    session.cast_ballot(poll, "A", 2, choice="p")
    assert session.log[-1].data["replaced"] is True
    assert session.tally(poll, 3).winner == "p"


def test_unknown_option_rejected(fig1):
    session = open_session(fig1, ["A"], realtime(voting="condorcet"))
    poll = session.open_poll("n", ["o", "p"], 0)
    with pytest.raises(InvalidBallot):
        session.cast_ballot(poll, "A", 1, ranking=["o", "zz"])


def test_realtime_departure_follows_the_vote(fig1):
    session = open_session(fig1, ["A", "B"], realtime())
    auto = session.open_poll("m", ["n"], 0)
    assert session.poll(auto).outcome.winner == "n"
    session.advance("A", "n", 1)
    session.advance("B", "n", 1)
    with pytest.raises(PollRequired):
        session.advance("A", "o", 2)
    poll = session.open_poll("n", ["o", "p"], 3)
    session.cast_ballot(poll, "A", 4, choice="p")
    session.cast_ballot(poll, "B", 4, choice="p")
    session.tally(poll, 5)
    with pytest.raises(IllegalMove):
        session.advance("A", "o", 6)
    session.advance("A", "p", 6)


def test_poll_outside_realtime(fig2):
    session = open_session(fig2, ["A", "B"], wfm("d"))
    with pytest.raises(NotRealtimeScope):
        session.open_poll("a", ["b", "c"], 0)


def test_round_robin_rotation(fig1):
    session = open_session(fig1, ["A", "B"], realtime(Seat("hot_seat")))
    assert session.seat_holder() == "A"
    assert session.rotate_seat(1) == "B"
    assert session.rotate_seat(2) == "A"


def test_rotation_cycles(fig1):
    people = ["A", "B", "C", "D"]
    session = open_session(fig1, people, realtime(Seat("hot_seat")))
    start = session.seat_holder()
    seen = [session.rotate_seat(t) for t in range(1, len(people) + 1)]
    assert seen[-1] == start and sorted(seen) == sorted(people)


def test_instructor_priority(fig1):
    people = [Participant("A"), Participant("B"), Participant("T", "instructor")]
    session = open_session(fig1, people, realtime(Seat("hot_seat", rotation="instructor_priority")))
    assert session.seat_holder() == "T"
    assert session.rotate_seat(1) == "A"


# -- replay -------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["scenario_condorcet.json", "scenario_waitforme.json"])
def test_replay_is_byte_identical(name):
    scenario = load_scenario(fixture_path(name))
    first, second = replay_scenario(scenario).dumps(), replay_scenario(scenario).dumps()
    assert first == second
    assert set(replay_scenario(scenario).snapshot()["positions"].values()) == {"done"}


def test_condorcet_fixture_outcome():
    session = replay_scenario(load_scenario(fixture_path("scenario_condorcet.json")))
    resolved = [e for e in session.log if e.kind == "PollResolved"]
    assert [(e.data["winner"], e.data["condorcet_winner"]) for e in resolved] == [("o", True)]


def test_replay_reports_failing_index(fig2):
    session = open_session(fig2, ["A", "B"], wfm("d"))
    events = [{"at": 1, "kind": "advance", "args": {"participant": "A", "to": "b"}},
              {"at": 2, "kind": "advance", "args": {"participant": "A", "to": "c"}}]
    with pytest.raises(ScenarioError) as err:
        session.replay(events)
    assert err.value.index == 1


def test_session_class_direct(fig2):
    session = Session(fig2, ["A", "B"], wfm("d"), at=5)
    assert session.clock == 5
