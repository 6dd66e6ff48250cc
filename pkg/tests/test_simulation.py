from __future__ import annotations

import pytest

from chronocanvas.graph import Module
from chronocanvas.schema import fixture_path, load_scenario
from chronocanvas.simulation import Scenario, SimulationConfig, VirtualLearner, compare_scenarios, run_scenario
from chronocanvas.sync import ModeNode, Participant, StragglerPolicy, WaitForMe
from helpers import build


def solo(fig1, allocated=300.0, **learner):
    return Scenario("solo", fig1, (Participant("L"),), ModeNode(WaitForMe()), allocated,
                    (VirtualLearner("L", **learner),))


def test_closed_form_full_alt(fig1):
    session, report = run_scenario(solo(fig1, skill=0.25))
    r = report.per_participant["L"]
    assert (r.engaged_s, r.alt_s, r.alt_ratio) == (300.0, 300.0, 1.0)
    assert session.trails["L"] == ["m", "n", "o", "p", "q"]


def test_half_engagement(fig1):
    _, report = run_scenario(solo(fig1, skill=0.25, engagement_ratio=0.5))
    assert report.per_participant["L"].engaged_s == 150.0
    assert report.per_participant["L"].allocated_s == 300.0


def test_mismatched_module_adds_no_alt():
    comp = build([("a", "b")])
    comp.replace(Module("b", author_estimate=60, difficulty=1.0))
    scenario = Scenario("mix", comp, (Participant("L"),), ModeNode(WaitForMe()), 600,
                        (VirtualLearner("L", skill=0.0),))
    r = run_scenario(scenario)[1].per_participant["L"]
    assert (r.engaged_s, r.alt_s) == (120.0, 60.0)


def test_speed_scales_engaged_time(fig1):
    r = run_scenario(solo(fig1, allocated=1000, skill=0.25, speed_factor=2))[1].per_participant["L"]
    assert r.engaged_s == 600.0 and r.modules_completed == 5


def test_identical_scenarios_tie_by_id(fig1):
    a, b = solo(fig1), solo(fig1)
    ranking = compare_scenarios([Scenario("zeta", *_fields(a)), Scenario("alpha", *_fields(b))])
    assert [sid for sid, _ in ranking] == ["alpha", "zeta"]
    assert ranking[0][1].alt_ratio == ranking[1][1].alt_ratio


def _fields(s):
    return (s.composition, s.participants, s.mode_tree, s.allocated_s, s.learners)


def test_well_matched_ranks_first(fig1):
    matched = Scenario("matched", *_fields(solo(fig1, skill=0.1)))
    mismatched = Scenario("mismatched", *_fields(solo(fig1, skill=0.9)))
    ranking = compare_scenarios([mismatched, matched])
    assert [sid for sid, _ in ranking] == ["matched", "mismatched"]


def test_compare_needs_two(fig1):
    with pytest.raises(ValueError):
        compare_scenarios([solo(fig1)])


def barrier_scenario(fig2, policy, sid):
    return Scenario(
        sid, fig2, (Participant("A"), Participant("B")),
        ModeNode(WaitForMe(frozenset({"d"}), policy)), 600,
        (VirtualLearner("A", 1.0), VirtualLearner("B", 3.0)),
    )


def test_quorum_spares_the_fast_learner(fig2):
    _, strict = run_scenario(barrier_scenario(fig2, StragglerPolicy("all"), "all"))
    _, quorum = run_scenario(barrier_scenario(fig2, StragglerPolicy("quorum", 1), "quorum"))
    # A reaches d at 60 + 120 = 180; B at 3 * (60 + 90) = 450
    assert strict.per_participant["A"].idle_s == 270.0
    assert quorum.per_participant["A"].idle_s < strict.per_participant["A"].idle_s


def test_waitforme_fixture_idle_is_arrival_gap():
    scenario = load_scenario(fixture_path("scenario_waitforme.json"))
    _, report = run_scenario(scenario)
    # A arrives at 60 + 120 = 180, B at 1.5 * (60 + 90) = 225
    assert report.per_participant["A"].idle_s == 45.0
    assert report.per_participant["B"].idle_s == 0.0


@pytest.mark.parametrize("name", ["scenario_condorcet.json", "scenario_waitforme.json"])
def test_reproducible(name):
    scenario = load_scenario(fixture_path(name))
    s1, r1 = run_scenario(scenario, seed=5)
    s2, r2 = run_scenario(scenario, seed=5)
    assert r1 == r2 and s1.dumps() == s2.dumps()


def test_recorded_events_replay(fig1):
    scenario = load_scenario(fixture_path("scenario_condorcet.json"))
    session, report = run_scenario(scenario, seed=2)
    again = scenario.open_session()
    again.replay(report.events)
    assert again.dumps() == session.dumps()


def test_conservation_under_jitter(fig2):
    base = barrier_scenario(fig2, StragglerPolicy("timeout", timeout=40), "jit")
    for seed in range(20):
        scenario = Scenario(*_fields_with_id(base), config=SimulationConfig(jitter=0.3, branching="random"))
        _, report = run_scenario(scenario, seed=seed)
        for r in list(report.per_participant.values()) + [report.total]:
            assert 0 <= r.alt_s <= r.engaged_s <= r.allocated_s


def _fields_with_id(s):
    return (s.id,) + _fields(s)


def test_learner_validation():
    with pytest.raises(ValueError):
        VirtualLearner("x", speed_factor=0)
    with pytest.raises(ValueError):
        VirtualLearner("x", engagement_ratio=0)
    with pytest.raises(ValueError):
        VirtualLearner("x", skill=1.5)
