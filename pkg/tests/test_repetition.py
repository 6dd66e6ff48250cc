from __future__ import annotations

import random

import pytest

from chronocanvas.errors import InvalidGrade, NotSrAware, UnknownModule
from chronocanvas.graph import Module, Registry
from chronocanvas.repetition import (
    DAY,
    ExpandingSchedule,
    ReviewBook,
    SelfAssessment,
    due_reviews,
    mark_sr_aware,
    record_assessment,
    retention_stats,
)


@pytest.fixture
def book():
    registry = Registry([Module("q", type_tag="quiz", sr_aware=True), Module("r", sr_aware=True),
                         Module("s", sr_aware=True), Module("v", type_tag="video")])
    return ReviewBook(registry)


def grade(book, module, g, at, user="u"):
    return record_assessment(book, SelfAssessment(user, module, g, at))


def test_marking_enables_assessment(book):
    with pytest.raises(NotSrAware):
        grade(book, "v", 2, 0)
    mark_sr_aware(book.registry, "v")
    assert grade(book, "v", 2, 0).interval == DAY


def test_unmarking_disables(book):
    mark_sr_aware(book.registry, "q", False)
    with pytest.raises(NotSrAware):
        grade(book, "q", 2, 0)


def test_unknown_module(book):
    with pytest.raises(UnknownModule):
        grade(book, "zz", 2, 0)
    with pytest.raises(UnknownModule):
        mark_sr_aware(book.registry, "zz")


@pytest.mark.parametrize("bad", [-1, 4, 2.0, True, "2"])
def test_invalid_grade_leaves_state(book, bad):
    with pytest.raises(InvalidGrade):
        grade(book, "q", bad, 0)
    assert book.state("u", "q") is None and book.history == []


def test_first_success_gets_base(book):
    assert grade(book, "q", 2, 0).interval == 86_400


def test_expanding_intervals(book):
    t, intervals = 0.0, []
    for _ in range(3):
        state = grade(book, "q", 2, t)
        intervals.append(state.interval)
        t = state.due_at
    assert intervals == [86_400, 216_000, 540_000]
    assert book.state("u", "q").streak == 3


def test_fail_resets(book):
    t = 0.0
    for _ in range(4):
        t = grade(book, "q", 3, t).due_at
    state = grade(book, "q", 0, t)
    assert (state.interval, state.streak) == (86_400, 0)


def test_hard_keeps_interval(book):
    grade(book, "q", 2, 0)
    state = grade(book, "q", 2, DAY)
    assert grade(book, "q", 1, state.due_at).interval == state.interval


def test_custom_policy():
    registry = Registry([Module("q", sr_aware=True)])
    book = ReviewBook(registry, ExpandingSchedule(base_interval=100, growth=2))
    assert [grade(book, "q", 3, t).interval for t in (0, 100, 300)] == [100, 200, 400]


def test_no_assessments_nothing_due(book):
    assert due_reviews(book, "u", 1e12) == []


def test_overdue_seconds(book):
    grade(book, "q", 2, 0)
    assert due_reviews(book, "u", DAY + 100) == [("q", 100)]


def test_staggered_due_order(book):
    for module, at in (("q", 0), ("r", 500), ("s", 250)):
        grade(book, module, 2, at)
    now = DAY + 1000
    due = due_reviews(book, "u", now)
    expected = sorted(((m, now - (at + DAY)) for m, at in (("q", 0), ("r", 500), ("s", 250))),
                      key=lambda x: -x[1])
    assert due == expected
    assert due_reviews(book, "other", now) == []


def test_future_items_never_due(book):
    rng = random.Random(8)
    now = 0.0
    for _ in range(500):
        now += rng.uniform(0, 2 * DAY)
        if rng.random() < 0.5:
            grade(book, rng.choice("qrs"), rng.randint(0, 3), now, user=rng.choice("ab"))
        else:
            user = rng.choice("ab")
            for module, overdue in due_reviews(book, user, now):
                assert overdue >= 0
                assert book.state(user, module).due_at <= now


def test_retention_mean_and_fail(book):
    for i, g in enumerate((2, 3, 3)):
        grade(book, "q", g, i * DAY)
    summary = retention_stats(book)["q"]
    assert summary.count == 3
    assert summary.mean_grade == pytest.approx(2.67, abs=0.005)
    assert summary.fail_fraction == 0


def test_retention_empty(book):
    assert retention_stats(book) == {}
    assert retention_stats(book, "user") == {}


def test_user_and_module_totals_reconcile(book):
    rng = random.Random(2)
    for i in range(60):
        grade(book, rng.choice("qrs"), rng.randint(0, 3), i, user=rng.choice("abc"))
    by_module = retention_stats(book, "module").values()
    by_user = retention_stats(book, "user").values()
    assert sum(s.count for s in by_module) == sum(s.count for s in by_user) == 60
    assert sum(s.mean_grade * s.count for s in by_module) == pytest.approx(
        sum(s.mean_grade * s.count for s in by_user))


def test_persistence_round_trip(book):
    grade(book, "q", 2, 0)
    grade(book, "r", 0, 10, user="w")
    again = ReviewBook.from_dict(book.to_dict())
    assert again.states() == book.states()
    assert again.history == book.history
    assert grade(again, "q", 2, DAY).interval == 216_000
