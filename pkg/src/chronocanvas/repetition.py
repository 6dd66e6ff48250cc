"""Spaced-repetition metadata, self-assessment and review scheduling.

Grades follow a four-point Anki-like scale: 0 again, 1 hard, 2 good, 3 easy.
Scheduling is per (user, module); modules are opaque, so there are no cards.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import asdict, dataclass
from typing import Any, Protocol

from .errors import InvalidGrade, NotSrAware, UnknownModule
from .graph import Module, ModuleId, Registry

DAY = 86_400.0
GRADES = (0, 1, 2, 3)


@dataclass(frozen=True)
class SelfAssessment:
    user: str
    module: ModuleId
    grade: int
    at: float


@dataclass(frozen=True)
class ReviewState:
    user: str
    module: ModuleId
    interval: float
    due_at: float
    streak: int
    last_at: float


class SchedulePolicy(Protocol):
    base_interval: float

    def next_interval(self, previous: ReviewState | None, grade: int) -> float: ...


@dataclass(frozen=True)
class ExpandingSchedule:
    """Geometric expanding intervals.

    The first assessment always schedules ``base_interval``. After that, grade
    0 resets to the base, grade 1 keeps the current interval and grades 2-3
    multiply it by ``growth``.
    """

    base_interval: float = DAY
    growth: float = 2.5

    def __post_init__(self) -> None:
        if self.base_interval <= 0:
            raise ValueError("base_interval must be positive")
        if self.growth <= 1:
            raise ValueError("growth must exceed 1 for intervals to expand")

    def next_interval(self, previous: ReviewState | None, grade: int) -> float:
        if previous is None or grade == 0:
            return self.base_interval
        if grade == 1:
            return previous.interval
        return previous.interval * self.growth


@dataclass(frozen=True)
class RetentionSummary:
    count: int
    mean_grade: float
    fail_fraction: float


def mark_sr_aware(registry: Registry, module: ModuleId, flag: bool = True) -> None:
    registry.mark_sr_aware(module, flag)


class ReviewBook:
    """Review states and assessment history for every (user, module) pair."""

    def __init__(self, registry: Registry, policy: SchedulePolicy | None = None) -> None:
        self.registry = registry
        self.policy = policy or ExpandingSchedule()
        self._states: dict[tuple[str, ModuleId], ReviewState] = {}
        self.history: list[SelfAssessment] = []

    def record(self, assessment: SelfAssessment) -> ReviewState:
        grade = assessment.grade
        if isinstance(grade, bool) or not isinstance(grade, int) or grade not in GRADES:
            raise InvalidGrade(f"grade must be one of {GRADES}, got {grade!r}")
        if assessment.module not in self.registry:
            raise UnknownModule(assessment.module)
        if not self.registry.get(assessment.module).sr_aware:
            raise NotSrAware(f"module {assessment.module!r} is not spaced-repetition-aware")

        key = (assessment.user, assessment.module)
        previous = self._states.get(key)
        interval = max(self.policy.next_interval(previous, grade), self.policy.base_interval)
        streak = (previous.streak if previous else 0) + 1 if grade >= 2 else 0
        state = ReviewState(
            user=assessment.user,
            module=assessment.module,
            interval=interval,
            due_at=assessment.at + interval,
            streak=streak,
            last_at=assessment.at,
        )
        self._states[key] = state
        self.history.append(assessment)
        return state

    def state(self, user: str, module: ModuleId) -> ReviewState | None:
        return self._states.get((user, module))

    def states(self) -> list[ReviewState]:
        return [self._states[k] for k in sorted(self._states)]

    def due_reviews(self, user: str, now: float) -> list[tuple[ModuleId, float]]:
        """``(module, overdue_seconds)`` for due items, most overdue first."""
        due = [
            (s.module, now - s.due_at)
            for (u, _), s in self._states.items()
            if u == user and s.due_at <= now
        ]
        due.sort(key=lambda item: (-item[1], item[0]))
        return due

    def retention_stats(self, scope: str = "module") -> dict[str, RetentionSummary]:
        if scope not in ("module", "user"):
            raise ValueError("scope must be 'module' or 'user'")
        grouped: dict[str, list[int]] = {}
        for a in self.history:
            grouped.setdefault(a.module if scope == "module" else a.user, []).append(a.grade)
        return {
            key: RetentionSummary(
                count=len(grades),
                mean_grade=sum(grades) / len(grades),
                fail_fraction=grades.count(0) / len(grades),
            )
            for key, grades in sorted(grouped.items())
        }

    # -- persistence --------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        policy: dict[str, Any] = {"base_interval": self.policy.base_interval}
        if isinstance(self.policy, ExpandingSchedule):
            policy["growth"] = self.policy.growth
        return {
            "policy": policy,
            "sr_aware_modules": sorted(m.id for m in self.registry if m.sr_aware),
            "states": [asdict(s) for s in self.states()],
            "history": [asdict(a) for a in self.history],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], registry: Registry | None = None) -> ReviewBook:
        """Rebuild a book; without ``registry`` one is synthesized from the sr-aware list."""
        if registry is None:
            registry = Registry(Module(m, sr_aware=True) for m in data.get("sr_aware_modules", ()))
        policy_data = data.get("policy", {})
        policy = ExpandingSchedule(
            base_interval=float(policy_data.get("base_interval", DAY)),
            growth=float(policy_data.get("growth", 2.5)),
        )
        book = cls(registry, policy)
        for raw in data.get("states", ()):
            state = ReviewState(**raw)
            book._states[(state.user, state.module)] = state
        book.history = [SelfAssessment(**raw) for raw in data.get("history", ())]
        return book


def record_assessment(book: ReviewBook, assessment: SelfAssessment) -> ReviewState:
    return book.record(assessment)


def due_reviews(book: ReviewBook, user: str, now: float) -> list[tuple[ModuleId, float]]:
    return book.due_reviews(user, now)


def retention_stats(book: ReviewBook, scope: str = "module") -> dict[str, RetentionSummary]:
    return book.retention_stats(scope)
