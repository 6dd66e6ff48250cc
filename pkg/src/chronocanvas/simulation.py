"""Deterministic virtual-learner simulation and ALT accounting.

Each virtual learner works through its view of the composition. Time on a
module is ``speed_factor * estimate`` of engaged work, stretched to
``engaged / engagement_ratio`` of wall time. Engaged time counts as academic
learning time (ALT) when the learner's skill is within ``success_band`` of the
module difficulty. Only time inside the allocation window ``[0, allocated_s]``
is counted.

The generator feeds its moves, ballots and clock ticks into a ``Session`` and
records them as scripted events, so any run can be replayed verbatim.
"""

from __future__ import annotations

import heapq
import math
import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

from .errors import (
    BarrierBlocked,
    ChronoError,
    MissingEstimate,
    ScenarioError,
    WindowClosed,
    WindowNotOpen,
)
from .graph import Composition, ModuleId, ParticipantId
from .sync.modes import ModeNode, Realtime
from .sync.session import Participant, Session

SYNTHETIC_ANSWERS = ("answer-a", "answer-b", "answer-c")


@dataclass(frozen=True)
class VirtualLearner:
    participant: ParticipantId
    speed_factor: float = 1.0
    skill: float = 0.5
    engagement_ratio: float = 1.0

    def __post_init__(self) -> None:
        if not self.speed_factor > 0:
            raise ValueError("speed_factor must be > 0")
        if not 0.0 <= self.skill <= 1.0:
            raise ValueError("skill must lie in [0, 1]")
        if not 0.0 < self.engagement_ratio <= 1.0:
            raise ValueError("engagement_ratio must lie in (0, 1]")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> VirtualLearner:
        return cls(
            participant=data["participant"],
            speed_factor=float(data.get("speed_factor", 1.0)),
            skill=float(data.get("skill", 0.5)),
            engagement_ratio=float(data.get("engagement_ratio", 1.0)),
        )


@dataclass(frozen=True)
class SimulationConfig:
    success_band: float = 0.3
    jitter: float = 0.0  # relative, uniform in [-jitter, +jitter]; 0 keeps runs exact
    branching: str = "longest"  # or "random"

    def __post_init__(self) -> None:
        if self.branching not in ("longest", "random"):
            raise ValueError(f"unknown branching policy {self.branching!r}")
        if not 0.0 <= self.jitter < 1.0:
            raise ValueError("jitter must lie in [0, 1)")


@dataclass(frozen=True)
class Scenario:
    id: str
    composition: Composition
    participants: tuple[Participant, ...]
    mode_tree: ModeNode
    allocated_s: float
    learners: tuple[VirtualLearner, ...] = ()
    estimates: Mapping[ModuleId, float] | None = None
    config: SimulationConfig = field(default_factory=SimulationConfig)
    starts: Mapping[ParticipantId, ModuleId] | None = None
    events: tuple[Mapping[str, Any], ...] = ()

    def module_estimates(self) -> dict[ModuleId, float]:
        out, missing = {}, []
        for module_id, module in sorted(self.composition.modules.items()):
            value = (self.estimates or {}).get(module_id, module.author_estimate)
            if value is None:
                missing.append(module_id)
            else:
                out[module_id] = float(value)
        if missing:
            raise MissingEstimate(missing)
        return out

    def open_session(self) -> Session:
        return Session(self.composition, self.participants, self.mode_tree, starts=self.starts)


@dataclass(frozen=True)
class TimeReport:
    allocated_s: float
    engaged_s: float
    alt_s: float
    idle_s: float
    modules_completed: int = 0

    @property
    def alt_ratio(self) -> float:
        return self.alt_s / self.allocated_s if self.allocated_s else 0.0

    @property
    def engaged_ratio(self) -> float:
        return self.engaged_s / self.allocated_s if self.allocated_s else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "allocated_s": self.allocated_s,
            "engaged_s": self.engaged_s,
            "alt_s": self.alt_s,
            "idle_s": self.idle_s,
            "alt_ratio": self.alt_ratio,
            "modules_completed": self.modules_completed,
        }


@dataclass(frozen=True)
class AltReport:
    scenario: str
    seed: int
    per_participant: Mapping[ParticipantId, TimeReport]
    total: TimeReport
    events: tuple[Mapping[str, Any], ...] = ()

    @property
    def alt_ratio(self) -> float:
        return self.total.alt_ratio

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "per_participant": {p: r.to_dict() for p, r in sorted(self.per_participant.items())},
            "total": self.total.to_dict(),
            "events": [dict(e) for e in self.events],
        }


@dataclass
class _Learner:
    params: VirtualLearner
    work: list[tuple[float, float, float, ModuleId]] = field(default_factory=list)
    blocked: list[tuple[float, float]] = field(default_factory=list)
    blocked_since: float | None = None
    busy_until: float | None = None
    finished: bool = False
    completed: int = 0


class _Run:
    def __init__(self, scenario: Scenario, learners: Sequence[VirtualLearner], seed: int) -> None:
        self.scenario = scenario
        self.seed = seed
        self.rng = random.Random(seed)
        self.config = scenario.config
        self.estimates = scenario.module_estimates()
        self.allocated = float(scenario.allocated_s)
        by_id = {l.participant: l for l in learners}
        missing = [p.id for p in scenario.participants if p.id not in by_id]
        if missing:
            raise ValueError(f"no virtual learner for participant(s) {missing}")
        self.session = scenario.open_session()
        self.learners = {p.id: _Learner(by_id[p.id]) for p in scenario.participants}
        self.order = [p.id for p in scenario.participants]
        self.events: list[dict[str, Any]] = []
        self._heap: list[tuple[float, int, str, ParticipantId | None]] = []
        self._seq = 0
        self._log_seen = len(self.session.log)
        self._poll_waiters: dict[ModuleId, list[ParticipantId]] = {}
        self._pending_retry: dict[ParticipantId, ModuleId] = {}
        self._remaining = {}  # per view: longest remaining path, for branching
        for pid in self.order:
            view = self.session.views[pid]
            depth: dict[ModuleId, int] = {}
            for node in reversed(view.topological_order()):
                depth[node] = 1 + max((depth[c] for c in view.children(node)), default=0)
            self._remaining[pid] = depth

    # -- scheduling ---------------------------------------------------------

    def push(self, at: float, action: str, pid: ParticipantId | None = None) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (at, self._seq, action, pid))

    def call(self, kind: str, at: float, args: Mapping[str, Any]) -> Any:
        """Submit one event to the session, recording it for replay."""
        event = {"at": at, "kind": kind, "args": dict(args)}
        index = len(self.events)
        try:
            result = self.session.apply(event)
        except BarrierBlocked:
            self.events.append(event)
            self._drain_log()
            raise
        except (WindowNotOpen, WindowClosed):
            self._drain_log()
            raise
        except ChronoError as exc:
            raise ScenarioError(index, event, exc) from exc
        self.events.append(event)
        self._drain_log()
        return result

    def _drain_log(self) -> None:
        """React to engine-initiated moves (barrier releases)."""
        new = self.session.log[self._log_seen:]
        self._log_seen = len(self.session.log)
        for ev in new:
            if ev.kind == "Moved" and ev.data.get("via") == "barrier":
                pid = ev.data["participant"]
                self._unblock(pid, ev.at)
                self._start(pid, ev.data["to"], ev.at)

    # -- learner lifecycle --------------------------------------------------

    def _start(self, pid: ParticipantId, module: ModuleId, at: float) -> None:
        learner = self.learners[pid]
        engaged = learner.params.speed_factor * self.estimates[module]
        if self.config.jitter:
            engaged *= 1.0 + self.rng.uniform(-self.config.jitter, self.config.jitter)
        wall = engaged / learner.params.engagement_ratio
        learner.work.append((at, at + wall, engaged, module))
        learner.busy_until = at + wall
        self.push(at + wall, "complete", pid)

    def _block(self, pid: ParticipantId, at: float) -> None:
        learner = self.learners[pid]
        if learner.blocked_since is None:
            learner.blocked_since = at

    def _unblock(self, pid: ParticipantId, at: float) -> None:
        learner = self.learners[pid]
        if learner.blocked_since is not None:
            learner.blocked.append((learner.blocked_since, at))
            learner.blocked_since = None

    def _choose(self, pid: ParticipantId, options: Sequence[ModuleId]) -> ModuleId:
        options = sorted(options)
        if self.config.branching == "random":
            return self.rng.choice(options)
        depth = self._remaining[pid]
        return min(options, key=lambda m: (-depth[m], m))

    def _complete(self, pid: ParticipantId, at: float) -> None:
        learner = self.learners[pid]
        learner.completed += 1
        learner.busy_until = None
        self._next_step(pid, at)

    def _next_step(self, pid: ParticipantId, at: float) -> None:
        module = self.session.positions[pid]
        assert module is not None
        view = self.session.views[pid]
        successors = sorted(view.children(module))
        node = self._realtime(module)
        if node is not None:
            outcome = self.session.resolved_at(module)
            if outcome is None:
                self._vote(pid, module, successors, at)
                return
            if outcome.winner in successors:
                successors = [outcome.winner]
        if not successors:
            self.call("finish", at, {"participant": pid})
            self._unblock(pid, at)
            self.learners[pid].finished = True
            return
        self._try_advance(pid, self._choose(pid, successors), at)

    def _try_advance(self, pid: ParticipantId, to: ModuleId, at: float) -> None:
        started = len(self.learners[pid].work)
        try:
            self.call("advance", at, {"participant": pid, "to": to})
        except BarrierBlocked:
            if self.session.positions[pid] != to:
                self._block(pid, at)
                deadline = self.session.next_deadline()
                if deadline is not None and deadline > at:
                    self.push(deadline, "tick")
            return
        except WindowNotOpen:
            self._block(pid, at)
            window = self.session.window_for(to)
            assert window is not None
            self.push(window[1][0], "retry", pid)
            self._pending_retry[pid] = to
            return
        except WindowClosed:
            self._block(pid, at)  # stranded for the rest of the allocation
            return
        self._unblock(pid, at)
        if len(self.learners[pid].work) == started:  # not already started by a barrier release
            self._start(pid, to, at)

    # -- realtime polls -----------------------------------------------------

    def _realtime(self, module: ModuleId) -> ModeNode | None:
        for node in reversed(self.session.chain(module)):
            if isinstance(node.mode, Realtime):
                return node
        return None

    def _expected_voters(self, module: ModuleId, node: ModeNode) -> list[ParticipantId]:
        if node.id in self.session.seats:
            return [self.session.seat_holder(node.id)]
        return [p for p in self.order if module in self.session.views[p]]

    def _vote(self, pid: ParticipantId, module: ModuleId, successors: list[ModuleId], at: float) -> None:
        node = self._realtime(module)
        assert node is not None
        self._block(pid, at)
        self._poll_waiters.setdefault(module, []).append(pid)
        poll_id = self.session.open_poll_at(module)
        if poll_id is None:
            options = successors or list(SYNTHETIC_ANSWERS)
            poll_id = self.call("open_poll", at, {"module": module, "options": options})
            if self.session.resolved_at(module) is not None:  # single option resolves itself
                self._release_poll(module, at)
                return
        expected = self._expected_voters(module, node)
        if pid in expected:
            poll = self.session.poll(poll_id)
            ranking = list(poll.options)
            self.rng.shuffle(ranking)
            self.call("cast_ballot", at, {"poll": poll_id, "voter": pid, "ranking": ranking})
        poll = self.session.poll(poll_id)
        if all(v in poll.ballots for v in expected):
            self.call("tally", at, {"poll": poll_id})
            if node.id in self.session.seats and node.mode.seat.kind == "hot_seat":  # type: ignore[union-attr]
                self.call("rotate_seat", at, {"node": node.id})
            self._release_poll(module, at)

    def _release_poll(self, module: ModuleId, at: float) -> None:
        for waiter in self._poll_waiters.pop(module, []):
            self._next_step(waiter, at)

    # -- main loop ----------------------------------------------------------

    def run(self) -> tuple[Session, AltReport]:
        for pid in self.order:
            module = self.session.positions[pid]
            if module is None:
                self.learners[pid].finished = True
            elif pid not in self.session.waiting_at:
                self._start(pid, module, 0.0)
        while self._heap:
            at, _, action, pid = heapq.heappop(self._heap)
            if at > self.allocated:
                break
            if action == "complete":
                self._complete(pid, at)  # type: ignore[arg-type]
            elif action == "retry":
                to = self._pending_retry.pop(pid)  # type: ignore[arg-type]
                self._try_advance(pid, to, at)  # type: ignore[arg-type]
            elif action == "tick":
                if at >= self.session.clock:
                    self.call("tick", at, {})
        return self.session, self._report()

    def _report(self) -> AltReport:
        band = self.config.success_band
        per: dict[ParticipantId, TimeReport] = {}
        for pid in self.order:
            learner = self.learners[pid]
            engaged = alt = 0.0
            for start, end, work, module in learner.work:
                if start >= self.allocated:
                    continue
                wall = end - start
                share = 1.0 if end <= self.allocated else (self.allocated - start) / wall
                counted = work * share
                engaged += counted
                difficulty = self.scenario.composition.modules[module].difficulty or 0.0
                if abs(learner.params.skill - difficulty) <= band + 1e-12:
                    alt += counted
            spans = list(learner.blocked)
            if learner.blocked_since is not None:
                spans.append((learner.blocked_since, self.allocated))
            idle = sum(max(0.0, min(e, self.allocated) - min(s, self.allocated)) for s, e in spans)
            completed = sum(1 for s, e, _, _ in learner.work if e <= self.allocated)
            per[pid] = TimeReport(self.allocated, engaged, alt, idle, completed)
        total = TimeReport(
            allocated_s=math.fsum(r.allocated_s for r in per.values()),
            engaged_s=math.fsum(r.engaged_s for r in per.values()),
            alt_s=math.fsum(r.alt_s for r in per.values()),
            idle_s=math.fsum(r.idle_s for r in per.values()),
            modules_completed=sum(r.modules_completed for r in per.values()),
        )
        return AltReport(self.scenario.id, self.seed, per, total, tuple(self.events))


def run_scenario(
    scenario: Scenario,
    learners: Iterable[VirtualLearner] | None = None,
    seed: int = 0,
) -> tuple[Session, AltReport]:
    """Simulate ``scenario``; report engaged and ALT time against the allocation."""
    learners = list(learners) if learners is not None else list(scenario.learners)
    return _Run(scenario, learners, seed).run()


def compare_scenarios(
    scenarios: Sequence[Scenario],
    seed: int = 0,
) -> list[tuple[str, AltReport]]:
    """Rank scenarios by total ALT ratio, best first; ties keep scenario-id order."""
    if len(scenarios) < 2:
        raise ValueError("compare_scenarios needs at least two scenarios")
    results = [(s.id, run_scenario(s, seed=seed)[1]) for s in scenarios]
    return sorted(results, key=lambda item: (-item[1].alt_ratio, item[0]))
