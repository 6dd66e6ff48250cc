"""Collaborative session engine.

A session drives a group of participants through a composition under a mode
tree. It is a serial state machine over an explicit event-time clock: every
mutating call takes ``at`` and appends to an append-only event log, and the
same call sequence always yields the same log and final state.
"""

from __future__ import annotations

import functools
import json
import threading
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

from ..errors import (
    BarrierBlocked,
    ClockRegression,
    EmptyParticipants,
    IllegalMove,
    InvalidBallot,
    InvalidModeTree,
    NoBallots,
    NotInstructor,
    NotParticipant,
    NotRealtimeScope,
    NotSeatHolder,
    NotSeatMode,
    PollAlreadyOpen,
    PollClosed,
    PollRequired,
    ScenarioError,
    SessionError,
    UnknownModule,
    UnknownSyncPoint,
    WindowClosed,
    WindowNotOpen,
)
from ..graph import Composition, ModuleId, ParticipantId, participant_view
from . import voting
from .modes import ModeNode, Realtime, Timeslot, WaitForMe, governing_chains, resolve_tree

ROLES = ("learner", "instructor")


@dataclass(frozen=True)
class Participant:
    id: ParticipantId
    role: str = "learner"

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("participant id must be nonempty")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    at: float
    kind: str
    data: Mapping[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "at": self.at, "kind": self.kind, "data": dict(self.data)}


@dataclass(frozen=True)
class Ballot:
    voter: ParticipantId
    choice: str | None = None
    ranking: tuple[str, ...] | None = None


@dataclass
class Poll:
    id: str
    module: ModuleId
    options: tuple[str, ...]
    method: str
    ballots: dict[ParticipantId, Ballot] = field(default_factory=dict)
    open: bool = True
    outcome: voting.Outcome | None = None


@dataclass
class BarrierState:
    sync_point: ModuleId
    node: ModeNode
    counted: frozenset[ParticipantId]
    arrivals: dict[ParticipantId, float] = field(default_factory=dict)
    waiting: list[ParticipantId] = field(default_factory=list)
    released: bool = False
    released_at: float | None = None
    stragglers: tuple[ParticipantId, ...] = ()
    forced: bool = False

    @property
    def policy(self):
        return self.node.mode.straggler  # type: ignore[union-attr]

    @property
    def first_arrival(self) -> float | None:
        counted = [t for p, t in self.arrivals.items() if p in self.counted]
        return min(counted) if counted else None

    def counted_arrived(self) -> set[ParticipantId]:
        return {p for p in self.arrivals if p in self.counted}

    def satisfied(self, now: float) -> bool:
        return self.policy.satisfied(
            len(self.counted_arrived()), len(self.counted), self.first_arrival, now
        )

    def deadline(self) -> float | None:
        if self.released:
            return None
        return self.policy.deadline(self.first_arrival)


@dataclass(frozen=True)
class BarrierStatus:
    sync_point: ModuleId
    arrived: frozenset[ParticipantId]
    waiting_for: frozenset[ParticipantId]
    released: bool
    stragglers: frozenset[ParticipantId]


@dataclass(frozen=True)
class SlotStatus:
    participant: ParticipantId
    module: ModuleId
    status: str  # on_track | behind | ahead


@dataclass
class _Seat:
    node: ModeNode
    order: tuple[ParticipantId, ...]
    index: int = 0

    @property
    def holder(self) -> ParticipantId:
        return self.order[self.index]


def _serial(method):
    """Funnel every mutation through the session's single intake lock."""

    @functools.wraps(method)
    def wrapper(self, *args, **kwargs):
        with self._lock:
            return method(self, *args, **kwargs)

    return wrapper


class Session:
    """A live run of a composition by a group of participants.

    Every mutating method takes an event time ``at``. Time passes even when the
    event is then rejected: due timed barriers fire and the clock moves to
    ``at``. Times earlier than the clock raise ``ClockRegression``.
    """

    def __init__(
        self,
        composition: Composition,
        participants: Iterable[Participant | ParticipantId],
        mode_tree: ModeNode,
        *,
        at: float = 0.0,
        starts: Mapping[ParticipantId, ModuleId] | None = None,
    ) -> None:
        people = [p if isinstance(p, Participant) else Participant(p) for p in participants]
        if not people:
            raise EmptyParticipants("a session needs at least one participant")
        ids = [p.id for p in people]
        if len(set(ids)) != len(ids):
            raise SessionError(f"duplicate participant ids in {ids}")

        self._lock = threading.RLock()
        self.composition = composition
        self.participants: dict[ParticipantId, Participant] = {p.id: p for p in people}
        self.join_order: tuple[ParticipantId, ...] = tuple(ids)
        self.mode_tree = resolve_tree(mode_tree, composition)
        self._chains = governing_chains(self.mode_tree)
        self.views = {pid: participant_view(composition, pid) for pid in ids}
        self.clock = float(at)
        self.log: list[SessionEvent] = []

        self.positions: dict[ParticipantId, ModuleId | None] = {}
        self.done: set[ParticipantId] = set()
        self.trails: dict[ParticipantId, list[ModuleId]] = {}
        self.waiting_at: dict[ParticipantId, ModuleId] = {}
        starts = dict(starts or {})
        for pid in ids:
            view = self.views[pid]
            if not len(view):
                self.positions[pid] = None  # observer: nothing to traverse
                self.trails[pid] = []
                continue
            if pid in starts:
                start = starts[pid]
                if start not in view:
                    raise IllegalMove(f"start {start!r} not in {pid}'s view")
            else:
                sources = view.sources()
                if len(sources) != 1:
                    raise SessionError(
                        f"{pid}'s view has sources {sources}; pass an explicit start"
                    )
                start = sources[0]
            self.positions[pid] = start
            self.trails[pid] = [start]

        self.polls: dict[str, Poll] = {}
        self._open_poll_at: dict[ModuleId, str] = {}
        self._resolved_at: dict[ModuleId, voting.Outcome] = {}
        self._poll_seq = 0

        self.seats: dict[str, _Seat] = {}
        for node in self.mode_tree.walk():
            mode = node.mode
            if not isinstance(mode, Realtime) or mode.seat.kind == "none":
                continue
            if mode.seat.kind == "fixed":
                if mode.seat.holder not in self.participants:
                    raise InvalidModeTree(f"seat holder {mode.seat.holder!r} is not a participant")
                order: tuple[ParticipantId, ...] = (mode.seat.holder,)
            elif mode.seat.rotation == "instructor_priority":
                order = tuple(
                    [p for p in ids if self.participants[p].role == "instructor"]
                    + [p for p in ids if self.participants[p].role != "instructor"]
                )
            else:
                order = tuple(ids)
            self.seats[node.id] = _Seat(node, order)  # type: ignore[index]

        self.barriers: dict[ModuleId, BarrierState] = {}
        for node in self.mode_tree.walk():
            if isinstance(node.mode, WaitForMe):
                for point in sorted(node.mode.sync_points):
                    counted = frozenset(
                        p for p in ids
                        if point in self.views[p]
                        and (node.mode.count_instructors or self.participants[p].role != "instructor")
                    )
                    # innermost declaration wins
                    self.barriers[point] = BarrierState(point, node, counted)

        self._emit("SessionOpened", {
            "composition": composition.id,
            "participants": [{"id": p.id, "role": p.role} for p in people],
            "positions": dict(self.positions),
            "mode_tree": self.mode_tree.to_dict(),
        })
        for pid in ids:
            start = self.positions[pid]
            if start is not None and start in self.barriers:
                self._arrive(self.barriers[start], pid)
        self._evaluate_barriers(self.clock)

    # -- plumbing -----------------------------------------------------------

    def _emit(self, kind: str, data: Mapping[str, Any], at: float | None = None) -> SessionEvent:
        event = SessionEvent(len(self.log), self.clock if at is None else at, kind, dict(data))
        self.log.append(event)
        return event

    def _stamp(self, at: float) -> None:
        at = float(at)
        if at < self.clock:
            raise ClockRegression(f"event at {at} precedes session clock {self.clock}")
        self._fire_timers(at)
        self.clock = at

    def _fire_timers(self, until: float) -> None:
        """Release timed barriers whose deadline falls at or before ``until``, in deadline order."""
        while True:
            due = [
                (b.deadline(), b.sync_point) for b in self.barriers.values()
                if b.deadline() is not None and b.deadline() <= until  # type: ignore[operator]
            ]
            due = [d for d in due if self.barriers[d[1]].satisfied(d[0])]
            if not due:
                return
            deadline, point = min(due)
            self.clock = max(self.clock, deadline)
            self._release(self.barriers[point], self.clock)

    def _participant(self, pid: ParticipantId) -> Participant:
        try:
            return self.participants[pid]
        except KeyError:
            raise NotParticipant(f"{pid!r} is not in this session") from None

    def _instructor(self, pid: ParticipantId) -> Participant:
        person = self._participant(pid)
        if person.role != "instructor":
            raise NotInstructor(f"{pid!r} is not an instructor")
        return person

    def chain(self, module: ModuleId) -> tuple[ModeNode, ...]:
        if module not in self.composition:
            raise UnknownModule(module)
        return self._chains[module]

    def _innermost(self, module: ModuleId, mode_type: type) -> ModeNode | None:
        for node in reversed(self.chain(module)):
            if isinstance(node.mode, mode_type):
                return node
        return None

    def window_for(self, module: ModuleId) -> tuple[ModeNode, tuple[float, float]] | None:
        for node in reversed(self.chain(module)):
            if isinstance(node.mode, Timeslot) and module in node.mode.windows:
                return node, node.mode.windows[module]
        return None

    # -- movement -----------------------------------------------------------

    def _check_leave(self, module: ModuleId, to: ModuleId | None) -> None:
        if self._innermost(module, Realtime) is None:
            return
        outcome = self._resolved_at.get(module)
        if outcome is None:
            raise PollRequired(f"leaving realtime module {module!r} needs a resolved poll")
        if to is not None and outcome.winner in self.composition and outcome.winner != to:
            raise IllegalMove(f"poll at {module!r} selected {outcome.winner!r}, not {to!r}")

    def _check_enter(self, module: ModuleId, at: float) -> bool:
        """Timeslot gate; returns True when entry is late but allowed."""
        found = self.window_for(module)
        if found is None:
            return False
        node, (start, end) = found
        if at < start:
            raise WindowNotOpen(f"window for {module!r} opens at {start}")
        if at > end:
            if node.mode.late == "block":  # type: ignore[union-attr]
                raise WindowClosed(f"window for {module!r} closed at {end}")
            return True
        return False

    def _move(self, pid: ParticipantId, to: ModuleId, **extra: Any) -> None:
        src = self.positions[pid]
        self.positions[pid] = to
        self.trails[pid].append(to)
        self.waiting_at.pop(pid, None)
        self._emit("Moved", {"participant": pid, "from": src, "to": to, **extra})

    @_serial
    def advance(self, participant: ParticipantId, to: ModuleId, at: float) -> None:
        """Move ``participant`` along an edge of their view.

        Entering an unreleased wait-for-me sync point registers an arrival and
        raises ``BarrierBlocked``; the participant is moved automatically once
        the barrier releases.
        """
        self._participant(participant)
        self._stamp(at)
        if participant in self.done:
            raise IllegalMove(f"{participant!r} has finished")
        current = self.positions[participant]
        if current is None:
            raise IllegalMove(f"{participant!r} observes only and cannot move")
        if to not in self.composition:
            raise UnknownModule(to)
        waiting = self.waiting_at.get(participant)
        if waiting is not None:
            if waiting == to:
                barrier = self.barriers[to]
                raise BarrierBlocked(to, barrier.counted - barrier.counted_arrived())
            raise IllegalMove(f"{participant!r} is waiting at barrier {waiting!r}")
        if not self.views[participant].has_edge(current, to):  # type: ignore[arg-type]
            raise IllegalMove(f"{current} -> {to} is not a flow in {participant}'s view")
        self._check_leave(current, to)  # type: ignore[arg-type]
        late = self._check_enter(to, self.clock)
        extra = {"late": True} if late else {}

        barrier = self.barriers.get(to)
        if barrier is not None and not barrier.released and participant in barrier.counted:
            self._arrive(barrier, participant)
            barrier.waiting.append(participant)
            self.waiting_at[participant] = to
            if barrier.satisfied(self.clock):
                self._release(barrier, self.clock)
                return
            raise BarrierBlocked(to, barrier.counted - barrier.counted_arrived())

        self._move(participant, to, **extra)
        if barrier is not None:
            self._arrive(barrier, participant)

    @_serial
    def finish(self, participant: ParticipantId, at: float) -> None:
        """Mark a participant done; only allowed from a sink of their view."""
        self._participant(participant)
        self._stamp(at)
        if participant in self.done:
            raise IllegalMove(f"{participant!r} has already finished")
        if participant in self.waiting_at:
            raise IllegalMove(f"{participant!r} is waiting at a barrier")
        current = self.positions[participant]
        if current is not None and self.views[participant].children(current):
            raise IllegalMove(f"{current!r} is not a sink of {participant}'s view")
        if current is not None:
            self._check_leave(current, None)
        self.done.add(participant)
        self._emit("Finished", {"participant": participant, "at_module": current})

    # -- barriers -----------------------------------------------------------

    def _arrive(self, barrier: BarrierState, pid: ParticipantId) -> None:
        if pid in barrier.arrivals:
            return
        barrier.arrivals[pid] = self.clock
        self._emit("BarrierArrived", {"sync_point": barrier.sync_point, "participant": pid})

    def _release(self, barrier: BarrierState, at: float, forced_by: ParticipantId | None = None) -> None:
        barrier.released = True
        barrier.released_at = at
        barrier.forced = forced_by is not None
        barrier.stragglers = tuple(p for p in self.join_order
                                   if p in barrier.counted and p not in barrier.arrivals)
        data: dict[str, Any] = {
            "sync_point": barrier.sync_point,
            "arrived": sorted(barrier.arrivals),
            "stragglers": list(barrier.stragglers),
        }
        if forced_by is not None:
            data["forced_by"] = forced_by
        self._emit("BarrierReleased", data, at=at)
        waiting = sorted(barrier.waiting, key=lambda p: (barrier.arrivals[p], self.join_order.index(p)))
        barrier.waiting.clear()
        for pid in waiting:
            self._move(pid, barrier.sync_point, via="barrier")

    def _evaluate_barriers(self, now: float) -> None:
        for point in sorted(self.barriers):
            barrier = self.barriers[point]
            if not barrier.released and barrier.satisfied(now):
                self._release(barrier, now)

    def barrier_status(self, sync_point: ModuleId, now: float | None = None) -> BarrierStatus:
        """Read-only view of a barrier as of ``now`` (default: the session clock).

        A timed policy that is satisfied at ``now`` reports ``released`` even
        before ``tick`` actuates it.
        """
        try:
            barrier = self.barriers[sync_point]
        except KeyError:
            raise UnknownSyncPoint(sync_point) from None
        now = self.clock if now is None else now
        arrived = barrier.counted_arrived()
        released = barrier.released or barrier.satisfied(now)
        if barrier.released:
            stragglers = frozenset(barrier.stragglers)
        elif released:
            stragglers = barrier.counted - arrived
        else:
            stragglers = frozenset()
        return BarrierStatus(
            sync_point,
            frozenset(arrived),
            barrier.counted - arrived,
            released,
            stragglers,
        )

    def next_deadline(self) -> float | None:
        """Earliest pending timed-barrier deadline, for schedulers."""
        deadlines = [b.deadline() for b in self.barriers.values() if b.deadline() is not None]
        return min(deadlines) if deadlines else None  # type: ignore[type-var]

    @_serial
    def tick(self, at: float) -> None:
        """Advance the clock, firing any due timed barriers."""
        self._stamp(at)

    @_serial
    def force_release(self, instructor: ParticipantId, sync_point: ModuleId, at: float) -> None:
        self._instructor(instructor)
        self._stamp(at)
        if sync_point not in self.barriers:
            raise UnknownSyncPoint(sync_point)
        barrier = self.barriers[sync_point]
        if not barrier.released:
            self._release(barrier, self.clock, forced_by=instructor)

    # -- realtime -----------------------------------------------------------

    @_serial
    def open_poll(
        self,
        module: ModuleId,
        options: Sequence[str],
        at: float,
        method: str | None = None,
    ) -> str:
        self._stamp(at)
        node = self._innermost(module, Realtime)
        if node is None:
            raise NotRealtimeScope(f"{module!r} is not governed by a realtime mode")
        if module in self._open_poll_at:
            raise PollAlreadyOpen(f"poll {self._open_poll_at[module]} already open at {module!r}")
        options = tuple(options)
        if not options or len(set(options)) != len(options):
            raise InvalidBallot("a poll needs one or more distinct options")
        method = method or node.mode.voting  # type: ignore[union-attr]
        if method not in voting.METHODS:
            raise ValueError(f"unknown voting method {method!r}")
        self._poll_seq += 1
        poll = Poll(f"poll-{self._poll_seq}", module, options, method)
        self.polls[poll.id] = poll
        self._emit("PollOpened", {"poll": poll.id, "module": module,
                                  "options": list(options), "method": method})
        if len(options) == 1:
            self._resolve(poll, voting.Outcome(options[0], method, None, {"auto": True}))
        else:
            self._open_poll_at[module] = poll.id
        return poll.id

    def poll(self, poll_id: str) -> Poll:
        try:
            return self.polls[poll_id]
        except KeyError:
            raise PollClosed(f"no such poll {poll_id!r}") from None

    def open_poll_at(self, module: ModuleId) -> str | None:
        return self._open_poll_at.get(module)

    def resolved_at(self, module: ModuleId) -> voting.Outcome | None:
        return self._resolved_at.get(module)

    def seat_holder(self, node_id: str | None = None) -> ParticipantId:
        return self._seat(node_id).holder

    def _seat(self, node_id: str | None) -> _Seat:
        if node_id is not None:
            if node_id not in self.seats:
                raise NotSeatMode(f"mode node {node_id!r} has no seat")
            return self.seats[node_id]
        if len(self.seats) != 1:
            raise NotSeatMode("no seat mode active" if not self.seats else "several seats; name one")
        return next(iter(self.seats.values()))

    @_serial
    def cast_ballot(
        self,
        poll_id: str,
        voter: ParticipantId,
        at: float,
        *,
        choice: str | None = None,
        ranking: Sequence[str] | None = None,
    ) -> None:
        """Record or replace ``voter``'s ballot."""
        self._stamp(at)
        poll = self.poll(poll_id)
        if not poll.open:
            raise PollClosed(f"poll {poll_id} is closed")
        self._participant(voter)
        node = self._innermost(poll.module, Realtime)
        if node is not None and node.id in self.seats and self.seats[node.id].holder != voter:
            raise NotSeatHolder(f"only {self.seats[node.id].holder!r} may vote here")
        if poll.method == "plurality":
            if choice is None and ranking:
                choice = ranking[0]
            if choice is None:
                raise InvalidBallot("plurality ballot needs a choice")
            ballot = Ballot(voter, choice=voting.validate_choice(poll.options, choice))
        else:
            if ranking is None and choice is not None:
                ranking = (choice,)
            if ranking is None:
                raise InvalidBallot("condorcet ballot needs a ranking")
            ballot = Ballot(voter, ranking=voting.validate_ranking(poll.options, ranking))
        replaced = voter in poll.ballots
        poll.ballots[voter] = ballot
        self._emit("BallotCast", {
            "poll": poll_id, "voter": voter, "replaced": replaced,
            "choice": ballot.choice,
            "ranking": list(ballot.ranking) if ballot.ranking else None,
        })

    @_serial
    def tally(self, poll_id: str, at: float) -> voting.Outcome:
        self._stamp(at)
        poll = self.poll(poll_id)
        if not poll.open:
            raise PollClosed(f"poll {poll_id} is closed")
        if not poll.ballots:
            raise NoBallots(f"poll {poll_id} has no ballots")
        ballots = [poll.ballots[v] for v in sorted(poll.ballots)]
        if poll.method == "plurality":
            outcome = voting.plurality(poll.options, [b.choice for b in ballots])  # type: ignore[misc]
        else:
            outcome = voting.condorcet(poll.options, [b.ranking for b in ballots])  # type: ignore[misc]
        self._resolve(poll, outcome)
        return outcome

    def _resolve(self, poll: Poll, outcome: voting.Outcome) -> None:
        poll.open = False
        poll.outcome = outcome
        self._open_poll_at.pop(poll.module, None)
        self._resolved_at[poll.module] = outcome
        self._emit("PollResolved", {"poll": poll.id, "module": poll.module, **outcome.to_dict()})

    @_serial
    def rotate_seat(self, at: float, node_id: str | None = None) -> ParticipantId:
        self._stamp(at)
        seat = self._seat(node_id)
        if seat.node.mode.seat.kind != "hot_seat":  # type: ignore[union-attr]
            raise NotSeatMode(f"seat on {seat.node.id!r} is fixed")
        previous = seat.holder
        seat.index = (seat.index + 1) % len(seat.order)
        self._emit("SeatRotated", {"node": seat.node.id, "from": previous, "to": seat.holder})
        return seat.holder

    # -- timeslots ----------------------------------------------------------

    def timeslot_check(self, now: float) -> list[SlotStatus]:
        out = []
        for pid in self.join_order:
            module = self.positions[pid]
            if pid in self.done or module is None:
                continue
            found = self.window_for(module)
            if found is None:
                continue
            start, end = found[1]
            status = "behind" if end < now else "ahead" if start > now else "on_track"
            out.append(SlotStatus(pid, module, status))
        return out

    # -- discussion hooks ---------------------------------------------------

    @_serial
    def reference(self, participant: ParticipantId, module: ModuleId, at: float, note: str | None = None) -> None:
        """Log an opaque pointer from a participant to a module they have visited."""
        self._participant(participant)
        self._stamp(at)
        if module not in self.trails[participant]:
            raise IllegalMove(f"{participant!r} has not visited {module!r}")
        self._emit("Reference", {"participant": participant, "module": module, "note": note})

    @_serial
    def feedback(self, instructor: ParticipantId, message: str, at: float) -> None:
        self._instructor(instructor)
        self._stamp(at)
        self._emit("Feedback", {"instructor": instructor, "message": message})

    # -- replay & snapshots -------------------------------------------------

    def apply(self, event: Mapping[str, Any]) -> Any:
        """Apply one scripted ``{at, kind, args}`` event."""
        at = event["at"]
        kind = event["kind"]
        args = dict(event.get("args") or {})
        if kind == "advance":
            return self.advance(args["participant"], args["to"], at)
        if kind == "finish":
            return self.finish(args["participant"], at)
        if kind == "open_poll":
            return self.open_poll(args["module"], args["options"], at, args.get("method"))
        if kind == "cast_ballot":
            return self.cast_ballot(self._poll_ref(args), args["voter"], at,
                                    choice=args.get("choice"), ranking=args.get("ranking"))
        if kind == "tally":
            return self.tally(self._poll_ref(args), at)
        if kind == "rotate_seat":
            return self.rotate_seat(at, args.get("node"))
        if kind == "tick":
            return self.tick(at)
        if kind == "force_release":
            return self.force_release(args["instructor"], args["sync_point"], at)
        if kind == "reference":
            return self.reference(args["participant"], args["module"], at, args.get("note"))
        if kind == "feedback":
            return self.feedback(args["instructor"], args.get("message", ""), at)
        raise SessionError(f"unknown event kind {kind!r}")

    def _poll_ref(self, args: Mapping[str, Any]) -> str:
        if "poll" in args:
            return args["poll"]
        module = args["module"]
        poll_id = self._open_poll_at.get(module)
        if poll_id is None:
            raise PollClosed(f"no open poll at {module!r}")
        return poll_id

    def replay(self, events: Iterable[Mapping[str, Any]]) -> None:
        """Apply scripted events in order.

        ``BarrierBlocked`` is an expected outcome (the arrival is recorded);
        any other rejection aborts with the offending event index.
        """
        for index, event in enumerate(events):
            try:
                self.apply(event)
            except BarrierBlocked:
                continue
            except (SessionError, UnknownModule, KeyError, ValueError) as exc:
                raise ScenarioError(index, dict(event), exc) from exc

    def snapshot(self) -> dict[str, Any]:
        return {
            "clock": self.clock,
            "positions": {p: ("done" if p in self.done else self.positions[p]) for p in self.join_order},
            "trails": {p: list(self.trails[p]) for p in self.join_order},
            "waiting": dict(sorted(self.waiting_at.items())),
            "barriers": {
                point: {
                    "arrived": sorted(b.arrivals),
                    "counted": sorted(b.counted),
                    "released": b.released,
                    "released_at": b.released_at,
                    "stragglers": list(b.stragglers),
                    "forced": b.forced,
                }
                for point, b in sorted(self.barriers.items())
            },
            "polls": {
                pid: {
                    "module": p.module,
                    "options": list(p.options),
                    "method": p.method,
                    "open": p.open,
                    "winner": p.outcome.winner if p.outcome else None,
                }
                for pid, p in sorted(self.polls.items())
            },
            "seats": {nid: s.holder for nid, s in sorted(self.seats.items())},
        }

    def log_dicts(self) -> list[dict[str, Any]]:
        return [e.to_dict() for e in self.log]

    def dumps(self) -> str:
        """Canonical JSON of final state and log; byte-identical for identical runs."""
        return json.dumps({"state": self.snapshot(), "log": self.log_dicts()},
                          sort_keys=True, indent=2)


def open_session(
    composition: Composition,
    participants: Iterable[Participant | ParticipantId],
    mode_tree: ModeNode,
    *,
    at: float = 0.0,
    starts: Mapping[ParticipantId, ModuleId] | None = None,
) -> Session:
    return Session(composition, participants, mode_tree, at=at, starts=starts)
