"""Exception hierarchy shared by every chronocanvas subsystem."""

from __future__ import annotations

from collections.abc import Iterable


class ChronoError(Exception):
    """Base class for all domain errors raised by chronocanvas."""


# -- composition graph -------------------------------------------------------


class DuplicateId(ChronoError, ValueError):
    pass


class UnknownModule(ChronoError, KeyError):
    def __init__(self, module_id: str) -> None:
        self.module_id = module_id
        super().__init__(module_id)

    def __str__(self) -> str:
        return f"unknown module {self.module_id!r}"


class SelfLoop(ChronoError, ValueError):
    pass


class CycleError(ChronoError, ValueError):
    """Raised when a flow edge would close a directed cycle."""

    def __init__(self, source: str, target: str, path: Iterable[str] = ()) -> None:
        self.source = source
        self.target = target
        self.path = tuple(path)
        detail = " -> ".join(self.path) if self.path else f"{target} ... {source}"
        super().__init__(f"edge {source} -> {target} would create a cycle ({detail} -> {target})")


# -- estimation --------------------------------------------------------------


class NonPositiveDuration(ChronoError, ValueError):
    pass


class InsufficientData(ChronoError, LookupError):
    pass


class MissingEstimate(ChronoError, LookupError):
    def __init__(self, modules: Iterable[str]) -> None:
        self.modules = tuple(sorted(modules))
        super().__init__("no usable estimate for: " + ", ".join(self.modules))


# -- repetition --------------------------------------------------------------


class NotSrAware(ChronoError):
    pass


class InvalidGrade(ChronoError, ValueError):
    pass


# -- synchronization ---------------------------------------------------------


class SessionError(ChronoError):
    """Base class for session engine rejections."""


class InvalidModeTree(SessionError, ValueError):
    pass


class EmptyParticipants(SessionError, ValueError):
    pass


class NotParticipant(SessionError):
    pass


class NotRealtimeScope(SessionError):
    pass


class PollAlreadyOpen(SessionError):
    pass


class PollClosed(SessionError):
    pass


class NotSeatHolder(SessionError):
    pass


class NotSeatMode(SessionError):
    pass


class InvalidBallot(SessionError, ValueError):
    pass


class NoBallots(SessionError):
    pass


class IllegalMove(SessionError):
    pass


class BarrierBlocked(SessionError):
    """The move was registered as a barrier arrival but the barrier has not released."""

    def __init__(self, sync_point: str, waiting_for: Iterable[str]) -> None:
        self.sync_point = sync_point
        self.waiting_for = tuple(sorted(waiting_for))
        super().__init__(
            f"barrier at {sync_point!r} still waiting for: {', '.join(self.waiting_for) or '-'}"
        )


class WindowNotOpen(SessionError):
    pass


class WindowClosed(SessionError):
    pass


class PollRequired(SessionError):
    pass


class UnknownSyncPoint(SessionError, KeyError):
    pass


class NotInstructor(SessionError):
    pass


class ClockRegression(SessionError, ValueError):
    pass


class ScenarioError(ChronoError):
    """An engine rejection while replaying a scripted or generated event stream."""

    def __init__(self, index: int, event: object, cause: Exception) -> None:
        self.index = index
        self.event = event
        self.cause = cause
        super().__init__(f"event #{index} ({event}) rejected: {type(cause).__name__}: {cause}")


# -- persistence -------------------------------------------------------------


class SchemaError(ChronoError, ValueError):
    """A file failed schema or invariant validation."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        self.message = message
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
