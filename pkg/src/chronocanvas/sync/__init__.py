"""Session synchronization modes and the engine that enforces them."""

from .modes import ModeNode, Realtime, Seat, StragglerPolicy, Timeslot, WaitForMe
from .session import BarrierStatus, Participant, Session, SessionEvent, SlotStatus, open_session
from .voting import Outcome

__all__ = [
    "BarrierStatus",
    "ModeNode",
    "Outcome",
    "Participant",
    "Realtime",
    "Seat",
    "Session",
    "SessionEvent",
    "SlotStatus",
    "StragglerPolicy",
    "Timeslot",
    "WaitForMe",
    "open_session",
]
