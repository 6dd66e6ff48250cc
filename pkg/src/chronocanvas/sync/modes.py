"""Synchronization mode trees.

A mode tree assigns each module a chain of governing modes, outermost first.
Children narrow their parent's scope; modules a parent keeps for itself are
governed by the parent alone.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any, Union

from ..errors import InvalidModeTree
from ..graph import Composition, ModuleId
from .voting import METHODS

SEAT_KINDS = ("none", "fixed", "hot_seat")
ROTATIONS = ("round_robin", "instructor_priority")
STRAGGLER_KINDS = ("all", "quorum", "timeout")
LATE_POLICIES = ("block", "allow")


@dataclass(frozen=True)
class Seat:
    kind: str = "none"
    holder: str | None = None
    rotation: str = "round_robin"

    def __post_init__(self) -> None:
        if self.kind not in SEAT_KINDS:
            raise InvalidModeTree(f"unknown seat kind {self.kind!r}")
        if self.kind == "fixed" and not self.holder:
            raise InvalidModeTree("fixed seat needs a holder")
        if self.rotation not in ROTATIONS:
            raise InvalidModeTree(f"unknown seat rotation {self.rotation!r}")


@dataclass(frozen=True)
class StragglerPolicy:
    """When a wait-for-me barrier may release.

    ``all``: every counted participant has arrived.
    ``quorum``: at least ``quorum`` arrived and, if ``timeout`` is set, that
    long has passed since the first arrival.
    ``timeout``: everyone arrived, or ``timeout`` seconds passed since the first
    arrival; the missing ones are flagged as stragglers.
    """

    kind: str = "all"
    quorum: int | None = None
    timeout: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in STRAGGLER_KINDS:
            raise InvalidModeTree(f"unknown straggler policy {self.kind!r}")
        if self.kind == "quorum" and (self.quorum is None or self.quorum < 1):
            raise InvalidModeTree("quorum policy needs quorum >= 1")
        if self.kind == "timeout" and self.timeout is None:
            raise InvalidModeTree("timeout policy needs a timeout")
        if self.timeout is not None and self.timeout < 0:
            raise InvalidModeTree("timeout must be nonnegative")

    def satisfied(self, n_arrived: int, n_counted: int, first_arrival: float | None, now: float) -> bool:
        if n_arrived >= n_counted:
            return True
        if self.kind == "all" or first_arrival is None:
            return False
        elapsed = now - first_arrival
        if self.kind == "quorum":
            if n_arrived < self.quorum:  # type: ignore[operator]
                return False
            return self.timeout is None or elapsed >= self.timeout
        return elapsed >= self.timeout  # type: ignore[operator]

    def deadline(self, first_arrival: float | None) -> float | None:
        if first_arrival is None or self.timeout is None or self.kind == "all":
            return None
        return first_arrival + self.timeout


@dataclass(frozen=True)
class Realtime:
    voting: str = "plurality"
    seat: Seat = field(default_factory=Seat)

    def __post_init__(self) -> None:
        if self.voting not in METHODS:
            raise InvalidModeTree(f"unknown voting method {self.voting!r}")


@dataclass(frozen=True)
class WaitForMe:
    sync_points: frozenset[ModuleId] = frozenset()
    straggler: StragglerPolicy = field(default_factory=StragglerPolicy)
    count_instructors: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "sync_points", frozenset(self.sync_points))


@dataclass(frozen=True)
class Timeslot:
    windows: Mapping[ModuleId, tuple[float, float]] = field(default_factory=dict)
    late: str = "block"

    def __post_init__(self) -> None:
        clean = {}
        for module, window in self.windows.items():
            start, end = (float(x) for x in window)
            if start > end:
                raise InvalidModeTree(f"window for {module!r} ends before it starts")
            clean[module] = (start, end)
        object.__setattr__(self, "windows", clean)
        if self.late not in LATE_POLICIES:
            raise InvalidModeTree(f"unknown late policy {self.late!r}")


Mode = Union[Realtime, WaitForMe, Timeslot]
KIND_NAMES = {Realtime: "realtime", WaitForMe: "wait_for_me", Timeslot: "timeslot"}


@dataclass(frozen=True)
class ModeNode:
    mode: Mode
    scope: frozenset[ModuleId] | None = None  # None: inherit the parent's scope
    children: tuple[ModeNode, ...] = ()
    id: str | None = None

    @property
    def kind(self) -> str:
        return KIND_NAMES[type(self.mode)]

    def walk(self) -> Iterable[ModeNode]:
        yield self
        for child in self.children:
            yield from child.walk()

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.id is not None:
            out["id"] = self.id
        if self.scope is not None:
            out["scope"] = sorted(self.scope)
        mode = self.mode
        if isinstance(mode, Realtime):
            out["voting"] = mode.voting
            out["seat"] = {"kind": mode.seat.kind, "holder": mode.seat.holder,
                           "rotation": mode.seat.rotation}
        elif isinstance(mode, WaitForMe):
            out["sync_points"] = sorted(mode.sync_points)
            out["straggler"] = {"policy": mode.straggler.kind, "quorum": mode.straggler.quorum,
                                "timeout": mode.straggler.timeout}
            out["count_instructors"] = mode.count_instructors
        else:
            out["windows"] = {m: list(w) for m, w in sorted(mode.windows.items())}
            out["late"] = mode.late
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ModeNode:
        try:
            kind = data["kind"]
            if kind == "realtime":
                seat = data.get("seat") or {}
                mode: Mode = Realtime(
                    voting=data.get("voting", "plurality"),
                    seat=Seat(seat.get("kind", "none"), seat.get("holder"),
                              seat.get("rotation") or "round_robin"),
                )
            elif kind == "wait_for_me":
                pol = data.get("straggler") or {}
                mode = WaitForMe(
                    sync_points=frozenset(data.get("sync_points", ())),
                    straggler=StragglerPolicy(pol.get("policy", "all"), pol.get("quorum"),
                                              pol.get("timeout")),
                    count_instructors=bool(data.get("count_instructors", False)),
                )
            elif kind == "timeslot":
                mode = Timeslot(
                    windows={m: tuple(w) for m, w in (data.get("windows") or {}).items()},
                    late=data.get("late", "block"),
                )
            else:
                raise InvalidModeTree(f"unknown mode kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidModeTree):
                raise
            raise InvalidModeTree(f"malformed mode node: {exc}") from None
        scope = data.get("scope")
        return cls(
            mode=mode,
            scope=frozenset(scope) if scope is not None else None,
            children=tuple(cls.from_dict(c) for c in data.get("children", ())),
            id=data.get("id"),
        )


def resolve_tree(tree: ModeNode, composition: Composition) -> ModeNode:
    """Validate ``tree`` against ``composition``; fill in scopes and node ids.

    The root must cover every module. Each child's scope lies inside its
    parent's and sibling scopes are disjoint, so every module ends up governed
    by exactly one deepest node.
    """
    modules = frozenset(composition.modules)
    seen_ids: set[str] = set()

    def resolve(node: ModeNode, parent_scope: frozenset[ModuleId], path: str) -> ModeNode:
        scope = parent_scope if node.scope is None else frozenset(node.scope)
        node_id = node.id or path
        if node_id in seen_ids:
            raise InvalidModeTree(f"duplicate mode node id {node_id!r}")
        seen_ids.add(node_id)
        if not scope <= parent_scope:
            extra = sorted(scope - parent_scope)
            raise InvalidModeTree(f"node {node_id!r} scope escapes its parent: {extra}")
        mode = node.mode
        if isinstance(mode, WaitForMe) and not mode.sync_points <= scope:
            raise InvalidModeTree(f"node {node_id!r} sync points outside scope: "
                                  f"{sorted(mode.sync_points - scope)}")
        if isinstance(mode, Timeslot) and not set(mode.windows) <= scope:
            raise InvalidModeTree(f"node {node_id!r} windows outside scope: "
                                  f"{sorted(set(mode.windows) - scope)}")
        claimed: set[ModuleId] = set()
        children = []
        for i, child in enumerate(node.children):
            resolved = resolve(child, scope, f"{node_id}.{i}")
            overlap = claimed & resolved.scope  # type: ignore[operator]
            if overlap:
                raise InvalidModeTree(f"sibling scopes overlap on {sorted(overlap)}")
            claimed |= resolved.scope  # type: ignore[operator]
            children.append(resolved)
        return ModeNode(mode, scope, tuple(children), node_id)

    root = resolve(tree, modules if tree.scope is None else frozenset(tree.scope), tree.id or "root")
    if root.scope != modules:
        missing = sorted(modules - root.scope)  # type: ignore[operator]
        extra = sorted(root.scope - modules)  # type: ignore[operator]
        raise InvalidModeTree(f"root scope must equal the composition (missing {missing}, unknown {extra})")
    return root


def governing_chains(tree: ModeNode) -> dict[ModuleId, tuple[ModeNode, ...]]:
    """Module -> nodes whose scope contains it, outermost first (resolved trees only)."""
    chains: dict[ModuleId, tuple[ModeNode, ...]] = {}

    def visit(node: ModeNode, prefix: tuple[ModeNode, ...]) -> None:
        here = prefix + (node,)
        for module in node.scope:  # type: ignore[union-attr]
            if len(chains.get(module, ())) < len(here):
                chains[module] = here
        for child in node.children:
            visit(child, here)

    visit(tree, ())
    return chains
