"""Module registry and composition DAGs with per-participant flow labels."""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field, replace
from heapq import heapify, heappop, heappush
from typing import Any

from .errors import CycleError, DuplicateId, SelfLoop, UnknownModule

ModuleId = str
ParticipantId = str


def _norm_tag(tag: str | None) -> str | None:
    if tag is None:
        return None
    tag = " ".join(str(tag).split()).casefold()
    return tag or None


@dataclass(frozen=True)
class Module:
    """An opaque e-learning unit; only its metadata is modelled."""

    id: ModuleId
    type_tag: str | None = None
    topic_tag: str | None = None
    author_estimate: float | None = None  # seconds
    sr_aware: bool = False
    difficulty: float | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("module id must be a nonempty string")
        object.__setattr__(self, "type_tag", _norm_tag(self.type_tag))
        object.__setattr__(self, "topic_tag", _norm_tag(self.topic_tag))
        if self.author_estimate is not None:
            est = float(self.author_estimate)
            if not math.isfinite(est) or est <= 0:
                raise ValueError(f"author_estimate for {self.id!r} must be > 0, got {est}")
            object.__setattr__(self, "author_estimate", est)
        if self.difficulty is not None:
            diff = float(self.difficulty)
            if not 0.0 <= diff <= 1.0:
                raise ValueError(f"difficulty for {self.id!r} must lie in [0, 1], got {diff}")
            object.__setattr__(self, "difficulty", diff)

    def tag(self, kind: str) -> str | None:
        """Return the ``"type"`` or ``"topic"`` tag."""
        if kind == "type":
            return self.type_tag
        if kind == "topic":
            return self.topic_tag
        raise ValueError(f"unknown tag kind {kind!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "type": self.type_tag,
            "topic": self.topic_tag,
            "author_estimate_s": self.author_estimate,
            "sr_aware": self.sr_aware,
            "difficulty": self.difficulty,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Module:
        return cls(
            id=data["id"],
            type_tag=data.get("type"),
            topic_tag=data.get("topic"),
            author_estimate=data.get("author_estimate_s"),
            sr_aware=bool(data.get("sr_aware", False)),
            difficulty=data.get("difficulty"),
        )


@dataclass(frozen=True)
class FlowEdge:
    """``source -> target``; an empty participant set means the edge is shared."""

    source: ModuleId
    target: ModuleId
    participants: frozenset[ParticipantId] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "participants", frozenset(self.participants))

    @property
    def shared(self) -> bool:
        return not self.participants

    def visible_to(self, participant: ParticipantId) -> bool:
        return self.shared or participant in self.participants

    def to_dict(self) -> dict[str, Any]:
        return {"from": self.source, "to": self.target, "participants": sorted(self.participants)}


class Registry:
    """The set of all known modules, keyed by id."""

    def __init__(self, modules: Iterable[Module] = ()) -> None:
        self._modules: dict[ModuleId, Module] = {}
        for module in modules:
            self.add(module)

    def add(self, module: Module) -> ModuleId:
        if module.id in self._modules:
            raise DuplicateId(f"module {module.id!r} already registered")
        self._modules[module.id] = module
        return module.id

    def get(self, module_id: ModuleId) -> Module:
        try:
            return self._modules[module_id]
        except KeyError:
            raise UnknownModule(module_id) from None

    def replace(self, module: Module) -> None:
        if module.id not in self._modules:
            raise UnknownModule(module.id)
        self._modules[module.id] = module

    def mark_sr_aware(self, module_id: ModuleId, flag: bool = True) -> None:
        self.replace(replace(self.get(module_id), sr_aware=bool(flag)))

    @classmethod
    def merged(cls, compositions: Iterable[Composition]) -> Registry:
        """Union of the modules of several compositions; first occurrence wins."""
        registry = cls()
        for comp in compositions:
            for module in comp.modules.values():
                if module.id not in registry:
                    registry.add(module)
        return registry

    def __contains__(self, module_id: object) -> bool:
        return module_id in self._modules

    def __iter__(self) -> Iterator[Module]:
        return iter(self._modules.values())

    def __len__(self) -> int:
        return len(self._modules)

    def ids(self) -> list[ModuleId]:
        return sorted(self._modules)


def add_module(registry: Registry | Composition, module: Module) -> ModuleId:
    return registry.add(module)


class Composition:
    """A DAG of modules joined by flow edges.

    Acyclicity is enforced eagerly: ``add_flow`` refuses any edge that would
    close a cycle, so every stored composition is a valid chronology.
    """

    def __init__(
        self,
        id: str,
        modules: Iterable[Module] = (),
        edges: Iterable[FlowEdge] = (),
    ) -> None:
        self.id = id
        self._modules: dict[ModuleId, Module] = {}
        self._labels: dict[tuple[ModuleId, ModuleId], frozenset[ParticipantId]] = {}
        self._children: dict[ModuleId, set[ModuleId]] = {}
        self._parents: dict[ModuleId, set[ModuleId]] = {}
        # bumped on every mutation; derived caches (closure, order) key on it
        self.version = 0
        self._cache: dict[str, Any] = {}
        for module in modules:
            self.add(module)
        for edge in edges:
            self.add_flow(edge)

    # -- mutation ---------------------------------------------------------

    def add(self, module: Module) -> ModuleId:
        if module.id in self._modules:
            raise DuplicateId(f"module {module.id!r} already in composition {self.id!r}")
        self._modules[module.id] = module
        self._children[module.id] = set()
        self._parents[module.id] = set()
        self._touch()
        return module.id

    def replace(self, module: Module) -> None:
        if module.id not in self._modules:
            raise UnknownModule(module.id)
        self._modules[module.id] = module
        self._touch()

    def add_flow(
        self,
        edge: FlowEdge | ModuleId,
        target: ModuleId | None = None,
        participants: Iterable[ParticipantId] = (),
    ) -> Composition:
        """Insert a flow edge, either as a ``FlowEdge`` or ``(source, target, participants)``.

        Re-adding an existing ``(source, target)`` pair merges the participant
        labels; a shared edge stays shared.
        """
        if not isinstance(edge, FlowEdge):
            if target is None:
                raise TypeError("add_flow needs a FlowEdge or a source and target")
            edge = FlowEdge(edge, target, frozenset(participants))
        src, dst = edge.source, edge.target
        for node in (src, dst):
            if node not in self._modules:
                raise UnknownModule(node)
        if src == dst:
            raise SelfLoop(f"flow {src} -> {dst} is a self loop")

        key = (src, dst)
        if key in self._labels:
            old = self._labels[key]
            merged = frozenset() if (not old or edge.shared) else old | edge.participants
            if merged != old:
                self._labels[key] = merged
                self._touch()
            return self

        back = self._path(dst, src)
        if back is not None:
            raise CycleError(src, dst, back)
        self._labels[key] = edge.participants
        self._children[src].add(dst)
        self._parents[dst].add(src)
        self._touch()
        return self

    def _touch(self) -> None:
        self.version += 1
        self._cache.clear()

    def _path(self, start: ModuleId, goal: ModuleId) -> list[ModuleId] | None:
        """Some directed path start ~> goal, or None."""
        stack = [start]
        came_from: dict[ModuleId, ModuleId | None] = {start: None}
        while stack:
            node = stack.pop()
            if node == goal:
                path = [node]
                while came_from[path[-1]] is not None:
                    path.append(came_from[path[-1]])  # type: ignore[arg-type]
                return path[::-1]
            for child in sorted(self._children[node], reverse=True):
                if child not in came_from:
                    came_from[child] = node
                    stack.append(child)
        return None

    # -- queries ----------------------------------------------------------

    @property
    def modules(self) -> Mapping[ModuleId, Module]:
        return self._modules

    def module(self, module_id: ModuleId) -> Module:
        try:
            return self._modules[module_id]
        except KeyError:
            raise UnknownModule(module_id) from None

    def __contains__(self, module_id: object) -> bool:
        return module_id in self._modules

    def __len__(self) -> int:
        return len(self._modules)

    @property
    def edges(self) -> tuple[FlowEdge, ...]:
        return tuple(
            FlowEdge(src, dst, labels) for (src, dst), labels in sorted(self._labels.items())
        )

    def has_edge(self, source: ModuleId, target: ModuleId) -> bool:
        return (source, target) in self._labels

    def children(self, module_id: ModuleId) -> frozenset[ModuleId]:
        self.module(module_id)
        return frozenset(self._children[module_id])

    def parents(self, module_id: ModuleId) -> frozenset[ModuleId]:
        self.module(module_id)
        return frozenset(self._parents[module_id])

    def sources(self) -> list[ModuleId]:
        return sorted(m for m in self._modules if not self._parents[m])

    def sinks(self) -> list[ModuleId]:
        return sorted(m for m in self._modules if not self._children[m])

    def participants(self) -> frozenset[ParticipantId]:
        """Every participant named by some edge label."""
        out: set[ParticipantId] = set()
        for labels in self._labels.values():
            out |= labels
        return frozenset(out)

    def topological_order(self) -> tuple[ModuleId, ...]:
        """Kahn's algorithm with a min-heap, so ties resolve by id."""
        cached = self._cache.get("topo")
        if cached is not None:
            return cached
        indegree = {m: len(ps) for m, ps in self._parents.items()}
        ready = [m for m, d in indegree.items() if d == 0]
        heapify(ready)
        order: list[ModuleId] = []
        while ready:
            node = heappop(ready)
            order.append(node)
            for child in self._children[node]:
                indegree[child] -= 1
                if indegree[child] == 0:
                    heappush(ready, child)
        if len(order) != len(self._modules):  # unreachable while add_flow guards cycles
            raise CycleError("?", "?")
        result = tuple(order)
        self._cache["topo"] = result
        return result

    def cached(self, key: str, build: Any) -> Any:
        """Memoize ``build()`` until the next mutation."""
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def copy(self, id: str | None = None) -> Composition:
        return Composition(id or self.id, self._modules.values(), self.edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Composition):
            return NotImplemented
        return (
            self.id == other.id
            and self._modules == other._modules
            and self._labels == other._labels
        )

    def __repr__(self) -> str:
        return f"Composition({self.id!r}, {len(self._modules)} modules, {len(self._labels)} edges)"

    # -- (de)serialization ------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "modules": [self._modules[m].to_dict() for m in sorted(self._modules)],
            "edges": [edge.to_dict() for edge in self.edges],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Composition:
        comp = cls(str(data["id"]), (Module.from_dict(m) for m in data.get("modules", ())))
        for raw in data.get("edges", ()):
            comp.add_flow(FlowEdge(raw["from"], raw["to"], frozenset(raw.get("participants", ()))))
        return comp


def participant_view(composition: Composition, participant: ParticipantId) -> Composition:
    """Subgraph of shared edges plus edges labelled with ``participant``.

    Modules without an incident edge in the view are dropped, except modules
    that are isolated in the full composition: those carry no label and are
    therefore shared by everyone.
    """
    kept_edges = [e for e in composition.edges if e.visible_to(participant)]
    touched = {e.source for e in kept_edges} | {e.target for e in kept_edges}
    isolated = {
        m for m in composition.modules
        if not composition.children(m) and not composition.parents(m)
    }
    keep = touched | isolated
    modules = [composition.modules[m] for m in sorted(keep)]
    return Composition(f"{composition.id}@{participant}", modules, kept_edges)
