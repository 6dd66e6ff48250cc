"""Transitive order relations over a composition.

Closures are computed once per composition version (see
``Composition.cached``) and reused until the next mutation.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from .errors import MissingEstimate, UnknownModule
from .graph import Composition, ModuleId


@dataclass(frozen=True)
class OrderRelation:
    successors: Mapping[ModuleId, frozenset[ModuleId]]
    predecessors: Mapping[ModuleId, frozenset[ModuleId]]


@dataclass(frozen=True)
class Timespan:
    module: ModuleId
    rank: int
    est_start: float | None = None
    est_end: float | None = None


def order_relation(composition: Composition) -> OrderRelation:
    def build() -> OrderRelation:
        order = composition.topological_order()
        succ: dict[ModuleId, frozenset[ModuleId]] = {}
        for node in reversed(order):
            acc: set[ModuleId] = set()
            for child in composition.children(node):
                acc.add(child)
                acc |= succ[child]
            succ[node] = frozenset(acc)
        pred: dict[ModuleId, frozenset[ModuleId]] = {}
        for node in order:
            acc = set()
            for parent in composition.parents(node):
                acc.add(parent)
                acc |= pred[parent]
            pred[node] = frozenset(acc)
        return OrderRelation(succ, pred)

    return composition.cached("order_relation", build)


def _check(composition: Composition, *ids: ModuleId) -> None:
    for module_id in ids:
        if module_id not in composition:
            raise UnknownModule(module_id)


def successors_of(composition: Composition, module_id: ModuleId) -> frozenset[ModuleId]:
    """Every module reachable from ``module_id`` (excluding itself)."""
    _check(composition, module_id)
    return order_relation(composition).successors[module_id]


def predecessors_of(composition: Composition, module_id: ModuleId) -> frozenset[ModuleId]:
    _check(composition, module_id)
    return order_relation(composition).predecessors[module_id]


def between(composition: Composition, lo: ModuleId, hi: ModuleId) -> frozenset[ModuleId]:
    """Modules lying strictly after ``lo`` and strictly before ``hi``."""
    _check(composition, lo, hi)
    rel = order_relation(composition)
    return rel.successors[lo] & rel.predecessors[hi]


def ranks(composition: Composition) -> dict[ModuleId, int]:
    """Longest-path depth of each module from any source."""
    rank: dict[ModuleId, int] = {}
    for node in composition.topological_order():
        parents = composition.parents(node)
        rank[node] = 1 + max(rank[p] for p in parents) if parents else 0
    return rank


def distill_timespans(
    composition: Composition,
    estimates: Mapping[ModuleId, object] | None = None,
) -> list[Timespan]:
    """One timespan per module, in topological order.

    ``estimates`` maps module ids to seconds, or to any object exposing a
    ``robust_estimate`` attribute (an ``EstimateReport``). Without it the
    author estimates are used, and if any is missing the times stay ``None``.
    Each module starts once its slowest predecessor has ended.
    """
    rank = ranks(composition)
    order = composition.topological_order()
    if estimates is None:
        authored = {m: composition.modules[m].author_estimate for m in order}
        if None in authored.values():
            return [Timespan(m, rank[m]) for m in order]
        estimates = authored

    durations: dict[ModuleId, float] = {}
    missing = []
    for m in order:
        value = estimates.get(m)
        if value is None:
            missing.append(m)
            continue
        durations[m] = float(getattr(value, "robust_estimate", value))
    if missing:
        raise MissingEstimate(missing)

    end: dict[ModuleId, float] = {}
    spans = []
    for m in order:
        start = max((end[p] for p in composition.parents(m)), default=0.0)
        end[m] = start + durations[m]
        spans.append(Timespan(m, rank[m], start, end[m]))
    return spans
