"""Chronology-based module recommendations over a corpus of compositions.

Corpus rules score a candidate by a conditional co-occurrence frequency: of
the compositions containing the anchor (or anchor pair), the fraction in which
the candidate stands in the queried relation. Structural rules over a single
registry score 1.0.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from itertools import combinations

from .chronology import order_relation
from .errors import UnknownModule
from .graph import Composition, ModuleId, Registry

RULES = ("reachable", "gap_insert", "sibling_supplement", "standalone", "type_set")


@dataclass(frozen=True)
class Recommendation:
    module: ModuleId
    rule: str
    score: float

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.score < 0:
            raise ValueError("score must be nonnegative")


@dataclass(frozen=True)
class BlendedRecommendation:
    module: ModuleId
    score: float
    rules: tuple[str, ...]


@dataclass
class CoOccurrenceStats:
    """Per-composition pair counts; a pair counts at most once per composition."""

    n_compositions: int = 0
    presence: Counter = field(default_factory=Counter)
    follows: Counter = field(default_factory=Counter)
    sibling: Counter = field(default_factory=Counter)
    gaps: Counter = field(default_factory=Counter)
    difficulty_sum: Counter = field(default_factory=Counter)
    difficulty_n: Counter = field(default_factory=Counter)

    def add(self, composition: Composition) -> None:
        rel = order_relation(composition)
        self.n_compositions += 1
        for module_id, module in composition.modules.items():
            self.presence[module_id] += 1
            if module.difficulty is not None:
                self.difficulty_sum[module_id] += module.difficulty
                self.difficulty_n[module_id] += 1

        for x, succ in rel.successors.items():
            for y in succ:
                self.follows[x, y] += 1
                for z in succ & rel.predecessors[y]:
                    self.gaps[x, z, y] += 1

        pairs: set[tuple[ModuleId, ModuleId]] = set()
        for parent in composition.modules:
            for a, b in combinations(sorted(composition.children(parent)), 2):
                pairs.add((a, b))
        for a, b in pairs:
            self.sibling[a, b] += 1
            self.sibling[b, a] += 1

    def difficulty(self, module_id: ModuleId) -> float:
        """Mean difficulty across corpus occurrences; 0 when never rated."""
        n = self.difficulty_n[module_id]
        return self.difficulty_sum[module_id] / n if n else 0.0

    def modules(self) -> set[ModuleId]:
        return {m for m, c in self.presence.items() if c}


def ingest_corpus(compositions: Iterable[Composition]) -> CoOccurrenceStats:
    stats = CoOccurrenceStats()
    for composition in compositions:
        stats.add(composition)
    return stats


def _ranked(scores: Mapping[ModuleId, float], rule: str) -> list[Recommendation]:
    return [
        Recommendation(module, rule, score)
        for module, score in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    ]


def recommend_reachable(stats: CoOccurrenceStats, present: Iterable[ModuleId]) -> list[Recommendation]:
    """Modules that transitively follow any present module somewhere in the corpus."""
    present = set(present)
    scores: dict[ModuleId, float] = {}
    for (x, y), count in stats.follows.items():
        if x not in present or y in present or not count:
            continue
        score = count / stats.presence[x]
        if score > scores.get(y, 0.0):
            scores[y] = score
    return _ranked(scores, "reachable")


def recommend_gap(
    stats: CoOccurrenceStats,
    lo: ModuleId,
    hi: ModuleId,
    present: Iterable[ModuleId] = (),
) -> list[Recommendation]:
    """Modules seen between ``lo`` and ``hi``, weighted by the difficulty of ``hi``.

    The weight ``(1 + difficulty) / 2`` keeps scores in ``[0, 1]``; a maximally
    difficult ``hi`` doubles every score relative to an unrated one.
    """
    together = stats.follows[lo, hi]
    if not together:
        return []
    exclude = set(present) | {lo, hi}
    boost = (1.0 + stats.difficulty(hi)) / 2
    scores = {
        x: count / together * boost
        for (a, x, b), count in stats.gaps.items()
        if a == lo and b == hi and count and x not in exclude
    }
    return _ranked(scores, "gap_insert")


def recommend_sibling(
    stats: CoOccurrenceStats,
    anchor: ModuleId,
    *,
    present: Iterable[ModuleId] | None = None,
    window: tuple[float, float] | None = None,
    estimates: Mapping[ModuleId, float] | None = None,
) -> list[Recommendation]:
    """Modules sharing an immediate predecessor with ``anchor``.

    With ``present`` (the caller's canvas) the result is tagged as a
    supplement or alternative for the anchor and skips modules already on the
    canvas; without it the recommendation is standalone.

    ``window`` keeps only candidates whose estimate (from ``estimates``) lies in
    the closed interval.
    """
    rule = "standalone" if present is None else "sibling_supplement"
    seen = stats.presence[anchor]
    if not seen:
        return []
    if window is not None and estimates is None:
        raise ValueError("a duration window needs estimates")
    exclude = set(present or ()) | {anchor}
    scores = {}
    for (a, b), count in stats.sibling.items():
        if a != anchor or not count or b in exclude:
            continue
        if window is not None:
            est = estimates.get(b)  # type: ignore[union-attr]
            if est is None or not window[0] <= est <= window[1]:
                continue
        scores[b] = count / seen
    return _ranked(scores, rule)


def recommend_by_type(
    registry: Registry,
    anchors: Iterable[ModuleId],
    kind: str = "type",
) -> frozenset[ModuleId]:
    """All registry modules whose ``kind`` tag equals the tag of any anchor."""
    anchors = set(anchors)
    tags = set()
    for module_id in anchors:
        if module_id not in registry:
            raise UnknownModule(module_id)
        tag = registry.get(module_id).tag(kind)
        if tag is not None:
            tags.add(tag)
    return frozenset(
        m.id for m in registry if m.id not in anchors and m.tag(kind) in tags
    )


def type_recommendations(
    registry: Registry, anchors: Iterable[ModuleId], kind: str = "type"
) -> list[Recommendation]:
    return _ranked(dict.fromkeys(recommend_by_type(registry, anchors, kind), 1.0), "type_set")


def blend(
    outputs: Iterable[Iterable[Recommendation]],
    weights: Mapping[str, float],
    exclude: Iterable[ModuleId] = (),
) -> list[BlendedRecommendation]:
    """Linear merge: a module's score is the weighted sum of its per-rule scores.

    Rules missing from ``weights`` get weight 0 and do not contribute.
    """
    exclude = set(exclude)
    total: dict[ModuleId, float] = {}
    rules: dict[ModuleId, set[str]] = {}
    for output in outputs:
        for rec in output:
            weight = weights.get(rec.rule, 0.0)
            if rec.module in exclude or weight <= 0:
                continue
            total[rec.module] = total.get(rec.module, 0.0) + weight * rec.score
            rules.setdefault(rec.module, set()).add(rec.rule)
    return [
        BlendedRecommendation(m, s, tuple(sorted(rules[m])))
        for m, s in sorted(total.items(), key=lambda kv: (-kv[1], kv[0]))
    ]
