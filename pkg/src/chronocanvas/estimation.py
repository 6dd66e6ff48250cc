"""Time-on-module samples and robust duration estimates.

Raw usage time is polluted at both ends: bounces (a few seconds) and pages
left open for days. The estimator drops a fixed fraction of samples from each
tail once enough samples exist, then takes the median of what remains.
"""

from __future__ import annotations

import math
import statistics
import threading
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from typing import Any

from .errors import InsufficientData, MissingEstimate, NonPositiveDuration
from .graph import Composition, Module, ModuleId, Registry, participant_view


@dataclass(frozen=True)
class DurationSample:
    module: ModuleId
    user: str
    seconds: float
    completed: bool = True
    cohort: str | None = None

    def __post_init__(self) -> None:
        try:
            seconds = float(self.seconds)
        except (TypeError, ValueError):
            raise NonPositiveDuration(f"duration {self.seconds!r} is not a number") from None
        if not math.isfinite(seconds) or seconds <= 0:
            raise NonPositiveDuration(f"duration must be finite and > 0, got {self.seconds!r}")
        object.__setattr__(self, "seconds", seconds)

    def to_dict(self) -> dict[str, Any]:
        return {
            "module": self.module,
            "user": self.user,
            "seconds": self.seconds,
            "completed": self.completed,
            "cohort": self.cohort,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> DurationSample:
        return cls(
            module=data["module"],
            user=str(data.get("user", "")),
            seconds=data["seconds"],
            completed=bool(data.get("completed", True)),
            cohort=data.get("cohort"),
        )


class SampleStore:
    """Append-only sample log; safe for concurrent ``record`` calls."""

    def __init__(self, samples: Iterable[DurationSample] = ()) -> None:
        self._lock = threading.Lock()
        self._by_module: dict[ModuleId, list[DurationSample]] = {}
        for sample in samples:
            self.record(sample)

    def record(self, sample: DurationSample) -> None:
        if not isinstance(sample, DurationSample):
            raise TypeError("expected a DurationSample")
        with self._lock:
            self._by_module.setdefault(sample.module, []).append(sample)

    def samples(self, module: ModuleId, cohort: str | None = None) -> list[DurationSample]:
        with self._lock:
            rows = list(self._by_module.get(module, ()))
        if cohort is not None:
            rows = [s for s in rows if s.cohort == cohort]
        return rows

    def count(self, module: ModuleId) -> int:
        with self._lock:
            return len(self._by_module.get(module, ()))

    def modules(self) -> list[ModuleId]:
        with self._lock:
            return sorted(self._by_module)

    def __iter__(self) -> Iterator[DurationSample]:
        with self._lock:
            snapshot = [s for rows in self._by_module.values() for s in rows]
        return iter(snapshot)

    def __len__(self) -> int:
        with self._lock:
            return sum(len(rows) for rows in self._by_module.values())


def record_sample(store: SampleStore, sample: DurationSample) -> None:
    store.record(sample)


@dataclass(frozen=True)
class EstimationConfig:
    trim_fraction: float = 0.10
    min_trim_n: int = 10
    outlier_factor: float = 2.0
    over_author_threshold: float = 1.25

    def __post_init__(self) -> None:
        if not 0 <= self.trim_fraction < 0.5:
            raise ValueError("trim_fraction must lie in [0, 0.5)")


DEFAULT_CONFIG = EstimationConfig()


def trim(values: Iterable[float], fraction: float = 0.10, min_n: int = 10) -> list[float]:
    """Sort and drop ``floor(fraction * n)`` values from each tail (none below ``min_n``)."""
    ordered = sorted(values)
    n = len(ordered)
    if n < min_n:
        return ordered
    k = int(fraction * n + 1e-9)
    return ordered[k : n - k] if k else ordered


@dataclass(frozen=True)
class EstimateReport:
    module: ModuleId
    n_raw: int
    n_kept: int
    robust_estimate: float
    spread: float
    author_estimate: float | None = None
    author_delta_ratio: float | None = None
    cohort: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "module": self.module,
            "n_raw": self.n_raw,
            "n_kept": self.n_kept,
            "robust_estimate": self.robust_estimate,
            "spread": self.spread,
            "author_estimate": self.author_estimate,
            "author_delta_ratio": self.author_delta_ratio,
            "cohort": self.cohort,
        }


def _iqr(kept: list[float]) -> float:
    if len(kept) < 2:
        return 0.0
    q1, _, q3 = statistics.quantiles(kept, n=4, method="inclusive")
    return q3 - q1


def estimate_module(
    store: SampleStore,
    module: ModuleId | Module,
    cohort: str | None = None,
    config: EstimationConfig = DEFAULT_CONFIG,
) -> EstimateReport:
    """Trimmed-median estimate for one module.

    Passing a ``Module`` instead of an id also fills in the author comparison.
    """
    meta = module if isinstance(module, Module) else None
    module_id = meta.id if meta else module
    raw = [s.seconds for s in store.samples(module_id, cohort)]
    kept = trim(raw, config.trim_fraction, config.min_trim_n)
    if not kept:
        raise InsufficientData(f"no samples for module {module_id!r}")
    robust = statistics.median(kept)
    author = meta.author_estimate if meta else None
    return EstimateReport(
        module=module_id,
        n_raw=len(raw),
        n_kept=len(kept),
        robust_estimate=robust,
        spread=_iqr(kept),
        author_estimate=author,
        author_delta_ratio=robust / author if author else None,
        cohort=cohort,
    )


def usable_estimate(
    store: SampleStore,
    module: Module,
    cohort: str | None = None,
    config: EstimationConfig = DEFAULT_CONFIG,
) -> float | None:
    """Robust estimate when samples exist, else the author's, else None."""
    if store.samples(module.id, cohort):
        return estimate_module(store, module.id, cohort, config).robust_estimate
    return module.author_estimate


def usable_estimates(
    store: SampleStore,
    composition: Composition,
    cohort: str | None = None,
    config: EstimationConfig = DEFAULT_CONFIG,
) -> dict[ModuleId, float]:
    """Estimates for every module; raises ``MissingEstimate`` naming the gaps."""
    out, missing = {}, []
    for module_id in sorted(composition.modules):
        est = usable_estimate(store, composition.modules[module_id], cohort, config)
        if est is None:
            missing.append(module_id)
        else:
            out[module_id] = est
    if missing:
        raise MissingEstimate(missing)
    return out


@dataclass(frozen=True)
class CompositionEstimate:
    composition: str
    per_path: Mapping[str, float]
    min_total: float
    max_total: float
    critical_total: float
    critical_path: tuple[ModuleId, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "composition": self.composition,
            "per_path": dict(self.per_path),
            "min_total": self.min_total,
            "max_total": self.max_total,
            "critical_total": self.critical_total,
            "critical_path": list(self.critical_path),
        }


def root_to_sink_paths(composition: Composition) -> list[tuple[ModuleId, ...]]:
    paths: list[tuple[ModuleId, ...]] = []

    def walk(node: ModuleId, trail: tuple[ModuleId, ...]) -> None:
        trail = trail + (node,)
        children = sorted(composition.children(node))
        if not children:
            paths.append(trail)
        for child in children:
            walk(child, trail)

    for source in composition.sources():
        walk(source, ())
    return paths


def estimate_composition(
    store: SampleStore,
    composition: Composition,
    participant: str | None = None,
    cohort: str | None = None,
    config: EstimationConfig = DEFAULT_CONFIG,
    estimates: Mapping[ModuleId, float] | None = None,
) -> CompositionEstimate:
    """Total each root-to-sink path from per-module point estimates.

    ``participant`` restricts the walk to that participant's view of the flow
    labels. ``estimates`` overrides the store lookup entirely.
    """
    graph = participant_view(composition, participant) if participant else composition
    if estimates is None:
        estimates = usable_estimates(store, graph, cohort, config)
    else:
        missing = [m for m in graph.modules if m not in estimates]
        if missing:
            raise MissingEstimate(missing)
    per_path = {}
    best: tuple[ModuleId, ...] = ()
    best_total = -math.inf
    for path in root_to_sink_paths(graph):
        total = math.fsum(estimates[m] for m in path)
        per_path[">".join(path)] = total
        if total > best_total:
            best, best_total = path, total
    if not per_path:
        return CompositionEstimate(graph.id, {}, 0.0, 0.0, 0.0, ())
    totals = per_path.values()
    return CompositionEstimate(
        composition=graph.id,
        per_path=per_path,
        min_total=min(totals),
        max_total=max(totals),
        critical_total=best_total,
        critical_path=best,
    )


@dataclass(frozen=True)
class Finding:
    kind: str  # "OverAuthorEstimate" | "CompositionOutlier"
    module: ModuleId
    value: float
    threshold: float
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "module": self.module,
            "value": self.value,
            "threshold": self.threshold,
            "message": self.message,
        }


def analytics(
    store: SampleStore,
    composition: Composition,
    config: EstimationConfig = DEFAULT_CONFIG,
) -> list[Finding]:
    """Author-facing findings for one composition."""
    estimates = usable_estimates(store, composition, config=config)
    findings = []
    for module_id in sorted(composition.modules):
        module = composition.modules[module_id]
        if not module.author_estimate or not store.samples(module_id):
            continue
        report = estimate_module(store, module, config=config)
        ratio = report.author_delta_ratio
        if ratio is not None and ratio > config.over_author_threshold:
            findings.append(Finding(
                "OverAuthorEstimate", module_id, ratio, config.over_author_threshold,
                f"users spend {ratio:.2f}x the author's estimate on {module_id}",
            ))

    if estimates:
        median = statistics.median(estimates.values())
        limit = config.outlier_factor * median
        for module_id, est in sorted(estimates.items()):
            if est > limit:
                findings.append(Finding(
                    "CompositionOutlier", module_id, est, limit,
                    f"{module_id} takes {est:g}s against a composition median of {median:g}s",
                ))
    return findings


def search_by_duration(
    registry: Registry | Iterable[Module],
    store: SampleStore,
    window: tuple[float, float],
    config: EstimationConfig = DEFAULT_CONFIG,
) -> frozenset[ModuleId]:
    lo, hi = window
    hits = set()
    for module in registry:
        est = usable_estimate(store, module, config=config)
        if est is not None and lo <= est <= hi:
            hits.add(module.id)
    return frozenset(hits)
