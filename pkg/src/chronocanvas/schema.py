"""File formats and their validation.

Every JSON document carries ``"schema_version": 1``. Sample files are JSON
lines, one sample object per line; a per-line ``schema_version`` is optional.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ChronoError, SchemaError
from .estimation import DurationSample, SampleStore
from .graph import Composition, FlowEdge, Module
from .repetition import ReviewBook
from .simulation import Scenario, SimulationConfig, VirtualLearner
from .sync.modes import ModeNode, resolve_tree
from .sync.session import Participant, Session

SCHEMA_VERSION = 1
FIXTURES = ("fig1.json", "fig2.json", "trimodal_samples.jsonl",
            "scenario_waitforme.json", "scenario_condorcet.json")
EVENT_KINDS = ("advance", "finish", "open_poll", "cast_ballot", "tally", "rotate_seat",
               "tick", "force_release", "reference", "feedback")

JsonPath = tuple  # keys and indices from the document root


# -- line anchoring -----------------------------------------------------------

_WS = " \t\r\n"


def line_index(text: str) -> dict[JsonPath, int]:
    """Map every JSON path in ``text`` to the 1-based line where its value starts."""
    decoder = json.JSONDecoder()
    lines: dict[JsonPath, int] = {}

    def skip(i: int) -> int:
        while i < len(text) and text[i] in _WS:
            i += 1
        return i

    def value(i: int, path: JsonPath) -> int:
        i = skip(i)
        lines[path] = text.count("\n", 0, i) + 1
        ch = text[i]
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = decoder.raw_decode(text, skip(i))
                i = skip(i) + 1  # ':'
                i = skip(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            n = 0
            while True:
                i = skip(value(i, path + (n,)))
                n += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    value(0, ())
    return lines


def _line(lines: Mapping[JsonPath, int], *path: Any) -> int | None:
    while path:
        if path in lines:
            return lines[path]
        path = path[:-1]
    return lines.get(())


# -- loading --------------------------------------------------------------------


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("chronocanvas") / "fixtures" / name))


def read_json(path: str | Path) -> tuple[Any, str]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", exc.lineno) from None


def _check_version(data: Any, lines: Mapping[JsonPath, int]) -> None:
    if not isinstance(data, dict):
        raise SchemaError("top-level value must be an object", 1)
    version = data.get("schema_version")
    if version is None:
        raise SchemaError("missing schema_version", _line(lines))
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}", _line(lines, "schema_version"))


def composition_from_data(data: Any, lines: Mapping[JsonPath, int] | None = None) -> Composition:
    """Build a composition, reporting the line of the first offending entry."""
    lines = lines or {}
    _check_version(data, lines)
    if "id" not in data:
        raise SchemaError("composition needs an id", _line(lines))
    comp = Composition(str(data["id"]))
    for i, raw in enumerate(data.get("modules", [])):
        try:
            comp.add(Module.from_dict(raw))
        except (ChronoError, KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"modules[{i}]: {type(exc).__name__}: {exc}",
                              _line(lines, "modules", i)) from None
    for i, raw in enumerate(data.get("edges", [])):
        try:
            comp.add_flow(FlowEdge(raw["from"], raw["to"], frozenset(raw.get("participants", ()))))
        except (ChronoError, KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"edges[{i}]: {type(exc).__name__}: {exc}",
                              _line(lines, "edges", i)) from None
    return comp


def load_composition(path: str | Path) -> Composition:
    data, text = read_json(path)
    return composition_from_data(data, line_index(text))


def composition_to_data(composition: Composition) -> dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, **composition.to_dict()}


def save_composition(composition: Composition, path: str | Path) -> None:
    Path(path).write_text(json.dumps(composition_to_data(composition), indent=2) + "\n",
                          encoding="utf-8")


def load_corpus(directory: str | Path) -> list[Composition]:
    """Every composition document (``*.json`` with edges) in a directory."""
    comps = []
    for path in sorted(Path(directory).glob("*.json")):
        data, text = read_json(path)
        if isinstance(data, dict) and "edges" in data and "mode_tree" not in data:
            comps.append(composition_from_data(data, line_index(text)))
    return comps


def load_samples(path: str | Path) -> list[DurationSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", lineno) from None
            if not isinstance(data, dict):
                raise SchemaError("sample must be an object", lineno)
            if data.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
                raise SchemaError(f"unsupported schema_version {data['schema_version']!r}", lineno)
            try:
                samples.append(DurationSample.from_dict(data))
            except (ChronoError, KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"{type(exc).__name__}: {exc}", lineno) from None
    return samples


def load_store(path: str | Path) -> SampleStore:
    return SampleStore(load_samples(path))


def save_samples(samples: Iterable[DurationSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_dict()) + "\n")


def load_review_book(path: str | Path, registry=None) -> ReviewBook:
    data, text = read_json(path)
    lines = line_index(text)
    _check_version(data, lines)
    try:
        return ReviewBook.from_dict(data, registry)
    except (ChronoError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{type(exc).__name__}: {exc}", _line(lines)) from None


def save_review_book(book: ReviewBook, path: str | Path) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **book.to_dict()}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _resolve_ref(ref: str, base: Path) -> Path:
    candidate = base / ref
    if candidate.exists():
        return candidate
    packaged = fixture_path(Path(ref).name)
    if packaged.exists():
        return packaged
    return candidate


def scenario_from_data(data: Any, base: Path, lines: Mapping[JsonPath, int] | None = None,
                       default_id: str = "scenario") -> Scenario:
    lines = lines or {}
    _check_version(data, lines)

    def fail(msg: str, *path: Any) -> SchemaError:
        return SchemaError(msg, _line(lines, *path))

    ref = data.get("composition_ref")
    if ref is None:
        raise fail("scenario needs a composition_ref")
    ref_path = _resolve_ref(ref, base)
    if not ref_path.exists():
        raise fail(f"composition_ref not found: {ref_path}", "composition_ref")
    try:
        composition = load_composition(ref_path)
    except SchemaError as exc:
        raise fail(f"composition {ref_path}: {exc}", "composition_ref") from None

    try:
        participants = tuple(Participant(p["id"], p.get("role", "learner"))
                             for p in data.get("participants", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise fail(f"participants: {exc}", "participants") from None
    try:
        tree = ModeNode.from_dict(data["mode_tree"])
        resolve_tree(tree, composition)
    except KeyError:
        raise fail("scenario needs a mode_tree") from None
    except ChronoError as exc:
        raise fail(f"mode_tree: {type(exc).__name__}: {exc}", "mode_tree") from None

    try:
        learners = tuple(VirtualLearner.from_dict(l) for l in data.get("learners", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise fail(f"learners: {exc}", "learners") from None
    sim = data.get("simulation") or {}
    try:
        config = SimulationConfig(
            success_band=float(sim.get("success_band", 0.3)),
            jitter=float(sim.get("jitter", 0.0)),
            branching=sim.get("branching", "longest"),
        )
    except (TypeError, ValueError) as exc:
        raise fail(f"simulation: {exc}", "simulation") from None

    events = tuple(data.get("events", []))
    for i, event in enumerate(events):
        if not isinstance(event, dict) or "at" not in event or "kind" not in event:
            raise fail("event needs 'at' and 'kind'", "events", i)
        if event["kind"] not in EVENT_KINDS:
            raise fail(f"unknown event kind {event['kind']!r}", "events", i)

    return Scenario(
        id=str(data.get("id", default_id)),
        composition=composition,
        participants=participants,
        mode_tree=tree,
        allocated_s=float(data.get("allocated_s", 3600.0)),
        learners=learners,
        estimates=data.get("estimates"),
        config=config,
        starts=data.get("starts"),
        events=events,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    data, text = read_json(path)
    return scenario_from_data(data, path.parent, line_index(text), default_id=path.stem)


def load_scenarios(directory: str | Path) -> list[Scenario]:
    out = []
    for path in sorted(Path(directory).glob("*.json")):
        data, _ = read_json(path)
        if isinstance(data, dict) and "mode_tree" in data:
            out.append(load_scenario(path))
    return out


# -- validation ---------------------------------------------------------------


@dataclass
class ValidationReport:
    path: str
    kind: str
    errors: list[dict[str, Any]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict[str, Any]:
        return {"path": self.path, "kind": self.kind, "valid": self.valid, "errors": self.errors}


def _kind_of(path: Path, data: Any) -> str:
    if path.suffix == ".jsonl":
        return "samples"
    if not isinstance(data, dict):
        return "unknown"
    if "mode_tree" in data:
        return "scenario"
    if "edges" in data or "modules" in data:
        return "composition"
    if "states" in data or "history" in data:
        return "review_state"
    return "unknown"


def validate(path: str | Path) -> ValidationReport:
    """Schema and invariant check of one file; never raises on bad content."""
    path = Path(path)
    report = ValidationReport(str(path), "unknown")

    def record(exc: SchemaError) -> None:
        report.errors.append({"line": exc.line, "message": exc.message})

    if path.suffix == ".jsonl":
        report.kind = "samples"
        try:
            load_samples(path)
        except SchemaError as exc:
            record(exc)
        return report

    try:
        data, text = read_json(path)
    except SchemaError as exc:
        record(exc)
        return report
    lines = line_index(text)
    report.kind = _kind_of(path, data)
    try:
        if report.kind == "composition":
            composition_from_data(data, lines)
        elif report.kind == "scenario":
            scenario = scenario_from_data(data, path.parent, lines, path.stem)
            try:
                scenario.open_session()
            except ChronoError as exc:
                raise SchemaError(f"{type(exc).__name__}: {exc}", _line(lines, "participants"))
        elif report.kind == "review_state":
            _check_version(data, lines)
            ReviewBook.from_dict(data)
        else:
            _check_version(data, lines)
            raise SchemaError("cannot tell what kind of document this is", 1)
    except SchemaError as exc:
        record(exc)
    except (ChronoError, KeyError, TypeError, ValueError) as exc:
        report.errors.append({"line": None, "message": f"{type(exc).__name__}: {exc}"})
    return report


def replay_scenario(scenario: Scenario) -> Session:
    session = scenario.open_session()
    session.replay(scenario.events)
    return session
