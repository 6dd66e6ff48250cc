"""``chronocanvas`` command line.

Exit codes: 0 success, 1 runtime error (including missing files), 2 invalid
input or usage. Machine-readable output goes to stdout; human tables and
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from . import __version__
from .chronology import between, distill_timespans, predecessors_of, successors_of
from .errors import ChronoError, SchemaError
from .estimation import analytics, estimate_composition, estimate_module, usable_estimates
from .graph import Registry
from .recommend import (
    ingest_corpus,
    recommend_gap,
    recommend_reachable,
    recommend_sibling,
    type_recommendations,
)
from .repetition import ReviewBook, SelfAssessment
from .schema import (
    load_composition,
    load_corpus,
    load_review_book,
    load_scenario,
    load_scenarios,
    load_store,
    replay_scenario,
    save_review_book,
    validate,
)
from .simulation import compare_scenarios, run_scenario

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class UsageError(Exception):
    """Bad arguments discovered after parsing."""


def _emit(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _err(text: str) -> None:
    print(text, file=sys.stderr)


def _ids(text: str | None) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {p}")
    return p


# -- subcommands --------------------------------------------------------------


def cmd_chrono(args: argparse.Namespace) -> int:
    comp = load_composition(_existing(args.composition))
    if args.of is None:
        _emit([vars(span) for span in distill_timespans(comp)])
        return EXIT_OK
    if args.between:
        found = between(comp, args.of, args.between)
    elif args.predecessors:
        found = predecessors_of(comp, args.of)
    else:
        found = successors_of(comp, args.of)
    for module_id in sorted(found):
        print(module_id)
    return EXIT_OK


def cmd_recommend(args: argparse.Namespace) -> int:
    corpus_dir = _existing(args.corpus)
    corpus = load_corpus(corpus_dir)
    stats = ingest_corpus(corpus)
    present = _ids(args.present)
    outputs = []
    if args.gap:
        bounds = _ids(args.gap)
        if len(bounds) != 2:
            raise UsageError("--gap takes two ids: lo,hi")
        outputs.append(recommend_gap(stats, bounds[0], bounds[1], present))
    if args.sibling:
        outputs.append(recommend_sibling(stats, args.sibling, present=present or None))
    if args.type_of:
        registry = Registry.merged(corpus)
        outputs.append(type_recommendations(registry, _ids(args.type_of), args.kind))
    if not outputs:
        outputs.append(recommend_reachable(stats, present))
    for output in outputs:
        for rec in output:
            print(f"{rec.rule}\t{rec.module}\t{rec.score:.4f}")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    comp = load_composition(_existing(args.composition))
    store = load_store(_existing(args.samples))
    modules = []
    for module_id in sorted(comp.modules):
        if store.samples(module_id, args.cohort):
            modules.append(estimate_module(store, comp.modules[module_id], args.cohort).to_dict())
    estimates = usable_estimates(store, comp, args.cohort)
    total = estimate_composition(store, comp, cohort=args.cohort, estimates=estimates)
    _emit({
        "composition": comp.id,
        "modules": modules,
        "usable_estimates": estimates,
        "estimate": total.to_dict(),
        "findings": [f.to_dict() for f in analytics(store, comp)],
    })
    for report in modules:
        _err(f"{report['module']:<12} n={report['n_raw']:<4} "
             f"robust={report['robust_estimate']:g}s spread={report['spread']:g}s")
    return EXIT_OK


def cmd_review(args: argparse.Namespace) -> int:
    state_path = Path(args.state)
    registry = Registry.merged([load_composition(_existing(args.composition))]) \
        if args.composition else None
    if state_path.exists():
        book = load_review_book(state_path, registry)
        if registry is None:
            registry = book.registry
    elif args.assess:
        book = ReviewBook(registry or Registry())
    else:
        raise FileNotFoundError(f"no such file: {state_path}")

    if args.assess:
        module_id, sep, grade = args.assess.rpartition(":")
        if not sep or not grade.lstrip("-").isdigit():
            raise UsageError("--assess takes module:grade")
        state = book.record(SelfAssessment(args.user, module_id, int(grade), args.now))
        save_review_book(book, state_path)
        _emit({"user": state.user, "module": state.module, "interval": state.interval,
               "due_at": state.due_at, "streak": state.streak})
    else:
        due = book.due_reviews(args.user, args.now)
        _emit([{"module": m, "overdue_s": overdue} for m, overdue in due])
    return EXIT_OK


def cmd_session_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(_existing(args.scenario))
    session = replay_scenario(scenario)
    text = session.dumps()
    print(text)
    if args.assert_log:
        expected = json.loads(_existing(args.assert_log).read_text(encoding="utf-8"))
        actual = json.loads(text)
        if isinstance(expected, list):
            expected, actual = expected, actual["log"]
        elif "state" not in expected:
            actual = {"log": actual["log"]}
        if expected != actual:
            _err(f"event log diverges from {args.assert_log}")
            return EXIT_RUNTIME
        _err("event log matches")
    return EXIT_OK


def _table(rows: list[tuple[str, ...]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows)


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(_existing(args.scenario))
    _, report = run_scenario(scenario, seed=args.seed)
    payload = report.to_dict()
    if args.report:
        Path(args.report).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    _emit(payload)
    rows = [("participant", "allocated", "engaged", "alt", "idle", "alt_ratio")]
    for pid, r in sorted(report.per_participant.items()) + [("total", report.total)]:
        rows.append((pid, f"{r.allocated_s:g}", f"{r.engaged_s:g}", f"{r.alt_s:g}",
                     f"{r.idle_s:g}", f"{r.alt_ratio:.3f}"))
    _err(_table(rows))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    scenarios = load_scenarios(_existing(args.directory))
    if len(scenarios) < 2:
        raise UsageError(f"{args.directory} holds {len(scenarios)} scenario(s); need two or more")
    ranking = compare_scenarios(scenarios, seed=args.seed)
    _emit([
        {"rank": i, "scenario": sid, "alt_ratio": rep.alt_ratio,
         "engaged_s": rep.total.engaged_s, "idle_s": rep.total.idle_s}
        for i, (sid, rep) in enumerate(ranking, 1)
    ])
    rows = [("rank", "scenario", "alt_ratio", "engaged_s", "idle_s")]
    for i, (sid, rep) in enumerate(ranking, 1):
        rows.append((str(i), sid, f"{rep.alt_ratio:.3f}", f"{rep.total.engaged_s:g}",
                     f"{rep.total.idle_s:g}"))
    _err(_table(rows))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate(_existing(args.file))
    _emit(report.to_dict())
    for error in report.errors:
        _err(f"{args.file}:{error['line'] or '?'}: {error['message']}")
    return EXIT_OK if report.valid else EXIT_INVALID


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chronocanvas",
                                     description="Module compositions, timing and group sessions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("chrono", help="order relations of a composition")
    p.add_argument("composition")
    p.add_argument("--of", help="module id; omit to print every timespan as JSON")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--successors", action="store_true", help="modules after --of (default)")
    group.add_argument("--predecessors", action="store_true", help="modules before --of")
    group.add_argument("--between", metavar="ID", help="modules strictly between --of and ID")
    p.set_defaults(func=cmd_chrono)

    p = sub.add_parser("recommend", help="suggest modules from a corpus of compositions")
    p.add_argument("--corpus", required=True, help="directory of composition files")
    p.add_argument("--present", default="", help="comma-separated ids already on the canvas")
    p.add_argument("--gap", metavar="LO,HI")
    p.add_argument("--sibling", metavar="ID")
    p.add_argument("--type-of", metavar="ID[,ID..]")
    p.add_argument("--kind", choices=("type", "topic"), default="type",
                   help="tag used by --type-of")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("estimate", help="robust duration estimates from samples")
    p.add_argument("composition")
    p.add_argument("--samples", required=True, help="JSON-lines sample file")
    p.add_argument("--cohort")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("review", help="spaced-repetition assessments and due reviews")
    p.add_argument("--state", required=True, help="review state file (created on first --assess)")
    action = p.add_mutually_exclusive_group(required=True)
    action.add_argument("--assess", metavar="MODULE:GRADE")
    action.add_argument("--due", action="store_true")
    p.add_argument("--now", type=float, required=True, help="event time in seconds")
    p.add_argument("--user", default="learner")
    p.add_argument("--composition", help="composition whose sr-aware modules may be assessed")
    p.set_defaults(func=cmd_review)

    p = sub.add_parser("session", help="group session scenarios")
    session_sub = p.add_subparsers(dest="session_command", metavar="action")
    session_sub.required = True
    run = session_sub.add_parser("run", help="replay a scenario's scripted events")
    run.add_argument("scenario")
    run.add_argument("--assert-log", metavar="EXPECTED", help="fail unless the log matches")
    run.set_defaults(func=cmd_session_run)

    p = sub.add_parser("simulate", help="run virtual learners through a scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", metavar="FILE", help="also write the report here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="rank every scenario in a directory by ALT ratio")
    p.add_argument("directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="check a file's schema and invariants")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)
    return parser


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        _err(f"error: {exc.args[0] if exc.filename is None else f'no such file: {exc.filename}'}")
        return EXIT_RUNTIME
    except (SchemaError, UsageError) as exc:
        _err(f"error: {exc}")
        return EXIT_INVALID
    except ChronoError as exc:
        _err(f"error: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    except (KeyError, ValueError) as exc:
        _err(f"error: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(dispatch(argv))
