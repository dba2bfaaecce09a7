"""Command-line entry point: design guides, scenario runs, demos."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import guide, scenario
from .topologies import TOPOLOGIES

EXIT_OK, EXIT_VIOLATIONS, EXIT_USAGE = 0, 1, 2

DEMOS = {"letter-of-credit": "letter_of_credit.scenario"}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ledgerlab", description="Permissioned-ledger privacy simulator")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("guide", help="answer a design guide and get a recommendation")
    g.add_argument("tree", help="one of: %s" % ", ".join(guide.builtin_trees()))
    g.add_argument("--answers", help="comma-separated question=yes|no pairs; omit to be asked")

    pa = sub.add_parser("paths", help="list every route through a design guide")
    pa.add_argument("tree")

    r = sub.add_parser("run", help="run a scenario file and audit it")
    r.add_argument("scenario", help="path to a .scenario file or the name of a packaged one")
    _run_options(r)

    d = sub.add_parser("demo", help="run a packaged demonstration scenario")
    d.add_argument("name", choices=sorted(DEMOS))
    _run_options(d)
    return p


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="scheduler seed (default: $LEDGERLAB_SEED or 0)")
    p.add_argument("--topology", choices=sorted(TOPOLOGIES), default=None)
    p.add_argument("--out", default="out", help="directory for the report and dumps (default: out)")


def _seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("LEDGERLAB_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError("LEDGERLAB_SEED must be an integer, got %r" % env) from None


def _tree(name: str) -> guide.DecisionTree:
    try:
        return guide.get_tree(name)
    except guide.UnknownTree as exc:
        raise UsageError(exc.args[0]) from None


def cmd_guide(args, out) -> int:
    tree = _tree(args.tree)
    if args.answers is not None:
        try:
            answers = guide.parse_answers(args.answers)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        try:
            rec, path = guide.evaluate(tree, answers)
        except guide.NeedsAnswer as exc:
            print("needs an answer for %s: %s" % (exc.question_id, exc.text), file=sys.stderr)
            return EXIT_USAGE
    else:
        answers = {}
        while True:
            try:
                rec, path = guide.evaluate(tree, answers)
                break
            except guide.NeedsAnswer as exc:
                answers[exc.question_id] = _ask(exc.text, out)
    print("Recommendation: %s" % rec.describe(), file=out)
    if rec.notes:
        print("Note: %s" % rec.notes, file=out)
    print("Path:", file=out)
    for line in guide.format_path(tree, path, answers):
        print("  " + line, file=out)
    return EXIT_OK


def _ask(text: str, out) -> bool:
    while True:
        print("%s [y/n] " % text, end="", file=out, flush=True)
        line = sys.stdin.readline()
        if not line:
            raise UsageError("no answer given for: %s" % text)
        try:
            return guide.parse_answer(line)
        except ValueError:
            print("please answer y or n", file=out)


def cmd_paths(args, out) -> int:
    tree = _tree(args.tree)
    for i, (answers, rec) in enumerate(guide.enumerate_paths(tree), 1):
        vector = ",".join("%s=%s" % (q, "yes" if a else "no") for q, a in answers)
        print("%d. %s  [%s]" % (i, rec.describe(), vector), file=out)
    return EXIT_OK


def _execute(source, args, out) -> int:
    try:
        sc = scenario.load(source)
    except FileNotFoundError:
        raise UsageError("scenario not found: %s" % source) from None
    except scenario.ScenarioError as exc:
        raise UsageError(str(exc)) from None
    seed = _seed(args.seed)
    result = scenario.run(sc, seed, args.topology)
    kind = result.platform.kind
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = "%s-%s-seed%d" % (sc.name, kind, seed)
    report_path = outdir / (stem + ".report.json")
    report_path.write_text(result.report_json())
    (outdir / (stem + ".ledger.ndjson")).write_text(result.ledger_dump())
    (outdir / (stem + ".audit.ndjson")).write_text(result.audit_log())

    print("scenario %s on %s, seed %d" % (sc.name, kind, seed), file=out)
    for step in result.steps:
        detail = step.get("reason")
        print("  step %d %s: %s%s" % (step["step"], step["op"], step["outcome"],
                                      " (%s)" % detail if detail else ""), file=out)
    violations = result.report.violations
    print("violations: %d" % len(violations), file=out)
    for v in violations:
        print("  [%s] %s: %s" % (v.policy, v.actor, v.fact.get("type")), file=out)
    print("report: %s" % report_path, file=out)
    return EXIT_VIOLATIONS if violations else EXIT_OK


def cmd_run(args, out) -> int:
    return _execute(args.scenario, args, out)


def cmd_demo(args, out) -> int:
    return _execute(DEMOS[args.name], args, out)


COMMANDS = {"guide": cmd_guide, "paths": cmd_paths, "run": cmd_run, "demo": cmd_demo}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print("ledgerlab: error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
