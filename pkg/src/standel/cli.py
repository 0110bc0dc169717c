"""Command-line front end.

Commands::

    sel sat KB.sel                      knowledge-base satisfiability
    sel entails KB.sel --axiom TXT      axiom entailment
    sel concept-sat KB.sel --concept TXT
    sel instances KB.sel --concept TXT  instance retrieval
    sel normalize KB.sel                print the normal form
    sel oracle KB.sel                   bounded brute-force model search
    sel dump-graph KB.sel [--dot PATH]  saturate and emit DOT

Exit codes: 0 the query was answered (for boolean commands in text
format: answered "yes"), 1 answered "no"/unsatisfiable in text format
(JSON format always exits 0 on success), 2 input error (diagnostics on
stderr), 3 internal error such as a breached step guard.  ``--trace``
streams one JSON line per rule application to stderr so stdout stays
machine-parsable.  The environment variable SEL_MAX_STEPS lowers the
step guard for debugging.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import textio
from .kb import desugar_blocks
from .normalizer import normalize
from .oracle import FOUND, NO_MODEL, search_model
from .tableau import InternalLimitError, Satisfiable, saturate
from .tasks import entailment_verdict, instances, satisfiability_verdict

EXIT_YES = 0
EXIT_NO = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sel", description="Reasoner for standpoint-enhanced EL ontologies.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("kb", help="path to a .sel knowledge base")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--trace", action="store_true",
                       help="stream rule applications as JSON lines on stderr")
        return p

    common(sub.add_parser("sat", help="decide knowledge-base satisfiability"))
    p = common(sub.add_parser("entails", help="decide axiom entailment"))
    p.add_argument("--axiom", required=True, help="axiom in .sel syntax")
    p = common(sub.add_parser("concept-sat", help="decide concept satisfiability"))
    p.add_argument("--concept", required=True, help="concept in .sel syntax")
    p = common(sub.add_parser("instances", help="retrieve certain instances"))
    p.add_argument("--concept", required=True, help="concept in .sel syntax")
    common(sub.add_parser("normalize", help="print the normal form"))
    p = common(sub.add_parser("oracle", help="bounded brute-force model search"))
    p.add_argument("--max-domain", type=int, default=3)
    p.add_argument("--max-precs", type=int, default=3)
    p.add_argument("--budget", type=int, default=200_000)
    p = common(sub.add_parser("dump-graph", help="saturate and emit DOT"))
    p.add_argument("--dot", help="write DOT here instead of stdout")
    return parser


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        print(f"error: cannot read {path}: {e.strerror}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)
    try:
        return textio.parse_kb(text)
    except textio.ParseError as e:
        for diag in e.diagnostics:
            print(f"{path}:{diag}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _parse_inline(text: str, what: str):
    try:
        if what == "axiom":
            return textio.parse_axiom_text(text)
        return textio.parse_concept_text(text)
    except textio.ParseError as e:
        for diag in e.diagnostics:
            print(f"--{what}:{diag}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _tracer(enabled: bool):
    if not enabled:
        return None
    return lambda record: print(json.dumps(record), file=sys.stderr)


def _bool_answer(args, report: dict, yes: str, no: str) -> int:
    if args.format == "json":
        sys.stdout.write(textio.emit_json(report))
        return EXIT_YES
    print(yes if report["answer"] else no)
    return EXIT_YES if report["answer"] else EXIT_NO


def _verdict_report(task: str, verdict) -> dict:
    report = {"task": task,
              "answer": isinstance(verdict, Satisfiable),
              "ruleApplications": verdict.steps,
              "elements": len(verdict.graph.element_ids())}
    if not report["answer"]:
        report["clash"] = {"element": verdict.clash_element,
                           "variable": verdict.clash_variable}
    return report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except InternalLimitError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INPUT


def _dispatch(args) -> int:
    annotated = _load(args.kb)
    tracer = _tracer(args.trace)

    if args.command == "sat":
        verdict = satisfiability_verdict(annotated, on_step=tracer)
        report = _verdict_report("sat", verdict)
        return _bool_answer(args, report, "satisfiable", "unsatisfiable")

    if args.command == "entails":
        axiom = _parse_inline(args.axiom, "axiom")
        verdict = entailment_verdict(annotated, axiom, on_step=tracer)
        entailed = not isinstance(verdict, Satisfiable)
        report = {"task": "entails", "answer": entailed,
                  "axiom": textio.render_axiom(axiom),
                  "ruleApplications": verdict.steps}
        return _bool_answer(args, report, "entailed", "not entailed")

    if args.command == "concept-sat":
        concept = _parse_inline(args.concept, "concept")
        from .kb import BOT, BOX, Gci, UNIVERSAL
        verdict = entailment_verdict(
            annotated, Gci(BOX, UNIVERSAL, concept, BOT), on_step=tracer)
        satisfiable = isinstance(verdict, Satisfiable)
        report = {"task": "concept-sat", "answer": satisfiable,
                  "concept": textio.render_concept(concept),
                  "ruleApplications": verdict.steps}
        return _bool_answer(args, report, "satisfiable", "unsatisfiable")

    if args.command == "instances":
        concept = _parse_inline(args.concept, "concept")
        answer = instances(annotated, concept)
        if args.format == "json":
            sys.stdout.write(textio.emit_json(
                {"task": "instances", "answer": answer,
                 "concept": textio.render_concept(concept)}))
        else:
            print(" ".join(answer) if answer else "(none)")
        return EXIT_YES

    if args.command == "normalize":
        kb = desugar_blocks(annotated)
        result = normalize(kb)
        if args.trace:
            for rule, before, after in result.rule_trace:
                print(json.dumps({
                    "rule": rule,
                    "replaced": textio.render_axiom(before),
                    "replacements": [textio.render_axiom(ax) for ax in after],
                }), file=sys.stderr)
        if args.format == "json":
            sys.stdout.write(textio.emit_json(
                {"task": "normalize", "answer": True,
                 "axioms": len(result.kb), "kb": textio.serialize(result.kb)}))
        else:
            sys.stdout.write(textio.serialize(result.kb))
        return EXIT_YES

    if args.command == "oracle":
        kb = desugar_blocks(annotated)
        outcome = search_model(kb, args.max_domain, args.max_precs,
                               budget=args.budget)
        if args.format == "json":
            report = {"task": "oracle", "answer": outcome.status == FOUND,
                      "status": outcome.status}
            if outcome.structure is not None:
                report["model"] = outcome.structure.to_json_obj()
            sys.stdout.write(textio.emit_json(report))
            return EXIT_YES
        if outcome.status == FOUND:
            print(json.dumps(outcome.structure.to_json_obj(), indent=2))
            return EXIT_YES
        print(outcome.status)
        return EXIT_NO if outcome.status == NO_MODEL else EXIT_INTERNAL

    if args.command == "dump-graph":
        kb = desugar_blocks(annotated)
        verdict = saturate(normalize(kb).kb, on_step=tracer)
        dot = textio.emit_dot(verdict.graph)
        if args.dot:
            with open(args.dot, "w", encoding="utf-8") as fh:
                fh.write(dot)
        else:
            sys.stdout.write(dot)
        return EXIT_YES if isinstance(verdict, Satisfiable) else EXIT_NO

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
