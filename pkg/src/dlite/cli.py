"""Command-line front end: `dlite <command> ...`.

Exit codes: 0 sat (or entailed), 1 unsat (or not entailed), 2 outside the
supported fragment, 3 budget exceeded, 4 input or usage error."""

from __future__ import annotations

import argparse
import json
import sqlite3
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

from . import gadgets
from .chase import chase, chase_entails, default_bound, dump_abox
from .errors import BudgetExceeded, DLiteError, FragmentUnsupported, InconsistentKB
from .fol import atom_name
from .model import KnowledgeBase, TBox, classify
from .rewrite import (DEFAULT_DISJUNCT_CAP, DEFAULT_TYPE_CAP, build_sat_rewriting, certain_answers,
                      emit_sql, load_sqlite, rewrite_query, run_sql, sat_by_rewriting)
from .sat import BUDGET_EXCEEDED, EXIT_CODES, FRAGMENT_UNSUPPORTED, SAT, UNSAT, SolveOptions, solve
from .syntax import parse_kb, parse_query, print_interpretation, print_kb

EXIT_ENTAILED, EXIT_NOT_ENTAILED = 0, 1
EXIT_FRAGMENT, EXIT_BUDGET, EXIT_INPUT = 2, 3, 4

SCHEMA_PATH = Path(__file__).with_name("output_schema.json")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text())


def validate_output(obj: dict) -> None:
    """Raise jsonschema.ValidationError unless obj matches the shipped schema."""
    import jsonschema
    jsonschema.validate(obj, load_schema())


# ---------------------------------------------------------------- inputs

def _read(path: str) -> str:
    return Path(path).read_text()


def _load_kb(args) -> KnowledgeBase:
    k = parse_kb(_read(args.kb))
    if getattr(args, "no_una", False):
        k = KnowledgeBase(k.tbox, k.abox, False)
    return k


def _parse_assertion(text: str) -> tuple:
    a = parse_kb("[abox]\n" + text).abox
    if len(a.concept_assertions) == 1 and not a.role_assertions and a.concept_assertions[0][0]:
        _, c, x = a.concept_assertions[0]
        return (c, x)
    if len(a.role_assertions) == 1 and not a.concept_assertions and a.role_assertions[0][0]:
        _, p, s, o = a.role_assertions[0]
        return (p, s, o)
    raise UsageError(f"expected one positive assertion like A(a) or P(a,b), got {text!r}")


# -------------------------------------------------------------- commands

def cmd_classify(args) -> Dict:
    k = _load_kb(args)
    report = classify(k)
    out = {"status": "ok", "report": report.as_dict(), "admissible": report.admissible}
    text = [f"family_label: {report.family_label}", f"admissible: {str(report.admissible).lower()}"]
    text += [f"issue: {i}" for i in report.a123_violations + report.non_simple_number_restrictions]
    text += [f"note: {n}" for n in report.notes]
    return dict(out, exit_code=0, text="\n".join(text))


_VERDICT_TEXT = {SAT: "satisfiable", UNSAT: "unsatisfiable",
                 FRAGMENT_UNSUPPORTED: "fragment-unsupported", BUDGET_EXCEEDED: "budget-exceeded"}


def cmd_sat(args) -> Dict:
    k = _load_kb(args)
    out: Dict = {"engine": args.engine}
    if args.engine == "fo-rewrite":
        try:
            verdict = SAT if sat_by_rewriting(k, args.type_budget) else UNSAT
            reason = ""
        except FragmentUnsupported as e:
            verdict, reason = FRAGMENT_UNSUPPORTED, str(e)
        except BudgetExceeded as e:
            verdict, reason = BUDGET_EXCEEDED, str(e)
    else:
        opts = SolveOptions(engine=args.engine, chase_bound=args.chase_bound, partition_cap=args.partition_cap)
        res = solve(k, opts)
        verdict, reason = res.verdict, res.reason
        if res.verdict == "bound-exceeded":
            verdict = BUDGET_EXCEEDED
        out.update(solver=res.solver, steps=list(res.steps))
        if args.dump_cnf:
            if res.clauses is None:
                raise UsageError("no grounded formula to dump for this input and engine")
            Path(args.dump_cnf).write_text(res.clauses.to_dimacs(atom_name))
    text = _VERDICT_TEXT.get(verdict, verdict) + (f" ({reason})" if reason else "")
    out.update(status=verdict, reason=reason, exit_code=EXIT_CODES.get(verdict, EXIT_BUDGET), text=text)
    return out


def _with_negated(k: KnowledgeBase, target: tuple) -> KnowledgeBase:
    return gadgets.with_negated_target(k, target)


def cmd_instance(args) -> Dict:
    k = _load_kb(args)
    target = _parse_assertion(args.assertion)
    if args.engine == "chase":
        answer = chase_entails(k, target, args.chase_bound)
        status = {"yes": "entailed", "no": "not-entailed"}.get(answer, BUDGET_EXCEEDED)
        reason = "" if answer in ("yes", "no") else answer
    elif args.engine == "fo-rewrite":
        from .syntax import Query, QAtom
        if len(target) == 2:
            q = Query("q", ("x",), QAtom(target[0], ("x",)))
            row = (target[1],)
        else:
            q = Query("q", ("x", "y"), QAtom(target[0], ("x", "y")))
            row = (target[1], target[2])
        try:
            rows = certain_answers(k, q)
            status, reason = ("entailed" if row in rows else "not-entailed"), ""
        except InconsistentKB:
            status, reason = "entailed", "the KB is inconsistent"
        except FragmentUnsupported as e:
            status, reason = FRAGMENT_UNSUPPORTED, str(e)
        except BudgetExceeded as e:
            status, reason = BUDGET_EXCEEDED, str(e)
    else:
        res = solve(_with_negated(k, target), SolveOptions(partition_cap=args.partition_cap))
        status = {UNSAT: "entailed", SAT: "not-entailed"}.get(res.verdict, res.verdict)
        reason = res.reason
    codes = {"entailed": EXIT_ENTAILED, "not-entailed": EXIT_NOT_ENTAILED,
             FRAGMENT_UNSUPPORTED: EXIT_FRAGMENT, BUDGET_EXCEEDED: EXIT_BUDGET}
    shown = "(" + ", ".join(target[1:]) + ")"
    text = f"{status}: {target[0]}{shown}" + (f" ({reason})" if reason else "")
    return {"engine": args.engine, "status": status, "reason": reason, "exit_code": codes[status],
            "text": text}


def cmd_rewrite(args) -> Dict:
    # Only the TBox section is used; the rewriting never depends on the data.
    k = parse_kb(_read(args.kb))
    if args.query:
        f = rewrite_query(k.tbox, parse_query(_read(args.query)), args.disjunct_cap)
    else:
        f = build_sat_rewriting(k.tbox, k.tbox.concept_names(), k.tbox.role_names(), args.type_budget)
    body = emit_sql(f) if args.emit == "sql" else str(f)
    return {"status": "ok", "emit": args.emit, "output": body, "size": f.size(), "exit_code": 0, "text": body}


def cmd_answer(args) -> Dict:
    k = _load_kb(args)
    q = parse_query(_read(args.query))
    if args.engine == "oracle":
        from .canonical import certain_answer_oracle
        rows = certain_answer_oracle(k, q)
    elif args.emit == "sql":
        if not k.una:
            raise UsageError("--emit sql evaluates under the UNA; drop --no-una")
        res = solve(k)
        if res.verdict == UNSAT:
            raise InconsistentKB(res.reason or "the KB is inconsistent")
        if res.verdict != SAT:
            raise FragmentUnsupported(res.reason)
        conn = sqlite3.connect(":memory:")
        load_sqlite(conn, k.abox)
        result = run_sql(conn, rewrite_query(k.tbox, q, args.disjunct_cap))
        rows = {()} if result is True else set() if result is False else set(result)
    else:
        rows = certain_answers(k, q, args.disjunct_cap)
    ordered = sorted(rows)
    if q.head:
        text = "\n".join(", ".join(r) for r in ordered)
    else:
        text = "true" if ordered else "false"
    return {"status": "ok", "engine": args.engine, "answers": [list(r) for r in ordered],
            "exit_code": 0, "text": text}


def cmd_materialize(args) -> Dict:
    k = _load_kb(args)
    if args.engine == "chase":
        res = chase(k, args.chase_bound or default_bound(k))
        verdict = BUDGET_EXCEEDED if res.status == "bound-exceeded" else res.status
        if res.status == SAT:
            body = print_kb(KnowledgeBase(TBox(), dump_abox(res.state), k.una))
        else:
            body = _VERDICT_TEXT.get(verdict, verdict) + (f" ({res.reason})" if res.reason else "")
        return {"status": verdict, "engine": "chase", "steps": res.steps, "output": body,
                "exit_code": EXIT_CODES.get(verdict, EXIT_BUDGET), "text": body}
    from .canonical import unravel_kb
    report = classify(k)
    if not report.admissible:
        raise FragmentUnsupported("; ".join(map(str, report.a123_violations
                                               + report.non_simple_number_restrictions)))
    try:
        m = unravel_kb(k, args.depth)
    except InconsistentKB as e:
        return {"status": UNSAT, "engine": "ground", "output": "", "reason": str(e),
                "exit_code": EXIT_CODES[UNSAT], "text": f"unsatisfiable ({e})"}
    body = print_interpretation(m.interpretation)
    return {"status": SAT, "engine": "ground", "output": body, "exit_code": 0, "text": body}


def cmd_gadget(args) -> Dict:
    phi = gadgets.parse_clauses(_read(args.formula), args.family)
    try:
        k = gadgets.generate(args.family, phi, args.expand)
    except ValueError as e:
        raise UsageError(str(e))
    body = print_kb(k)
    if args.out:
        Path(args.out).write_text(body)
    report = classify(k)
    return {"status": "ok", "family": args.family, "family_label": report.family_label,
            "output": body, "exit_code": 0, "text": body if not args.out else f"wrote {args.out}"}


def cmd_dump_cnf(args) -> Dict:
    k = _load_kb(args)
    res = solve(k, SolveOptions(partition_cap=args.partition_cap))
    if res.clauses is None:
        verdict = res.verdict
        return {"status": verdict, "reason": res.reason, "exit_code": EXIT_CODES.get(verdict, EXIT_BUDGET),
                "text": f"no grounded formula: {_VERDICT_TEXT.get(verdict, verdict)} ({res.reason})"}
    body = res.clauses.to_dimacs(atom_name)
    if args.dump_cnf:
        Path(args.dump_cnf).write_text(body)
    return {"status": "ok", "atoms": res.clauses.num_atoms, "clauses": len(res.clauses.clauses),
            "output": body, "exit_code": 0, "text": body.rstrip("\n") if not args.dump_cnf
            else f"wrote {args.dump_cnf}"}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dlite", description="Reasoning for DL-Lite knowledge bases.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, engines=None, default=None):
        sp.add_argument("kb", help="knowledge base file")
        sp.add_argument("--no-una", action="store_true", help="drop the unique name assumption")
        sp.add_argument("--json", action="store_true", help="print one JSON object")
        sp.add_argument("--partition-cap", type=int, default=100000,
                        help="identification candidates tried without the UNA (default 100000)")
        if engines:
            sp.add_argument("--engine", choices=engines, default=default)

    sp = sub.add_parser("classify", help="report the fragment of a KB")
    common(sp)
    sp.set_defaults(run=cmd_classify)

    sp = sub.add_parser("sat", help="decide satisfiability")
    common(sp, ["ground", "fo-rewrite", "chase"], "ground")
    sp.add_argument("--chase-bound", type=int, default=None, help="chase steps (default 10*(|A|+|T|)^2)")
    sp.add_argument("--type-budget", type=int, default=DEFAULT_TYPE_CAP,
                    help="type enumeration cap for fo-rewrite")
    sp.add_argument("--dump-cnf", metavar="PATH", help="write the grounded formula in DIMACS form")
    sp.set_defaults(run=cmd_sat)

    sp = sub.add_parser("instance", help="decide whether an assertion is entailed")
    common(sp, ["ground", "fo-rewrite", "chase"], "ground")
    sp.add_argument("assertion", help="A(a) or P(a,b)")
    sp.add_argument("--chase-bound", type=int, default=None)
    sp.set_defaults(run=cmd_instance)

    sp = sub.add_parser("rewrite", help="compile a query or satisfiability into FO/SQL (TBox only)")
    sp.add_argument("kb", help="file with a [tbox] section; any ABox is ignored")
    sp.add_argument("--query", help="query file; omit for the satisfiability rewriting")
    sp.add_argument("--emit", choices=["fo", "sql"], default="fo")
    sp.add_argument("--type-budget", type=int, default=DEFAULT_TYPE_CAP)
    sp.add_argument("--disjunct-cap", type=int, default=DEFAULT_DISJUNCT_CAP)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(run=cmd_rewrite)

    sp = sub.add_parser("answer", help="certain answers of a positive existential query")
    common(sp, ["fo-rewrite", "oracle"], "fo-rewrite")
    sp.add_argument("--query", required=True)
    sp.add_argument("--emit", choices=["fo", "sql"], default="fo",
                    help="sql evaluates the emitted SQL in an in-memory SQLite database")
    sp.add_argument("--disjunct-cap", type=int, default=DEFAULT_DISJUNCT_CAP)
    sp.set_defaults(run=cmd_answer)

    sp = sub.add_parser("materialize", help="print a model: unravelled canonical model or chase result")
    common(sp, ["ground", "chase"], "ground")
    sp.add_argument("--depth", type=int, default=3)
    sp.add_argument("--chase-bound", type=int, default=None)
    sp.set_defaults(run=cmd_materialize)

    sp = sub.add_parser("gadget", help="build a hardness gadget KB from a clause file")
    sp.add_argument("family", choices=sorted(gadgets.FAMILIES))
    sp.add_argument("--formula", required=True, help="DIMACS-like clause file")
    sp.add_argument("--out", help="write the KB here instead of stdout")
    sp.add_argument("--expand", action="store_true", help="replace conjunctions on the left")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(run=cmd_gadget)

    sp = sub.add_parser("dump-cnf", help="print the grounded propositional formula")
    common(sp)
    sp.add_argument("--dump-cnf", metavar="PATH", help="write to PATH instead of stdout")
    sp.set_defaults(run=cmd_dump_cnf)
    return p


def _emit(result: Dict, command: str, as_json: bool) -> None:
    if as_json:
        obj = {k: v for k, v in result.items() if k != "text"}
        obj["command"] = command
        print(json.dumps(obj, sort_keys=True))
    elif result.get("text"):
        print(result["text"])


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = "--json" in argv
    command = next((a for a in argv if not a.startswith("-")), "")
    try:
        args = build_parser().parse_args(argv)
        result = args.run(args)
    except UsageError as e:
        result = {"status": "input-error", "reason": str(e), "exit_code": EXIT_INPUT}
    except (OSError, ValueError, DLiteError) as e:
        if isinstance(e, FragmentUnsupported):
            result = {"status": FRAGMENT_UNSUPPORTED, "reason": str(e), "exit_code": EXIT_FRAGMENT}
        elif isinstance(e, BudgetExceeded):
            result = {"status": BUDGET_EXCEEDED, "reason": str(e), "exit_code": EXIT_BUDGET}
        elif isinstance(e, InconsistentKB):
            result = {"status": "inconsistent", "reason": str(e), "exit_code": EXIT_CODES[UNSAT]}
        else:
            code = getattr(e, "code", "input-error")
            result = {"status": "input-error", "error": code, "reason": str(e), "exit_code": EXIT_INPUT}
    if "text" not in result:
        if as_json:
            _emit(result, command, True)
        else:
            print(f"dlite: {result['status']}: {result['reason']}", file=sys.stderr)
        return result["exit_code"]
    _emit(result, command, as_json)
    return result["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
