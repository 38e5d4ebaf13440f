"""Command-line driver: parse problem files, decide every query, print
verdicts as text or JSON.

Exit status: 0 when every query is decided, 2 when some verdict is Unknown,
1 on errors."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .decide import ROUTES, Answer, decide
from .model import ModelError
from .oracle import MAX_DOMAIN, search_counterexample
from .syntax import ParseError, format_tgd, parse_problem


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="answerability",
        description="Decide monotone answerability of Boolean conjunctive queries over "
        "schemas with access methods, result bounds and integrity constraints.",
    )
    p.add_argument("files", nargs="+", metavar="FILE", help="problem file ('-' reads stdin)")
    p.add_argument("--class-override", choices=sorted(ROUTES), help="force a decision route")
    p.add_argument("--width", type=int, help="minimum linearization width (at least the widest ID)")
    p.add_argument("--budget-rounds", type=int, help="chase round budget for budgeted routes")
    p.add_argument("--accessible-constants", action="store_true", help="query constants may be used as access inputs")
    p.add_argument("--oracle", type=int, metavar="MAX_DOMAIN",
                   help=f"search a counterexample for NotAnswerable verdicts (domain size <= {MAX_DOMAIN})")
    p.add_argument("--dump-gamma", action="store_true", help="include the containment constraints")
    p.add_argument("--dump-theta", action="store_true", help="include the linear rules used by the chase")
    p.add_argument("--json", action="store_true", help="print JSON")
    return p


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def run_file(path: str, args) -> tuple[dict, bool]:
    """Results for one file and whether every query was decided."""
    pf = parse_problem(_read(path))
    opts = pf.options
    ac = args.accessible_constants or bool(opts.get("accessible-constants", False))
    width = args.width if args.width is not None else opts.get("width")
    budget = args.budget_rounds if args.budget_rounds is not None else opts.get("budget-rounds")
    override = args.class_override or opts.get("class")
    oracle = args.oracle if args.oracle is not None else None
    results = []
    decided = True
    for q in pf.queries:
        v = decide(pf.schema, q, accessible_constants=ac, width=width, budget_rounds=budget, class_override=override)
        entry = {"query": q.name}
        entry.update(v.to_json())
        decided &= v.decided
        if oracle is not None and v.answer is Answer.NOT_ANSWERABLE:
            cert = search_counterexample(pf.schema, q, oracle, ac)
            entry["oracle"] = {
                "max_domain": oracle,
                "certificate": cert.to_json() if cert else None,
            }
        if args.dump_gamma and v.problem is not None:
            entry["gamma"] = [format_tgd(t) for t in v.problem.gamma.tgds] + [
                f"fd {f}" for f in v.problem.gamma.fds
            ]
        if args.dump_theta and v.theta is not None:
            entry["theta"] = [format_tgd(t) for t in v.theta]
        results.append(entry)
    return {"file": path, "results": results}, decided


def _print_text(doc: dict) -> None:
    for r in doc["results"]:
        print(f"{doc['file']}: {r['query']}: {r['answer']} [{r['class']}] {r['reason']}")
        if "oracle" in r:
            c = r["oracle"]["certificate"]
            if c is None:
                print(f"  oracle: no counterexample within domain {r['oracle']['max_domain']}")
            else:
                print(f"  oracle: I1 = {{{', '.join(c['i1'])}}}")
                print(f"          I2 = {{{', '.join(c['i2'])}}}")
                print(f"          Iacc = {{{', '.join(c['iacc'])}}}")
        for key in ("gamma", "theta"):
            for line in r.get(key, ()):
                print(f"  {key}: {line}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.oracle is not None and not 0 < args.oracle <= MAX_DOMAIN:
        print(f"error: --oracle must be between 1 and {MAX_DOMAIN}", file=sys.stderr)
        return 1
    docs = []
    all_decided = True
    for path in args.files:
        try:
            doc, decided = run_file(path, args)
        except (ParseError, ModelError, OSError) as e:
            print(f"error: {path}: {e}", file=sys.stderr)
            return 1
        docs.append(doc)
        all_decided &= decided
    if args.json:
        out = docs[0] if len(docs) == 1 else docs
        print(json.dumps(out, indent=2, sort_keys=False))
    else:
        for doc in docs:
            _print_text(doc)
    return 0 if all_decided else 2


if __name__ == "__main__":
    sys.exit(main())
