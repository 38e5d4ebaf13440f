"""Shared fixtures data and pipeline fragments for the test suites."""

from __future__ import annotations

import json
from pathlib import Path

from answerability.chase import restricted_chase
from answerability.decide import Answer
from answerability.linearize import TruncAxiom, build_i0_lin, build_sigma_lin, saturate_truncated, trunc_from_tgd
from answerability.model import Instance, canonical_database, find_homomorphism
from answerability.reduce import (
    access_rule_parts,
    amondet_containment,
    is_primed,
    normalize_id_result_bounds,
    rewrite_unbounded_axioms,
    split_access_axioms,
)
from answerability.schema import elim_upper_bounds
from answerability.simplify import existence_check_simplification
from answerability.syntax import parse_problem

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load(name: str):
    return parse_problem((CORPUS / name).read_text())


def expected() -> dict:
    return json.loads((CORPUS / "expected.json").read_text())


def corpus_cases():
    """(file, query name, expected entry) for every corpus query."""
    for fname, queries in sorted(expected().items()):
        for qname, entry in queries.items():
            yield fname, qname, entry


def query(pf, name):
    return next(q for q in pf.queries if q.name == name)


def chase_verdict(sch, q, rounds=12, facts=5000, accessible_constants=False):
    """Answer from a budgeted restricted chase of the containment problem
    built directly on sch (bounds must already be 1). None if inconclusive."""
    p = rewrite_unbounded_axioms(amondet_containment(sch, q, accessible_constants))
    i0, _ = canonical_database(p.left)
    out = restricted_chase(i0, p.gamma, rounds, facts)
    if out.failed or find_homomorphism(p.right, out.instance) is not None:
        return Answer.ANSWERABLE
    return Answer.NOT_ANSWERABLE if out.saturated else None


class IDPipeline:
    """The ID route up to the linear rule set, exposed piece by piece."""

    def __init__(self, sch, q, w=2, accessible_constants=False):
        s1 = existence_check_simplification(elim_upper_bounds(sch))
        p = rewrite_unbounded_axioms(amondet_containment(s1, q, accessible_constants))
        self.problem = p = normalize_id_result_bounds(p, s1)
        truncated, _ = split_access_axioms(p)
        self.arities = dict(sch.signature)
        self.methods, self.rbs = [], []
        for t in p.rules("access-inl"):
            a, inp = access_rule_parts(t)
            self.methods.append((a.relation, frozenset(inp)))
        for t in p.rules("rb-transfer"):
            a, inp = access_rule_parts(t)
            self.rbs.append((t.name, a.relation, frozenset(inp)))
        self.ids = p.rules("sigma")
        self.trunc = [trunc_from_tgd(t) for t in truncated]
        self.w = w
        self.delta_plus = saturate_truncated(self.ids, self.trunc, self.methods, w, self.arities)

    def oracle_sigma(self):
        """IDs, truncated axioms and the accessibility effect of every
        unbounded access, all as plain TGDs."""
        out = list(self.ids) + [a.as_tgd(self.arities[a.relation]) for a in self.trunc]
        for rel, inp in self.methods:
            for j in range(self.arities[rel]):
                out.append(TruncAxiom(rel, inp, j).as_tgd(self.arities[rel]))
        return out

    def linear(self, i0=None):
        """Root instance and rule list of the linear chase."""
        sl = build_sigma_lin(self.ids, self.delta_plus, self.methods, self.rbs, self.w, self.arities)
        roots = build_i0_lin(self.problem.left, self.delta_plus, self.methods, self.rbs, self.w, self.arities, i0=i0)
        return roots, sl.sigma1 + self.problem.rules("sigma'") + sl.sigma2


def primed_part(inst: Instance) -> Instance:
    return Instance(f for f in inst if is_primed(f.relation))
