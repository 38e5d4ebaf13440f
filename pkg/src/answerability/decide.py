"""End-to-end deciders per constraint class and the top-level dispatcher."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

from .chase import ChaseError, depth_bound, linear_entails, restricted_chase, tree_chase_linear
from .constraints import (
    ConstraintClass,
    ConstraintSet,
    DegenerateQuery,
    Kind,
    classify,
    is_id,
    id_width,
    max_id_width,
    minimize_under_fds,
)
from .linearize import (
    b_closure,
    build_i0_lin,
    build_q_lin,
    build_sigma_lin,
    build_theta,
    normalize_gtgds,
    saturate_truncated,
    trunc_from_tgd,
)
from .model import CQ, canonical_database, find_homomorphism
from .reduce import (
    ContainmentProblem,
    access_rule_parts,
    amondet_containment,
    export_determined,
    inline_bounded_axioms,
    normalize_id_result_bounds,
    rewrite_unbounded_axioms,
    split_access_axioms,
)
from .schema import Schema, SchemaError, elim_upper_bounds, validate
from .simplify import choice_simplification, existence_check_simplification, fd_simplification


class Answer(enum.Enum):
    ANSWERABLE = "Answerable"
    NOT_ANSWERABLE = "NotAnswerable"
    UNKNOWN = "Unknown"


UNDECIDABLE_NOTE = (
    "constraint set outside every supported class; monotone answerability is "
    "undecidable for arbitrary first-order constraints, so no verdict is given"
)


@dataclass
class Verdict:
    answer: Answer
    cls: str
    pipeline: list = field(default_factory=list)
    witness: list = field(default_factory=list)
    reason: str = ""
    stats: dict = field(default_factory=dict)
    problem: Optional[ContainmentProblem] = field(default=None, repr=False)
    theta: Optional[list] = field(default=None, repr=False)

    @property
    def decided(self) -> bool:
        return self.answer is not Answer.UNKNOWN

    def to_json(self) -> dict:
        stats = {k: self.stats.get(k) for k in ("rounds", "facts", "depth")}
        stats.update({k: v for k, v in self.stats.items() if k not in stats})
        return {
            "answer": self.answer.value,
            "class": self.cls,
            "pipeline": list(self.pipeline),
            "witness": list(self.witness),
            "reason": self.reason,
            "stats": stats,
        }


ROUTES = {
    "PureFD": Kind.PURE_FD,
    "PureID": Kind.PURE_ID,
    "UIDplusFD": Kind.UID_FD,
    "FullGTGDplusID": Kind.FULL_GTGD_ID,
    "FrontierGuardedTGD": Kind.FG_TGD,
}


def _fits(sigma: ConstraintSet, kind: Kind) -> bool:
    tgds, fds = sigma.tgds, sigma.fds
    if kind is Kind.PURE_FD:
        return not tgds
    if kind is Kind.PURE_ID:
        return not fds and all(is_id(t) for t in tgds)
    if kind is Kind.UID_FD:
        return all(is_id(t) and id_width(t) <= 1 for t in tgds)
    if kind is Kind.FULL_GTGD_ID:
        return not fds and all(is_id(t) or (t.is_full and t.is_guarded()) for t in tgds)
    if kind is Kind.FG_TGD:
        return not fds and all(t.is_frontier_guarded() for t in tgds)
    return True


def _max_arity(atoms) -> int:
    return max((len(a.args) for a in atoms), default=1) or 1


def _linear_witness(roots, rules, right: CQ, depth: int, node_budget: int = 20000) -> list[str]:
    """Facts of a Q' match in the tree chase truncated at depth."""
    try:
        inst = tree_chase_linear(roots, rules, depth, node_budget)
    except ChaseError:
        return [f"match of {right} at depth {depth} (proof not materialized)"]
    h = find_homomorphism(right, inst)
    if h is None:
        return []
    return [str(a.substitute(h)) for a in right.atoms]


# ------------------------------------------------------------------ FDs


def decide_fd(sch: Schema, q: CQ, accessible_constants: bool = False, budget_rounds: Optional[int] = None) -> Verdict:
    if sch.constraints.tgds:
        raise SchemaError("decide_fd needs a constraint set made of FDs only")
    pipeline = ["ElimUB", "FDSimplification", "AMonDetContainment", "RewriteUnbounded", "PruneViewRules"]
    s1 = fd_simplification(elim_upper_bounds(sch))
    p = rewrite_unbounded_axioms(amondet_containment(s1, q, accessible_constants))
    drop = set()
    for v in s1.views:
        drop |= {f"{v.relation}:v2r", f"{v.relation}:r2v'"}
    p = p.with_tgds([t for t in p.gamma.tgds if t.name not in drop])
    i0, _ = canonical_database(p.left)
    budget = len(p.signature) * p.signature.max_arity() * max(len(i0.adom()), 1) + 4
    given = budget_rounds is not None
    out = restricted_chase(i0, p.gamma, budget_rounds if given else budget, trace=True)
    pipeline.append(f"RestrictedChase(rounds<={budget_rounds if given else budget})")
    stats = {"rounds": out.rounds, "facts": len(out.instance), "depth": None, "round_budget": budget,
             "fd_merges_initial": out.fd_merges_initial, "fd_merges_after": out.fd_merges - out.fd_merges_initial}
    if out.failed:
        return Verdict(Answer.ANSWERABLE, "PureFD", pipeline, out.trace, "left side unsatisfiable (constant clash)", stats, p)
    if not out.saturated:
        if given:
            return Verdict(Answer.UNKNOWN, "PureFD", pipeline, [], f"round budget {budget_rounds} exhausted", stats, p)
        raise AssertionError(f"FD-route chase did not terminate within {budget} rounds")
    assert out.fd_merges == out.fd_merges_initial, "FD merge after preprocessing on the FD route"
    h = find_homomorphism(p.right, out.instance)
    if h is not None:
        wit = out.trace + [f"MATCH {', '.join(str(a.substitute(h)) for a in p.right.atoms)}"]
        return Verdict(Answer.ANSWERABLE, "PureFD", pipeline, wit, "chase proof of Q'", stats, p)
    return Verdict(Answer.NOT_ANSWERABLE, "PureFD", pipeline, [], "terminating chase has no match of Q'", stats, p)


# ------------------------------------------------------------------ IDs


def decide_id(sch: Schema, q: CQ, width: Optional[int] = None, accessible_constants: bool = False) -> Verdict:
    sigma = sch.constraints
    if sigma.fds or not all(is_id(t) for t in sigma.tgds):
        raise SchemaError("decide_id needs a constraint set made of IDs only")
    w = max(width or 1, max_id_width(sigma.tgds), 1)
    cls = str(ConstraintClass(Kind.PURE_ID, max_id_width(sigma.tgds)))
    pipeline = ["ElimUB", "ExistenceCheck", "AMonDetContainment", "RewriteUnbounded",
                "NormalizeResultBounds", "SplitAccess", f"SaturateTruncated(w={w})", "SigmaLin"]
    s1 = existence_check_simplification(elim_upper_bounds(sch))
    p = rewrite_unbounded_axioms(amondet_containment(s1, q, accessible_constants))
    p = normalize_id_result_bounds(p, s1)
    truncated, _ = split_access_axioms(p)
    arities = dict(sch.signature)
    methods = []
    for t in p.rules("access-inl"):
        rel_atom, inputs = access_rule_parts(t)
        methods.append((rel_atom.relation, frozenset(inputs)))
    rbs = []
    for t in p.rules("rb-transfer"):
        rel_atom, inputs = access_rule_parts(t)
        rbs.append((t.name, rel_atom.relation, frozenset(inputs)))
    ids = p.rules("sigma")
    delta_plus = saturate_truncated(ids, [trunc_from_tgd(t) for t in truncated], methods, w, arities)
    sl = build_sigma_lin(ids, delta_plus, methods, rbs, w, arities)
    i0 = build_i0_lin(p.left, delta_plus, methods, rbs, w, arities)
    primed = p.rules("sigma'")
    rules = sl.sigma1 + primed + sl.sigma2
    m = _max_arity([a for a in p.right.atoms] + [f for f in i0])
    bound = depth_bound(len(p.right.atoms), len(sl.sigma1) + len(primed), len(sl.sigma2), m, w)
    pipeline.append(f"LinearChase(depth<={bound})")
    res = linear_entails(i0, rules, p.right, bound)
    stats = {"rounds": None, "facts": len(i0), "depth": res.depth, "bound": bound, "types": res.types,
             "derived_axioms": sum(1 for a in delta_plus if not a.trivial)}
    if res.holds:
        wit = _linear_witness(i0, rules, p.right, res.depth)
        return Verdict(Answer.ANSWERABLE, cls, pipeline, wit, f"Q' matched at tree depth {res.depth}", stats, p, rules)
    why = "no new partial matches" if res.stable else "depth bound reached"
    return Verdict(Answer.NOT_ANSWERABLE, cls, pipeline, [f"no Q' match within complete depth bound {bound}"],
                   f"{why} at depth {res.depth}", stats, p, rules)


# ------------------------------------------------ IDs and full guarded TGDs


def _decide_theta(sch: Schema, q: CQ, cls: str, width: Optional[int], accessible_constants: bool) -> Verdict:
    fds = list(sch.constraints.fds)
    pipeline = ["ElimUB", "Choice"]
    s1 = choice_simplification(elim_upper_bounds(sch))
    if fds:
        pipeline.append("MinimizeUnderFDs")
        try:
            q = minimize_under_fds(q.booleanize(), fds)
        except DegenerateQuery as e:
            return Verdict(Answer.ANSWERABLE, cls, pipeline, [str(e)], "query unsatisfiable under the FDs", {})
    p = amondet_containment(s1, q, accessible_constants)
    p = inline_bounded_axioms(rewrite_unbounded_axioms(p))
    pipeline += ["AMonDetContainment", "RewriteUnbounded", "InlineBounded"]
    if fds:
        p = export_determined(p, fds)
        p = replace(p, gamma=ConstraintSet(p.gamma.tgds))
        pipeline += ["ExportDetermined", "DropFDs"]
    tgds = list(p.gamma.tgds)
    ids, fulls = normalize_gtgds(tgds)
    w = max(width or 1, max_id_width(ids), 1)
    closure = b_closure(ids, fulls, w)
    qlin, seeds = build_q_lin(p.left, closure, w)
    arities = {}
    for r in ids + fulls + closure.rules:
        for a in r.body + r.head:
            arities[a.relation] = len(a.args)
    for f in qlin:
        arities.setdefault(f.relation, len(f.args))
    theta = build_theta(ids, fulls, closure, w, arities, seeds)
    m = _max_arity([a for a in p.right.atoms] + list(qlin))
    bound = depth_bound(len(p.right.atoms), len(theta.lift), len(theta.acyclic), m, w)
    pipeline += ["NormalizeGTGDs", f"BClosure(b={w})", "Theta", f"LinearChase(depth<={bound})"]
    res = linear_entails(qlin, theta.rules, p.right, bound)
    stats = {"rounds": None, "facts": len(qlin), "depth": res.depth, "bound": bound, "types": res.types,
             "theta_rules": len(theta.rules), "closure_rules": len(closure.rules)}
    if res.holds:
        wit = _linear_witness(qlin, theta.rules, p.right, res.depth)
        return Verdict(Answer.ANSWERABLE, cls, pipeline, wit, f"Q' matched at tree depth {res.depth}", stats, p, theta.rules)
    why = "no new partial matches" if res.stable else "depth bound reached"
    return Verdict(Answer.NOT_ANSWERABLE, cls, pipeline, [f"no Q' match within complete depth bound {bound}"],
                   f"{why} at depth {res.depth}", stats, p, theta.rules)


def decide_uidfd(sch: Schema, q: CQ, accessible_constants: bool = False, width: Optional[int] = None) -> Verdict:
    if not _fits(sch.constraints, Kind.UID_FD):
        raise SchemaError("decide_uidfd needs UIDs and FDs only")
    return _decide_theta(sch, q, "UIDplusFD", width, accessible_constants)


def decide_gtgd(sch: Schema, q: CQ, accessible_constants: bool = False, width: Optional[int] = None) -> Verdict:
    if not _fits(sch.constraints, Kind.FULL_GTGD_ID):
        raise SchemaError("decide_gtgd needs IDs and full guarded TGDs without FDs")
    return _decide_theta(sch, q, "FullGTGDplusID", width, accessible_constants)


def decide_fg(sch: Schema, q: CQ, accessible_constants: bool = False, budget_rounds: int = 20) -> Verdict:
    pipeline = ["ElimUB", "Choice", "AMonDetContainment", "RewriteUnbounded", "InlineBounded",
                f"SemiDecide(rounds<={budget_rounds})"]
    s1 = choice_simplification(elim_upper_bounds(sch))
    p = inline_bounded_axioms(rewrite_unbounded_axioms(amondet_containment(s1, q, accessible_constants)))
    i0, _ = canonical_database(p.left)
    out = restricted_chase(i0, p.gamma, budget_rounds, 20000, trace=True)
    stats = {"rounds": out.rounds, "facts": len(out.instance), "depth": None}
    h = find_homomorphism(p.right, out.instance)
    if h is not None:
        wit = out.trace + [f"MATCH {', '.join(str(a.substitute(h)) for a in p.right.atoms)}"]
        return Verdict(Answer.ANSWERABLE, "FrontierGuardedTGD", pipeline, wit, "chase proof of Q'", stats, p)
    if out.saturated:
        return Verdict(Answer.NOT_ANSWERABLE, "FrontierGuardedTGD", pipeline, [],
                       "chase terminated without a match of Q'", stats, p)
    return Verdict(Answer.UNKNOWN, "FrontierGuardedTGD", pipeline, [],
                   f"no chase proof within {budget_rounds} rounds", stats, p)


def decide(
    sch: Schema,
    q: CQ,
    *,
    accessible_constants: bool = False,
    width: Optional[int] = None,
    budget_rounds: Optional[int] = None,
    class_override: Optional[str] = None,
) -> Verdict:
    validate(sch)
    sigma = sch.base_constraints()
    if class_override is not None:
        if class_override not in ROUTES:
            raise SchemaError(f"unknown class {class_override}; expected one of {', '.join(ROUTES)}")
        kind = ROUTES[class_override]
        if not _fits(sigma, kind):
            raise SchemaError(f"constraints do not fit class {class_override}")
    else:
        kind = classify(sigma).kind
    if kind is Kind.PURE_FD:
        return decide_fd(sch, q, accessible_constants, budget_rounds)
    if kind is Kind.PURE_ID:
        return decide_id(sch, q, width, accessible_constants)
    if kind is Kind.UID_FD:
        return decide_uidfd(sch, q, accessible_constants, width)
    if kind is Kind.FULL_GTGD_ID:
        return decide_gtgd(sch, q, accessible_constants, width)
    if kind is Kind.FG_TGD:
        return decide_fg(sch, q, accessible_constants, budget_rounds or 20)
    return Verdict(Answer.UNKNOWN, "Unsupported", [], [], UNDECIDABLE_NOTE, {})
