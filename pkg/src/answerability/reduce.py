"""The containment problem whose truth is monotone answerability: Q under
Sigma, a primed copy Sigma' and the accessibility axioms, against Q'."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .constraints import FD, TGD, ConstraintSet, detby
from .model import CQ, Atom, Const, Signature, Var
from .schema import ACCESSIBLE, ResultBound, ResultLowerBound, Schema


class UnsupportedBound(ValueError):
    def __init__(self, method: str, k: int):
        super().__init__(f"method {method} has result bound {k}; simplify the schema first")
        self.method = method
        self.k = k


def prime(relation: str) -> str:
    return relation + "'"


def acc_rel(relation: str) -> str:
    return relation + "@acc"


def is_primed(relation: str) -> bool:
    return relation.endswith("'")


def unprime(relation: str) -> str:
    return relation[:-1] if relation.endswith("'") else relation


def accessible(t) -> Atom:
    return Atom(ACCESSIBLE, (t,))


def prime_atom(a: Atom) -> Atom:
    return Atom(prime(a.relation), a.args)


def prime_query(q: CQ) -> CQ:
    return CQ(tuple(prime_atom(a) for a in q.atoms), (), (q.name + "'") if q.name else "")


def prime_tgd(t: TGD) -> TGD:
    return TGD([prime_atom(a) for a in t.body], [prime_atom(a) for a in t.head], t.name + "'", "sigma'")


def prime_fd(f: FD) -> FD:
    return FD(prime(f.relation), f.determiner, f.determined, f.name + "'")


@dataclass(frozen=True)
class ContainmentProblem:
    left: CQ
    gamma: ConstraintSet
    right: CQ
    signature: Signature
    schema: Schema
    accessible_constants: bool = False

    def rules(self, *tags: str) -> list[TGD]:
        return [t for t in self.gamma.tgds if t.tag in tags]

    def with_tgds(self, tgds: Iterable[TGD]) -> "ContainmentProblem":
        return replace(self, gamma=ConstraintSet(tgds, self.gamma.fds))


def _xs(n: int, prefix: str = "x") -> list[Var]:
    return [Var(f"{prefix}{i}") for i in range(n)]


def expanded_signature(sch: Schema) -> Signature:
    sig = Signature()
    for name, arity in sch.signature:
        sig.add(name, arity)
    for name, arity in sch.signature:
        sig.add(prime(name), arity)
        sig.add(acc_rel(name), arity)
    sig.add(ACCESSIBLE, 1)
    return sig


def amondet_containment(sch: Schema, q: CQ, accessible_constants: bool = False) -> ContainmentProblem:
    """Build the containment problem. Methods must be unbounded or have a
    (lower) bound of exactly 1."""
    q = q.booleanize()
    q.check(sch.signature)
    tgds: list[TGD] = []
    for t in sch.constraints.tgds:
        tgds.append(TGD(t.body, t.head, t.name, "sigma"))
    tgds += [prime_tgd(t) for t in sch.constraints.tgds]
    fds = list(sch.constraints.fds) + [prime_fd(f) for f in sch.constraints.fds]

    for m in sch.methods:
        n = sch.arity(m.relation)
        xs = _xs(n)
        body = [accessible(xs[i]) for i in m.input_list] + [Atom(m.relation, xs)]
        if m.bound is None:
            tgds.append(TGD(body, [Atom(acc_rel(m.relation), xs)], f"acc:{m.name}", "access"))
        elif isinstance(m.bound, (ResultBound, ResultLowerBound)) and m.bound.k == 1:
            head = [xs[i] if i in m.inputs else Var(f"z{i}") for i in range(n)]
            tgds.append(TGD(body, [Atom(acc_rel(m.relation), head)], f"acc:{m.name}", "access-rb"))
        else:
            raise UnsupportedBound(m.name, m.bound.k)

    for name, arity in sch.signature:
        ws = _xs(arity, "w")
        head = [Atom(name, ws), Atom(prime(name), ws)] + [accessible(w) for w in ws]
        tgds.append(TGD([Atom(acc_rel(name), ws)], head, f"acc-out:{name}", "acc-out"))

    left_atoms = list(q.atoms)
    if accessible_constants:
        left_atoms += [accessible(c) for c in q.constants()]
    return ContainmentProblem(
        CQ(tuple(left_atoms), (), q.name),
        ConstraintSet(tgds, fds),
        prime_query(q),
        expanded_signature(sch),
        sch,
        accessible_constants,
    )


def access_rule_parts(t: TGD) -> tuple[Atom, list[int]]:
    """The relation atom of an access rule body and its input positions."""
    rel_atom = t.body[-1]
    acc_vars = {a.args[0] for a in t.body[:-1]}
    return rel_atom, [i for i, v in enumerate(rel_atom.args) if v in acc_vars]


def _inline_unbounded(t: TGD) -> TGD:
    rel_atom, inputs = access_rule_parts(t)
    outs = [v for i, v in enumerate(rel_atom.args) if i not in inputs]
    head = [prime_atom(rel_atom)] + [accessible(v) for v in outs]
    return TGD(t.body, head, t.name, "access-inl")


def _prune_acc_out(tgds: list[TGD]) -> list[TGD]:
    used = {a.relation for t in tgds if t.tag != "acc-out" for a in t.head}
    return [t for t in tgds if t.tag != "acc-out" or t.body[0].relation in used]


def rewrite_unbounded_axioms(p: ContainmentProblem) -> ContainmentProblem:
    """Inline R_acc for unbounded methods:
    accessible(x) & R(x,y) -> R'(x,y) & accessible(y)."""
    tgds = [_inline_unbounded(t) if t.tag == "access" else t for t in p.gamma.tgds]
    return p.with_tgds(_prune_acc_out(tgds))


def inline_bounded_axioms(p: ContainmentProblem) -> ContainmentProblem:
    """Inline R_acc for bound-1 methods:
    accessible(x) & R(x,y) -> exists z R(x,z) & R'(x,z) & accessible(z)."""
    tgds = []
    for t in p.gamma.tgds:
        if t.tag == "access-rb":
            rel_atom = t.body[-1]
            head_args = t.head[0].args
            inputs = {i for i, v in enumerate(head_args) if v == rel_atom.args[i]}
            outs = [v for i, v in enumerate(head_args) if i not in inputs]
            head = [Atom(rel_atom.relation, head_args), Atom(prime(rel_atom.relation), head_args)]
            head += [accessible(v) for v in outs]
            tgds.append(TGD(t.body, head, t.name, "access-rb-inl"))
        else:
            tgds.append(t)
    return p.with_tgds(_prune_acc_out(tgds))


def export_determined(p: ContainmentProblem, fds: Iterable[FD]) -> ContainmentProblem:
    """In inlined bound-1 axioms, export the positions that the inputs
    determine under the FDs instead of inventing fresh values for them."""
    fds = list(fds)
    tgds = []
    for t in p.gamma.tgds:
        if t.tag != "access-rb-inl":
            tgds.append(t)
            continue
        rel_atom, inputs = access_rule_parts(t)
        dep = detby(rel_atom.relation, inputs, fds)
        old = t.head[0].args
        new = tuple(rel_atom.args[i] if i in dep else old[i] for i in range(len(old)))
        ren = dict(zip(old, new))
        head = [a.substitute(ren) for a in t.head]
        # drop accessible atoms on positions that became exported inputs twice
        seen, out = set(), []
        for a in head:
            if a not in seen:
                seen.add(a)
                out.append(a)
        tgds.append(TGD(t.body, out, t.name, "access-rb-inl"))
    return p.with_tgds(tgds)


def normalize_id_result_bounds(p: ContainmentProblem, sch_ec: Optional[Schema] = None) -> ContainmentProblem:
    """Collapse every existence-check view chain R -> R_mt -> R'_mt -> R' into
    accessible(x) & R(x,y) -> exists z R'(x,z), and drop the view IDs that never
    fire (unprimed view-to-relation, primed relation-to-view)."""
    sch_ec = sch_ec or p.schema
    drop = set()
    extra = []
    for v in sch_ec.views:
        drop |= {f"{v.relation}:r2v", f"{v.relation}:v2r", f"{v.relation}:r2v'", f"{v.relation}:v2r'"}
        drop.add(f"acc:{v.method}")
        drop.add(f"acc-out:{v.relation}")
        n = sch_ec.arity(v.base)
        xs = _xs(n)
        inputs = [v.positions[i] for i in v.inputs]
        body = [accessible(xs[i]) for i in sorted(inputs)] + [Atom(v.base, xs)]
        head = [xs[i] if i in inputs else Var(f"z{i}") for i in range(n)]
        extra.append(TGD(body, [Atom(prime(v.base), head)], f"rbx:{v.method}", "rb-transfer"))
    tgds = [t for t in p.gamma.tgds if t.name not in drop] + extra
    return p.with_tgds(tgds)


def split_access_axioms(p: ContainmentProblem) -> tuple[list[TGD], list[TGD]]:
    """Split each inlined unbounded access axiom into truncated accessibility
    rules (one accessible head atom each) and a transfer rule."""
    truncated, transfer = [], []
    for t in p.rules("access-inl"):
        rel_atom, inputs = access_rule_parts(t)
        for i, v in enumerate(rel_atom.args):
            if i not in inputs:
                truncated.append(TGD(t.body, [accessible(v)], f"{t.name}#{i}", "trunc"))
        transfer.append(TGD(t.body, [prime_atom(rel_atom)], t.name + "#T", "transfer"))
    return truncated, transfer


def query_constants_accessible(p: ContainmentProblem) -> list[Const]:
    return [a.args[0] for a in p.left.atoms if a.relation == ACCESSIBLE]
