"""Schema simplifications that remove result bounds, and their dispatch by
constraint class."""

from __future__ import annotations

import enum
from dataclasses import replace

from .constraints import TGD, ConstraintSet, Kind, classify, detby
from .model import Atom, Var
from .schema import AccessMethod, ResultBound, Schema, ViewDef, validate


class SimplificationKind(enum.Enum):
    EXISTENCE_CHECK = "ExistenceCheck"
    FD = "FDSimplification"
    CHOICE = "Choice"
    NONE = "NoneApplicable"


def fresh_relation_name(base: str, taken) -> str:
    if base not in taken:
        return base
    i = 2
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def _add_views(sch: Schema, kept_positions) -> Schema:
    """Shared construction. kept_positions(method, arity) returns the base
    positions kept by the view (inputs first)."""
    sig = sch.signature.copy()
    tgds = list(sch.constraints.tgds)
    methods = []
    views = list(sch.views)
    for m in sch.methods:
        if m.bound is None:
            methods.append(m)
            continue
        n = sig.arity(m.relation)
        kept, kind = kept_positions(m, n)
        vname = fresh_relation_name(f"{m.relation}__{m.name}", set(sig.names))
        sig.add(vname, len(kept))
        xs = [Var(f"x{i}") for i in range(n)]
        full = Atom(m.relation, xs)
        view = Atom(vname, [xs[p] for p in kept])
        tgds.append(TGD([full], [view], f"{vname}:r2v", "view"))
        tgds.append(TGD([view], [full], f"{vname}:v2r", "view"))
        if kind == "exists":
            inputs = tuple(range(len(kept)))
        else:
            inputs = tuple(range(len(m.inputs)))
        views.append(ViewDef(vname, m.relation, tuple(kept), m.name, kind, inputs))
        methods.append(AccessMethod(m.name, vname, frozenset(inputs), None))
    out = Schema(sig, ConstraintSet(tgds, sch.constraints.fds), tuple(methods), tuple(views))
    validate(out)
    return out


def existence_check_simplification(sch: Schema) -> Schema:
    """Each result-bounded method becomes a Boolean method on a new relation
    holding the projection of its relation to the input positions."""
    return _add_views(sch, lambda m, n: (tuple(m.input_list), "exists"))


def fd_simplification(sch: Schema) -> Schema:
    """Each result-bounded method becomes an unbounded method on a new relation
    holding the projection to the positions its inputs determine."""
    fds = sch.constraints.fds

    def kept(m: AccessMethod, n: int):
        dep = detby(m.relation, m.inputs, fds)
        rest = sorted(p for p in dep if p not in m.inputs)
        return tuple(m.input_list) + tuple(rest), "fd"

    return _add_views(sch, kept)


def choice_simplification(sch: Schema) -> Schema:
    methods = tuple(replace(m, bound=ResultBound(1)) if m.bound is not None else m for m in sch.methods)
    return replace(sch, methods=methods)


def select_simplification(sch: Schema) -> SimplificationKind:
    kind = classify(sch.base_constraints()).kind
    if kind is Kind.PURE_ID:
        return SimplificationKind.EXISTENCE_CHECK
    if kind is Kind.PURE_FD:
        return SimplificationKind.FD
    if kind in (Kind.UID_FD, Kind.FG_TGD, Kind.FULL_GTGD_ID):
        return SimplificationKind.CHOICE
    return SimplificationKind.NONE
