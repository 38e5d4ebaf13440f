"""Dependencies (TGDs, IDs, FDs), classification, FD closure and query
minimization under FDs."""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .model import CQ, Atom, Const, ModelError, Null, Signature, Var, atoms_variables


class ConstraintError(ModelError):
    pass


class DegenerateQuery(Exception):
    """FDs force two distinct constants of the query to be equal."""

    def __init__(self, left: Const, right: Const):
        super().__init__(f"FDs identify distinct constants {left} and {right}")
        self.left = left
        self.right = right


@dataclass(frozen=True)
class TGD:
    body: tuple
    head: tuple
    name: str = ""
    # free-form role marker set by the constructions that build the rule
    tag: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "head", tuple(self.head))
        if not self.head:
            raise ConstraintError("TGD with empty head")
        for a in self.body + self.head:
            for t in a.args:
                if isinstance(t, Const):
                    raise ConstraintError(f"constant {t} in dependency {self}")
                if isinstance(t, Null):
                    raise ConstraintError(f"null in dependency {self}")

    def body_vars(self) -> list[Var]:
        return atoms_variables(self.body)

    def head_vars(self) -> list[Var]:
        return atoms_variables(self.head)

    @functools.cached_property
    def exported(self) -> list[Var]:
        b = set(self.body_vars())
        return [v for v in self.head_vars() if v in b]

    @functools.cached_property
    def existential(self) -> list[Var]:
        b = set(self.body_vars())
        return [v for v in self.head_vars() if v not in b]

    @property
    def is_full(self) -> bool:
        return not self.existential

    @property
    def is_linear(self) -> bool:
        return len(self.body) == 1

    def is_guarded(self) -> bool:
        vs = set(self.body_vars())
        return not vs or any(vs <= set(a.args) for a in self.body)

    def is_frontier_guarded(self) -> bool:
        ex = set(self.exported)
        return not ex or any(ex <= set(a.args) for a in self.body)

    def relations(self) -> set[str]:
        return {a.relation for a in self.body + self.head}

    def renamed(self, mapping: dict) -> "TGD":
        return TGD(
            tuple(Atom(mapping.get(a.relation, a.relation), a.args) for a in self.body),
            tuple(Atom(mapping.get(a.relation, a.relation), a.args) for a in self.head),
            self.name,
            self.tag,
        )

    def __str__(self) -> str:
        body = " & ".join(str(a) for a in self.body) or "true"
        return f"{body} -> {' & '.join(str(a) for a in self.head)}"


@dataclass(frozen=True)
class FD:
    relation: str
    determiner: frozenset
    determined: int
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "determiner", frozenset(self.determiner))

    def renamed(self, mapping: dict) -> "FD":
        return FD(mapping.get(self.relation, self.relation), self.determiner, self.determined, self.name)

    def __str__(self) -> str:
        d = ",".join(str(i) for i in sorted(self.determiner))
        return f"{self.relation}: {{{d}}} -> {self.determined}"


def is_id(t: TGD) -> bool:
    if len(t.body) != 1 or len(t.head) != 1:
        return False
    for a in (t.body[0], t.head[0]):
        if len(set(a.args)) != len(a.args):
            return False
    return True


def id_width(t: TGD) -> int:
    if not is_id(t):
        raise ConstraintError(f"not an ID: {t}")
    return len(t.exported)


def is_uid(t: TGD) -> bool:
    return is_id(t) and id_width(t) == 1


class Kind(enum.Enum):
    PURE_ID = "PureID"
    PURE_FD = "PureFD"
    UID_FD = "UIDplusFD"
    FULL_GTGD_ID = "FullGTGDplusID"
    FG_TGD = "FrontierGuardedTGD"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class ConstraintClass:
    kind: Kind
    width: Optional[int] = None

    def __str__(self) -> str:
        if self.kind is Kind.PURE_ID:
            return f"PureID(width {self.width})"
        return self.kind.value


class ConstraintSet:
    def __init__(self, tgds: Iterable[TGD] = (), fds: Iterable[FD] = ()):
        self.tgds: tuple = tuple(tgds)
        self.fds: tuple = tuple(fds)

    @property
    def cls(self) -> ConstraintClass:
        return classify(self)

    def __iter__(self):
        return iter(self.tgds + self.fds)

    def __len__(self) -> int:
        return len(self.tgds) + len(self.fds)

    def relations(self) -> set[str]:
        out = set()
        for t in self.tgds:
            out |= t.relations()
        out |= {f.relation for f in self.fds}
        return out

    def fds_of(self, relation: str) -> list[FD]:
        return [f for f in self.fds if f.relation == relation]

    def with_(self, tgds: Iterable[TGD] = (), fds: Iterable[FD] = ()) -> "ConstraintSet":
        return ConstraintSet(self.tgds + tuple(tgds), self.fds + tuple(fds))

    def check(self, sig: Signature) -> None:
        for t in self.tgds:
            for a in t.body + t.head:
                sig.check_atom(a)
        for f in self.fds:
            n = sig.arity(f.relation)
            for p in set(f.determiner) | {f.determined}:
                if not 0 <= p < n:
                    raise ConstraintError(f"FD position {p} out of range for {f.relation}")

    def __eq__(self, other) -> bool:
        return isinstance(other, ConstraintSet) and self.tgds == other.tgds and self.fds == other.fds

    def __repr__(self) -> str:
        return f"ConstraintSet({len(self.tgds)} tgds, {len(self.fds)} fds)"


def _is_full_gtgd(t: TGD) -> bool:
    return t.is_full and t.is_guarded()


def classify(sigma: ConstraintSet) -> ConstraintClass:
    """Most specific class among those with a dedicated decision route.

    The empty set is PureFD (the cheapest route). FullGTGDplusID covers
    FD-free sets of IDs and full guarded TGDs that are not all IDs."""
    tgds, fds = sigma.tgds, sigma.fds
    if not tgds:
        return ConstraintClass(Kind.PURE_FD)
    all_ids = all(is_id(t) for t in tgds)
    if all_ids and not fds:
        return ConstraintClass(Kind.PURE_ID, max(id_width(t) for t in tgds))
    if all_ids and all(id_width(t) <= 1 for t in tgds):
        return ConstraintClass(Kind.UID_FD)
    if fds:
        return ConstraintClass(Kind.UNSUPPORTED)
    if all(is_id(t) or _is_full_gtgd(t) for t in tgds):
        return ConstraintClass(Kind.FULL_GTGD_ID)
    if all(t.is_frontier_guarded() for t in tgds):
        return ConstraintClass(Kind.FG_TGD)
    return ConstraintClass(Kind.UNSUPPORTED)


def max_id_width(tgds: Iterable[TGD]) -> int:
    return max((id_width(t) for t in tgds if is_id(t)), default=0)


def detby(relation: str, positions: Iterable[int], fds: Iterable[FD]) -> frozenset:
    """Attribute closure of positions under the FDs on relation."""
    cur = set(positions)
    rel_fds = [f for f in fds if f.relation == relation]
    changed = True
    while changed:
        changed = False
        for f in rel_fds:
            if f.determined not in cur and f.determiner <= cur:
                cur.add(f.determined)
                changed = True
    return frozenset(cur)


def minimize_under_fds(q: CQ, fds: Sequence[FD]) -> CQ:
    """Chase q's atoms with the FDs, identifying terms. Constants win over
    variables, and the variable occurring first wins over later ones."""
    order = {}
    for a in q.atoms:
        for t in a.args:
            order.setdefault(t, len(order))
    parent = {t: t for t in order}

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    def union(s, t):
        s, t = find(s), find(t)
        if s == t:
            return False
        if isinstance(s, Const) and isinstance(t, Const):
            raise DegenerateQuery(s, t)
        if isinstance(t, Const) or (not isinstance(s, Const) and order[t] < order[s]):
            s, t = t, s
        parent[t] = s
        return True

    changed = True
    while changed:
        changed = False
        for f in fds:
            seen = {}
            for a in q.atoms:
                if a.relation != f.relation:
                    continue
                key = tuple(find(a.args[i]) for i in sorted(f.determiner))
                val = a.args[f.determined]
                if key in seen:
                    if union(seen[key], val):
                        changed = True
                else:
                    seen[key] = val
    sub = {t: find(t) for t in order}
    atoms = {}
    for a in q.atoms:
        atoms.setdefault(a.substitute(sub), None)
    free = []
    for v in q.free:
        r = sub[v]
        if isinstance(r, Var) and r not in free:
            free.append(r)
    return CQ(tuple(atoms), tuple(free), q.name)
