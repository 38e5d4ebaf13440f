"""Relational vocabulary: terms, atoms, conjunctive queries, instances and
homomorphism search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union


class ModelError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Const:
    name: str

    def __str__(self) -> str:
        return f'"{self.name}"'


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Null:
    # equality and hashing use the generation id only
    id: int
    tag: str = field(default="", compare=False, hash=False)

    def __str__(self) -> str:
        return f"_{self.tag}{self.id}" if self.tag else f"_n{self.id}"


Term = Union[Const, Var, Null]

_NULL_IDS = itertools.count(1)


def fresh_null(tag: str = "") -> Null:
    """A null whose id has never been handed out in this process."""
    return Null(next(_NULL_IDS), tag)


def term_key(t: Term) -> tuple:
    if isinstance(t, Const):
        return (0, t.name, 0)
    if isinstance(t, Null):
        return (1, "", t.id)
    return (2, t.name, 0)


@dataclass(frozen=True, slots=True)
class Atom:
    relation: str
    args: tuple

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> list[Var]:
        seen = {}
        for t in self.args:
            if isinstance(t, Var):
                seen.setdefault(t, None)
        return list(seen)

    def substitute(self, h: Mapping) -> "Atom":
        return Atom(self.relation, tuple(h.get(t, t) for t in self.args))

    def is_ground(self) -> bool:
        return not any(isinstance(t, Var) for t in self.args)

    def __str__(self) -> str:
        return f"{self.relation}({','.join(str(t) for t in self.args)})"


def atom_key(a: Atom) -> tuple:
    return (a.relation, tuple(term_key(t) for t in a.args))


def atoms_variables(atoms: Iterable[Atom]) -> list[Var]:
    seen = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Var):
                seen.setdefault(t, None)
    return list(seen)


class Signature:
    """Relation names with arities, in declaration order."""

    def __init__(self, relations: Iterable[tuple[str, int]] = ()):
        self._arity: dict[str, int] = {}
        for name, arity in relations:
            self.add(name, arity)

    def add(self, name: str, arity: int) -> None:
        if name in self._arity:
            raise ModelError(f"duplicate relation {name}")
        if not isinstance(arity, int) or arity < 0:
            raise ModelError(f"bad arity {arity!r} for {name}")
        self._arity[name] = arity

    def arity(self, name: str) -> int:
        try:
            return self._arity[name]
        except KeyError:
            raise ModelError(f"unknown relation {name}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._arity

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(self._arity.items())

    def __len__(self) -> int:
        return len(self._arity)

    @property
    def names(self) -> list[str]:
        return list(self._arity)

    def max_arity(self) -> int:
        return max(self._arity.values(), default=0)

    def copy(self) -> "Signature":
        return Signature(self._arity.items())

    def check_atom(self, a: Atom) -> None:
        if a.relation not in self._arity:
            raise ModelError(f"unknown relation {a.relation} in {a}")
        if len(a.args) != self._arity[a.relation]:
            raise ModelError(
                f"arity mismatch in {a}: expected {self._arity[a.relation]}, got {len(a.args)}"
            )

    def __eq__(self, other) -> bool:
        return isinstance(other, Signature) and self._arity == other._arity

    def __repr__(self) -> str:
        return f"Signature({list(self._arity.items())!r})"


@dataclass(frozen=True)
class CQ:
    atoms: tuple
    free: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "free", tuple(self.free))
        for a in self.atoms:
            for t in a.args:
                if isinstance(t, Null):
                    raise ModelError(f"query atom {a} contains a null")
        vs = set(self.variables())
        for v in self.free:
            if v not in vs:
                raise ModelError(f"free variable {v} does not occur in the query")

    def variables(self) -> list[Var]:
        return atoms_variables(self.atoms)

    def constants(self) -> list[Const]:
        seen = {}
        for a in self.atoms:
            for t in a.args:
                if isinstance(t, Const):
                    seen.setdefault(t, None)
        return list(seen)

    @property
    def is_boolean(self) -> bool:
        return not self.free

    def booleanize(self) -> "CQ":
        return CQ(self.atoms, (), self.name)

    def relations(self) -> set[str]:
        return {a.relation for a in self.atoms}

    def check(self, sig: Signature) -> None:
        for a in self.atoms:
            sig.check_atom(a)

    def __str__(self) -> str:
        head = self.name or "Q"
        if self.free:
            head += "(" + ",".join(str(v) for v in self.free) + ")"
        return f"{head} :- " + ", ".join(str(a) for a in self.atoms)


class Instance:
    """A set of ground facts with a relation index and a
    (relation, position, value) index. Iteration follows insertion order."""

    def __init__(self, facts: Iterable[Atom] = ()):
        self._facts: dict[Atom, None] = {}
        self._by_rel: dict[str, dict[Atom, None]] = {}
        self._by_pos: dict[tuple, dict[Atom, None]] = {}
        for f in facts:
            self.add(f)

    def add(self, fact: Atom) -> bool:
        if fact in self._facts:
            return False
        for t in fact.args:
            if isinstance(t, Var):
                raise ModelError(f"fact {fact} contains a variable")
        self._facts[fact] = None
        self._by_rel.setdefault(fact.relation, {})[fact] = None
        for i, t in enumerate(fact.args):
            self._by_pos.setdefault((fact.relation, i, t), {})[fact] = None
        return True

    def update(self, facts: Iterable[Atom]) -> int:
        return sum(1 for f in facts if self.add(f))

    def discard(self, fact: Atom) -> None:
        if fact not in self._facts:
            return
        del self._facts[fact]
        del self._by_rel[fact.relation][fact]
        for i, t in enumerate(fact.args):
            bucket = self._by_pos[(fact.relation, i, t)]
            del bucket[fact]
            if not bucket:
                del self._by_pos[(fact.relation, i, t)]

    def __contains__(self, fact: Atom) -> bool:
        return fact in self._facts

    def __iter__(self) -> Iterator[Atom]:
        return iter(list(self._facts))

    def __len__(self) -> int:
        return len(self._facts)

    def __eq__(self, other) -> bool:
        return isinstance(other, Instance) and self._facts.keys() == other._facts.keys()

    def facts(self) -> list[Atom]:
        return list(self._facts)

    def facts_of(self, relation: str) -> list[Atom]:
        return list(self._by_rel.get(relation, ()))

    def count_of(self, relation: str) -> int:
        return len(self._by_rel.get(relation, ()))

    def lookup(self, relation: str, position: int, value) -> list[Atom]:
        return list(self._by_pos.get((relation, position, value), ()))

    def relations(self) -> list[str]:
        return [r for r, fs in self._by_rel.items() if fs]

    def adom(self) -> list:
        seen = {}
        for f in self._facts:
            for t in f.args:
                seen.setdefault(t, None)
        return list(seen)

    def nulls(self) -> list[Null]:
        return [t for t in self.adom() if isinstance(t, Null)]

    def copy(self) -> "Instance":
        return Instance(self._facts)

    def restrict(self, keep: Callable[[Atom], bool]) -> "Instance":
        return Instance(f for f in self._facts if keep(f))

    def sorted_facts(self) -> list[Atom]:
        return sorted(self._facts, key=atom_key)

    def __str__(self) -> str:
        return "{" + ", ".join(str(f) for f in self.sorted_facts()) + "}"

    def __repr__(self) -> str:
        return f"Instance({self})"


def canonical_database(q: CQ, sig: Optional[Signature] = None) -> tuple[Instance, dict]:
    """Freeze q: every variable becomes a distinct fresh null tagged with the
    variable name. Returns the instance and the freezing map."""
    if sig is not None:
        q.check(sig)
    h = {v: fresh_null(v.name) for v in q.variables()}
    return Instance(a.substitute(h) for a in q.atoms), h


def _flexible(t) -> bool:
    return isinstance(t, Var)


def _match(atom: Atom, fact: Atom, h: dict, is_var) -> Optional[list]:
    """Extend h so that atom maps onto fact; return the newly bound terms or
    None. h is modified in place only on success."""
    if atom.relation != fact.relation or len(atom.args) != len(fact.args):
        return None
    bound = []
    for t, v in zip(atom.args, fact.args):
        if is_var(t):
            cur = h.get(t)
            if cur is None:
                h[t] = v
                bound.append(t)
            elif cur != v:
                for b in bound:
                    del h[b]
                return None
        elif t != v:
            for b in bound:
                del h[b]
            return None
    return bound


def _candidates(atom: Atom, inst: Instance, h: dict, is_var) -> list[Atom]:
    for i, t in enumerate(atom.args):
        if is_var(t):
            if t in h:
                return inst.lookup(atom.relation, i, h[t])
        else:
            return inst.lookup(atom.relation, i, t)
    return inst.facts_of(atom.relation)


def homomorphisms(
    atoms: Iterable[Atom],
    inst: Instance,
    partial: Optional[Mapping] = None,
    nulls_are_variables: bool = False,
    dynamic_order: bool = False,
) -> Iterator[dict]:
    """All extensions of partial mapping every atom into inst. Constants map to
    themselves; with nulls_are_variables the atoms' nulls are flexible too."""
    atoms = list(atoms)
    is_var = (lambda t: isinstance(t, (Var, Null))) if nulls_are_variables else _flexible
    h = dict(partial or {})

    if not dynamic_order:
        def rec(i):
            if i == len(atoms):
                yield dict(h)
                return
            a = atoms[i]
            for f in _candidates(a, inst, h, is_var):
                bound = _match(a, f, h, is_var)
                if bound is None:
                    continue
                yield from rec(i + 1)
                for b in bound:
                    del h[b]

        yield from rec(0)
        return

    remaining = list(range(len(atoms)))

    def rec_dyn():
        if not remaining:
            yield dict(h)
            return
        best, best_c = None, None
        for idx in remaining:
            c = _candidates(atoms[idx], inst, h, is_var)
            if best_c is None or len(c) < len(best_c):
                best, best_c = idx, c
                if not c:
                    break
        remaining.remove(best)
        for f in best_c:
            bound = _match(atoms[best], f, h, is_var)
            if bound is None:
                continue
            yield from rec_dyn()
            for b in bound:
                del h[b]
        remaining.append(best)
        remaining.sort()

    yield from rec_dyn()


def find_homomorphism(q, inst: Instance, partial: Optional[Mapping] = None) -> Optional[dict]:
    """First homomorphism of q (a CQ or a sequence of atoms) into inst, or None.
    Atoms are tried in the given order and facts in insertion order."""
    atoms = q.atoms if isinstance(q, CQ) else q
    return next(homomorphisms(atoms, inst, partial), None)


def evaluate_boolean(q, inst: Instance) -> bool:
    return find_homomorphism(q, inst) is not None


def instance_maps_into(src: Instance, dst: Instance, fixed: Iterable = ()) -> bool:
    """Is there a fact-preserving map src -> dst that is the identity on
    constants and on the given fixed values? Other nulls of src are free."""
    fixed = set(fixed)
    h = {t: t for t in src.adom() if isinstance(t, Null) and t in fixed}
    return next(homomorphisms(src.facts(), dst, h, nulls_are_variables=True, dynamic_order=True), None) is not None
