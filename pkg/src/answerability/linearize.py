"""Linearization: saturation of truncated accessibility axioms, the linear
rule set over annotated relations R_P for IDs, and the general construction
for IDs plus full guarded TGDs with a side signature."""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .constraints import TGD, ConstraintError, id_width, is_id
from .model import CQ, Atom, Instance, Var, atoms_variables, canonical_database, fresh_null, homomorphisms
from .reduce import access_rule_parts, prime
from .schema import ACCESSIBLE


@dataclass(frozen=True, order=True)
class TruncAxiom:
    relation: str
    premise: frozenset
    conclusion: int

    @property
    def breadth(self) -> int:
        return len(self.premise)

    @property
    def trivial(self) -> bool:
        return self.conclusion in self.premise

    def as_tgd(self, arity: int) -> TGD:
        xs = [Var(f"x{i}") for i in range(arity)]
        body = [Atom(ACCESSIBLE, (xs[i],)) for i in sorted(self.premise)] + [Atom(self.relation, xs)]
        return TGD(body, [Atom(ACCESSIBLE, (xs[self.conclusion],))], str(self), "trunc")

    def __str__(self) -> str:
        return f"{self.relation}{{{','.join(map(str, sorted(self.premise)))}}}->{self.conclusion}"


def trunc_from_tgd(t: TGD) -> TruncAxiom:
    rel_atom, inputs = access_rule_parts(t)
    j = rel_atom.args.index(t.head[0].args[0])
    return TruncAxiom(rel_atom.relation, frozenset(inputs), j)


def subsets_upto(positions: Iterable[int], w: int) -> list[frozenset]:
    """Subsets of size at most w, ascending by size then lexicographically."""
    ps = sorted(positions)
    out = []
    for k in range(0, min(w, len(ps)) + 1):
        out += [frozenset(c) for c in itertools.combinations(ps, k)]
    return out


def _id_positions(t: TGD) -> list[tuple[int, int]]:
    """(body position, head position) pairs of the exported variables."""
    b, h = t.body[0], t.head[0]
    return [(b.args.index(v), h.args.index(v)) for v in t.exported]


def saturate_truncated(
    sigma_ids: Sequence[TGD],
    delta: Iterable[TruncAxiom],
    methods: Sequence[tuple[str, frozenset]],
    w: int,
    arities: dict,
) -> set[TruncAxiom]:
    """All truncated accessibility axioms of breadth at most w that follow
    from the IDs and the access methods (relation, input positions)."""
    o: dict[tuple, set] = {}
    for rel, n in arities.items():
        for p in subsets_upto(range(n), w):
            o[(rel, p)] = set(p)
    for ax in delta:
        if ax.breadth <= w:
            o[(ax.relation, ax.premise)].add(ax.conclusion)
    inputs_of: dict[str, list[frozenset]] = {}
    for rel, inp in methods:
        inputs_of.setdefault(rel, []).append(frozenset(inp))
    ids_by_body: dict[str, list] = {}
    for t in sigma_ids:
        if id_width(t) > w:
            raise ConstraintError(f"ID {t} wider than {w}")
        ids_by_body.setdefault(t.body[0].relation, []).append((t.head[0].relation, _id_positions(t)))

    changed = True
    while changed:
        changed = False
        for (rel, p), cur in o.items():
            n = arities[rel]
            before = len(cur)
            if len(cur) < n:
                for inp in inputs_of.get(rel, ()):
                    if inp <= cur:
                        cur.update(range(n))
                        break
            if len(cur) < n:
                for hrel, pairs in ids_by_body.get(rel, ()):
                    exported = {bp for bp, _ in pairs}
                    if not p <= exported:
                        continue
                    to_head = dict(pairs)
                    k = frozenset(to_head[i] for i in p)
                    got = o[(hrel, k)]
                    for bp, hp in pairs:
                        if hp in got:
                            cur.add(bp)
            if len(cur) < n:
                grown = True
                while grown and len(cur) < n:
                    grown = False
                    for r in subsets_upto(cur, w):
                        extra = o[(rel, r)] - cur
                        if extra:
                            cur |= extra
                            grown = True
            if len(cur) != before:
                changed = True
    out = {TruncAxiom(rel, p, j) for (rel, p), js in o.items() for j in js}
    added = sum(1 for a in out if not a.trivial)
    a = max(arities.values(), default=0)
    assert added <= len(arities) * a ** (w + 1), "saturation exceeded its size bound"
    return out


def transferred(delta_plus: Iterable[TruncAxiom]) -> dict[tuple, frozenset]:
    out: dict[tuple, set] = {}
    for ax in delta_plus:
        out.setdefault((ax.relation, ax.premise), set()).add(ax.conclusion)
    return {k: frozenset(v) for k, v in out.items()}


def annotated(relation: str, p: Iterable[int]) -> str:
    return f"{relation}[{','.join(map(str, sorted(p)))}]"


@dataclass
class SigmaLin:
    sigma1: list  # Lift rules (bounded width)
    sigma2: list  # Transfer and result-bounded fact transfer rules (acyclic)


def build_sigma_lin(
    sigma_ids: Sequence[TGD],
    delta_plus: Iterable[TruncAxiom],
    methods: Sequence[tuple[str, frozenset]],
    rb_transfers: Sequence[tuple[str, str, frozenset]],
    w: int,
    arities: dict,
) -> SigmaLin:
    """methods: (relation, inputs) of unbounded methods; rb_transfers:
    (method name, relation, inputs) of formerly result-bounded methods."""
    tr = transferred(delta_plus)
    s1, s2 = [], []
    for rel, n in arities.items():
        xs = [Var(f"x{i}") for i in range(n)]
        for p in subsets_upto(range(n), w):
            t = tr.get((rel, p), p)
            body = [Atom(annotated(rel, p), xs)]
            if any(frozenset(inp) <= t for r2, inp in methods if r2 == rel):
                s2.append(TGD(body, [Atom(prime(rel), xs)], f"T:{annotated(rel, p)}", "transfer"))
            for name, r2, inp in rb_transfers:
                if r2 == rel and frozenset(inp) <= t:
                    head = [xs[i] if i in inp else Var(f"z{i}") for i in range(n)]
                    s2.append(TGD(body, [Atom(prime(rel), head)], f"RB:{name}:{annotated(rel, p)}", "rb-transfer"))
    for idx, d in enumerate(sigma_ids):
        b, h = d.body[0], d.head[0]
        pairs = _id_positions(d)
        to_head = dict(pairs)
        for p in subsets_upto(range(len(b.args)), w):
            t = tr.get((b.relation, p), p)
            p3 = frozenset(to_head[i] for i in t if i in to_head)
            s1.append(
                TGD([Atom(annotated(b.relation, p), b.args)], [Atom(annotated(h.relation, p3), h.args)],
                    f"L{idx}:{annotated(b.relation, p)}", "lift")
            )
    return SigmaLin(s1, s2)


def build_i0_lin(
    q: CQ,
    delta_plus: Iterable[TruncAxiom],
    methods: Sequence[tuple[str, frozenset]],
    rb_transfers: Sequence[tuple[str, str, frozenset]],
    w: int,
    arities: dict,
    i0: Optional[Instance] = None,
) -> Instance:
    """Root instance: CanonDB(q) (or the given i0) closed under the
    truncated axioms and the access methods, annotated facts R_P, and the
    primed facts that the transfer rules produce at the root."""
    if i0 is None:
        i0, _ = canonical_database(q)
    acc = {f.args[0] for f in i0.facts_of(ACCESSIBLE)}
    delta_plus = list(delta_plus)
    by_rel: dict[str, list[TruncAxiom]] = {}
    for ax in delta_plus:
        by_rel.setdefault(ax.relation, []).append(ax)
    facts = [f for f in i0 if f.relation in arities]
    changed = True
    while changed:
        changed = False
        for f in facts:
            a = {i for i, v in enumerate(f.args) if v in acc}
            new = set()
            for ax in by_rel.get(f.relation, ()):
                if ax.premise <= a:
                    new.add(ax.conclusion)
            for r2, inp in methods:
                if r2 == f.relation and frozenset(inp) <= a:
                    new |= set(range(len(f.args)))
            for j in new - a:
                if f.args[j] not in acc:
                    acc.add(f.args[j])
                    changed = True
    out = i0.copy()
    out.update(Atom(ACCESSIBLE, (v,)) for v in acc)
    for f in facts:
        a = {i for i, v in enumerate(f.args) if v in acc}
        for p in subsets_upto(a, w):
            out.add(Atom(annotated(f.relation, p), f.args))
        if any(r2 == f.relation and frozenset(inp) <= a for r2, inp in methods):
            out.add(Atom(prime(f.relation), f.args))
        for name, r2, inp in rb_transfers:
            if r2 == f.relation and frozenset(inp) <= a:
                args = tuple(v if i in inp else fresh_null("z") for i, v in enumerate(f.args))
                out.add(Atom(prime(f.relation), args))
    return out


# ------------------------------------------------ IDs plus full guarded TGDs


def _guard(body: Sequence[Atom], side: set) -> Optional[Atom]:
    vs = set(atoms_variables(body))
    cands = [a for a in body if vs <= set(a.args)]
    if not cands:
        return None
    non_side = [a for a in cands if a.relation not in side]
    pool = non_side or cands
    return max(pool, key=lambda a: len(a.args))


def normalize_gtgds(rules: Sequence[TGD], prefix: str = "G") -> tuple[list[TGD], list[TGD]]:
    """Rewrite guarded TGDs into non-full IDs and single-headed full guarded
    TGDs, adding fresh relations for heads."""
    ids, fulls = [], []
    counter = itertools.count()
    for r in rules:
        if not r.is_guarded():
            raise ConstraintError(f"not guarded: {r}")
        if is_id(r) and not r.is_full:
            ids.append(r)
            continue
        if r.is_full:
            if len(r.head) == 1:
                fulls.append(r)
                continue
            i = next(counter)
            hv = atoms_variables(r.head)
            h = Atom(f"{prefix}#{i}", hv)
            fulls.append(TGD(r.body, [h], f"{r.name}#h", r.tag))
            for j, a in enumerate(r.head):
                fulls.append(TGD([h], [a], f"{r.name}#h{j}", r.tag))
            continue
        i = next(counter)
        ex = r.exported
        z = r.existential
        g = Atom(f"{prefix}#{i}", ex)
        g2 = Atom(f"{prefix}'#{i}", list(ex) + list(z))
        fulls.append(TGD(r.body, [g], f"{r.name}#g", r.tag))
        ids.append(TGD([g], [g2], f"{r.name}#id", r.tag))
        for j, a in enumerate(r.head):
            fulls.append(TGD([g2], [a], f"{r.name}#p{j}", r.tag))
    return ids, fulls


def set_partitions(items: Sequence) -> list[list[list]]:
    items = list(items)
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in set_partitions(rest):
        out.append([[first]] + part)
        for i in range(len(part)):
            out.append(part[:i] + [[first] + part[i]] + part[i + 1:])
    return out


def side_signature(fulls: Sequence[TGD], extra: Iterable[str] = (ACCESSIBLE,)) -> set:
    side = set(extra)
    for r in fulls:
        g = _guard(r.body, side)
        for a in r.body:
            if a is not g:
                side.add(a.relation)
    return side


def _side_arities(rules: Iterable[TGD], side: set, extra: dict) -> dict:
    ar = dict(extra)
    for r in rules:
        for a in r.body + r.head:
            if a.relation in side:
                ar[a.relation] = len(a.args)
    return ar


def _chase_full(facts: Iterable[Atom], rules: Sequence[TGD]) -> Instance:
    """Fixpoint of full rules over a small instance (variables act as values)."""
    inst = _VarInstance(facts)
    by_rel: dict[str, list[TGD]] = {}
    for r in rules:
        for a in r.body:
            by_rel.setdefault(a.relation, []).append(r)
    changed = True
    while changed:
        changed = False
        rels = set(inst.relations())
        seen = set()
        for rel in rels:
            for r in by_rel.get(rel, ()):
                if id(r) in seen:
                    continue
                seen.add(id(r))
                for h in list(_var_homs(r.body, inst)):
                    for a in r.head:
                        if inst.add(a.substitute(h)):
                            changed = True
    return inst


class _VarInstance(Instance):
    """An instance whose values may be variables (frozen bodies)."""

    def add(self, fact: Atom) -> bool:
        if fact in self._facts:
            return False
        self._facts[fact] = None
        self._by_rel.setdefault(fact.relation, {})[fact] = None
        for i, t in enumerate(fact.args):
            self._by_pos.setdefault((fact.relation, i, t), {})[fact] = None
        return True


def _rename_apart(r: TGD) -> TGD:
    ren = {v: Var(f"?{v.name}") for v in atoms_variables(r.body + r.head)}
    return TGD([a.substitute(ren) for a in r.body], [a.substitute(ren) for a in r.head], r.name, r.tag)


def _var_homs(body, inst):
    # rule variables are prefixed with '?', instance values are plain variables
    return homomorphisms(body, inst)


@dataclass
class Closure:
    """Derived suitable full GTGDs. keys maps each body (guard, side atoms)
    to its derived head atoms; rules holds the input full rules together with
    the rules obtained by rewriting through IDs."""

    keys: dict
    rules: list
    side: set
    b: int

    def tgds(self) -> list[TGD]:
        out = []
        for (guard, chi), heads in self.keys.items():
            body = [guard] + sorted(chi, key=str)
            for hd in sorted(heads, key=str):
                out.append(TGD(body, [hd], "", "closure"))
        return out


def _id_keys(d: TGD, side_ar: dict) -> list[tuple[Atom, frozenset]]:
    h = d.head[0]
    pairs = _id_positions(d)
    exported = sorted(hp for _, hp in pairs)
    keys = []
    for part in set_partitions(exported):
        var_of = {}
        for block in part:
            v = Var(f"x{min(block)}")
            for p in block:
                var_of[p] = v
        args = tuple(var_of.get(i, Var(f"y{i}")) for i in range(len(h.args)))
        xs = sorted(set(var_of.values()), key=lambda v: v.name)
        cands = []
        for rel, ar in sorted(side_ar.items()):
            for tup in itertools.product(xs, repeat=ar):
                cands.append(Atom(rel, tup))
        for k in range(len(cands) + 1):
            for chi in itertools.combinations(cands, k):
                keys.append((Atom(h.relation, args), frozenset(chi)))
    return keys


def b_closure(
    ids: Sequence[TGD],
    fulls: Sequence[TGD],
    b: int,
    side: Optional[set] = None,
    side_arities: Optional[dict] = None,
) -> Closure:
    """Close under composition of full rules and backward rewriting through
    IDs. Bodies considered are those a node created by an ID can have: the
    ID head with its exported positions (under every equality pattern) and
    any side facts on them."""
    for d in ids:
        if id_width(d) > b:
            raise ConstraintError(f"ID {d} wider than {b}")
    side = side_signature(fulls) if side is None else set(side)
    side_ar = _side_arities(fulls, side, side_arities or {ACCESSIBLE: 1})
    rules = [_rename_apart(r) for r in fulls]
    rule_set = {(r.body, r.head) for r in rules}
    keys: dict = {}
    key_id: dict = {}
    for di, d in enumerate(ids):
        for k in _id_keys(d, side_ar):
            keys.setdefault(k, set())
            key_id.setdefault(k, []).append(di)

    changed = True
    while changed:
        changed = False
        for k, heads in keys.items():
            guard, chi = k
            base = [guard, *chi]
            inst = _chase_full(base + list(heads), rules)
            kv = set(guard.args)
            for f in inst:
                if f not in heads and f not in chi and f != guard and set(f.args) <= kv:
                    heads.add(f)
                    changed = True
        for k, heads in keys.items():
            guard, chi = k
            xvars = {t for c in chi for t in c.args}
            for di in key_id[k]:
                d = ids[di]
                pairs = _id_positions(d)
                exp_vars = {guard.args[hp] for _, hp in pairs}
                xvars_k = xvars | exp_vars
                body_atom = d.body[0]
                head_of = dict(pairs)
                args = tuple(
                    Var("?" + guard.args[head_of[i]].name) if i in head_of else Var(f"?u{i}")
                    for i in range(len(body_atom.args))
                )
                ren = {v: Var("?" + v.name) for v in exp_vars}
                rbody = (Atom(body_atom.relation, args),) + tuple(sorted((c.substitute(ren) for c in chi), key=str))
                for hd in heads:
                    if not set(hd.args) <= xvars_k:
                        continue
                    rhead = (hd.substitute(ren),)
                    if (rbody, rhead) not in rule_set:
                        rule_set.add((rbody, rhead))
                        rules.append(TGD(rbody, rhead, f"id{di}", "closure"))
                        changed = True
    return Closure({k: frozenset(v) for k, v in keys.items()}, rules, side, b)


def _chi_name(chi: Iterable[Atom]) -> str:
    s = ";".join(sorted(str(a) for a in chi))
    if not s:
        return ""
    return hashlib.sha1(s.encode()).hexdigest()[:8]


def annotated_chi(relation: str, p: Iterable[int], chi: Iterable[Atom]) -> str:
    ps = ",".join(map(str, sorted(p)))
    c = _chi_name(chi)
    return f"{relation}[{ps}|{c}]" if c else f"{relation}[{ps}|]"


def _positional_chi(args: Sequence, p: Iterable[int], facts: Iterable[Atom], side: set) -> frozenset:
    """Side facts on the values at positions p, with each value renamed to
    v<first position in p holding it>."""
    ren = {}
    for i in sorted(p):
        ren.setdefault(args[i], Var(f"v{i}"))
    out = set()
    for f in facts:
        if f.relation in side and all(t in ren for t in f.args):
            out.add(f.substitute(ren))
    return frozenset(out)


@dataclass
class Theta:
    rules: list
    lift: list
    acyclic: list
    annotations: dict  # annotated relation name -> (relation, P, chi)


def build_theta(
    ids: Sequence[TGD],
    fulls: Sequence[TGD],
    closure: Closure,
    w: int,
    arities: dict,
    seeds: Optional[Iterable[tuple]] = None,
) -> Theta:
    """Linear rules over annotated relations R_{P,chi}: Forget, Instantiate
    (the node's local instance closed under the full rules) and Lift (one
    rule per ID trigger in that local instance). Only annotations reachable
    from the seeds are generated; without seeds, all of them."""
    side = closure.side
    rules_full = closure.rules
    ids_r = [_rename_apart(d) for d in ids]
    if seeds is None:
        seeds = []
        side_ar = _side_arities(fulls, side, {ACCESSIBLE: 1})
        for rel, n in arities.items():
            for p in subsets_upto(range(n), w):
                xs = {Var(f"v{i}") for i in p}
                cands = [Atom(r, t) for r, ar in sorted(side_ar.items()) for t in itertools.product(sorted(xs, key=str), repeat=ar)]
                for k in range(len(cands) + 1):
                    for chi in itertools.combinations(cands, k):
                        seeds.append((rel, p, frozenset(chi)))
    work = list(dict.fromkeys(seeds))
    done = {}
    lift, acyclic = [], []
    seen_rules = set()

    def emit(lst, r):
        key = (r.body, r.head)
        if key not in seen_rules:
            seen_rules.add(key)
            lst.append(r)

    while work:
        rel, p, chi = work.pop()
        name = annotated_chi(rel, p, chi)
        if name in done:
            continue
        done[name] = (rel, p, chi)
        n = arities[rel]
        for part in set_partitions(sorted(p)):
            var_of = {}
            for block in part:
                v = Var(f"x{min(block)}")
                for q0 in block:
                    var_of[q0] = v
            args = tuple(var_of.get(i, Var(f"y{i}")) for i in range(n))
            ren = {Var(f"v{i}"): var_of[i] for i in p}
            local = [Atom(rel, args)] + [c.substitute(ren) for c in chi]
            bag = _chase_full(local, rules_full)
            body = [Atom(name, args)]
            for f in bag:
                tag = "forget" if f == local[0] else "instantiate"
                if tag == "forget" and len(part) != len(p):
                    continue
                emit(acyclic, TGD(body, [f], f"{tag[0].upper()}:{name}", tag))
            for di, d in enumerate(ids_r):
                pairs = _id_positions(d)
                for h in homomorphisms(d.body, bag):
                    hd = d.head[0]
                    cargs = []
                    for j, t in enumerate(hd.args):
                        cargs.append(h[t] if t in h else Var(f"z{j}"))
                    p3 = frozenset(hp for _, hp in pairs)
                    cchi = _positional_chi(cargs, p3, bag, side)
                    cname = annotated_chi(hd.relation, p3, cchi)
                    emit(lift, TGD(body, [Atom(cname, cargs)], f"L{di}:{name}", "lift"))
                    if cname not in done:
                        work.append((hd.relation, p3, cchi))
    return Theta(acyclic + lift, lift, acyclic, done)


def build_q_lin(q: CQ, closure: Closure, w: int) -> tuple[Instance, list[tuple]]:
    """CanonDB(q) closed under the full rules, plus R_{P,chi}(a) for every
    fact R(a), every P of size at most w and chi the side facts on a_P.
    Returns the instance and the annotations used (seeds for build_theta)."""
    i0, _ = canonical_database(q)
    q1 = _chase_full(i0, closure.rules)
    out = Instance(q1)
    seeds = []
    for f in q1.facts():
        for p in subsets_upto(range(len(f.args)), w):
            chi = _positional_chi(f.args, p, q1, closure.side)
            out.add(Atom(annotated_chi(f.relation, p, chi), f.args))
            seeds.append((f.relation, p, chi))
    return out, list(dict.fromkeys(seeds))
