"""Brute-force semantic oracles for tests: a bounded search for
counterexamples to monotone answerability and a chase-based entailment
check for single dependencies.

Both are semi-decisions. Not finding a counterexample within the domain
budget proves nothing."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .chase import restricted_chase
from .constraints import TGD, ConstraintSet
from .linearize import TruncAxiom
from .model import CQ, Atom, Const, Instance, Null, atom_key, evaluate_boolean, find_homomorphism, homomorphisms
from .schema import Schema

MAX_DOMAIN = 5


@dataclass
class CounterexampleCertificate:
    i1: Instance
    i2: Instance
    iacc: Instance
    outputs: list = field(default_factory=list)  # (method, binding, chosen output facts)

    def to_json(self) -> dict:
        return {
            "i1": [str(f) for f in self.i1.sorted_facts()],
            "i2": [str(f) for f in self.i2.sorted_facts()],
            "iacc": [str(f) for f in self.iacc.sorted_facts()],
            "outputs": [
                {"method": m, "binding": [str(v) for v in b], "output": [str(f) for f in out]}
                for m, b, out in self.outputs
            ],
        }

    def verify(self, sch: Schema, q: CQ, accessible_constants: bool = False) -> list[str]:
        """Problems with the certificate; empty when it is sound."""
        errs = []
        sigma = sch.constraints
        if any(f not in self.i1 for f in self.iacc):
            errs.append("iacc not contained in i1")
        if any(f not in self.i2 for f in self.iacc):
            errs.append("iacc not contained in i2")
        for name, inst in (("i1", self.i1), ("i2", self.i2)):
            if _violation(inst, sigma.tgds, sigma.fds) is not None:
                errs.append(f"{name} violates the constraints")
        if not evaluate_boolean(q, self.i1):
            errs.append("query false in i1")
        if evaluate_boolean(q, self.i2):
            errs.append("query true in i2")
        if _access_outputs(sch, self.i1, self.iacc, q.constants() if accessible_constants else []) is None:
            errs.append("iacc not access-valid in i1")
        return errs


# ------------------------------------------------------------ model search


def _fd_ok(inst: Instance, fds) -> bool:
    for f in fds:
        seen = {}
        det = sorted(f.determiner)
        for fact in inst.facts_of(f.relation):
            key = tuple(fact.args[i] for i in det)
            if seen.setdefault(key, fact.args[f.determined]) != fact.args[f.determined]:
                return False
    return True


def _violation(inst: Instance, tgds, fds):
    """'fd' for an FD violation, an active trigger (tgd, h), or None."""
    if not _fd_ok(inst, fds):
        return "fd"
    for t in tgds:
        for h in homomorphisms(t.body, inst):
            ex = {v: h[v] for v in t.exported}
            if find_homomorphism(t.head, inst, ex) is None:
                return (t, h)
    return None


def _adom(inst: Instance, extra=()) -> list:
    seen = dict.fromkeys(extra)
    for f in inst:
        for v in f.args:
            seen.setdefault(v, None)
    return list(seen)


def _repairs(inst: Instance, sigma: ConstraintSet, pool: list, max_domain: int, fact_limit: int,
             forbid: Optional[CQ] = None, consts=(), visited: Optional[set] = None) -> Iterator[Instance]:
    """Models of sigma that extend inst by firing violated TGDs, each
    existential witness chosen among the current values or one unused pool
    element. Branches where forbid becomes true are cut. States isomorphic
    to one in visited (renaming pool elements) are skipped."""
    if visited is not None:
        key = _canonical(inst, pool)
        if key in visited:
            return
        visited.add(key)
    if forbid is not None and evaluate_boolean(forbid, inst):
        return
    v = _violation(inst, sigma.tgds, sigma.fds)
    if v is None:
        yield inst
        return
    if v == "fd" or len(inst) >= fact_limit:
        return
    t, h = v
    dom = _adom(inst, consts)
    free = [e for e in pool if e not in dom]
    ex = t.existential
    for choice in _witness_choices(len(ex), dom, free, max_domain - len(dom)):
        ext = dict(h)
        ext.update(zip(ex, choice))
        nxt = inst.copy()
        nxt.update(a.substitute(ext) for a in t.head)
        yield from _repairs(nxt, sigma, pool, max_domain, fact_limit, forbid, consts, visited)


def _witness_choices(n: int, dom: list, free: list, room: int) -> Iterator[tuple]:
    """Tuples over dom plus new elements taken from free in order."""

    def rec(i, acc, used):
        if i == n:
            yield tuple(acc)
            return
        for d in dom + free[:used]:
            yield from rec(i + 1, acc + [d], used)
        if used < min(len(free), room):
            yield from rec(i + 1, acc + [free[used]], used + 1)

    yield from rec(0, [], 0)


def _canonical(inst: Instance, fresh: list) -> tuple:
    used = [e for e in fresh if any(e in f.args for f in inst)]
    best = None
    for perm in itertools.permutations(range(len(used))):
        ren = {used[i]: Null(perm[i] + 1, "e") for i in range(len(used))}
        key = tuple(sorted(atom_key(f.substitute(ren)) for f in inst))
        if best is None or key < best:
            best = key
    return best if best is not None else ()


def _query_images(q: CQ, consts: list, pool: list, max_domain: int) -> Iterator[Instance]:
    vs = q.variables()

    def rec(i, h, used):
        if i == len(vs):
            yield Instance(a.substitute(h) for a in q.atoms)
            return
        for d in consts + pool[:used]:
            h[vs[i]] = d
            yield from rec(i + 1, h, used)
        if used < len(pool) and len(consts) + used < max_domain:
            h[vs[i]] = pool[used]
            yield from rec(i + 1, h, used + 1)
        h.pop(vs[i], None)

    yield from rec(0, {}, 0)


def _access_outputs(sch: Schema, i1: Instance, iacc: Instance, consts) -> Optional[list]:
    """Chosen outputs showing iacc is access-valid in i1, or None."""
    vals = _adom(iacc, consts)
    outs = []
    for m in sch.methods:
        inputs = m.input_list
        for binding in itertools.product(vals, repeat=len(inputs)):
            matching = [f for f in i1.facts_of(m.relation) if all(f.args[i] == b for i, b in zip(inputs, binding))]
            need = len(matching) if m.bound is None else min(len(matching), m.bound.k)
            got = [f for f in matching if f in iacc]
            if len(got) < need:
                return None
            if need:
                outs.append((m.name, binding, sorted(got, key=atom_key)[:need]))
    return outs


def _generated_parts(sch: Schema, i1: Instance, consts, q: CQ) -> Iterator[tuple[Instance, list]]:
    """Subinstances of i1 obtained by performing every access on known values
    until nothing changes, branching over the outputs of bounded methods.
    Every access-valid subinstance contains one of these, so they are the
    only candidates worth testing."""
    seen = set()

    def rec(facts: dict, done: frozenset, outs: list):
        inst = Instance(facts)
        if evaluate_boolean(q, inst):
            return
        vals = _adom(inst, consts)
        for m in sch.methods:
            inputs = m.input_list
            for binding in itertools.product(vals, repeat=len(inputs)):
                if (m.name, binding) in done:
                    continue
                matching = [f for f in i1.facts_of(m.relation) if all(f.args[i] == b for i, b in zip(inputs, binding))]
                matching.sort(key=atom_key)
                done2 = done | {(m.name, binding)}
                if m.bound is None or len(matching) <= m.bound.k:
                    choices = [matching]
                else:
                    choices = [list(c) for c in itertools.combinations(matching, m.bound.k)]
                for out in choices:
                    f2 = dict(facts)
                    f2.update(dict.fromkeys(out))
                    yield from rec(f2, done2, outs + ([(m.name, binding, out)] if out else []))
                return
        key = frozenset(facts)
        if key not in seen:
            seen.add(key)
            yield inst, outs

    yield from rec({}, frozenset(), [])


def search_counterexample(
    sch: Schema,
    q: CQ,
    max_domain: int = 3,
    accessible_constants: bool = False,
    max_extra: int = 1,
    fact_limit: int = 8,
) -> Optional[CounterexampleCertificate]:
    """Look for I1, I2 satisfying the constraints, q true in I1 and false in
    I2, and a common subinstance Iacc that is access-valid in I1. Domains
    count query constants and are capped at max_domain (at most 5)."""
    if max_domain > MAX_DOMAIN:
        raise ValueError(f"max_domain {max_domain} exceeds {MAX_DOMAIN}")
    q = q.booleanize()
    sigma = sch.constraints
    consts = q.constants()
    if len(consts) > max_domain:
        return None
    pool = [Null(i + 1, "e") for i in range(max_domain - len(consts))]
    acc_consts = consts if accessible_constants else []
    visited: set = set()
    i2_memo: dict = {}

    def i2_for(iacc: Instance) -> Optional[Instance]:
        key = frozenset(iacc)
        if key not in i2_memo:
            i2_memo[key] = next(_repairs(iacc, sigma, pool, max_domain, fact_limit, q, consts, set()), None)
        return i2_memo[key]

    for extra in range(max_extra + 1):
        for image in _query_images(q, consts, pool, max_domain):
            dom = _adom(image, consts)
            room = max_domain - len(dom)
            usable = dom + [e for e in pool if e not in dom][:room]
            cands = [
                Atom(rel, args)
                for rel, n in sch.signature
                for args in itertools.product(usable, repeat=n)
                if Atom(rel, args) not in image
            ]
            # facts that bounded methods may withhold are the useful extras
            bounded = {m.relation for m in sch.methods if m.bound is not None}
            cands.sort(key=lambda a: a.relation not in bounded)
            for more in itertools.combinations(cands, extra):
                seed = image.copy()
                seed.update(more)
                for i1 in _repairs(seed, sigma, pool, max_domain, fact_limit, None, consts, visited):
                    for iacc, outs in _generated_parts(sch, i1, acc_consts, q):
                        i2 = i2_for(iacc)
                        if i2 is not None:
                            return CounterexampleCertificate(i1, i2, iacc, outs)
    return None


# ------------------------------------------------------- entailment oracle


def entails_dependency(
    sigma,
    rule: Union[TGD, TruncAxiom],
    budget: int = 30,
    arity: Optional[int] = None,
) -> Optional[bool]:
    """Does sigma entail the rule? Freezes the body with fresh constants and
    chases. None when the chase budget runs out first."""
    if isinstance(rule, TruncAxiom):
        if arity is None:
            arity = _arity_in(sigma, rule.relation)
        rule = rule.as_tgd(arity)
    freeze = {v: Const(f"!{v.name}") for v in rule.body_vars()}
    i0 = Instance(a.substitute(freeze) for a in rule.body)
    out = restricted_chase(i0, sigma, budget)
    if out.failed:
        # FDs identify two body variables; the frozen body says nothing then
        return None
    ex = {v: freeze[v] for v in rule.exported}
    if find_homomorphism(rule.head, out.instance, ex) is not None:
        return True
    return False if out.saturated else None


def _arity_in(sigma, relation: str) -> int:
    tgds = sigma.tgds if isinstance(sigma, ConstraintSet) else [d for d in sigma if isinstance(d, TGD)]
    for t in tgds:
        for a in t.body + t.head:
            if a.relation == relation:
                return len(a.args)
    raise ValueError(f"cannot infer the arity of {relation}")
