"""Chase engines: a restricted chase in rounds for TGDs and FDs, a tree chase
for linear TGDs, and a memoized query matcher over the tree chase."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import networkx as nx

from .constraints import FD, TGD, ConstraintSet
from .model import CQ, Atom, Const, Instance, Null, canonical_database, find_homomorphism, fresh_null, homomorphisms


class ChaseError(ValueError):
    pass


SATURATED = "Saturated"
FAILED = "Failed"
BUDGET = "BudgetExhausted"


@dataclass
class ChaseOutcome:
    status: str
    instance: Instance
    rounds: int = 0
    trace: list = field(default_factory=list)
    fd_merges: int = 0
    tgd_firings: int = 0
    # value -> surviving representative, for every merged value
    merged: dict = field(default_factory=dict)
    fd_merges_initial: int = 0
    evidence: Optional[tuple] = None

    @property
    def saturated(self) -> bool:
        return self.status == SATURATED

    @property
    def failed(self) -> bool:
        return self.status == FAILED


def _split_sigma(sigma) -> tuple[list[TGD], list[FD]]:
    if isinstance(sigma, ConstraintSet):
        return list(sigma.tgds), list(sigma.fds)
    tgds = [d for d in sigma if isinstance(d, TGD)]
    fds = [d for d in sigma if isinstance(d, FD)]
    return tgds, fds


def _survivor(a, b):
    """Which of two values survives a merge: constants, then older nulls."""
    if isinstance(a, Const):
        return a, b
    if isinstance(b, Const):
        return b, a
    if isinstance(a, Null) and isinstance(b, Null):
        return (a, b) if a.id < b.id else (b, a)
    return a, b


class _Merge(Exception):
    pass


def _apply_fds(inst: Instance, fds: list[FD], out: ChaseOutcome, trace: bool) -> Instance:
    """Merge values until every FD holds. Raises _Merge on a constant clash."""
    while True:
        clash = None
        for f in fds:
            seen = {}
            det = sorted(f.determiner)
            for fact in inst.facts_of(f.relation):
                key = tuple(fact.args[i] for i in det)
                val = fact.args[f.determined]
                if key in seen and seen[key] != val:
                    clash = (f, seen[key], val)
                    break
                seen.setdefault(key, val)
            if clash:
                break
        if clash is None:
            return inst
        f, a, b = clash
        if isinstance(a, Const) and isinstance(b, Const):
            out.evidence = (str(f), a, b)
            raise _Merge()
        keep, lose = _survivor(a, b)
        out.fd_merges += 1
        for k, v in list(out.merged.items()):
            if v == lose:
                out.merged[k] = keep
        out.merged[lose] = keep
        if trace:
            out.trace.append(f"MERGE {f.name or f} {lose} -> {keep}")
        sub = {lose: keep}
        inst = Instance(a2.substitute(sub) for a2 in inst)


def _active(t: TGD, h: dict, inst: Instance) -> bool:
    ex = {v: h[v] for v in t.exported}
    return find_homomorphism(t.head, inst, ex) is None


def _fire(t: TGD, h: dict) -> list[Atom]:
    ext = dict(h)
    for v in t.existential:
        ext[v] = fresh_null(v.name)
    return [a.substitute(ext) for a in t.head]


def restricted_chase(
    i0: Instance,
    sigma,
    round_budget: int,
    fact_budget: Optional[int] = None,
    trace: bool = False,
) -> ChaseOutcome:
    """Restricted chase in rounds. Each round collects the triggers of the
    start-of-round instance and fires those still active when their turn
    comes, then applies the FDs to a fixpoint."""
    tgds, fds = _split_sigma(sigma)
    out = ChaseOutcome(SATURATED, i0.copy())
    inst = out.instance
    try:
        inst = _apply_fds(inst, fds, out, trace)
    except _Merge:
        out.status = FAILED
        out.instance = inst
        return out
    out.fd_merges_initial = out.fd_merges
    for rnd in range(1, round_budget + 1):
        triggers = []
        for t in tgds:
            for h in homomorphisms(t.body, inst):
                triggers.append((t, h))
        fired = 0
        for t, h in triggers:
            if not _active(t, h, inst):
                continue
            new = _fire(t, h)
            inst.update(new)
            fired += 1
            if trace:
                on = ", ".join(str(a.substitute(h)) for a in t.body)
                out.trace.append(f"FIRE {t.name or t} ON {on} -> {', '.join(map(str, new))}")
        out.tgd_firings += fired
        before = out.fd_merges
        try:
            inst = _apply_fds(inst, fds, out, trace)
        except _Merge:
            out.status = FAILED
            out.instance = inst
            out.rounds = rnd
            return out
        if fired == 0 and out.fd_merges == before:
            out.instance = inst
            out.rounds = rnd - 1
            return out
        out.rounds = rnd
        if fact_budget is not None and len(inst) > fact_budget:
            break
    out.instance = inst
    out.status = BUDGET
    # one more look: maybe the last round left nothing to do
    if not any(_active(t, h, inst) for t in tgds for h in homomorphisms(t.body, inst)):
        out.status = SATURATED
    return out


def satisfies(inst: Instance, sigma) -> bool:
    tgds, fds = _split_sigma(sigma)
    for t in tgds:
        for h in homomorphisms(t.body, inst):
            if _active(t, h, inst):
                return False
    for f in fds:
        seen = {}
        det = sorted(f.determiner)
        for fact in inst.facts_of(f.relation):
            key = tuple(fact.args[i] for i in det)
            if seen.setdefault(key, fact.args[f.determined]) != fact.args[f.determined]:
                return False
    return True


# ---------------------------------------------------------------- tree chase


@dataclass
class ChaseTreeNode:
    fact: Atom
    depth: int
    parent: Optional["ChaseTreeNode"] = None
    rule: str = ""
    children: list = field(default_factory=list)


def _check_linear(rules: Sequence[TGD]) -> None:
    for r in rules:
        if len(r.body) != 1 or len(r.head) != 1:
            raise ChaseError(f"not a linear TGD: {r}")


def _match_linear(body: Atom, fact: Atom) -> Optional[dict]:
    if body.relation != fact.relation:
        return None
    h = {}
    for t, v in zip(body.args, fact.args):
        if h.setdefault(t, v) != v:
            return None
    return h


def tree_chase_nodes(i0: Instance, theta: Sequence[TGD], depth: int, node_budget: Optional[int] = None) -> list[ChaseTreeNode]:
    """Breadth-first tree chase. Each (rule, fact) pair fires at most once."""
    _check_linear(theta)
    by_rel: dict[str, list[tuple[int, TGD]]] = {}
    for i, r in enumerate(theta):
        by_rel.setdefault(r.body[0].relation, []).append((i, r))
    roots = [ChaseTreeNode(f, 0) for f in i0]
    nodes = list(roots)
    fired = set()
    frontier = roots
    for d in range(depth):
        nxt = []
        for node in frontier:
            for i, r in by_rel.get(node.fact.relation, ()):
                if (i, node.fact) in fired:
                    continue
                h = _match_linear(r.body[0], node.fact)
                if h is None:
                    continue
                fired.add((i, node.fact))
                child = ChaseTreeNode(_fire(r, h)[0], d + 1, node, r.name)
                node.children.append(child)
                nxt.append(child)
                nodes.append(child)
                if node_budget is not None and len(nodes) > node_budget:
                    raise ChaseError(f"tree chase exceeded {node_budget} nodes")
        frontier = nxt
        if not frontier:
            break
    return nodes


def tree_chase_linear(i0: Instance, theta: Sequence[TGD], depth: int, node_budget: Optional[int] = None) -> Instance:
    out = i0.copy()
    out.update(n.fact for n in tree_chase_nodes(i0, theta, depth, node_budget))
    return out


def depth_bound(k: int, sigma1_count: int, sigma2_count: int, m: int, w: int) -> int:
    """2k(|Sigma1| m^(w+1) + |Sigma2|): a tight match of a k-atom query in the
    tree chase lies within this depth."""
    for x in (k, sigma1_count, sigma2_count, m, w):
        if x < 0:
            raise ChaseError("depth_bound arguments must be non-negative")
    d = 2 * k * (sigma1_count * m ** (w + 1) + sigma2_count)
    if d >= 2**63:
        raise OverflowError("depth bound overflows 64 bits")
    return d


def semi_width_split(rules: Sequence[TGD]) -> tuple[list[TGD], list[TGD]]:
    """Rules inside a strongly connected component of the relation graph go to
    the bounded-width part; the others form an acyclic part."""
    g = nx.DiGraph()
    for r in rules:
        g.add_edge(r.body[0].relation, r.head[0].relation)
    comp = {}
    for i, scc in enumerate(nx.strongly_connected_components(g)):
        for rel in scc:
            comp[rel] = i
    s1, s2 = [], []
    for r in rules:
        b, h = r.body[0].relation, r.head[0].relation
        (s1 if comp[b] == comp[h] else s2).append(r)
    return s1, s2


def is_acyclic(rules: Sequence[TGD]) -> bool:
    g = nx.DiGraph()
    for r in rules:
        for b in r.body:
            for h in r.head:
                for i, t in enumerate(b.args):
                    for j, u in enumerate(h.args):
                        if t == u:
                            g.add_edge((b.relation, i), (h.relation, j))
                    for j, u in enumerate(h.args):
                        if u in r.existential:
                            g.add_edge((b.relation, i), (h.relation, j))
    return nx.is_directed_acyclic_graph(g)


def linear_width(rules: Iterable[TGD]) -> int:
    return max((len(r.exported) for r in rules), default=0)


# ------------------------------------------------------ memoized tree matcher


@dataclass
class LinearMatch:
    holds: bool
    depth: int  # depth of the match, or the depth explored
    stable: bool  # no new partial matches appear below this depth
    types: int
    bound: Optional[int] = None


class _Query:
    def __init__(self, q: CQ):
        self.atoms = list(q.atoms)
        vars_ = q.variables()
        self.vidx = {v: i for i, v in enumerate(vars_)}
        self.full = (1 << len(self.atoms)) - 1
        self.atom_vars = []
        self.var_atoms = [0] * len(vars_)
        self.terms = []
        for i, a in enumerate(self.atoms):
            vm = 0
            ts = []
            for t in a.args:
                if isinstance(t, Const):
                    ts.append((False, t))
                else:
                    j = self.vidx[t]
                    ts.append((True, j))
                    vm |= 1 << j
                    self.var_atoms[j] |= 1 << i
            self.atom_vars.append(vm)
            self.terms.append(ts)
        self.by_rel: dict[str, list[int]] = {}
        for i, a in enumerate(self.atoms):
            self.by_rel.setdefault(a.relation, []).append(i)
        self.consts = set(q.constants())

    def vars_of(self, mask: int) -> int:
        vm = 0
        i = 0
        while mask:
            if mask & 1:
                vm |= self.atom_vars[i]
            mask >>= 1
            i += 1
        return vm

    def base(self, rel: str, args: tuple) -> list:
        out = []
        for i in self.by_rel.get(rel, ()):
            beta = {}
            ok = True
            for (is_var, x), s in zip(self.terms[i], args):
                if is_var:
                    if beta.setdefault(x, s) != s:
                        ok = False
                        break
                elif x != s:
                    ok = False
                    break
            if ok:
                out.append((1 << i, tuple(sorted(beta.items(), key=lambda p: p[0]))))
        return out

    def join(self, e1, e2):
        m1, b1 = e1
        m2, b2 = e2
        if m1 & m2:
            return None
        d = dict(b1)
        for v, s in b2:
            if d.setdefault(v, s) != s:
                return None
        dom1 = 0
        for v, _ in b1:
            dom1 |= 1 << v
        dom2 = 0
        for v, _ in b2:
            dom2 |= 1 << v
        born1 = self.vars_of(m1) & ~dom1
        born2 = self.vars_of(m2) & ~dom2
        if born1 & self.vars_of(m2) or born2 & self.vars_of(m1):
            return None
        return (m1 | m2, tuple(sorted(d.items(), key=lambda p: p[0])))

    def closed(self, v: int, mask: int) -> bool:
        return self.var_atoms[v] & ~mask == 0

    def closure(self, entries: set, new: Iterable) -> list:
        """Add new entries and all joins; return what was added."""
        added = []
        work = []
        for e in new:
            if e not in entries:
                entries.add(e)
                added.append(e)
                work.append(e)
        while work:
            e = work.pop()
            for f in list(entries):
                j = self.join(e, f)
                if j is not None and j not in entries:
                    entries.add(j)
                    added.append(j)
                    work.append(j)
        return added


def _normalize(raw: Sequence, consts: set) -> tuple[tuple, list]:
    """Type arguments: query constants stay, other values become slot numbers
    by first occurrence. Returns the args and the value of each slot."""
    slots = {}
    values = []
    args = []
    for v in raw:
        if isinstance(v, Const) and v in consts:
            args.append(v)
            continue
        if v not in slots:
            slots[v] = len(values)
            values.append(v)
        args.append(slots[v])
    return tuple(args), values


class _CompiledRule:
    __slots__ = ("name", "eqs", "head_rel", "head")

    def __init__(self, r: TGD):
        b = r.body[0]
        first = {}
        self.eqs = []
        for p, t in enumerate(b.args):
            if t in first:
                self.eqs.append((p, first[t]))
            else:
                first[t] = p
        ex = {v: i for i, v in enumerate(r.existential)}
        self.head_rel = r.head[0].relation
        self.head = tuple((True, first[t]) if t in first else (False, ex[t]) for t in r.head[0].args)
        self.name = r.name


def linear_entails(
    roots: Instance,
    rules: Sequence[TGD],
    q: CQ,
    depth: Optional[int] = None,
    type_budget: int = 200_000,
) -> LinearMatch:
    """Does q match the tree chase of roots under the linear rules, truncated
    at the given depth (None: unbounded)?

    Facts whose argument pattern (equalities and query constants) coincide
    have isomorphic subtrees, so partial matches are computed once per
    pattern, level by level, until the requested depth or a fixpoint."""
    _check_linear(rules)
    qq = _Query(q)
    compiled: dict[str, list[_CompiledRule]] = {}
    for r in rules:
        compiled.setdefault(r.body[0].relation, []).append(_CompiledRule(r))

    type_ids: dict[tuple, int] = {}
    type_list: list[tuple] = []
    children: list[list] = []

    def intern(t) -> int:
        i = type_ids.get(t)
        if i is None:
            i = len(type_list)
            type_ids[t] = i
            type_list.append(t)
            children.append(None)
            if len(type_list) > type_budget:
                raise ChaseError(f"more than {type_budget} fact types")
        return i

    root_items = []
    for f in roots:
        args, values = _normalize(f.args, qq.consts)
        root_items.append((intern((f.relation, args)), values))

    i = 0
    while i < len(type_list):
        rel, args = type_list[i]
        kids = []
        for cr in compiled.get(rel, ()):
            if any(args[p] != args[q0] for p, q0 in cr.eqs):
                continue
            raw = [args[p] if is_exp else ("fresh", p) for is_exp, p in cr.head]
            cargs, values = _normalize(raw, qq.consts)
            origin = tuple(None if isinstance(v, tuple) else v for v in values)
            kids.append((intern((cr.head_rel, cargs)), origin))
        children[i] = kids
        i += 1

    n = len(type_list)
    entries = [set() for _ in range(n)]
    delta = []
    for t in range(n):
        rel, args = type_list[t]
        delta.append(qq.closure(entries[t], qq.base(rel, args)))

    root_entries: set = set()

    def instantiate(e, values):
        mask, beta = e
        return (mask, tuple((v, s if isinstance(s, Const) else values[s]) for v, s in beta))

    def root_check(deltas) -> bool:
        new = []
        for t, values in root_items:
            for e in deltas[t]:
                new.append(instantiate(e, values))
        qq.closure(root_entries, new)
        return any(m == qq.full for m, _ in root_entries)

    if not qq.atoms:
        return LinearMatch(True, 0, True, n, depth)
    if root_check(delta):
        return LinearMatch(True, 0, False, n, depth)

    d = 0
    while depth is None or d < depth:
        d += 1
        cand = [[] for _ in range(n)]
        for t in range(n):
            for c, origin in children[t]:
                for e in delta[c]:
                    le = _lift(qq, e, origin)
                    if le is not None and le not in entries[t]:
                        cand[t].append(le)
        new_delta = [qq.closure(entries[t], cand[t]) if cand[t] else [] for t in range(n)]
        delta = new_delta
        if root_check(delta):
            return LinearMatch(True, d, False, n, depth)
        if not any(delta):
            return LinearMatch(False, d, True, n, depth)
    return LinearMatch(False, d, False, n, depth)


def _lift(qq: _Query, e, origin):
    mask, beta = e
    out = []
    for v, s in beta:
        if isinstance(s, Const):
            out.append((v, s))
            continue
        o = origin[s]
        if o is None:
            if not qq.closed(v, mask):
                return None
        else:
            out.append((v, o))
    return (mask, tuple(out))


# ------------------------------------------------------------ containment


@dataclass(frozen=True)
class TerminatingChase:
    budget: int = 100


@dataclass(frozen=True)
class LinearDepthBounded:
    width: Optional[int] = None
    split: Optional[tuple] = None


@dataclass(frozen=True)
class SemiDecide:
    budget: int = 20
    fact_budget: Optional[int] = 20000


Strategy = Union[TerminatingChase, LinearDepthBounded, SemiDecide]


@dataclass
class ContainmentVerdict:
    holds: Optional[bool]
    reason: str = ""
    stats: dict = field(default_factory=dict)
    witness: list = field(default_factory=list)


def linear_depth_for(q2: CQ, sigma1: Sequence[TGD], sigma2: Sequence[TGD], roots: Optional[Instance] = None, width: Optional[int] = None) -> int:
    arities = [len(a.args) for r in list(sigma1) + list(sigma2) for a in r.body + r.head]
    arities += [len(a.args) for a in q2.atoms]
    if roots is not None:
        arities += [len(f.args) for f in roots]
    m = max(arities, default=1)
    w = linear_width(sigma1) if width is None else width
    return depth_bound(len(q2.atoms), len(sigma1), len(sigma2), m, w)


def contains_under(q: CQ, sigma, q2: CQ, strategy: Strategy) -> ContainmentVerdict:
    """Is q contained in q2 under sigma?"""
    tgds, fds = _split_sigma(sigma)
    i0, _ = canonical_database(q.booleanize())
    if isinstance(strategy, LinearDepthBounded):
        if fds or any(len(t.body) != 1 or len(t.head) != 1 for t in tgds):
            raise ChaseError("LinearDepthBounded needs linear TGDs without FDs")
        s1, s2 = strategy.split if strategy.split is not None else semi_width_split(tgds)
        bound = linear_depth_for(q2, s1, s2, i0, strategy.width)
        res = linear_entails(i0, tgds, q2.booleanize(), bound)
        reason = f"match at depth {res.depth}" if res.holds else f"no match within complete depth bound {bound}"
        return ContainmentVerdict(res.holds, reason, {"depth": res.depth, "bound": bound, "types": res.types})
    budget = strategy.budget
    fact_budget = getattr(strategy, "fact_budget", None)
    out = restricted_chase(i0, ConstraintSet(tgds, fds), budget, fact_budget, trace=True)
    stats = {"rounds": out.rounds, "facts": len(out.instance)}
    if out.failed:
        return ContainmentVerdict(True, "left side unsatisfiable (constant clash)", stats, out.trace)
    match = find_homomorphism(q2.booleanize(), out.instance)
    if match is not None:
        return ContainmentVerdict(True, "chase proof", stats, out.trace)
    if out.saturated:
        return ContainmentVerdict(False, "chase terminated without a match", stats)
    return ContainmentVerdict(None, f"round budget {budget} exhausted", stats)
