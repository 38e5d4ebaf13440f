"""Line-oriented text format for schemas, constraints and queries.

    relation Prof(id, name, salary)
    method pr on Prof input(id)
    method ud on Udirectory input() limit 100
    id: Prof(i,n,s) -> Udirectory(i,a,p)
    tgd: R(x,y) & S(y) -> T(x)
    fd Udirectory: id -> address
    query Q2 :- Udirectory(i,a,p)
    option accessible-constants

'#' starts a comment. Constants are double-quoted and only allowed in
queries. Head variables that do not occur in the body are existential."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .constraints import FD, TGD, ConstraintError, ConstraintSet, is_id
from .model import CQ, Atom, Const, ModelError, Signature, Var
from .schema import ACCESSIBLE, AccessMethod, ResultBound, ResultLowerBound, Schema, SchemaError, validate

IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_IDENT_RE = re.compile(IDENT + r"$")
_ATOM_RE = re.compile(r"\s*(" + IDENT + r")\s*\(([^()]*)\)\s*")
_RELATION_RE = re.compile(r"relation\s+(" + IDENT + r")\s*\(([^()]*)\)$")
_METHOD_RE = re.compile(
    r"method\s+(" + IDENT + r")\s+on\s+(" + IDENT + r")\s+input\s*\(([^()]*)\)\s*(?:(limit|lowerlimit)\s+(\S+))?$"
)
_FD_RE = re.compile(r"fd\s+(" + IDENT + r")\s*:\s*(.*?)\s*->\s*(.*)$")
_QUERY_RE = re.compile(r"query\s+(" + IDENT + r")\s*(?:\(([^()]*)\))?\s*:-\s*(.*)$")
_OPTION_RE = re.compile(r"option\s+([A-Za-z][A-Za-z0-9-]*)(?:\s+(\S+))?$")

OPTIONS = {"accessible-constants": bool, "width": int, "budget-rounds": int, "oracle": int, "class": str}


class ParseError(ModelError):
    def __init__(self, msg: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {msg}" if line is not None else msg)
        self.line = line
        self.msg = msg


@dataclass
class ProblemFile:
    schema: Schema
    queries: list = field(default_factory=list)
    options: dict = field(default_factory=dict)
    attributes: dict = field(default_factory=dict)  # relation -> attribute names


def _strip(line: str) -> str:
    out, quoted = [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def _split_top(s: str, seps: str) -> list[str]:
    """Split on separator characters outside parentheses and quotes."""
    parts, depth, quoted, cur = [], 0, False, []
    for ch in s:
        if ch == '"':
            quoted = not quoted
        elif not quoted:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch in seps and depth == 0:
                parts.append("".join(cur))
                cur = []
                continue
        cur.append(ch)
    parts.append("".join(cur))
    return parts


def _names(s: str, lineno: int) -> list[str]:
    s = s.strip()
    if not s:
        return []
    out = [p.strip() for p in s.split(",")]
    for p in out:
        if not _IDENT_RE.match(p) and not p.isdigit():
            raise ParseError(f"bad name {p!r}", lineno)
    return out


def _term(tok: str, lineno: int, allow_const: bool):
    tok = tok.strip()
    if len(tok) >= 2 and tok[0] == '"' and tok[-1] == '"':
        if not allow_const:
            raise ParseError(f"constant {tok} in a dependency (constants are not allowed in constraints)", lineno)
        return Const(tok[1:-1])
    if _IDENT_RE.match(tok):
        return Var(tok)
    raise ParseError(f"bad term {tok!r} (constants must be double-quoted)", lineno)


def _atoms(s: str, lineno: int, allow_const: bool) -> list[Atom]:
    out = []
    for part in _split_top(s, ",&"):
        if not part.strip():
            raise ParseError("empty atom", lineno)
        m = _ATOM_RE.fullmatch(part)
        if not m:
            raise ParseError(f"bad atom {part.strip()!r}", lineno)
        rel, args = m.group(1), m.group(2)
        terms = [] if not args.strip() else [_term(t, lineno, allow_const) for t in _split_top(args, ",")]
        out.append(Atom(rel, tuple(terms)))
    return out


def _position(rel: str, name: str, attrs: dict, lineno: int) -> int:
    names = attrs[rel]
    if name in names:
        return names.index(name)
    if name.isdigit() and int(name) < len(names):
        return int(name)
    raise ParseError(f"relation {rel} has no attribute {name}", lineno)


def parse_problem(text: str) -> ProblemFile:
    lines = [(i + 1, _strip(raw)) for i, raw in enumerate(text.splitlines())]
    lines = [(n, s) for n, s in lines if s]
    sig = Signature()
    attrs: dict[str, list[str]] = {}
    where: dict[str, int] = {}
    rest = []
    for n, s in lines:
        if s.split()[0] == "relation":
            m = _RELATION_RE.match(s)
            if not m:
                raise ParseError(f"bad relation declaration {s!r}", n)
            name = m.group(1)
            if name in attrs:
                raise ParseError(f"duplicate relation {name} (first declared on line {where[name]})", n)
            if name == ACCESSIBLE:
                raise ParseError(f"relation name '{ACCESSIBLE}' is reserved", n)
            names = _names(m.group(2), n)
            if len(set(names)) != len(names):
                raise ParseError(f"repeated attribute in relation {name}", n)
            attrs[name] = names
            where[name] = n
            sig.add(name, len(names))
        else:
            rest.append((n, s))

    def check(atoms: Iterable[Atom], n: int):
        for a in atoms:
            if a.relation not in sig:
                raise ParseError(f"unknown relation {a.relation}", n)
            if len(a.args) != sig.arity(a.relation):
                raise ParseError(f"{a.relation} has arity {sig.arity(a.relation)}, got {len(a.args)}", n)

    methods, tgds, fds, queries, options = [], [], [], [], {}
    method_names: dict[str, int] = {}
    query_names: dict[str, int] = {}
    for n, s in rest:
        kw = s.split()[0]
        if kw == "method":
            m = _METHOD_RE.match(s)
            if not m:
                raise ParseError(f"bad method declaration {s!r}", n)
            name, rel, inp, kind, k = m.groups()
            if rel not in sig:
                raise ParseError(f"method {name} on unknown relation {rel}", n)
            if name in method_names:
                raise ParseError(f"duplicate method {name} (first declared on line {method_names[name]})", n)
            method_names[name] = n
            inputs = frozenset(_position(rel, p, attrs, n) for p in _names(inp, n))
            bound = None
            if kind:
                if not k.isdigit():
                    raise ParseError(f"bad result bound {k!r}", n)
                bound = (ResultBound if kind == "limit" else ResultLowerBound)(int(k))
            methods.append(AccessMethod(name, rel, inputs, bound))
        elif s.startswith("id:") or s.startswith("tgd:"):
            label, body = s.split(":", 1)
            sides = body.split("->")
            if len(sides) != 2:
                raise ParseError("dependency needs exactly one '->'", n)
            b = _atoms(sides[0], n, False) if sides[0].strip() else []
            h = _atoms(sides[1], n, False)
            if any(a.relation == ACCESSIBLE for a in b + h):
                raise ParseError(f"'{ACCESSIBLE}' may not appear in constraints", n)
            check(b + h, n)
            try:
                t = TGD(b, h, f"c{len(tgds) + 1}")
            except ConstraintError as e:
                raise ParseError(str(e), n) from None
            if label == "id" and not is_id(t):
                raise ParseError("not an inclusion dependency (one atom each side, no repeated variables)", n)
            tgds.append(t)
        elif kw == "fd":
            m = _FD_RE.match(s)
            if not m:
                raise ParseError(f"bad fd {s!r}", n)
            rel = m.group(1)
            if rel not in sig:
                raise ParseError(f"fd on unknown relation {rel}", n)
            det = frozenset(_position(rel, p, attrs, n) for p in _names(m.group(2), n))
            targets = _names(m.group(3), n)
            if not targets:
                raise ParseError("fd without determined attribute", n)
            for tname in targets:
                fds.append(FD(rel, det, _position(rel, tname, attrs, n), f"fd{len(fds) + 1}"))
        elif kw == "query":
            m = _QUERY_RE.match(s)
            if not m:
                raise ParseError(f"bad query {s!r}", n)
            name, free, body = m.groups()
            if name in query_names:
                raise ParseError(f"duplicate query {name} (first declared on line {query_names[name]})", n)
            query_names[name] = n
            atoms = _atoms(body, n, True)
            check(atoms, n)
            fv = [Var(v) for v in _names(free or "", n)]
            try:
                queries.append(CQ(tuple(atoms), tuple(fv), name))
            except ModelError as e:
                raise ParseError(str(e), n) from None
        elif kw == "option":
            m = _OPTION_RE.match(s)
            if not m or m.group(1) not in OPTIONS:
                raise ParseError(f"unknown option {s!r}", n)
            key, val = m.groups()
            typ = OPTIONS[key]
            if typ is bool:
                options[key] = True if val is None else val.lower() in ("1", "true", "yes", "on")
            elif typ is int:
                if val is None or not val.isdigit():
                    raise ParseError(f"option {key} needs a number", n)
                options[key] = int(val)
            else:
                if val is None:
                    raise ParseError(f"option {key} needs a value", n)
                options[key] = val
        else:
            raise ParseError(f"unrecognized line {s!r}", n)

    sch = Schema(sig, ConstraintSet(tgds, fds), tuple(methods))
    try:
        validate(sch)
    except (SchemaError, ModelError) as e:
        raise ParseError(str(e)) from None
    return ProblemFile(sch, queries, options, attrs)


# ------------------------------------------------------------------ printer


def format_term(t) -> str:
    if isinstance(t, Const):
        return f'"{t.name}"'
    return str(t)


def format_atom(a: Atom) -> str:
    return f"{a.relation}({','.join(format_term(t) for t in a.args)})"


def format_tgd(t: TGD) -> str:
    label = "id" if is_id(t) else "tgd"
    body = " & ".join(format_atom(a) for a in t.body)
    return f"{label}: {body} -> {' & '.join(format_atom(a) for a in t.head)}"


def format_problem(pf: ProblemFile) -> str:
    sch = pf.schema
    out = []
    attrs = dict(pf.attributes)
    for name, arity in sch.signature:
        names = attrs.get(name) or [f"a{i}" for i in range(arity)]
        attrs[name] = names
        out.append(f"relation {name}({', '.join(names)})")
    for m in sch.methods:
        inp = ", ".join(attrs[m.relation][i] for i in m.input_list)
        line = f"method {m.name} on {m.relation} input({inp})"
        if m.bound is not None:
            line += f" {m.bound}"
        out.append(line)
    for t in sch.constraints.tgds:
        out.append(format_tgd(t))
    for f in sch.constraints.fds:
        det = ", ".join(attrs[f.relation][i] for i in sorted(f.determiner))
        out.append(f"fd {f.relation}: {det} -> {attrs[f.relation][f.determined]}")
    for q in pf.queries:
        head = q.name + (f"({', '.join(v.name for v in q.free)})" if q.free else "")
        out.append(f"query {head} :- {', '.join(format_atom(a) for a in q.atoms)}")
    for k, v in sorted(pf.options.items()):
        out.append(f"option {k}" if v is True else f"option {k} {v}")
    return "\n".join(out) + "\n"
