"""Service schemas: signature, constraints and access methods with result
bounds."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional, Union

from .constraints import ConstraintSet
from .model import ModelError, Signature

MAX_BOUND = 2**31 - 1
ACCESSIBLE = "accessible"


class SchemaError(ModelError):
    pass


@dataclass(frozen=True)
class ResultBound:
    k: int

    def __str__(self) -> str:
        return f"limit {self.k}"


@dataclass(frozen=True)
class ResultLowerBound:
    k: int

    def __str__(self) -> str:
        return f"lowerlimit {self.k}"


Bound = Union[ResultBound, ResultLowerBound]


@dataclass(frozen=True)
class AccessMethod:
    name: str
    relation: str
    inputs: frozenset
    bound: Optional[Bound] = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", frozenset(self.inputs))

    @property
    def is_bounded(self) -> bool:
        return self.bound is not None

    @property
    def input_list(self) -> list[int]:
        return sorted(self.inputs)

    def is_boolean(self, arity: int) -> bool:
        return len(self.inputs) == arity

    @property
    def is_input_free(self) -> bool:
        return not self.inputs

    def __str__(self) -> str:
        s = f"method {self.name} on {self.relation} input({','.join(map(str, self.input_list))})"
        return s + (f" {self.bound}" if self.bound else "")


@dataclass(frozen=True)
class ViewDef:
    """A relation added by a simplification: view(x) <-> exists z base(..).
    positions lists the base positions kept by the view, in view order;
    inputs are the view positions that are inputs of the new method."""

    relation: str
    base: str
    positions: tuple
    method: str
    kind: str  # "exists" or "fd"
    inputs: tuple = ()


@dataclass(frozen=True)
class Schema:
    signature: Signature
    constraints: ConstraintSet
    methods: tuple = ()
    views: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "views", tuple(self.views))

    def arity(self, relation: str) -> int:
        return self.signature.arity(relation)

    def methods_on(self, relation: str) -> list[AccessMethod]:
        return [m for m in self.methods if m.relation == relation]

    def method(self, name: str) -> AccessMethod:
        for m in self.methods:
            if m.name == name:
                return m
        raise SchemaError(f"unknown method {name}")

    def bounded_methods(self) -> list[AccessMethod]:
        return [m for m in self.methods if m.bound is not None]

    def view_tgds(self) -> set:
        """Names of the TGDs that define views."""
        names = set()
        for v in self.views:
            names.add(f"{v.relation}:r2v")
            names.add(f"{v.relation}:v2r")
        return names

    def base_constraints(self) -> ConstraintSet:
        """The constraints without the view-defining IDs."""
        vt = self.view_tgds()
        return ConstraintSet([t for t in self.constraints.tgds if t.name not in vt], self.constraints.fds)


def validate(sch: Schema) -> None:
    sig = sch.signature
    for name, arity in sig:
        if name == ACCESSIBLE:
            raise SchemaError(f"relation name '{ACCESSIBLE}' is reserved")
        if arity < 0:
            raise SchemaError(f"relation {name} has negative arity")
    sch.constraints.check(sig)
    seen = set()
    for m in sch.methods:
        if m.name in seen:
            raise SchemaError(f"duplicate method name {m.name}")
        seen.add(m.name)
        if m.relation not in sig:
            raise SchemaError(f"method {m.name} on unknown relation {m.relation}")
        n = sig.arity(m.relation)
        for p in m.inputs:
            if not isinstance(p, int) or not 0 <= p < n:
                raise SchemaError(
                    f"method {m.name}: input position {p} out of range for {m.relation} (arity {n})"
                )
        if m.bound is not None:
            if not isinstance(m.bound, (ResultBound, ResultLowerBound)):
                raise SchemaError(f"method {m.name}: bad bound {m.bound!r}")
            if not isinstance(m.bound.k, int) or not 1 <= m.bound.k <= MAX_BOUND:
                raise SchemaError(f"method {m.name}: result bound {m.bound.k} out of range 1..{MAX_BOUND}")
    for v in sch.views:
        if v.relation not in sig or v.base not in sig:
            raise SchemaError(f"view {v.relation} refers to an unknown relation")


def elim_upper_bounds(sch: Schema) -> Schema:
    methods = tuple(
        replace(m, bound=ResultLowerBound(m.bound.k)) if isinstance(m.bound, ResultBound) else m
        for m in sch.methods
    )
    return replace(sch, methods=methods)


def make_schema(
    relations: Iterable[tuple[str, int]],
    methods: Iterable[AccessMethod] = (),
    tgds=(),
    fds=(),
) -> Schema:
    sch = Schema(Signature(relations), ConstraintSet(tgds, fds), tuple(methods))
    validate(sch)
    return sch
