"""Decide monotone answerability of conjunctive queries over service schemas
with access methods, result bounds and integrity constraints."""

from .constraints import FD, TGD, ConstraintSet, Kind, classify
from .decide import Answer, Verdict, decide
from .model import CQ, Atom, Const, Instance, Var
from .oracle import search_counterexample
from .schema import AccessMethod, ResultBound, ResultLowerBound, Schema, make_schema
from .syntax import ParseError, parse_problem

__all__ = [
    "FD",
    "TGD",
    "ConstraintSet",
    "Kind",
    "classify",
    "Answer",
    "Verdict",
    "decide",
    "CQ",
    "Atom",
    "Const",
    "Instance",
    "Var",
    "search_counterexample",
    "AccessMethod",
    "ResultBound",
    "ResultLowerBound",
    "Schema",
    "make_schema",
    "ParseError",
    "parse_problem",
]

__version__ = "0.1.0"
