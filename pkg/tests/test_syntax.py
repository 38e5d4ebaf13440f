import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from answerability.model import Const
from answerability.schema import ResultBound, ResultLowerBound
from answerability.syntax import ParseError, ProblemFile, format_problem, parse_problem
from gen import random_fd_schema, random_id_schema, random_query, random_uidfd_schema
from support import CORPUS

EXAMPLE = """
# directory
relation Prof(id, name, salary)
relation Udirectory(id, address, phone)
method pr on Prof input(id)
method ud on Udirectory input() limit 100   # listing
method ud2 on Udirectory input(id) lowerlimit 1
id: Prof(i,n,s) -> Udirectory(i,a,p)
tgd: Prof(i,n,s) & Udirectory(i,a,p) -> Prof(i,n,s)
fd Udirectory: id -> address, phone
query Q1(n) :- Prof(i,n,"10000")
query Q2 :- Udirectory(i,a,p)
option accessible-constants
option width 2
"""


def test_parse_example():
    pf = parse_problem(EXAMPLE)
    sch = pf.schema
    assert sch.signature.names == ["Prof", "Udirectory"]
    assert sch.method("pr").inputs == {0}
    assert sch.method("ud").bound == ResultBound(100)
    assert sch.method("ud2").bound == ResultLowerBound(1)
    assert [t.name for t in sch.constraints.tgds] == ["c1", "c2"]
    assert [(f.determiner, f.determined) for f in sch.constraints.fds] == [({0}, 1), ({0}, 2)]
    assert pf.queries[0].free and pf.queries[0].constants() == [Const("10000")]
    assert pf.options == {"accessible-constants": True, "width": 2}
    assert pf.attributes["Prof"] == ["id", "name", "salary"]


def test_numeric_positions_are_accepted():
    pf = parse_problem("relation R(a, b)\nmethod m on R input(1)\nfd R: 0 -> 1\n")
    assert pf.schema.method("m").inputs == {1}


def test_round_trip_example():
    pf = parse_problem(EXAMPLE)
    text = format_problem(pf)
    again = parse_problem(text)
    assert format_problem(again) == text
    assert again.schema.constraints == pf.schema.constraints
    assert again.queries == pf.queries


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.amq")), ids=lambda p: p.name)
def test_corpus_round_trips(path):
    pf = parse_problem(path.read_text())
    assert format_problem(parse_problem(format_problem(pf))) == format_problem(pf)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([random_id_schema, random_fd_schema, random_uidfd_schema]))
def test_generated_round_trip(seed, make):
    rng = random.Random(seed)
    sch = make(rng)
    q = random_query(rng, sch, const_prob=0.2)
    pf = ProblemFile(sch, [q.__class__(q.atoms, (), "Q")])
    text = format_problem(pf)
    back = parse_problem(text)
    assert back.schema.signature == sch.signature
    assert back.schema.methods == sch.methods
    assert [str(t) for t in back.schema.constraints.tgds] == [str(t) for t in sch.constraints.tgds]
    assert [(f.relation, f.determiner, f.determined) for f in back.schema.constraints.fds] == \
        [(f.relation, f.determiner, f.determined) for f in sch.constraints.fds]
    assert back.queries[0].atoms == q.atoms
    assert format_problem(back) == text


@pytest.mark.parametrize(
    "text,line,msg",
    [
        ("relation R(a)\nrelation R(b)", 2, "duplicate relation"),
        ("relation accessible(a)", 1, "reserved"),
        ("relation R(a, a)", 1, "repeated attribute"),
        ("relation R(a)\nmethod m on S input()", 2, "unknown relation"),
        ("relation R(a)\nmethod m on R input()\nmethod m on R input(a)", 3, "duplicate method"),
        ("relation R(a)\nmethod m on R input(b)", 2, "no attribute"),
        ("relation R(a)\nmethod m on R input() limit x", 2, "bad result bound"),
        ("relation R(a)\nid: R(\"c\") -> R(x)", 2, "constant"),
        ("relation R(a, b)\nid: R(x,x) -> R(x,y)", 2, "not an inclusion dependency"),
        ("relation R(a)\ntgd: R(x) -> accessible(x)", 2, "may not appear"),
        ("relation R(a)\ntgd: R(x) -> S(x)", 2, "unknown relation"),
        ("relation R(a)\nquery Q :- R(x, y)", 2, "arity"),
        ("relation R(a)\nquery Q(y) :- R(x)", 2, "free variable"),
        ("relation R(a)\nquery Q :- R(x)\nquery Q :- R(y)", 3, "duplicate query"),
        ("relation R(a)\nquery Q :- R(x) R(y)", 2, "bad atom"),
        ("relation R(a)\noption colour blue", 2, "unknown option"),
        ("relation R(a)\noption width", 2, "needs a number"),
        ("relation R(a)\nfrobnicate", 2, "unrecognized line"),
        ("relation R(a)\ntgd: R(x) -> R(x) -> R(x)", 2, "exactly one"),
    ],
)
def test_parse_errors_carry_line_numbers(text, line, msg):
    with pytest.raises(ParseError, match=msg) as info:
        parse_problem(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}: ")


def test_comments_and_quoted_hash():
    pf = parse_problem('relation R(a)  # trailing\nquery Q :- R("#1")\n')
    assert pf.queries[0].constants() == [Const("#1")]
