from answerability.constraints import FD
from answerability.schema import AccessMethod, ResultBound, ResultLowerBound, make_schema
from answerability.simplify import (
    SimplificationKind,
    choice_simplification,
    existence_check_simplification,
    fd_simplification,
    fresh_relation_name,
    select_simplification,
)


def _schema(fds=()):
    return make_schema(
        [("R", 3), ("R__m", 1)],
        [AccessMethod("m", "R", {0}, ResultBound(5)), AccessMethod("u", "R", {1})],
        fds=fds,
    )


def test_fresh_relation_name_avoids_clash():
    assert fresh_relation_name("A", {"B"}) == "A"
    assert fresh_relation_name("A", {"A", "A_2"}) == "A_3"


def test_existence_check_projects_to_inputs():
    ec = existence_check_simplification(_schema())
    (v,) = ec.views
    assert v.relation == "R__m_2" and v.positions == (0,) and v.kind == "exists"
    m = ec.method("m")
    assert m.relation == "R__m_2" and m.bound is None and m.is_boolean(1)
    assert ec.method("u").relation == "R"
    assert {t.name for t in ec.constraints.tgds} == {"R__m_2:r2v", "R__m_2:v2r"}


def test_fd_simplification_keeps_determined_positions():
    s = fd_simplification(_schema([FD("R", {0}, 2)]))
    (v,) = s.views
    assert v.positions == (0, 2)
    assert s.arity(v.relation) == 2
    m = s.method("m")
    assert m.inputs == {0} and m.bound is None


def test_choice_sets_bounds_to_one():
    sch = make_schema([("R", 2)], [AccessMethod("m", "R", {0}, ResultBound(5)),
                                   AccessMethod("n", "R", set(), ResultLowerBound(3))])
    out = choice_simplification(sch)
    assert out.method("m").bound == ResultBound(1)
    assert out.method("n").bound.k == 1


def test_select_simplification():
    assert select_simplification(_schema()) is SimplificationKind.FD
