import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from answerability.constraints import (
    FD,
    TGD,
    ConstraintError,
    ConstraintSet,
    DegenerateQuery,
    Kind,
    classify,
    detby,
    id_width,
    is_id,
    is_uid,
    minimize_under_fds,
)
from answerability.model import CQ, Atom, Const, Var

x, y, z, w = Var("x"), Var("y"), Var("z"), Var("w")


def test_id_recognition_and_width():
    t = TGD([Atom("R", (x, y, z))], [Atom("S", (x, y, w))])
    assert is_id(t) and id_width(t) == 2 and not is_uid(t)
    assert t.exported == [x, y] and t.existential == [w]
    rep = TGD([Atom("R", (x, x, z))], [Atom("S", (x, w, w))])
    assert not is_id(rep)


def test_guardedness():
    full = TGD([Atom("R", (x, y)), Atom("S", (y,))], [Atom("T", (x,))])
    assert full.is_full and full.is_guarded()
    fg = TGD([Atom("R", (x, y)), Atom("S", (z,))], [Atom("R", (y, w))])
    assert fg.is_frontier_guarded() and not fg.is_guarded()
    cross = TGD([Atom("S", (x,)), Atom("S", (y,))], [Atom("R", (x, y))])
    assert not cross.is_frontier_guarded()


def test_tgd_requires_nonempty_head():
    with pytest.raises(ConstraintError):
        TGD([Atom("R", (x,))], [])


@pytest.mark.parametrize(
    "tgds,fds,kind",
    [
        ([], [], Kind.PURE_FD),
        ([], [FD("R", {0}, 1)], Kind.PURE_FD),
        ([TGD([Atom("R", (x, y))], [Atom("S", (x, y))])], [], Kind.PURE_ID),
        ([TGD([Atom("R", (x, y))], [Atom("S", (x, z))])], [FD("R", {0}, 1)], Kind.UID_FD),
        ([TGD([Atom("R", (x, y))], [Atom("S", (x, y))])], [FD("R", {0}, 1)], Kind.UNSUPPORTED),
        ([TGD([Atom("R", (x, y)), Atom("S", (y, x))], [Atom("T", (x,))])], [], Kind.FULL_GTGD_ID),
        ([TGD([Atom("R", (x, y)), Atom("S", (z, z))], [Atom("R", (y, w))])], [], Kind.FG_TGD),
        ([TGD([Atom("S", (x, x)), Atom("S", (y, y))], [Atom("R", (x, y))])], [], Kind.UNSUPPORTED),
    ],
)
def test_classify(tgds, fds, kind):
    assert classify(ConstraintSet(tgds, fds)).kind is kind


def test_pure_id_class_reports_width():
    cs = ConstraintSet([TGD([Atom("R", (x, y))], [Atom("S", (x, y))])])
    assert str(cs.cls) == "PureID(width 2)"


def test_detby_closure():
    fds = [FD("R", {0}, 1), FD("R", {1}, 2), FD("S", {0}, 1)]
    assert detby("R", {0}, fds) == {0, 1, 2}
    assert detby("R", {2}, fds) == {2}


def test_minimize_under_fds_merges_atoms():
    q = CQ((Atom("R", (x, y)), Atom("R", (x, z)), Atom("S", (z,))))
    m = minimize_under_fds(q, [FD("R", {0}, 1)])
    assert set(m.atoms) == {Atom("R", (x, y)), Atom("S", (y,))}


def test_minimize_under_fds_constants_win_and_clash():
    c, d = Const("c"), Const("d")
    q = CQ((Atom("R", (x, y)), Atom("R", (x, c))))
    assert minimize_under_fds(q, [FD("R", {0}, 1)]).atoms == (Atom("R", (x, c)),)
    with pytest.raises(DegenerateQuery):
        minimize_under_fds(CQ((Atom("R", (x, c)), Atom("R", (x, d)))), [FD("R", {0}, 1)])


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.frozensets(st.integers(0, 3), min_size=1, max_size=2), st.integers(0, 3)), max_size=5),
       st.frozensets(st.integers(0, 3)))
def test_detby_is_a_closure_operator(raw, start):
    fds = [FD("R", det, j) for det, j in raw]
    once = detby("R", start, fds)
    assert start <= once
    assert detby("R", once, fds) == once
