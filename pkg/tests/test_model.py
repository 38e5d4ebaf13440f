import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from answerability.model import (
    CQ,
    Atom,
    Const,
    Instance,
    ModelError,
    Null,
    Signature,
    Var,
    canonical_database,
    evaluate_boolean,
    find_homomorphism,
    fresh_null,
    homomorphisms,
    instance_maps_into,
)

x, y, z = Var("x"), Var("y"), Var("z")
a, b, c = Const("a"), Const("b"), Const("c")


def test_signature_rejects_duplicates_and_bad_arity():
    sig = Signature([("R", 2)])
    with pytest.raises(ModelError):
        sig.add("R", 1)
    with pytest.raises(ModelError):
        sig.add("S", -1)
    with pytest.raises(ModelError):
        sig.arity("T")


def test_signature_checks_atoms():
    sig = Signature([("R", 2)])
    sig.check_atom(Atom("R", (x, y)))
    with pytest.raises(ModelError, match="arity mismatch"):
        sig.check_atom(Atom("R", (x,)))
    with pytest.raises(ModelError, match="unknown relation"):
        sig.check_atom(Atom("S", (x,)))


def test_cq_free_variables_must_occur():
    with pytest.raises(ModelError):
        CQ((Atom("R", (x, y)),), (z,))
    q = CQ((Atom("R", (x, a)),), (x,), "Q")
    assert not q.is_boolean
    assert q.booleanize().is_boolean
    assert q.constants() == [a]
    assert str(q) == 'Q(x) :- R(x,"a")'


def test_cq_rejects_nulls():
    with pytest.raises(ModelError):
        CQ((Atom("R", (fresh_null(),)),))


def test_null_equality_ignores_tag():
    assert Null(7, "x") == Null(7, "y")
    assert hash(Null(7, "x")) == hash(Null(7))
    assert fresh_null() != fresh_null()


def test_instance_indexes():
    inst = Instance([Atom("R", (a, b)), Atom("R", (a, c)), Atom("S", (b,))])
    assert len(inst) == 3
    assert not inst.add(Atom("S", (b,)))
    assert inst.count_of("R") == 2
    assert inst.lookup("R", 1, c) == [Atom("R", (a, c))]
    inst.discard(Atom("R", (a, c)))
    assert inst.lookup("R", 1, c) == []
    assert set(inst.adom()) == {a, b}


def test_canonical_database_freezes_variables():
    q = CQ((Atom("R", (x, y)), Atom("R", (y, a))))
    inst, h = canonical_database(q)
    assert len(inst) == 2
    assert all(isinstance(h[v], Null) for v in (x, y))
    assert evaluate_boolean(q, inst)


def test_homomorphisms_enumerates_all():
    inst = Instance([Atom("E", (a, b)), Atom("E", (b, c)), Atom("E", (c, a))])
    path = [Atom("E", (x, y)), Atom("E", (y, z))]
    assert len(list(homomorphisms(path, inst))) == 3
    assert find_homomorphism(path, inst, {x: b})[z] == a
    assert find_homomorphism([Atom("E", (x, x))], inst) is None


def test_dynamic_order_agrees_with_static():
    inst = Instance([Atom("E", (a, b)), Atom("E", (b, c)), Atom("F", (c,))])
    atoms = [Atom("E", (x, y)), Atom("E", (y, z)), Atom("F", (z,))]
    s = list(homomorphisms(atoms, inst))
    d = list(homomorphisms(atoms, inst, dynamic_order=True))
    assert s == d == [{x: a, y: b, z: c}]


def test_instance_maps_into_respects_fixed_nulls():
    n1, n2 = fresh_null(), fresh_null()
    src = Instance([Atom("R", (n1, a))])
    dst = Instance([Atom("R", (n2, a))])
    assert instance_maps_into(src, dst)
    assert not instance_maps_into(src, dst, fixed=[n1])


terms = st.sampled_from([a, b, c])
facts = st.lists(st.tuples(terms, terms).map(lambda p: Atom("E", p)), max_size=8)


@settings(max_examples=60, deadline=None)
@given(facts, facts)
def test_query_holds_in_superset(small, extra):
    """CQs are monotone: a match in an instance survives adding facts."""
    inst = Instance(small)
    q = CQ((Atom("E", (x, y)), Atom("E", (y, z))))
    if evaluate_boolean(q, inst):
        bigger = inst.copy()
        bigger.update(extra)
        assert evaluate_boolean(q, bigger)


@settings(max_examples=60, deadline=None)
@given(facts)
def test_canonical_database_maps_into_any_match(fs):
    inst = Instance(fs)
    q = CQ((Atom("E", (x, y)), Atom("E", (y, x))))
    canon, _ = canonical_database(q)
    assert evaluate_boolean(q, inst) == instance_maps_into(canon, inst)
