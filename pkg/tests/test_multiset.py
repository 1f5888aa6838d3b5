from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvnets.errors import DomainError, ResourceError
from pvnets.multiset import (INF, CountingConstraint, Cube, MultiSet, bounded_multisets, constraint_complement,
                             constraint_equiv_bounded, constraint_intersect, constraint_norm, constraint_union,
                             cube_member)

Q = ("q",)
STATES = ("p", "q", "r")


def one(lo, hi):
    return Cube.build(Q, {"q": (lo, hi)})


# MultiSet

def test_add_and_subtract():
    assert MultiSet.of("a", "a", "b") + MultiSet.of("b") == MultiSet({"a": 2, "b": 2})
    assert MultiSet({"a": 2, "b": 1}) - MultiSet.of("a") == MultiSet.of("a", "b")
    with pytest.raises(DomainError):
        MultiSet.of("a") - MultiSet.of("b")


def test_size_support_and_absent_keys():
    m = MultiSet({"a": 2, "b": 0, "c": 1})
    assert m.size == 3
    assert m.support == {"a", "c"}
    assert m["zzz"] == 0
    assert m == MultiSet({"a": 2, "c": 1})


def test_negative_counts_rejected():
    with pytest.raises(DomainError):
        MultiSet({"a": -1})


def test_order_and_concat():
    assert MultiSet.of("a") <= MultiSet.of("a", "b")
    assert not MultiSet.of("a", "a") <= MultiSet.of("a", "b")
    joined = MultiSet.of("a").concat(MultiSet.of("x"), own_states=["a"], other_states=["x"])
    assert joined == MultiSet.of("a", "x")
    with pytest.raises(DomainError):
        MultiSet.of("a").concat(MultiSet.of("a"))


def test_render_is_sorted():
    assert MultiSet({"b": 1, "a": 2}).render() == "{a:2, b:1}"


@given(st.dictionaries(st.sampled_from(STATES), st.integers(0, 6)),
       st.dictionaries(st.sampled_from(STATES), st.integers(0, 6)))
def test_add_subtract_inverse_and_size_additive(a, b):
    x, y = MultiSet(a), MultiSet(b)
    assert (x + y) - y == x
    assert (x + y).size == x.size + y.size


# Cubes

def test_cube_membership_examples():
    assert cube_member(MultiSet({"q": 2}), one(1, 3))
    assert cube_member(MultiSet(), Cube.universal(Q))
    assert not cube_member(MultiSet({"q": 5}), one(1, 4))


def test_cube_rejects_foreign_states_and_bad_bounds():
    with pytest.raises(DomainError):
        one(1, 3).contains(MultiSet({"z": 1}))
    with pytest.raises(DomainError):
        one(4, 2)
    with pytest.raises(DomainError):
        Cube(Q, (INF,), (INF,))


def test_register_cube_membership():
    from pvnets.models import AsmsConfiguration

    c = Cube.build(Q, {"q": (1, 2)}, register="#")
    assert c.contains(AsmsConfiguration(MultiSet({"q": 1}), "#"))
    assert not c.contains(AsmsConfiguration(MultiSet({"q": 1}), "a"))
    with pytest.raises(DomainError):
        c.contains(MultiSet({"q": 1}))


def test_members_of_size_enumerates_exactly_the_cube():
    c = Cube.build(STATES, {"p": (1, 2), "q": (0, INF)})
    got = list(c.members_of_size(3))
    brute = [m for m in bounded_multisets(STATES, 3) if m.size == 3 and c.contains(m)]
    assert {MultiSet(m) for m in got} == set(brute)
    assert len(got) == len(brute)
    vectors = [tuple(m.get(q, 0) for q in STATES) for m in got]
    assert vectors == sorted(vectors)


def test_members_of_size_slack_truncates_infinite_uppers():
    c = Cube.build(Q, {"q": (1, INF)})
    assert list(c.members_of_size(5, slack=2)) == []
    assert list(c.members_of_size(3, slack=2)) == [{"q": 3}]


# Norms

def test_norm_examples():
    r = one(1, 3).norm()
    assert (r.lnorm, r.unorm, r.norm) == (1, 3, 3)
    r = Cube.universal(STATES).norm()
    assert (r.lnorm, r.unorm, r.norm) == (0, 0, 0)
    assert constraint_norm(CountingConstraint.of(one(1, 3), one(2, 4))).norm == 4


# Constraint algebra

def test_same_counting_set_from_different_cubes():
    left = CountingConstraint.of(one(1, 3), one(2, 4))
    assert constraint_equiv_bounded(left, CountingConstraint.of(one(1, 4)), 10)
    assert constraint_equiv_bounded(left, left, 6)
    assert not constraint_equiv_bounded(CountingConstraint.of(one(1, 3)), CountingConstraint.of(one(1, 4)), 10)


def test_intersect_with_universal_is_identity():
    x = CountingConstraint.of(one(1, 3))
    assert constraint_equiv_bounded(constraint_intersect(x, CountingConstraint.universal(Q)), x, 10)


def test_complement_of_at_least_one_is_zero():
    comp = constraint_complement(CountingConstraint.of(one(1, INF)))
    assert [m["q"] for m in bounded_multisets(Q, 10) if comp.contains(m)] == [0]


def test_empty_constraint():
    empty = CountingConstraint(Q)
    assert not empty.contains(MultiSet())
    assert constraint_equiv_bounded(constraint_complement(empty), CountingConstraint.universal(Q), 5)


def test_mismatched_states_rejected():
    with pytest.raises(DomainError):
        constraint_union(CountingConstraint.of(one(0, 1)), CountingConstraint.universal(STATES))


def test_enumeration_cap():
    with pytest.raises(ResourceError):
        list(bounded_multisets(STATES, 100, cap=1000))


bound = st.integers(0, 4)


@st.composite
def cubes(draw, states=STATES[:2]):
    b = {}
    for q in states:
        lo = draw(bound)
        hi = draw(st.one_of(st.just(INF), st.integers(lo, lo + 4)))
        b[q] = (lo, hi)
    return Cube.build(states, b)


constraints = st.lists(cubes(), max_size=3).map(lambda cs: CountingConstraint(STATES[:2], tuple(cs)))
members = st.fixed_dictionaries({q: st.integers(0, 8) for q in STATES[:2]}).map(MultiSet)


@settings(max_examples=300)
@given(constraints, constraints, members)
def test_boolean_membership_laws(x, y, m):
    assert constraint_union(x, y).contains(m) == (x.contains(m) or y.contains(m))
    assert constraint_intersect(x, y).contains(m) == (x.contains(m) and y.contains(m))
    assert constraint_complement(x).contains(m) == (not x.contains(m))
    assert (x | y).contains(m) == constraint_union(x, y).contains(m)
    assert (~x).contains(m) == constraint_complement(x).contains(m)


@settings(max_examples=200)
@given(constraints, constraints)
def test_constructive_norm_bounds(x, y):
    assert constraint_norm(x | y).norm <= max(x.norm().norm, y.norm().norm)
    assert constraint_norm(x & y).norm <= x.norm().norm + y.norm().norm


@settings(max_examples=60, deadline=None)
@given(constraints)
def test_complement_is_an_involution(x):
    assert constraint_equiv_bounded(~~x, x, 8)
