from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import asms_succ, io_succ, multisets_over, rand_asms, rand_io, rand_rbn, rbn_succ
from pvnets.analyses import gen_counter_rbn, gen_fig2_asms
from pvnets.errors import DomainError, InvalidLabelError, NotEnabledError, ResourceError
from pvnets.models import (AsmsConfiguration, AsmsModel, AsmsTransition, Broadcast, IoNetModel, IoTransition,
                           RbnModel, RbnTransition, RunTrace, TraceStep, asms_step, io_step, rbn_step,
                           rbn_successors, replay)
from pvnets.multiset import MultiSet

T = RbnTransition.parse


@pytest.fixture(scope="module")
def fig1():
    return gen_counter_rbn(3).model


@pytest.fixture(scope="module")
def fig2():
    return gen_fig2_asms().model


def test_transition_parsing_round_trip():
    for text in ("tok !1 sent", "a1 ?1 b1"):
        assert str(T(text)) == text
    assert str(AsmsTransition.parse("a1 W(1) a2")) == "a1 W(1) a2"
    assert str(IoTransition.parse("p @ q -> r")) == "p @ q -> r"
    with pytest.raises(DomainError):
        T("tok 1 sent")


def test_model_validation():
    with pytest.raises(DomainError):
        RbnModel(("p", "p"), ("a",), ())
    with pytest.raises(DomainError):
        RbnModel(("p",), ("a",), ("p !b p",))
    with pytest.raises(DomainError):
        RbnModel(("p",), ("a",), ("p !a z",))
    with pytest.raises(DomainError):
        RbnModel(("p",), ("a",), ("p !a p", "p !a p"))
    with pytest.raises(DomainError):
        AsmsModel(("p",), ("#",), ("p W(x) p",))


def test_rbn_step_example(fig1):
    c = MultiSet.of("tok", "a1")
    assert rbn_step(fig1, c, Broadcast(T("tok !1 sent"), (T("a1 ?1 b1"),))) == MultiSet.of("sent", "b1")


def test_rbn_step_errors(fig1):
    c = MultiSet.of("tok", "a1")
    with pytest.raises(InvalidLabelError):
        rbn_step(fig1, c, Broadcast(T("tok !1 sent"), (T("a2 ?2 b2"),)))
    with pytest.raises(NotEnabledError):
        rbn_step(fig1, c, Broadcast(T("tok !1 sent"), (T("b1 ?1 c1"),)))
    with pytest.raises(NotEnabledError):
        # the broadcaster cannot also act as a receiver
        rbn_step(fig1, MultiSet.of("tok"), Broadcast(T("tok !1 sent"), (T("a1 ?1 b1"),)))


def test_rbn_successors_example(fig1):
    got = rbn_successors(fig1, MultiSet.of("tok", "a1"))
    assert got == {MultiSet.of("sent", "a1"), MultiSet.of("sent", "b1")}


def test_rbn_successor_cap(fig1):
    with pytest.raises(ResourceError):
        rbn_successors(fig1, MultiSet({"tok": 3, "a1": 5, "b1": 5}), cap=3)


def test_asms_step_examples(fig2):
    c = asms_step(fig2, AsmsConfiguration(MultiSet.of("a1"), "#"), AsmsTransition.parse("a1 W(1) a2"))
    assert c == AsmsConfiguration(MultiSet.of("a2"), "1")
    c = asms_step(fig2, AsmsConfiguration(MultiSet.of("b1"), "1"), AsmsTransition.parse("b1 R(1) b2"))
    assert c == AsmsConfiguration(MultiSet.of("b2"), "1")
    with pytest.raises(NotEnabledError):
        asms_step(fig2, AsmsConfiguration(MultiSet.of("b1"), "2"), AsmsTransition.parse("b1 R(1) b2"))
    with pytest.raises(InvalidLabelError):
        asms_step(fig2, AsmsConfiguration(MultiSet.of("b1"), "1"), AsmsTransition.parse("b1 R(2) b2"))


def test_io_step_needs_an_observed_process():
    net = IoNetModel(("p", "q", "r"), ("p @ q -> r", "p @ p -> r"))
    assert io_step(net, MultiSet.of("p", "q"), IoTransition.parse("p @ q -> r")) == MultiSet.of("r", "q")
    with pytest.raises(NotEnabledError):
        io_step(net, MultiSet.of("p"), IoTransition.parse("p @ q -> r"))
    # self-observation needs a second process in the same state
    with pytest.raises(NotEnabledError):
        io_step(net, MultiSet.of("p"), IoTransition.parse("p @ p -> r"))
    assert io_step(net, MultiSet.of("p", "p"), IoTransition.parse("p @ p -> r")) == MultiSet.of("p", "r")


def test_replay_accepts_good_and_pinpoints_bad(fig1):
    good = RunTrace.from_labels(fig1, MultiSet.of("tok", "a1"), [Broadcast(T("tok !1 sent"), (T("a1 ?1 b1"),))])
    res = replay(fig1, good)
    assert res.ok and res.final == MultiSet.of("sent", "b1")
    tampered = RunTrace(good.initial, (TraceStep(good.steps[0].label, MultiSet.of("sent", "a1")),))
    res = replay(fig1, tampered)
    assert not res.ok and res.bad_step == 1


def test_population_conserved(fig1):
    c = MultiSet({"tok": 3, "a1": 1, "b1": 1})
    assert all(s.size == c.size for s in rbn_successors(fig1, c))


def _configs(states, max_size):
    return [m for n in range(max_size + 1) for m in multisets_over(states, n)]


def test_rbn_successors_match_per_process_enumeration():
    rng = random.Random(3)
    for _ in range(40):
        m = rand_rbn(rng)
        for c in _configs(m.states, 4):
            assert rbn_successors(m, c) == rbn_succ(m, c), (m, c)


def test_asms_and_io_successors_match_oracles():
    rng = random.Random(4)
    for _ in range(40):
        a = rand_asms(rng)
        for c in _configs(a.states, 3):
            for d in a.alphabet:
                conf = AsmsConfiguration(c, d)
                assert a.successors(conf) == asms_succ(a, conf)
        n = rand_io(rng)
        for c in _configs(n.states, 3):
            assert n.successors(c) == io_succ(n, c)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_labeled_successors_replay(seed):
    rng = random.Random(seed)
    m = rand_rbn(rng)
    c = MultiSet({q: rng.randint(0, 2) for q in m.states})
    for label, nxt in m.labeled_successors(c):
        assert m.step(c, label) == nxt


def test_key_encoding_round_trip(fig2):
    c = AsmsConfiguration(MultiSet({"a1": 1, "b1": 2}), "3")
    assert fig2.decode(fig2.encode(c)) == c
