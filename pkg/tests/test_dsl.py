from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rand_asms, rand_io, rand_rbn
from pvnets.analyses import gen_counter_rbn, gen_fig2_asms
from pvnets.dsl import (ConfigDecl, DslError, document_of, emit, format_config, format_trace, parse, parse_config,
                        parse_trace)
from pvnets.engine import Occupies, reaches
from pvnets.errors import DomainError
from pvnets.models import AsmsConfiguration, IoNetModel
from pvnets.multiset import INF, MultiSet
from pvnets.reductions import compile_asms_to_rbn, compile_rbn_to_asms

FIG1 = """
// three-stage counter
rbn fig1 {
  states: tok sent a1 b1 c1 a2 b2 c2 a3 b3 c3;
  alphabet: 1 2 3 4;
  transitions:
    tok !1 sent;
    a1 ?1 b1; b1 ?1 c1; c1 !2 a1;
    a2 ?2 b2; b2 ?2 c2; c2 !3 a2;
    a3 ?3 b3; b3 ?3 c3; c3 !4 a3
}
cube C0 of fig1 { tok: 0..inf; a1: 1..1; a2: 1; a3: 1..1; default: 0..0; }
cube Cf of fig1 { c3: 1..inf }
"""


def test_fig1_text_parses():
    doc = parse(FIG1)
    m = doc.model("fig1")
    assert (len(m.states), len(m.transitions)) == (11, 10)
    assert m == gen_counter_rbn(3).model
    assert doc.cubes["C0"].cube == gen_counter_rbn(3).cubes["C0"]
    assert doc.items[0].comment == "// three-stage counter"
    assert doc.items[0].span.line == 3


def test_empty_transitions_section():
    m = parse("asms p { states: s; alphabet: #; transitions: }").model()
    assert m.transitions == ()


def test_io_net_and_config_declarations():
    doc = parse("""
        ionet n { states: p q r; transitions: p @ q -> r; r @ r -> p; }
        asms s { states: x y; alphabet: # a; transitions: x W(a) y; y R(a) x; }
        config start of s { x: 2; register: #; }
        cube any of s { y: 1..inf; register: *; }
    """)
    assert isinstance(doc.model("n"), IoNetModel)
    assert doc.configs["start"] == ConfigDecl("s", AsmsConfiguration(MultiSet({"x": 2}), "#"))
    assert doc.cubes["any"].cube.register is None


@pytest.mark.parametrize("text, message, line", [
    ("rbn x { states: a; alphabet: z; transitions: a !z a; }\ncube c of x { b: 0..1; }", "unknown state 'b'", 2),
    ("rbn x { states: a; alphabet: z; transitions: a !z b; }", "unknown state 'b'", 1),
    ("rbn x { states: a; alphabet: z; transitions: a !y a; }", "unknown letter 'y'", 1),
    ("rbn x { states: a; alphabet: z; transitions: a !z a; a !z a }", "duplicate transition", 1),
    ("asms x { states: a; alphabet: z; transitions: }\ncube c of x { a: 1..1 }", "needs a register", 2),
    ("cube c of nowhere { }", "undeclared model", 1),
    ("rbn x { states: a a; alphabet: z; transitions: }", "duplicate state", 1),
    ("rbn x { states: a; alphabet: z; transitions: }\nrbn x { states: a; alphabet: z; transitions: }",
     "duplicate declaration", 2),
    ("rbn x { states a; }", "expected ':'", 1),
    ("rbn x { states: a; alphabet: z; transitions: a W(z) a; }", "expected '!' or '?'", 1),
    ("rbn x { states: a; alphabet: z; transitions: }\ncube c of x { a: 3..1 }", "empty range", 2),
])
def test_diagnostics_carry_spans(text, message, line):
    with pytest.raises(DslError) as info:
        parse(text)
    diag = info.value.diagnostics[0]
    assert message in diag.message and diag.span.line == line and diag.severity == "error"


def test_cube_span_points_at_the_state():
    with pytest.raises(DslError) as info:
        parse("rbn x { states: a; alphabet: z; transitions: }\ncube c of x { a: 0..1; ghost: 2..2 }")
    span = info.value.diagnostics[0].span
    assert (span.line, span.col) == (2, 24)


def test_round_trip_on_generated_and_compiled_models():
    c3 = gen_counter_rbn(3)
    f2 = gen_fig2_asms()
    docs = [document_of(c3.model, "c3", dict(c3.cubes)), document_of(f2.model, "f2", dict(f2.cubes)),
            document_of(compile_rbn_to_asms(c3.model).target, "c3a"),
            document_of(compile_asms_to_rbn(f2.model).target, "f2r")]
    for doc in docs:
        text = emit(doc)
        again = parse(text)
        assert again.semantic_equal(doc)
        assert emit(again) == text


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_round_trip_on_random_models(seed):
    rng = random.Random(seed)
    model = rng.choice([rand_rbn, rand_asms, rand_io])(rng)
    doc = document_of(model, "m")
    assert parse(emit(doc)).semantic_equal(doc)


def test_config_literals():
    m = gen_fig2_asms().model
    c = parse_config(m, "a1=1,b1=2,reg=#")
    assert c == AsmsConfiguration(MultiSet({"a1": 1, "b1": 2}), "#")
    assert format_config(m, c) == "a1=1,b1=2,reg=#"
    with pytest.raises(DomainError):
        parse_config(m, "a1=1")
    with pytest.raises(DomainError):
        parse_config(gen_counter_rbn(1).model, "tok=1,reg=#")
    with pytest.raises(DomainError):
        parse_config(m, "zz=1,reg=#")


def test_trace_round_trip():
    model = gen_counter_rbn(2).model
    run = reaches(model, MultiSet({"tok": 4, "a1": 1, "a2": 1}), Occupies("c2")).witness
    text = format_trace(model, run)
    assert parse_trace(model, text) == run
    with pytest.raises(DslError) as info:
        parse_trace(model, "init tok=1\nstep a1 ?1 b1\n")
    assert info.value.diagnostics[0].span.line == 2
    with pytest.raises(DslError):
        parse_trace(model, "step tok !1 sent\n")


def test_default_is_used_for_unlisted_states():
    doc = parse("rbn x { states: a b; alphabet: z; transitions: }\ncube c of x { a: 1..inf; default: 2..2 }")
    cube = doc.cubes["c"].cube
    assert cube.bounds_of("a") == (1, INF) and cube.bounds_of("b") == (2, 2)
