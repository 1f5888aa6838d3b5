"""Text format for models, cubes, configurations and run traces.

Documents hold declarations::

    // comments run to the end of the line
    rbn counter1 {
      states: tok sent a1 b1 c1;
      alphabet: 1 2;
      transitions: tok !1 sent; a1 ?1 b1; b1 ?1 c1; c1 !2 a1;
    }
    asms demo { states: p q; alphabet: # x; transitions: p W(x) q; q R(x) p; }
    ionet obs { states: p q r; transitions: p @ q -> r; }
    cube C0 of counter1 { tok: 0..inf; a1: 1..1; default: 0..0; }
    config start of demo { p: 2; register: #; }

Cubes list ``state: lo..hi`` bounds (``hi`` may be ``inf``); unlisted states
take the ``default`` range, itself ``0..inf`` unless given.  Shared-memory cubes
must name a register letter, or ``*`` to accept any register value (only
meaningful as a reachability target).

Traces are line based: ``init <config>`` then one ``step <label>`` per step,
where configurations are ``state=count`` lists joined by commas, with
``reg=<letter>`` appended for shared-memory systems.
"""

from __future__ import annotations

import re
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from typing import Any, Union

from .errors import DomainError, PvError
from .models import (AsmsConfiguration, AsmsModel, AsmsTransition, Broadcast, Config, IoNetModel, IoTransition,
                     Model, RbnModel, RbnTransition, RunTrace)
from .multiset import INF, Cube, MultiSet

ANY_REGISTER = "*"


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    span: Span

    def __str__(self) -> str:
        return f"{self.span}: {self.severity}: {self.message}"


class DslError(PvError, ValueError):
    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = tuple(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class ConfigDecl:
    model: str
    config: Config


@dataclass(frozen=True)
class CubeDecl:
    model: str
    cube: Cube


Value = Union[Model, CubeDecl, ConfigDecl]


@dataclass(frozen=True)
class Item:
    name: str
    value: Value
    span: Span
    comment: str = ""  # leading comment, re-emitted verbatim


@dataclass
class DslDocument:
    items: list[Item] = field(default_factory=list)

    def get(self, name: str) -> Value:
        for it in self.items:
            if it.name == name:
                return it.value
        raise DomainError(f"no declaration named {name!r}")

    @property
    def models(self) -> dict[str, Model]:
        return {it.name: it.value for it in self.items if isinstance(it.value, (RbnModel, AsmsModel, IoNetModel))}

    @property
    def cubes(self) -> dict[str, CubeDecl]:
        return {it.name: it.value for it in self.items if isinstance(it.value, CubeDecl)}

    @property
    def configs(self) -> dict[str, ConfigDecl]:
        return {it.name: it.value for it in self.items if isinstance(it.value, ConfigDecl)}

    def model(self, name: str | None = None) -> Model:
        models = self.models
        if name is None:
            if len(models) != 1:
                raise DomainError(f"document declares {len(models)} models; pick one by name")
            return next(iter(models.values()))
        if name not in models:
            raise DomainError(f"no model named {name!r}")
        return models[name]

    def model_name(self, model: Model) -> str:
        for name, m in self.models.items():
            if m is model:
                return name
        raise DomainError("model is not declared in this document")

    def semantic_equal(self, other: DslDocument) -> bool:
        """Same declarations in the same order, ignoring positions and comments."""
        return [(i.name, i.value) for i in self.items] == [(i.name, i.value) for i in other.items]


# Lexing

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<punct>->|\.\.|[{};:!?()@=+])
  | (?P<name>(?:(?!->)[^\s{};:!?()@=+.])+)
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "name", "punct", "comment", "eof"
    text: str
    span: Span


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            span = Span(line, col, line, col + 1)
            raise DslError([Diagnostic("error", f"unexpected character {text[pos]!r}", span)])
        kind, s = m.lastgroup, m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind != "ws":
                out.append(Token(kind, s, Span(line, col, line, col + len(s))))
            col += len(s)
        pos = m.end()
    out.append(Token("eof", "", Span(line, col, line, col)))
    return out


# Parsing

_HEADS = {"rbn", "asms", "ionet", "cube", "config"}


class _Parser:
    def __init__(self, text: str):
        toks = tokenize(text)
        self.comments: dict[int, list[str]] = {}
        self.toks = []
        for t in toks:
            if t.kind == "comment":
                self.comments.setdefault(len(self.toks), []).append(t.text)
            else:
                self.toks.append(t)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, message: str, span: Span | None = None) -> DslError:
        return DslError([Diagnostic("error", message, span or self.tok.span)])

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "name") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.fail(f"expected {text!r}, found {shown!r}")
        return self.next()

    def name(self, what: str = "name") -> Token:
        if self.tok.kind != "name":
            shown = self.tok.text or "end of input"
            raise self.fail(f"expected {what}, found {shown!r}")
        return self.next()

    def names_until(self, stop: str) -> list[Token]:
        out = []
        while not self.at(stop):
            out.append(self.name())
        return out

    def document(self) -> DslDocument:
        doc = DslDocument()
        seen: dict[str, Span] = {}
        while self.tok.kind != "eof":
            comment = "\n".join(self.comments.get(self.i, []))
            head = self.tok
            if head.kind != "name" or head.text not in _HEADS:
                raise self.fail(f"expected a declaration ({', '.join(sorted(_HEADS))}), found {head.text!r}")
            self.next()
            name = self.name("declaration name")
            if name.text in seen:
                raise self.fail(f"duplicate declaration {name.text!r} (first at {seen[name.text]})", name.span)
            seen[name.text] = name.span
            if head.text in ("rbn", "asms", "ionet"):
                value: Value = self.model(head.text, name.text)
            elif head.text == "cube":
                value = self.cube(doc)
            else:
                value = self.config(doc)
            span = Span(head.span.line, head.span.col, self.toks[self.i - 1].span.end_line,
                        self.toks[self.i - 1].span.end_col)
            doc.items.append(Item(name.text, value, span, comment))
        return doc

    def model(self, kind: str, name: str) -> Model:
        self.expect("{")
        self.expect("states")
        self.expect(":")
        states = self.names_until(";")
        self.expect(";")
        _unique(states, "state")
        alphabet: list[Token] = []
        if self.at("alphabet"):
            if kind == "ionet":
                raise self.fail("IO nets have no alphabet; observed states act as letters")
            self.next()
            self.expect(":")
            alphabet = self.names_until(";")
            self.expect(";")
            _unique(alphabet, "letter")
        elif kind != "ionet":
            raise self.fail("expected 'alphabet' section")
        self.expect("transitions")
        self.expect(":")
        state_set = {t.text for t in states}
        letter_set = {t.text for t in alphabet}
        trans: list[Any] = []
        spans: dict[Any, Span] = {}
        while not self.at("}"):
            start = self.tok.span
            t = self.transition(kind, state_set, letter_set)
            if t in spans:
                raise self.fail(f"duplicate transition {t} (first at {spans[t]})", start)
            spans[t] = start
            trans.append(t)
            if not self.at("}"):
                self.expect(";")
        self.expect("}")
        st = tuple(t.text for t in states)
        try:
            if kind == "rbn":
                return RbnModel(st, tuple(t.text for t in alphabet), tuple(trans), name=name)
            if kind == "asms":
                return AsmsModel(st, tuple(t.text for t in alphabet), tuple(trans), name=name)
            return IoNetModel(st, tuple(trans), name=name)
        except DomainError as exc:
            raise self.fail(str(exc)) from None

    def _state(self, known: set[str]) -> str:
        t = self.name("state")
        if t.text not in known:
            raise self.fail(f"unknown state {t.text!r}", t.span)
        return t.text

    def _letter(self, known: set[str]) -> str:
        t = self.name("letter")
        if t.text not in known:
            raise self.fail(f"unknown letter {t.text!r}", t.span)
        return t.text

    def transition(self, kind: str, states: set[str], letters: set[str]) -> Any:
        p = self._state(states)
        if kind == "rbn":
            if not (self.at("!") or self.at("?")):
                raise self.fail("expected '!' or '?'")
            action = self.next().text
            a = self._letter(letters)
            return RbnTransition(p, action, a, self._state(states))
        if kind == "asms":
            op = self.name("R or W")
            if op.text not in ("R", "W"):
                raise self.fail(f"expected R or W, found {op.text!r}", op.span)
            self.expect("(")
            a = self._letter(letters)
            self.expect(")")
            return AsmsTransition(p, op.text, a, self._state(states))
        self.expect("@")
        q = self._state(states)
        self.expect("->")
        return IoTransition(p, q, self._state(states))

    def _model_ref(self, doc: DslDocument) -> tuple[str, Model]:
        self.expect("of")
        ref = self.name("model name")
        try:
            return ref.text, doc.model(ref.text)
        except DomainError:
            raise self.fail(f"undeclared model {ref.text!r}", ref.span) from None

    def _nat(self, allow_inf: bool = False) -> int | float:
        t = self.name("number")
        if allow_inf and t.text == "inf":
            return INF
        if not t.text.isdigit():
            raise self.fail(f"expected a natural number{' or inf' if allow_inf else ''}, found {t.text!r}", t.span)
        return int(t.text)

    def _range(self) -> tuple[int, Any]:
        start = self.tok.span
        lo = self._nat()
        hi: Any = lo
        if self.at(".."):
            self.next()
            hi = self._nat(allow_inf=True)
        if hi < lo:
            raise self.fail(f"empty range {lo}..{hi}", start)
        return lo, hi

    def cube(self, doc: DslDocument) -> CubeDecl:
        mname, model = self._model_ref(doc)
        self.expect("{")
        bounds: dict[str, tuple[int, Any]] = {}
        default: tuple[int, Any] = (0, INF)
        register: str | None = None
        seen_register = False
        while not self.at("}"):
            key = self.name("state, 'default' or 'register'")
            self.expect(":")
            if key.text == "register":
                tok = self.name("letter")
                if not isinstance(model, AsmsModel):
                    raise self.fail(f"model {mname!r} has no register", tok.span)
                if tok.text != ANY_REGISTER and tok.text not in model.alphabet:
                    raise self.fail(f"unknown letter {tok.text!r}", tok.span)
                register = None if tok.text == ANY_REGISTER else tok.text
                seen_register = True
            elif key.text == "default":
                default = self._range()
            else:
                if key.text not in model.index:
                    raise self.fail(f"unknown state {key.text!r} in model {mname!r}", key.span)
                if key.text in bounds:
                    raise self.fail(f"state {key.text!r} bounded twice", key.span)
                bounds[key.text] = self._range()
            if not self.at("}"):
                self.expect(";")
        close = self.expect("}")
        if isinstance(model, AsmsModel) and not seen_register:
            raise self.fail("shared-memory cube needs a register line ('register: *' for any value)", close.span)
        return CubeDecl(mname, Cube.build(model.states, bounds, default=default, register=register))

    def config(self, doc: DslDocument) -> ConfigDecl:
        mname, model = self._model_ref(doc)
        self.expect("{")
        counts: dict[str, int] = {}
        register = None
        while not self.at("}"):
            key = self.name("state or 'register'")
            self.expect(":")
            if key.text == "register":
                if not isinstance(model, AsmsModel):
                    raise self.fail(f"model {mname!r} has no register", key.span)
                register = self._letter(set(model.alphabet))
            else:
                if key.text not in model.index:
                    raise self.fail(f"unknown state {key.text!r} in model {mname!r}", key.span)
                counts[key.text] = int(self._nat())
            if not self.at("}"):
                self.expect(";")
        close = self.expect("}")
        m = MultiSet(counts)
        if isinstance(model, AsmsModel):
            if register is None:
                raise self.fail("shared-memory configuration needs a register line", close.span)
            return ConfigDecl(mname, AsmsConfiguration(m, register))
        return ConfigDecl(mname, m)


def _unique(tokens: list[Token], what: str) -> None:
    seen: set[str] = set()
    for t in tokens:
        if t.text in seen:
            raise DslError([Diagnostic("error", f"duplicate {what} {t.text!r}", t.span)])
        seen.add(t.text)


def parse(text: str) -> DslDocument:
    """Parse a document; raises :class:`DslError` carrying spanned diagnostics."""
    return _Parser(text).document()


# Emitting

def _fmt(b: Any) -> str:
    return "inf" if b == INF else str(b)


def emit_model(name: str, model: Model, comment: str = "") -> str:
    lines = [comment] if comment else []
    keyword = {"rbn": "rbn", "asms": "asms", "io": "ionet"}[model.kind]
    lines.append(f"{keyword} {name} {{")
    lines.append(f"  states: {' '.join(model.states)};")
    if not isinstance(model, IoNetModel):
        lines.append(f"  alphabet: {' '.join(model.alphabet)};")
    lines.append("  transitions:")
    lines += [f"    {t};" for t in model.transitions]
    lines.append("}")
    return "\n".join(lines)


def emit_cube(name: str, decl: CubeDecl, comment: str = "", model: Model | None = None) -> str:
    cube = decl.cube
    ranges = list(zip(cube.lower, cube.upper))
    default = max(dict.fromkeys(ranges), key=ranges.count) if ranges else (0, INF)
    parts = [f"{q}: {lo}..{_fmt(hi)};" for q, (lo, hi) in zip(cube.states, ranges) if (lo, hi) != default]
    if default != (0, INF):
        parts.append(f"default: {default[0]}..{_fmt(default[1])};")
    if cube.register is not None:
        parts.append(f"register: {cube.register};")
    elif isinstance(model, AsmsModel):
        parts.append(f"register: {ANY_REGISTER};")
    head = [comment] if comment else []
    return "\n".join(head + [f"cube {name} of {decl.model} {{ {' '.join(parts)} }}".replace("{  }", "{ }")])


def emit_config_decl(name: str, decl: ConfigDecl, comment: str = "") -> str:
    c = decl.config
    procs = c.processes if isinstance(c, AsmsConfiguration) else c
    parts = [f"{q}: {procs[q]};" for q in sorted(procs)]
    if isinstance(c, AsmsConfiguration):
        parts.append(f"register: {c.register};")
    head = [comment] if comment else []
    return "\n".join(head + [f"config {name} of {decl.model} {{ {' '.join(parts)} }}"])


def emit(doc: DslDocument) -> str:
    """Canonical text for a document; ``parse(emit(d))`` equals ``d`` up to positions."""
    models = doc.models
    blocks = []
    for it in doc.items:
        if isinstance(it.value, CubeDecl):
            blocks.append(emit_cube(it.name, it.value, it.comment, models.get(it.value.model)))
        elif isinstance(it.value, ConfigDecl):
            blocks.append(emit_config_decl(it.name, it.value, it.comment))
        else:
            blocks.append(emit_model(it.name, it.value, it.comment))
    return "\n\n".join(blocks) + "\n"


def document_of(model: Model, name: str | None = None, cubes: dict[str, Cube] | None = None,
                comment: str = "") -> DslDocument:
    name = name or model.name or "model"
    doc = DslDocument([Item(name, model, Span(0, 0, 0, 0), comment)])
    for cname, cube in (cubes or {}).items():
        doc.items.append(Item(cname, CubeDecl(name, cube), Span(0, 0, 0, 0)))
    return doc


# Configurations and traces

def parse_config(model: Model, text: str) -> Config:
    """``state=count`` pairs separated by commas; shared memory also needs ``reg=letter``."""
    counts: dict[str, int] = {}
    register = None
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, val = part.partition("=")
        key, val = key.strip(), val.strip()
        if not sep:
            raise DomainError(f"expected state=count, got {part!r}")
        if key == "reg":
            register = val
            continue
        model._state_idx(key)
        if not val.isdigit():
            raise DomainError(f"count for {key!r} must be a natural number, got {val!r}")
        counts[key] = counts.get(key, 0) + int(val)
    m = MultiSet(counts)
    if isinstance(model, AsmsModel):
        if register is None:
            raise DomainError("shared-memory configurations need reg=<letter>")
        model._letter_idx(register)
        return AsmsConfiguration(m, register)
    if register is not None:
        raise DomainError(f"{model.kind} configurations have no register")
    return m


def format_config(model: Model, config: Config) -> str:
    procs = config.processes if isinstance(config, AsmsConfiguration) else config
    parts = [f"{q}={procs[q]}" for q in model.states if procs[q]]
    if isinstance(config, AsmsConfiguration):
        parts.append(f"reg={config.register}")
    return ",".join(parts)


def parse_label(model: Model, text: str) -> Any:
    text = text.strip()
    if isinstance(model, RbnModel):
        sender, *receivers = (p.strip() for p in text.split(" + "))
        return Broadcast(RbnTransition.parse(sender), tuple(RbnTransition.parse(r) for r in receivers))
    if isinstance(model, AsmsModel):
        return AsmsTransition.parse(text)
    return IoTransition.parse(text)


def format_trace(model: Model, trace: RunTrace) -> str:
    lines = [f"init {format_config(model, trace.initial)}"]
    lines += [f"step {st.label}" for st in trace.steps]
    return "\n".join(lines) + "\n"


def parse_trace(model: Model, text: str) -> RunTrace:
    """Read a trace file and replay it; raises on steps that are not enabled."""
    initial = cur = None
    labels = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        try:
            if word == "init" and initial is None:
                initial = cur = parse_config(model, rest)
            elif word == "step" and initial is not None:
                label = parse_label(model, rest)
                cur = model.step(cur, label)
                labels.append(label)
            else:
                raise DomainError(f"unexpected {word!r}")
        except DomainError as exc:
            raise DslError([Diagnostic("error", str(exc), Span(n, 1, n, len(raw) + 1))]) from None
    if initial is None:
        raise DslError([Diagnostic("error", "trace has no init line", Span(1, 1, 1, 1))])
    return RunTrace.from_labels(model, initial, labels)


def iter_items(doc: DslDocument) -> Iterator[tuple[str, Value]]:
    for it in doc.items:
        yield it.name, it.value
