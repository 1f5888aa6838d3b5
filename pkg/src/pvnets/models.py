"""Reconfigurable broadcast networks, shared-memory systems and IO nets.

All three models run an unbounded population of anonymous finite-state
processes; configurations are multisets of states (plus one register value for
shared-memory systems).  Each model exposes its exact single-step semantics on
public objects (``step``) and a key-level interface used by the search engine:
configurations encoded as tuples of counts aligned with ``states`` (shared
memory appends the register's letter index).
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Union

from .errors import DomainError, InvalidLabelError, NotEnabledError, ResourceError
from .multiset import MultiSet

DEFAULT_SUCCESSOR_CAP = 1_000_000


@dataclass(frozen=True, order=True)
class RbnTransition:
    source: str
    action: str  # "!" broadcast, "?" receive
    letter: str
    target: str

    def __post_init__(self) -> None:
        if self.action not in ("!", "?"):
            raise DomainError(f"RBN action must be '!' or '?', got {self.action!r}")

    @classmethod
    def parse(cls, text: str) -> RbnTransition:
        """Parse ``"p !a q"`` / ``"p ?a q"``."""
        try:
            p, act, q = text.split()
        except ValueError:
            raise DomainError(f"bad RBN transition {text!r}") from None
        return cls(p, act[0], act[1:], q)

    @property
    def is_broadcast(self) -> bool:
        return self.action == "!"

    def __str__(self) -> str:
        return f"{self.source} {self.action}{self.letter} {self.target}"


@dataclass(frozen=True, order=True)
class AsmsTransition:
    source: str
    op: str  # "R" or "W"
    letter: str
    target: str

    def __post_init__(self) -> None:
        if self.op not in ("R", "W"):
            raise DomainError(f"shared-memory op must be 'R' or 'W', got {self.op!r}")

    @classmethod
    def parse(cls, text: str) -> AsmsTransition:
        """Parse ``"p W(a) q"`` / ``"p R(a) q"``."""
        try:
            p, op, q = text.split()
        except ValueError:
            raise DomainError(f"bad shared-memory transition {text!r}") from None
        if len(op) < 4 or op[1] != "(" or op[-1] != ")":
            raise DomainError(f"bad shared-memory operation {op!r}")
        return cls(p, op[0], op[2:-1], q)

    @property
    def is_write(self) -> bool:
        return self.op == "W"

    def __str__(self) -> str:
        return f"{self.source} {self.op}({self.letter}) {self.target}"


@dataclass(frozen=True, order=True)
class IoTransition:
    source: str
    observed: str
    target: str

    @classmethod
    def parse(cls, text: str) -> IoTransition:
        """Parse ``"p @ q -> p2"``."""
        parts = text.split()
        if len(parts) != 5 or parts[1] != "@" or parts[3] != "->":
            raise DomainError(f"bad IO transition {text!r}")
        return cls(parts[0], parts[2], parts[4])

    def __str__(self) -> str:
        return f"{self.source} @ {self.observed} -> {self.target}"


@dataclass(frozen=True)
class Broadcast:
    """Label of one RBN step: a broadcast plus the receive transitions it triggers."""

    sender: RbnTransition
    receivers: tuple[RbnTransition, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "receivers", tuple(sorted(self.receivers)))

    def __str__(self) -> str:
        return " + ".join(str(t) for t in (self.sender, *self.receivers))


@dataclass(frozen=True)
class AsmsConfiguration:
    processes: MultiSet
    register: str

    def __post_init__(self) -> None:
        if not isinstance(self.processes, MultiSet):
            object.__setattr__(self, "processes", MultiSet(self.processes))

    @property
    def size(self) -> int:
        return self.processes.size

    def render(self, order: Sequence[str] | None = None) -> str:
        return f"{self.processes.render(order)} reg={self.register}"

    def __str__(self) -> str:
        return self.render()


Config = Union[MultiSet, AsmsConfiguration]
Label = Union[Broadcast, AsmsTransition, IoTransition]
Key = tuple


@lru_cache(maxsize=None)
def _splits(n: int, m: int) -> tuple[tuple[int, ...], ...]:
    """All ``m``-tuples of naturals summing to at most ``n``."""
    if m == 0:
        return ((),)
    out = []
    for first in range(n + 1):
        for rest in _splits(n - first, m - 1):
            out.append((first, *rest))
    return tuple(out)


def _check_unique(kind: str, items: Sequence[Any]) -> None:
    seen = set()
    for x in items:
        if x in seen:
            raise DomainError(f"duplicate {kind}: {x}")
        seen.add(x)


class _Model:
    """Shared behaviour of the three protocol models."""

    kind: str
    name: str
    states: tuple[str, ...]

    @cached_property
    def index(self) -> dict[str, int]:
        return {q: i for i, q in enumerate(self.states)}

    def _state_idx(self, q: str) -> int:
        try:
            return self.index[q]
        except KeyError:
            raise DomainError(f"unknown state {q!r} in model {self.name or self.kind}") from None

    def _counts(self, m: Mapping[str, int]) -> tuple[int, ...]:
        counts = [0] * len(self.states)
        for q, c in m.items():
            if c:
                counts[self._state_idx(q)] = c
        return tuple(counts)

    def _multiset(self, counts: Sequence[int]) -> MultiSet:
        return MultiSet({q: c for q, c in zip(self.states, counts) if c})

    def population(self, key: Key) -> int:
        return sum(key[: len(self.states)])

    def successors(self, config: Config, cap: int = DEFAULT_SUCCESSOR_CAP) -> set:
        """The exact set of one-step successors of ``config``."""
        out = set()
        for _, k in self.key_successors(self.encode(config)):
            out.add(k)
            if len(out) > cap:
                raise ResourceError(f"more than {cap} successors")
        return {self.decode(k) for k in out}

    def labeled_successors(self, config: Config) -> Iterator[tuple[Label, Config]]:
        for code, k in self.key_successors(self.encode(config)):
            yield self.label_from_code(code), self.decode(k)

    def conserves_population(self) -> bool:
        return True

    # overridden
    def encode(self, config: Config) -> Key:  # pragma: no cover
        raise NotImplementedError

    def decode(self, key: Key) -> Config:  # pragma: no cover
        raise NotImplementedError

    def key_successors(self, key: Key) -> Iterator[tuple[Any, Key]]:  # pragma: no cover
        raise NotImplementedError

    def label_from_code(self, code: Any) -> Label:  # pragma: no cover
        raise NotImplementedError

    def step(self, config: Config, label: Label) -> Config:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class RbnModel(_Model):
    """Reconfigurable broadcast network ``(states, alphabet, transitions)``."""

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transitions: tuple[RbnTransition, ...]
    name: str = ""
    kind: str = field(default="rbn", init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        ts = tuple(t if isinstance(t, RbnTransition) else RbnTransition.parse(t) for t in self.transitions)
        object.__setattr__(self, "transitions", ts)
        _check_unique("state", self.states)
        _check_unique("letter", self.alphabet)
        _check_unique("transition", ts)
        letters = set(self.alphabet)
        for t in ts:
            self._state_idx(t.source)
            self._state_idx(t.target)
            if t.letter not in letters:
                raise DomainError(f"unknown letter {t.letter!r} in transition {t}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RbnModel):
            return NotImplemented
        return (self.states, self.alphabet, frozenset(self.transitions)) == (
            other.states, other.alphabet, frozenset(other.transitions))

    def __hash__(self) -> int:
        return hash((self.states, self.alphabet, frozenset(self.transitions)))

    @cached_property
    def broadcasts(self) -> tuple[RbnTransition, ...]:
        return tuple(t for t in self.transitions if t.is_broadcast)

    @cached_property
    def receives(self) -> tuple[RbnTransition, ...]:
        return tuple(t for t in self.transitions if not t.is_broadcast)

    @cached_property
    def _tables(self):
        idx = self.index
        bcast = [(idx[t.source], idx[t.target], t.letter) for t in self.broadcasts]
        by_letter: dict[str, dict[int, list[tuple[int, int]]]] = {}
        for ri, t in enumerate(self.receives):
            by_letter.setdefault(t.letter, {}).setdefault(idx[t.source], []).append((ri, idx[t.target]))
        recv = {a: sorted((r, tuple(ts)) for r, ts in per.items()) for a, per in by_letter.items()}
        return bcast, recv

    def encode(self, config: Config) -> Key:
        if not isinstance(config, Mapping):
            raise DomainError(f"RBN configurations are multisets, got {config!r}")
        return self._counts(config)

    def decode(self, key: Key) -> MultiSet:
        return self._multiset(key)

    def key_successors(self, key: Key) -> Iterator[tuple[Any, Key]]:
        bcast, recv = self._tables
        for bi, (p, q, a) in enumerate(bcast):
            if not key[p]:
                continue
            rem = list(key)
            rem[p] -= 1
            active = [(r, ts) for r, ts in recv.get(a, ()) if rem[r]]
            # the broadcaster lands in q after receivers are chosen from the rest
            base = list(rem)
            base[q] += 1
            if not active:
                yield (bi, ()), tuple(base)
                continue
            for combo in itertools.product(*(_splits(rem[r], len(ts)) for r, ts in active)):
                new = list(base)
                moved = []
                for (r, ts), split in zip(active, combo):
                    for (ri, tgt), c in zip(ts, split):
                        if c:
                            new[r] -= c
                            new[tgt] += c
                            moved.append((ri, c))
                yield (bi, tuple(moved)), tuple(new)

    def label_from_code(self, code: Any) -> Broadcast:
        bi, moved = code
        rec = []
        for ri, c in moved:
            rec.extend([self.receives[ri]] * c)
        return Broadcast(self.broadcasts[bi], tuple(rec))

    def step(self, config: Config, label: Label) -> MultiSet:
        """Fire a broadcast with its receivers; raises if malformed or not enabled."""
        if not isinstance(label, Broadcast):
            raise InvalidLabelError(f"RBN steps are labelled by broadcasts, got {label!r}")
        known = set(self.transitions)
        t = label.sender
        if t not in known or not t.is_broadcast:
            raise InvalidLabelError(f"{t} is not a broadcast transition of the model")
        for r in label.receivers:
            if r not in known or r.is_broadcast:
                raise InvalidLabelError(f"{r} is not a receive transition of the model")
            if r.letter != t.letter:
                raise InvalidLabelError(f"receiver {r} does not match letter {t.letter!r}")
        if not isinstance(config, MultiSet):
            config = MultiSet(config)
        need = MultiSet.of(t.source, *(r.source for r in label.receivers))
        if not config >= need:
            raise NotEnabledError(f"{label} needs {need.render()} but configuration is {config.render()}")
        gain = MultiSet.of(t.target, *(r.target for r in label.receivers))
        return config - need + gain


@dataclass(frozen=True, eq=False)
class AsmsModel(_Model):
    """Asynchronous shared-memory system over one register holding a letter."""

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transitions: tuple[AsmsTransition, ...]
    name: str = ""
    kind: str = field(default="asms", init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        ts = tuple(t if isinstance(t, AsmsTransition) else AsmsTransition.parse(t) for t in self.transitions)
        object.__setattr__(self, "transitions", ts)
        _check_unique("state", self.states)
        _check_unique("letter", self.alphabet)
        _check_unique("transition", ts)
        for t in ts:
            self._state_idx(t.source)
            self._state_idx(t.target)
            self._letter_idx(t.letter)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AsmsModel):
            return NotImplemented
        return (self.states, self.alphabet, frozenset(self.transitions)) == (
            other.states, other.alphabet, frozenset(other.transitions))

    def __hash__(self) -> int:
        return hash((self.states, self.alphabet, frozenset(self.transitions)))

    @cached_property
    def letter_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    def _letter_idx(self, a: str) -> int:
        try:
            return self.letter_index[a]
        except KeyError:
            raise DomainError(f"unknown letter {a!r} in model {self.name or self.kind}") from None

    @cached_property
    def _table(self):
        idx, lidx = self.index, self.letter_index
        return [(idx[t.source], t.op == "W", lidx[t.letter], idx[t.target]) for t in self.transitions]

    def encode(self, config: Config) -> Key:
        if not isinstance(config, AsmsConfiguration):
            raise DomainError(f"shared-memory configurations carry a register, got {config!r}")
        return self._counts(config.processes) + (self._letter_idx(config.register),)

    def decode(self, key: Key) -> AsmsConfiguration:
        return AsmsConfiguration(self._multiset(key[:-1]), self.alphabet[key[-1]])

    def key_successors(self, key: Key) -> Iterator[tuple[Any, Key]]:
        reg = key[-1]
        for ti, (p, write, d, q) in enumerate(self._table):
            if not key[p] or (not write and reg != d):
                continue
            new = list(key)
            new[p] -= 1
            new[q] += 1
            if write:
                new[-1] = d
            yield ti, tuple(new)

    def label_from_code(self, code: Any) -> AsmsTransition:
        return self.transitions[code]

    def step(self, config: Config, label: Label) -> AsmsConfiguration:
        """Fire one read or write; reads require the register to hold their letter."""
        if not isinstance(label, AsmsTransition) or label not in set(self.transitions):
            raise InvalidLabelError(f"{label} is not a transition of the model")
        if not isinstance(config, AsmsConfiguration):
            raise DomainError(f"shared-memory configurations carry a register, got {config!r}")
        if config.processes[label.source] == 0:
            raise NotEnabledError(f"no process in {label.source!r}")
        if label.op == "R" and config.register != label.letter:
            raise NotEnabledError(f"register holds {config.register!r}, {label} reads {label.letter!r}")
        procs = config.processes - MultiSet.of(label.source) + MultiSet.of(label.target)
        return AsmsConfiguration(procs, label.letter if label.op == "W" else config.register)


@dataclass(frozen=True, eq=False)
class IoNetModel(_Model):
    """Immediate-observation net: a process moves after observing another state."""

    states: tuple[str, ...]
    transitions: tuple[IoTransition, ...]
    name: str = ""
    kind: str = field(default="io", init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        ts = tuple(t if isinstance(t, IoTransition) else IoTransition.parse(t) for t in self.transitions)
        object.__setattr__(self, "transitions", ts)
        _check_unique("state", self.states)
        _check_unique("transition", ts)
        for t in ts:
            self._state_idx(t.source)
            self._state_idx(t.observed)
            self._state_idx(t.target)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IoNetModel):
            return NotImplemented
        return (self.states, frozenset(self.transitions)) == (other.states, frozenset(other.transitions))

    def __hash__(self) -> int:
        return hash((self.states, frozenset(self.transitions)))

    @cached_property
    def _table(self):
        idx = self.index
        return [(idx[t.source], idx[t.observed], idx[t.target]) for t in self.transitions]

    def encode(self, config: Config) -> Key:
        if not isinstance(config, Mapping):
            raise DomainError(f"IO configurations are multisets, got {config!r}")
        return self._counts(config)

    def decode(self, key: Key) -> MultiSet:
        return self._multiset(key)

    def key_successors(self, key: Key) -> Iterator[tuple[Any, Key]]:
        for ti, (p, o, q) in enumerate(self._table):
            # a process observing its own state needs a second process there
            if key[p] < (2 if p == o else 1) or not key[o]:
                continue
            new = list(key)
            new[p] -= 1
            new[q] += 1
            yield ti, tuple(new)

    def label_from_code(self, code: Any) -> IoTransition:
        return self.transitions[code]

    def step(self, config: Config, label: Label) -> MultiSet:
        if not isinstance(label, IoTransition) or label not in set(self.transitions):
            raise InvalidLabelError(f"{label} is not a transition of the net")
        if not isinstance(config, MultiSet):
            config = MultiSet(config)
        if not config >= MultiSet.of(label.source, label.observed):
            raise NotEnabledError(f"{label} needs {{{label.source}, {label.observed}}} in {config.render()}")
        return config - MultiSet.of(label.source) + MultiSet.of(label.target)


Model = Union[RbnModel, AsmsModel, IoNetModel]


def rbn_step(model: RbnModel, c: Config, label: Broadcast) -> MultiSet:
    return model.step(c, label)


def rbn_successors(model: RbnModel, c: MultiSet, cap: int = DEFAULT_SUCCESSOR_CAP) -> set[MultiSet]:
    return model.successors(c, cap)


def asms_step(model: AsmsModel, c: AsmsConfiguration, t: AsmsTransition) -> AsmsConfiguration:
    return model.step(c, t)


def io_step(model: IoNetModel, c: MultiSet, t: IoTransition) -> MultiSet:
    return model.step(c, t)


@dataclass(frozen=True)
class TraceStep:
    label: Label
    config: Config


@dataclass(frozen=True)
class RunTrace:
    """A run: an initial configuration and labelled steps with their results."""

    initial: Config
    steps: tuple[TraceStep, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def final(self) -> Config:
        return self.steps[-1].config if self.steps else self.initial

    @property
    def labels(self) -> tuple[Label, ...]:
        return tuple(s.label for s in self.steps)

    @property
    def configs(self) -> tuple[Config, ...]:
        return (self.initial, *(s.config for s in self.steps))

    @classmethod
    def from_labels(cls, model: Model, initial: Config, labels: Iterable[Label]) -> RunTrace:
        """Build a trace by firing ``labels`` in order; raises if a step is not enabled."""
        steps = []
        cur = initial
        for lab in labels:
            cur = model.step(cur, lab)
            steps.append(TraceStep(lab, cur))
        return cls(initial, tuple(steps))


@dataclass(frozen=True)
class ReplayResult:
    ok: bool
    final: Config
    bad_step: int | None = None  # 1-based index of the first failing step
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def replay(model: Model, trace: RunTrace) -> ReplayResult:
    """Re-fire every step of ``trace`` and compare against the stored configurations."""
    cur = trace.initial
    for i, st in enumerate(trace.steps, start=1):
        try:
            nxt = model.step(cur, st.label)
        except DomainError as exc:
            return ReplayResult(False, cur, i, str(exc))
        if nxt != st.config:
            return ReplayResult(False, cur, i, f"step yields {nxt} but trace stores {st.config}")
        cur = nxt
    return ReplayResult(True, cur)
