"""Simulation compilers between broadcast networks, shared memory and IO nets.

Each compiler returns a :class:`ReductionArtifact` bundling the target model
with the maps needed to move configurations, cubes and runs across:

* ``rbn-to-asms``: a broadcast ``q !a q'`` becomes ``q W(a) [q,a,q']`` followed
  by ``[q,a,q'] W(#) q'``; a receive ``p ?a p'`` becomes ``p R(a) [p,a,p']``
  followed by ``[p,a,p'] W(#) p'``.  The register parks at the fresh letter
  ``#`` between simulated broadcasts.  Good configurations have nobody in an
  intermediary state and ``#`` in the register.
* ``asms-to-rbn``: the register becomes one extra process sitting in a state
  ``<d>`` per letter.  A write ``q W(a) q'`` is a two-message handshake: the
  register broadcasts ``Ch_a`` (moving to ``<~a>``), the writer receives it into
  ``[q,a,q']`` and later broadcasts ``Ack_a``, which the register receives to
  settle in ``<a>``.  Reads receive ``Read_d`` broadcast by the register from
  ``<d>`` (a self-loop).
* ``io-to-rbn``: every state broadcasts its own name; an observation
  ``p @ q -> p'`` is the receive ``p ?q p'``.

Decoding an asms-to-rbn run relies on a commutation argument.  Only the
register broadcasts ``Ch`` and ``Read``, and while it waits in ``<~a>`` nothing
but ``Ack_a`` broadcasts can happen.  A writer's ``Ack_a`` that the register
does not receive is therefore inert: the source write it encodes can be moved
to the moment the round it joined settles the register to ``a``, where writing
``a`` once more changes nothing.
"""

from __future__ import annotations

from collections import Counter, deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

from .engine import DEFAULT_CAP, _bfs, _trace_to
from .errors import DomainError
from .models import (AsmsConfiguration, AsmsModel, AsmsTransition, Broadcast, Config, IoNetModel,
                     Key, Model, RbnModel, RbnTransition, RunTrace, replay)
from .multiset import Cube, MultiSet

IDLE = "#"


def _fresh(candidate: str, taken: set[str]) -> str:
    """``candidate`` unless already used, else the first free ``candidate_<n>``."""
    name, n = candidate, 0
    while name in taken:
        n += 1
        name = f"{candidate}_{n}"
    taken.add(name)
    return name


class ReductionArtifact:
    """A compiled target model plus the translation maps of one reduction."""

    kind: str
    source: Model
    target: Model
    h: MultiSet
    renamed: dict[str, str]

    # configurations
    def embed_key(self, key: Key) -> Key:
        raise NotImplementedError

    def project_key(self, key: Key) -> Key | None:
        """Source key of a good target key, ``None`` for configurations outside the image."""
        raise NotImplementedError

    def embed_config(self, config: Config) -> Config:
        return self.target.decode(self.embed_key(self.source.encode(config)))

    def is_good(self, config: Config) -> bool:
        return self.project_key(self.target.encode(config)) is not None

    def project(self, config: Config) -> Config:
        k = self.project_key(self.target.encode(config))
        if k is None:
            raise DomainError(f"{config} is not a good configuration of the {self.kind} target")
        return self.source.decode(k)

    def embed_cube(self, cube: Cube) -> Cube:
        raise NotImplementedError

    # runs
    def encode_run(self, trace: RunTrace) -> RunTrace:
        raise NotImplementedError

    def decode_run(self, trace: RunTrace) -> RunTrace:
        raise NotImplementedError

    def lift_run(self, trace: RunTrace) -> RunTrace:
        """Decode any good-to-good target run (normalizing it first where needed)."""
        return self.decode_run(trace)

    def _check_endpoints(self, trace: RunTrace) -> None:
        res = replay(self.target, trace)
        if not res.ok:
            raise DomainError(f"trace does not replay at step {res.bad_step}: {res.reason}")
        for c in (trace.initial, trace.final):
            if not self.is_good(c):
                raise DomainError(f"trace endpoint {c} is not a good configuration")


# RBN simulated by shared memory

@dataclass(frozen=True)
class PseudoStep:
    """The target word encoding one broadcast step ``t + t_1 .. t_n``."""

    letter: str
    core: RbnTransition
    companions: tuple[RbnTransition, ...]
    word: tuple[AsmsTransition, ...]

    @property
    def source_label(self) -> Broadcast:
        return Broadcast(self.core, self.companions)


class RbnToAsms(ReductionArtifact):
    kind = "rbn-to-asms"

    def __init__(self, source: RbnModel):
        self.source = source
        taken = set(source.states)
        self.idle = _fresh(IDLE, set(source.alphabet))
        self.renamed = {IDLE: self.idle} if self.idle != IDLE else {}
        self.intermediate: dict[tuple[str, str, str], str] = {}
        for t in source.transitions:
            key = (t.source, t.letter, t.target)
            if key not in self.intermediate:
                self.intermediate[key] = _fresh(f"[{t.source},{t.letter},{t.target}]", taken)
        self.hat: dict[RbnTransition, AsmsTransition] = {}
        self.exit: dict[RbnTransition, AsmsTransition] = {}
        transitions: list[AsmsTransition] = []
        for t in source.transitions:
            mid = self.intermediate[(t.source, t.letter, t.target)]
            self.hat[t] = AsmsTransition(t.source, "W" if t.is_broadcast else "R", t.letter, mid)
            self.exit[t] = AsmsTransition(mid, "W", self.idle, t.target)
            transitions.append(self.hat[t])
            if self.exit[t] not in transitions:
                transitions.append(self.exit[t])
        self.origin = {v: k for k, v in self.hat.items()}
        self.mid_states = frozenset(self.intermediate.values())
        self.target = AsmsModel(source.states + tuple(self.intermediate.values()),
                                source.alphabet + (self.idle,), tuple(transitions),
                                name=f"{source.name}_asms" if source.name else "")
        self.h = MultiSet.of(self.idle)
        self._n = len(source.states)
        self._pad = (0,) * len(self.intermediate)
        self._idle_idx = self.target.letter_index[self.idle]

    def embed_key(self, key: Key) -> Key:
        return tuple(key) + self._pad + (self._idle_idx,)

    def project_key(self, key: Key) -> Key | None:
        n = self._n
        if key[-1] != self._idle_idx or any(key[n:-1]):
            return None
        return key[:n]

    def embed_config(self, config: Config) -> AsmsConfiguration:
        self.source.encode(config)  # validates state names
        return AsmsConfiguration(MultiSet(config), self.idle)

    def embed_cube(self, cube: Cube) -> Cube:
        if set(cube.states) != set(self.source.states) or cube.register is not None:
            raise DomainError("cube does not belong to the source broadcast network")
        bounds = {q: cube.bounds_of(q) for q in cube.states}
        bounds.update({m: (0, 0) for m in self.mid_states})
        return Cube.build(self.target.states, bounds, register=self.idle)

    def pseudo_step_word(self, label: Broadcast) -> tuple[AsmsTransition, ...]:
        ts = (label.sender, *label.receivers)
        return tuple(self.hat[t] for t in ts) + tuple(self.exit[t] for t in ts)

    def encode_run(self, trace: RunTrace) -> RunTrace:
        words = [w for st in trace.steps for w in self.pseudo_step_word(st.label)]
        return RunTrace.from_labels(self.target, self.embed_config(trace.initial), words)

    def pseudo_steps(self, trace: RunTrace) -> list[PseudoStep]:
        """Split a normal-form run into pseudo-steps; raises if it is not in normal form."""
        labels = list(trace.labels)
        out = []
        i = 0
        while i < len(labels):
            core = self.origin.get(labels[i])
            if core is None or not core.is_broadcast:
                raise DomainError(f"step {i + 1} ({labels[i]}) does not start a pseudo-step")
            j = i + 1
            companions = []
            while j < len(labels):
                t = self.origin.get(labels[j])
                if t is None or t.is_broadcast or t.letter != core.letter:
                    break
                companions.append(t)
                j += 1
            expected_exits = [self.exit[t] for t in (core, *companions)]
            exits = labels[j:j + len(expected_exits)]
            if exits != expected_exits:
                raise DomainError(f"pseudo-step starting at step {i + 1} does not close with its exits")
            end = j + len(expected_exits)
            out.append(PseudoStep(core.letter, core, tuple(companions), tuple(labels[i:end])))
            i = end
        return out

    def decode_run(self, trace: RunTrace) -> RunTrace:
        self._check_endpoints(trace)
        steps = self.pseudo_steps(trace)
        return RunTrace.from_labels(self.source, self.project(trace.initial),
                                    [ps.source_label for ps in steps])

    def lift_run(self, trace: RunTrace) -> RunTrace:
        return self.decode_run(normalize_asms_run(self, trace))


def compile_rbn_to_asms(r: RbnModel) -> RbnToAsms:
    return RbnToAsms(r)


def normalize_asms_run(artifact: RbnToAsms, trace: RunTrace) -> RunTrace:
    """Rearrange a good-to-good run of the compiled system into pseudo-steps.

    Works front to back.  The run (from a good configuration) starts with the
    write ``W(a)`` of a broadcaster; up to the next write of a letter other
    than ``#`` it can only read ``a`` and then write ``#``.  Processes still
    parked in an intermediary state at that point leave it later through
    ``W(#)``; those exits are moved forward so the prefix becomes one
    pseudo-step, and the rest is handled the same way.
    """
    if not isinstance(artifact, RbnToAsms):
        raise DomainError("run normalization applies to rbn-to-asms artifacts")
    artifact._check_endpoints(trace)
    idle = artifact.idle
    exit_of = {ex.source: ex for ex in artifact.exit.values()}
    labels = list(trace.labels)
    out: list[AsmsTransition] = []
    while labels:
        first = labels[0]
        core = artifact.origin.get(first)
        if core is None or not core.is_broadcast:
            raise DomainError(f"run leaves a good configuration with {first}, not a broadcast write")
        i = next((k for k in range(1, len(labels))
                  if labels[k].op == "W" and labels[k].letter != idle), len(labels))
        segment, rest = labels[:i], labels[i:]
        readers = [artifact.origin[t] for t in segment[1:] if t in artifact.origin]
        parked = Counter(t.target for t in segment if t in artifact.origin)
        parked.subtract(t.source for t in segment if t.op == "W" and t.letter == idle)
        for mid, count in parked.items():
            if count < 0:
                raise DomainError(f"exit from {mid} without a matching entry")
            for _ in range(count):
                ex = exit_of[mid]
                try:
                    rest.remove(ex)  # first occurrence
                except ValueError:
                    raise DomainError(f"process parked in {mid} never leaves it") from None
        out.extend(artifact.pseudo_step_word(Broadcast(core, tuple(readers))))
        labels = rest
    normal = RunTrace.from_labels(artifact.target, trace.initial, out)
    if normal.final != trace.final:
        raise DomainError("normalized run does not end where the input run ends")
    return normal


# Shared memory simulated by RBN

class AsmsToRbn(ReductionArtifact):
    kind = "asms-to-rbn"

    def __init__(self, source: AsmsModel):
        self.source = source
        taken = set(source.states)
        self.reg = {d: _fresh(f"<{d}>", taken) for d in source.alphabet}
        written = [a for a in source.alphabet if any(t.is_write and t.letter == a for t in source.transitions)]
        self.bar = {a: _fresh(f"<~{a}>", taken) for a in written}
        self.intermediate = {(t.source, t.letter, t.target): _fresh(f"[{t.source},{t.letter},{t.target}]", taken)
                             for t in source.transitions if t.is_write}
        letters: set[str] = set()
        self.ch = {a: _fresh(f"Ch_{a}", letters) for a in written}
        self.ack = {a: _fresh(f"Ack_{a}", letters) for a in written}
        self.read = {d: _fresh(f"Read_{d}", letters) for d in source.alphabet}
        self.renamed = {}
        ts: list[RbnTransition] = []
        self.enter: dict[AsmsTransition, RbnTransition] = {}
        self.leave: dict[AsmsTransition, RbnTransition] = {}
        self.reader: dict[AsmsTransition, RbnTransition] = {}
        for t in source.transitions:
            if t.is_write:
                mid = self.intermediate[(t.source, t.letter, t.target)]
                self.enter[t] = RbnTransition(t.source, "?", self.ch[t.letter], mid)
                self.leave[t] = RbnTransition(mid, "!", self.ack[t.letter], t.target)
                ts += [self.enter[t], self.leave[t]]
            else:
                self.reader[t] = RbnTransition(t.source, "?", self.read[t.letter], t.target)
                ts.append(self.reader[t])
        self.change = {(d, a): RbnTransition(self.reg[d], "!", self.ch[a], self.bar[a])
                       for d in source.alphabet for a in written}
        self.settle = {a: RbnTransition(self.bar[a], "?", self.ack[a], self.reg[a]) for a in written}
        self.announce = {d: RbnTransition(self.reg[d], "!", self.read[d], self.reg[d]) for d in source.alphabet}
        ts += list(self.change.values()) + list(self.settle.values()) + list(self.announce.values())
        alphabet = tuple(self.ch[a] for a in written) + tuple(self.ack[a] for a in written) + \
            tuple(self.read[d] for d in source.alphabet)
        states = (source.states + tuple(self.reg.values()) + tuple(self.bar.values())
                  + tuple(self.intermediate.values()))
        self.target = RbnModel(states, alphabet, tuple(ts), name=f"{source.name}_rbn" if source.name else "")
        self.h = MultiSet()
        self._n = len(source.states)
        self._nreg = len(source.alphabet)
        self._tail = (0,) * (len(self.bar) + len(self.intermediate))
        self._origin = {v: k for table in (self.enter, self.leave, self.reader) for k, v in table.items()}
        self._change_of = {v: k for k, v in self.change.items()}
        self._announce_of = {v: k for k, v in self.announce.items()}

    def embed_key(self, key: Key) -> Key:
        regs = [0] * self._nreg
        regs[key[-1]] = 1
        return tuple(key[:-1]) + tuple(regs) + self._tail

    def project_key(self, key: Key) -> Key | None:
        n, r = self._n, self._nreg
        regs = key[n:n + r]
        if sum(regs) != 1 or any(key[n + r:]):
            return None
        return tuple(key[:n]) + (regs.index(1),)

    def embed_cube(self, cube: Cube) -> Cube:
        if set(cube.states) != set(self.source.states) or cube.register is None:
            raise DomainError("cube does not belong to the source shared-memory system")
        bounds: dict[str, Any] = {q: cube.bounds_of(q) for q in cube.states}
        for d, s in self.reg.items():
            bounds[s] = 1 if d == cube.register else 0
        for s in (*self.bar.values(), *self.intermediate.values()):
            bounds[s] = 0
        return Cube.build(self.target.states, bounds)

    def encode_run(self, trace: RunTrace) -> RunTrace:
        labels: list[Broadcast] = []
        reg = trace.initial.register
        for st in trace.steps:
            t = st.label
            if t.is_write:
                labels.append(Broadcast(self.change[(reg, t.letter)], (self.enter[t],)))
                labels.append(Broadcast(self.leave[t], (self.settle[t.letter],)))
                reg = t.letter
            else:
                labels.append(Broadcast(self.announce[t.letter], (self.reader[t],)))
        return RunTrace.from_labels(self.target, self.embed_config(trace.initial), labels)

    def decode_run(self, trace: RunTrace) -> RunTrace:
        """Map a good-to-good handshake run back to a run of the shared-memory system.

        A write is placed where the register settles on its letter: at the
        writer's own ``Ack`` if the register received it, otherwise when the
        round the writer joined settles.
        """
        self._check_endpoints(trace)
        parked: dict[str, deque] = {}
        settled_at: list[int | None] = []  # per round, the step where the register settles
        current: int | None = None
        at: dict[int, list[AsmsTransition]] = {}
        inert: list[tuple[AsmsTransition, int]] = []
        for i, st in enumerate(trace.steps):
            lab = st.label
            if lab.sender in self._change_of:
                settled_at.append(None)
                current = len(settled_at) - 1
                for r in lab.receivers:
                    parked.setdefault(r.target, deque()).append((self._origin[r], current))
            elif lab.sender in self._announce_of:
                at.setdefault(i, []).extend(self._origin[r] for r in lab.receivers)
            else:
                w = self._origin.get(lab.sender)
                if w is None or not w.is_write or not parked.get(lab.sender.source):
                    raise DomainError(f"unexpected broadcast {lab.sender} at step {i + 1}")
                w, joined = parked[lab.sender.source].popleft()
                if lab.receivers:
                    settled_at[current] = i
                    at.setdefault(i, []).append(w)
                else:
                    inert.append((w, joined))
        for w, joined in inert:
            if settled_at[joined] is None:
                raise DomainError("a write round never settles the register")
            at[settled_at[joined]].append(w)
        labels = [t for i in sorted(at) for t in at[i]]
        decoded = RunTrace.from_labels(self.source, self.project(trace.initial), labels)
        if decoded.final != self.project(trace.final):
            raise DomainError("decoded run does not reach the projected endpoint")
        return decoded


def compile_asms_to_rbn(p: AsmsModel) -> AsmsToRbn:
    return AsmsToRbn(p)


# IO nets simulated by RBN

class IoToRbn(ReductionArtifact):
    kind = "io-to-rbn"

    def __init__(self, source: IoNetModel):
        self.source = source
        self.renamed = {}
        self.shout = {q: RbnTransition(q, "!", q, q) for q in source.states}
        self.observe = {t: RbnTransition(t.source, "?", t.observed, t.target) for t in source.transitions}
        self.target = RbnModel(source.states, source.states,
                               tuple(self.shout.values()) + tuple(self.observe.values()),
                               name=f"{source.name}_rbn" if source.name else "")
        self._origin = {v: k for k, v in self.observe.items()}
        self.h = MultiSet()

    def embed_key(self, key: Key) -> Key:
        return tuple(key)

    def project_key(self, key: Key) -> Key | None:
        return tuple(key)

    def embed_cube(self, cube: Cube) -> Cube:
        if set(cube.states) != set(self.source.states):
            raise DomainError("cube does not belong to the source net")
        return cube

    def encode_run(self, trace: RunTrace) -> RunTrace:
        labels = [Broadcast(self.shout[t.observed], (self.observe[t],)) for t in trace.labels]
        return RunTrace.from_labels(self.target, trace.initial, labels)

    def decode_run(self, trace: RunTrace) -> RunTrace:
        res = replay(self.target, trace)
        if not res.ok:
            raise DomainError(f"trace does not replay at step {res.bad_step}: {res.reason}")
        labels = [self._origin[r] for st in trace.steps for r in st.label.receivers]
        return RunTrace.from_labels(self.source, trace.initial, labels)


def compile_io_to_rbn(n: IoNetModel) -> IoToRbn:
    return IoToRbn(n)


class ComposedArtifact(ReductionArtifact):
    """``second`` applied to the target of ``first``."""

    def __init__(self, first: ReductionArtifact, second: ReductionArtifact):
        if second.source != first.target:
            raise DomainError("artifacts do not compose")
        self.first, self.second = first, second
        self.kind = f"{first.kind}+{second.kind}"
        self.source, self.target = first.source, second.target
        self.renamed = {**first.renamed, **second.renamed}
        # the padding of the first stage is carried through the second embedding
        inner = second.embed_key(first.embed_key(self.source.encode(_empty(self.source))))
        self.h = self.target.decode(inner) if not isinstance(self.target, AsmsModel) else MultiSet()

    def embed_key(self, key: Key) -> Key:
        return self.second.embed_key(self.first.embed_key(key))

    def project_key(self, key: Key) -> Key | None:
        mid = self.second.project_key(key)
        return None if mid is None else self.first.project_key(mid)

    def embed_cube(self, cube: Cube) -> Cube:
        return self.second.embed_cube(self.first.embed_cube(cube))

    def encode_run(self, trace: RunTrace) -> RunTrace:
        return self.second.encode_run(self.first.encode_run(trace))

    def decode_run(self, trace: RunTrace) -> RunTrace:
        return self.first.lift_run(self.second.lift_run(trace))


def _empty(model: Model) -> Config:
    if isinstance(model, AsmsModel):
        return AsmsConfiguration(MultiSet(), model.alphabet[0])
    return MultiSet()


def compose(first: ReductionArtifact, second: ReductionArtifact) -> ComposedArtifact:
    return ComposedArtifact(first, second)


# Strong-simulation harness

def source_configs(model: Model, max_population: int) -> list[Config]:
    """Every configuration of ``model`` with at most ``max_population`` processes."""
    everything = Cube.universal(model.states)
    out: list[Config] = []
    for n in range(max_population + 1):
        for m in everything.members_of_size(n):
            if isinstance(model, AsmsModel):
                out.extend(AsmsConfiguration(MultiSet(m), d) for d in model.alphabet)
            else:
                out.append(MultiSet(m))
    return out


@dataclass(frozen=True)
class Counterexample:
    source: Config
    reached: Config
    side: str  # "source-only" or "target-only"
    witness: RunTrace | None = None

    def __str__(self) -> str:
        return f"{self.side}: {self.source} -> {self.reached}"


@dataclass
class SimulationReport:
    kind: str
    sources_checked: int = 0
    pairs_checked: int = 0
    counterexamples: list[Counterexample] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def _post_keys(model: Model, key: Key, cap: int) -> tuple[dict, bool]:
    s = _bfs(model, [key], None, cap)
    return s.parent, s.exhausted


def check_strong_simulation(artifact: ReductionArtifact, population_bound: int,
                            sample: Iterable[tuple[Config, Config]] | None = None,
                            cap: int = DEFAULT_CAP, max_counterexamples: int = 10) -> SimulationReport:
    """Check ``C' ∈ post*(C)  ⟺  embed(C') ∈ post*(embed(C))`` for small configurations.

    Exhaustive over every source ``C`` with ``|C| <= population_bound`` (and
    every ``C'``, since only good target configurations project back) unless
    ``sample`` lists explicit pairs.
    """
    src, tgt = artifact.source, artifact.target
    report = SimulationReport(artifact.kind)
    if sample is not None:
        by_source: dict[Key, list[Key]] = {}
        for c, c2 in sample:
            by_source.setdefault(src.encode(c), []).append(src.encode(c2))
    else:
        by_source = {src.encode(c): None for c in source_configs(src, population_bound)}

    for ck, wanted in by_source.items():
        if src.population(ck) > population_bound:
            continue
        report.sources_checked += 1
        s_parent, s_done = _post_keys(src, ck, cap)
        t_parent, t_done = _post_keys(tgt, artifact.embed_key(ck), cap)
        if not (s_done and t_done):
            raise DomainError("reachable set exceeds the engine cap")
        t_image: dict[Key, Key] = {}
        for tk in t_parent:
            pk = artifact.project_key(tk)
            if pk is not None:
                t_image.setdefault(pk, tk)
        candidates = wanted if wanted is not None else set(s_parent) | set(t_image)
        for c2 in candidates:
            report.pairs_checked += 1
            in_s, in_t = c2 in s_parent, c2 in t_image
            if in_s == in_t:
                continue
            if len(report.counterexamples) < max_counterexamples:
                if in_s:
                    report.counterexamples.append(Counterexample(
                        src.decode(ck), src.decode(c2), "source-only", _trace_to(src, s_parent, c2)))
                else:
                    report.counterexamples.append(Counterexample(
                        src.decode(ck), src.decode(c2), "target-only", _trace_to(tgt, t_parent, t_image[c2])))
            else:
                report.counterexamples.append(Counterexample(src.decode(ck), src.decode(c2),
                                                             "source-only" if in_s else "target-only"))
    return report


def compile_model(kind: str, model: Model) -> ReductionArtifact:
    table = {"rbn-to-asms": (RbnModel, RbnToAsms), "asms-to-rbn": (AsmsModel, AsmsToRbn),
             "io-to-rbn": (IoNetModel, IoToRbn)}
    if kind not in table:
        raise DomainError(f"unknown reduction {kind!r}")
    want, cls = table[kind]
    if not isinstance(model, want):
        raise DomainError(f"{kind} expects a {want.__name__}, got {type(model).__name__}")
    return cls(model)


def size_bound(model: Model) -> int:
    """Polynomial budget for target state counts: ``|Q| + |δ| + 2|Σ| + 1``."""
    sigma = len(getattr(model, "alphabet", ())) or len(model.states)
    return len(model.states) + len(model.transitions) + 2 * sigma + 1


__all__: Sequence[str] = (
    "ReductionArtifact", "RbnToAsms", "AsmsToRbn", "IoToRbn", "ComposedArtifact", "PseudoStep",
    "compile_rbn_to_asms", "compile_asms_to_rbn", "compile_io_to_rbn", "compose", "compile_model",
    "normalize_asms_run", "check_strong_simulation", "SimulationReport", "Counterexample",
    "source_configs", "size_bound",
)
