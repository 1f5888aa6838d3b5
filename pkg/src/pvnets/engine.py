"""Explicit-state reachability over fixed-population configuration spaces.

Every model conserves its population, so the configurations reachable from a
start configuration form a finite graph.  The engine explores it breadth-first
in canonical (sorted) layer order, which keeps witnesses deterministic.  Verdicts
are three-valued: a search that hit a cap or a bound never claims NO.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any

from .errors import DomainError, ResourceError
from .models import (AsmsConfiguration, AsmsModel, Config, Key, Model, RbnModel, RunTrace,
                     TraceStep)
from .multiset import INF, CountingConstraint, Cube, MultiSet

log = logging.getLogger(__name__)

DEFAULT_CAP = 5_000_000
DEFAULT_MAX_POPULATION = 8


class Verdict(str, Enum):
    YES = "yes"
    NO = "no"
    BOUNDED_NO = "bounded-no"

    @property
    def exit_code(self) -> int:
        return {"yes": 0, "no": 1, "bounded-no": 2}[self.value]


@dataclass(frozen=True)
class Occupies:
    """Target predicate: at least one process in ``state`` (the upward closure of ``state``)."""

    state: str

    def __call__(self, config: Config) -> bool:
        procs = config.processes if isinstance(config, AsmsConfiguration) else config
        return procs[self.state] > 0


def key_predicate(model: Model, target: Any) -> Callable[[Key], bool]:
    """Compile a target (cube, constraint, :class:`Occupies` or callable) to a key test."""
    if isinstance(target, Occupies):
        i = model._state_idx(target.state)
        return lambda k: k[i] > 0
    if isinstance(target, Cube):
        return _cube_key_test(model, target)
    if isinstance(target, CountingConstraint):
        tests = [_cube_key_test(model, c) for c in target.cubes]
        return lambda k: any(t(k) for t in tests)
    if callable(target):
        return lambda k: bool(target(model.decode(k)))
    raise DomainError(f"unsupported reachability target {target!r}")


def _cube_key_test(model: Model, cube: Cube) -> Callable[[Key], bool]:
    if set(cube.states) != set(model.states):
        raise DomainError("cube and model range over different state sets")
    lows = [0] * len(model.states)
    highs: list[Any] = [INF] * len(model.states)
    for q, lo, hi in zip(cube.states, cube.lower, cube.upper):
        i = model.index[q]
        lows[i], highs[i] = lo, hi
    n = len(model.states)
    checks = [(i, lows[i], highs[i]) for i in range(n) if lows[i] > 0 or highs[i] != INF]
    if isinstance(model, AsmsModel):
        if cube.register is None:  # as a target: any register value
            return lambda k: all(lo <= k[i] <= hi for i, lo, hi in checks)
        reg = model._letter_idx(cube.register)
        return lambda k: k[-1] == reg and all(lo <= k[i] <= hi for i, lo, hi in checks)
    if cube.register is not None:
        raise DomainError(f"{model.kind} cubes carry no register value")
    return lambda k: all(lo <= k[i] <= hi for i, lo, hi in checks)


def cube_keys(model: Model, cube: Cube, size: int, slack: int | None = None) -> list[Key]:
    """Encoded members of ``cube`` with exactly ``size`` processes."""
    if set(cube.states) != set(model.states):
        raise DomainError("cube and model range over different state sets")
    if isinstance(model, AsmsModel):
        if cube.register is None:
            raise DomainError("shared-memory cubes must fix a register value")
        return [model.encode(AsmsConfiguration(MultiSet(m), cube.register))
                for m in cube.members_of_size(size, slack)]
    return [model.encode(MultiSet(m)) for m in cube.members_of_size(size, slack)]


@dataclass
class _Search:
    parent: dict[Key, Any]
    found: Key | None
    exhausted: bool


def _bfs(model: Model, roots: Iterable[Key], is_target: Callable[[Key], bool] | None,
         cap: int) -> _Search:
    frontier = sorted(set(roots))
    parent: dict[Key, Any] = {k: None for k in frontier}
    if len(parent) > cap:
        return _Search(parent, None, False)
    if is_target is not None:
        for k in frontier:
            if is_target(k):
                return _Search(parent, k, False)
    while frontier:
        layer = []
        for k in frontier:
            for code, s in model.key_successors(k):
                if s in parent:
                    continue
                parent[s] = (k, code)
                if is_target is not None and is_target(s):
                    return _Search(parent, s, False)
                layer.append(s)
            if len(parent) > cap:
                log.debug("search cap %d hit", cap)
                return _Search(parent, None, False)
        frontier = sorted(layer)
    return _Search(parent, None, True)


def _trace_to(model: Model, parent: dict[Key, Any], end: Key) -> RunTrace:
    chain = []
    k = end
    while parent[k] is not None:
        prev, code = parent[k]
        chain.append((code, k))
        k = prev
    chain.reverse()
    steps = tuple(TraceStep(model.label_from_code(code), model.decode(s)) for code, s in chain)
    return RunTrace(model.decode(k), steps)


@dataclass
class ReachResult:
    """Outcome of a forward search: the explored set, an optional witness, completeness."""

    model: Model
    keys: frozenset
    witness: RunTrace | None
    exhausted: bool

    @cached_property
    def reached(self) -> frozenset:
        return frozenset(self.model.decode(k) for k in self.keys)

    @property
    def verdict(self) -> Verdict:
        if self.witness is not None:
            return Verdict.YES
        return Verdict.NO if self.exhausted else Verdict.BOUNDED_NO


def post_star(model: Model, c0: Config, cap: int = DEFAULT_CAP) -> ReachResult:
    """All configurations reachable from ``c0``; partial (``exhausted=False``) past ``cap``."""
    s = _bfs(model, [model.encode(c0)], None, cap)
    return ReachResult(model, frozenset(s.parent), None, s.exhausted)


def reaches(model: Model, c0: Config, target: Any, cap: int = DEFAULT_CAP) -> ReachResult:
    """Search for a configuration satisfying ``target``; the witness is a shortest run."""
    s = _bfs(model, [model.encode(c0)], key_predicate(model, target), cap)
    witness = _trace_to(model, s.parent, s.found) if s.found is not None else None
    return ReachResult(model, frozenset(s.parent), witness, s.exhausted)


@dataclass
class CubeReachResult:
    verdict: Verdict
    witness: RunTrace | None = None
    note: str = ""
    per_population: dict[int, str] = field(default_factory=dict)


def cube_reach_bounded(model: Model, src: Cube, dst: Cube | CountingConstraint | Any,
                       populations: Iterable[int] = range(DEFAULT_MAX_POPULATION + 1),
                       cap: int = DEFAULT_CAP, slack: int | None = None) -> CubeReachResult:
    """Does some member of ``src`` (with population in ``populations``) reach ``dst``?

    Each population is searched with all its source members as simultaneous
    roots.  NO is only returned when ``src`` is finite, every population it can
    have was searched, and every search completed; otherwise a failed search
    is BOUNDED-NO.
    """
    pops = sorted(set(populations))
    test = key_predicate(model, dst)
    per: dict[int, str] = {}
    complete = True
    any_source = False
    for n in pops:
        roots = cube_keys(model, src, n, slack)
        if not roots:
            per[n] = "empty"
            continue
        any_source = True
        s = _bfs(model, roots, test, cap)
        if s.found is not None:
            per[n] = "yes"
            return CubeReachResult(Verdict.YES, _trace_to(model, s.parent, s.found),
                                   f"witness at population {n}", per)
        per[n] = "exhausted" if s.exhausted else "cap"
        complete = complete and s.exhausted
    lo, hi = src.size_range()
    covered = src.is_finite and all(n in per for n in range(lo, int(hi) + 1))
    if covered and complete:
        return CubeReachResult(Verdict.NO, None, "all source configurations exhausted", per)
    if not any_source:
        note = "source cube has no member with a population in the given bounds"
    elif not complete:
        note = "search cap reached"
    else:
        note = "no witness within the population bounds"
    return CubeReachResult(Verdict.BOUNDED_NO, None, note, per)


def initial_config(model: Model, state: str, k: int, register: str | None = None) -> Config:
    m = MultiSet({state: k}) if k else MultiSet()
    if isinstance(model, AsmsModel):
        if register is None:
            raise DomainError("shared-memory systems need an initial register value")
        return AsmsConfiguration(m, register)
    return m


def _reachable_graph(model: Model, root: Key, cap: int) -> tuple[list[Key], list[list[int]]]:
    order = [root]
    where = {root: 0}
    succ: list[list[int]] = []
    i = 0
    while i < len(order):
        out = []
        for _, s in model.key_successors(order[i]):
            j = where.get(s)
            if j is None:
                j = where[s] = len(order)
                order.append(s)
                if len(order) > cap:
                    raise ResourceError(f"population graph exceeds the cap of {cap} configurations")
            out.append(j)
        succ.append(out)
        i += 1
    return order, succ


def almost_sure_counterexample(model: Model, q_init: str, q_final: str, k: int,
                               register: str | None = None, cap: int = DEFAULT_CAP) -> Config | None:
    """A configuration reachable from ``k`` processes in ``q_init`` that can no longer cover ``q_final``."""
    if k < 1:
        raise DomainError("population must be at least 1")
    f = model._state_idx(q_final)
    root = model.encode(initial_config(model, q_init, k, register))
    order, succ = _reachable_graph(model, root, cap)
    pred: list[list[int]] = [[] for _ in order]
    for i, outs in enumerate(succ):
        for j in outs:
            pred[j].append(i)
    good = [k_[f] > 0 for k_ in order]
    stack = [i for i, g in enumerate(good) if g]
    while stack:
        j = stack.pop()
        for i in pred[j]:
            if not good[i]:
                good[i] = True
                stack.append(i)
    for i, g in enumerate(good):
        if not g:
            return model.decode(order[i])
    return None


def almost_sure_cover_fixed_k(model: Model, q_init: str, q_final: str, k: int,
                              register: str | None = None, cap: int = DEFAULT_CAP) -> bool:
    """Whether ``post*(k·q_init) ⊆ pre*(↑q_final)`` at population ``k``."""
    return almost_sure_counterexample(model, q_init, q_final, k, register, cap) is None


def rbn_saturation(model: RbnModel, initial_states: Iterable[str]) -> frozenset[str]:
    """States coverable from arbitrarily large populations supported on ``initial_states``."""
    seen = set(initial_states)
    for q in seen:
        model._state_idx(q)
    changed = True
    while changed:
        changed = False
        for t in model.broadcasts:
            if t.source not in seen:
                continue
            new = {t.target} | {r.target for r in model.receives
                                if r.letter == t.letter and r.source in seen}
            if not new <= seen:
                seen |= new
                changed = True
    return frozenset(seen)


def saturate_coverable_rbn(model: RbnModel, initial_states: Iterable[str], target: str) -> bool:
    model._state_idx(target)
    return target in rbn_saturation(model, initial_states)


def multi_source_reach(model: Model, roots: Sequence[Key], target: Any,
                       cap: int = DEFAULT_CAP) -> tuple[RunTrace | None, bool]:
    """Key-level helper: search from several roots at once; returns (witness, exhausted)."""
    s = _bfs(model, roots, key_predicate(model, target), cap)
    return (_trace_to(model, s.parent, s.found) if s.found is not None else None), s.exhausted
