"""Multisets, cubes and counting constraints.

A configuration of every model in this package is a multiset of states.  Cubes
describe parameterized families of configurations through per-state lower and
upper bounds (uppers may be infinite); counting constraints are finite unions
of cubes and are closed under the Boolean operations implemented here.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Union

from .errors import DomainError, ResourceError

INF = math.inf
Bound = Union[int, float]  # natural or INF

DEFAULT_ENUM_CAP = 2_000_000


def _check_count(name: object, value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DomainError(f"count for {name!r} must be a natural number, got {value!r}")
    if value < 0:
        raise DomainError(f"count for {name!r} is negative ({value})")
    return value


class MultiSet(Mapping):
    """Immutable finite multiset; absent elements have count 0."""

    __slots__ = ("_counts", "_hash")

    def __init__(self, counts: Mapping[str, int] | Iterable[tuple[str, int]] | None = None):
        items = counts.items() if isinstance(counts, Mapping) else (counts or ())
        acc: dict[str, int] = {}
        for key, value in items:
            _check_count(key, value)
            if value:
                acc[key] = acc.get(key, 0) + value
        self._counts = acc
        self._hash: int | None = None

    @classmethod
    def of(cls, *elements: str) -> MultiSet:
        """``MultiSet.of("a", "a", "b")`` is the multiset with two a's and one b."""
        acc: dict[str, int] = {}
        for e in elements:
            acc[e] = acc.get(e, 0) + 1
        return cls(acc)

    @classmethod
    def singleton(cls, element: str, count: int = 1) -> MultiSet:
        return cls({element: count})

    def __getitem__(self, key: str) -> int:
        return self._counts.get(key, 0)

    def __contains__(self, key: object) -> bool:
        return key in self._counts

    def __iter__(self) -> Iterator[str]:
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, MultiSet):
            return self._counts == other._counts
        if isinstance(other, Mapping):
            return self._counts == {k: v for k, v in other.items() if v}
        return NotImplemented

    @property
    def size(self) -> int:
        return sum(self._counts.values())

    @property
    def support(self) -> frozenset[str]:
        return frozenset(self._counts)

    def __add__(self, other: Mapping[str, int]) -> MultiSet:
        if not isinstance(other, Mapping):
            return NotImplemented
        acc = dict(self._counts)
        for k, v in other.items():
            acc[k] = acc.get(k, 0) + v
        return MultiSet(acc)

    def __sub__(self, other: Mapping[str, int]) -> MultiSet:
        if not isinstance(other, Mapping):
            return NotImplemented
        acc = dict(self._counts)
        for k, v in other.items():
            left = acc.get(k, 0) - v
            if left < 0:
                raise DomainError(f"subtraction drops {k!r} below zero ({acc.get(k, 0)} - {v})")
            acc[k] = left
        return MultiSet(acc)

    def __le__(self, other: Mapping[str, int]) -> bool:
        if not isinstance(other, Mapping):
            return NotImplemented
        return all(other.get(k, 0) >= v for k, v in self._counts.items())

    def __ge__(self, other: Mapping[str, int]) -> bool:
        if not isinstance(other, Mapping):
            return NotImplemented
        return all(self._counts.get(k, 0) >= v for k, v in other.items())

    def restrict(self, states: Iterable[str]) -> MultiSet:
        keep = set(states)
        return MultiSet({k: v for k, v in self._counts.items() if k in keep})

    def concat(self, other: MultiSet, own_states: Iterable[str] | None = None,
               other_states: Iterable[str] | None = None) -> MultiSet:
        """Union of two multisets over disjoint state sets.

        Without explicit state sets the supports are required to be disjoint.
        """
        left = set(own_states) if own_states is not None else set(self._counts)
        right = set(other_states) if other_states is not None else set(other)
        if not self.support <= left or not other.support <= right:
            raise DomainError("multiset has elements outside its declared state set")
        overlap = left & right
        if overlap:
            raise DomainError(f"concatenation over overlapping state sets: {sorted(overlap)}")
        return self + other

    def render(self, order: Sequence[str] | None = None) -> str:
        keys = [k for k in order if k in self._counts] if order is not None else sorted(self._counts)
        return "{" + ", ".join(f"{k}:{self._counts[k]}" for k in keys) + "}"

    def __repr__(self) -> str:
        return f"MultiSet({self.render()})"

    __str__ = render


@dataclass(frozen=True)
class NormReport:
    lnorm: int
    unorm: int
    norm: int
    per_cube: tuple[NormReport, ...] = field(default=(), compare=False)


def _fmt_bound(b: Bound) -> str:
    return "inf" if b == INF else str(b)


@dataclass(frozen=True)
class Cube:
    """Configurations ``m`` over ``states`` with ``lower <= m <= upper``.

    ``lower`` and ``upper`` are aligned with ``states``.  ``register`` is set
    for cubes of shared-memory systems, which fix exactly one register value.
    """

    states: tuple[str, ...]
    lower: tuple[int, ...]
    upper: tuple[Bound, ...]
    register: str | None = None

    def __post_init__(self) -> None:
        if len(set(self.states)) != len(self.states):
            raise DomainError("cube state set has duplicates")
        if not (len(self.lower) == len(self.upper) == len(self.states)):
            raise DomainError("cube bounds are not aligned with its states")
        for q, lo, hi in zip(self.states, self.lower, self.upper):
            _check_count(q, lo)
            if hi != INF:
                _check_count(q, hi)
            if lo > hi:
                raise DomainError(f"empty bounds for {q!r}: {lo}..{_fmt_bound(hi)}")

    @classmethod
    def build(cls, states: Iterable[str], bounds: Mapping[str, tuple[Bound, Bound] | int] | None = None,
              default: tuple[Bound, Bound] = (0, INF), register: str | None = None) -> Cube:
        """Build a cube from a ``{state: (lo, hi)}`` map; a bare int fixes ``lo = hi``."""
        states = tuple(states)
        bounds = dict(bounds or {})
        unknown = set(bounds) - set(states)
        if unknown:
            raise DomainError(f"bounds for unknown states: {sorted(unknown)}")
        lows, highs = [], []
        for q in states:
            b = bounds.get(q, default)
            lo, hi = (b, b) if isinstance(b, int) else b
            lows.append(lo)
            highs.append(hi)
        return cls(states, tuple(lows), tuple(highs), register)

    @classmethod
    def universal(cls, states: Iterable[str], register: str | None = None) -> Cube:
        states = tuple(states)
        return cls(states, (0,) * len(states), (INF,) * len(states), register)

    @classmethod
    def point(cls, states: Iterable[str], config: Mapping[str, int], register: str | None = None) -> Cube:
        """The cube containing exactly one configuration."""
        states = tuple(states)
        return cls.build(states, {q: config.get(q, 0) for q in states}, register=register)

    @property
    def index(self) -> dict[str, int]:
        return {q: i for i, q in enumerate(self.states)}

    def bounds_of(self, state: str) -> tuple[int, Bound]:
        i = self.states.index(state)
        return self.lower[i], self.upper[i]

    @property
    def is_finite(self) -> bool:
        return all(u != INF for u in self.upper)

    def contains(self, m: object) -> bool:
        if hasattr(m, "register"):
            # a cube without a register value accepts every register value
            if self.register is not None and m.register != self.register:  # type: ignore[attr-defined]
                return False
            m = m.processes  # type: ignore[attr-defined]
        elif self.register is not None:
            raise DomainError("register cubes only hold shared-memory configurations")
        if not isinstance(m, Mapping):
            raise DomainError(f"not a configuration: {m!r}")
        extra = set(k for k, v in m.items() if v) - set(self.states)
        if extra:
            raise DomainError(f"configuration mentions states outside the cube: {sorted(extra)}")
        return all(lo <= m.get(q, 0) <= hi for q, lo, hi in zip(self.states, self.lower, self.upper))

    __contains__ = contains

    def intersect(self, other: Cube) -> Cube | None:
        _same_states(self.states, other.states)
        if self.register != other.register:
            return None
        lo = tuple(max(a, b) for a, b in zip(self.lower, other.lower))
        hi = tuple(min(a, b) for a, b in zip(self.upper, other.upper))
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return Cube(self.states, lo, hi, self.register)

    def norm(self) -> NormReport:
        ln = sum(self.lower)
        finite = [u for u in self.upper if u != INF]
        un = int(sum(finite)) if finite else 0
        return NormReport(ln, un, max(ln, un))

    def size_range(self) -> tuple[int, Bound]:
        return sum(self.lower), sum(self.upper)

    def members_of_size(self, n: int, slack: int | None = None) -> Iterator[dict[str, int]]:
        """All members of total size ``n`` as count dicts, in lexicographic order.

        Infinite uppers are truncated at ``lower + slack`` when ``slack`` is given.
        """
        highs = [
            (min(hi, lo + slack) if slack is not None else hi)
            for lo, hi in zip(self.lower, self.upper)
        ]
        k = len(self.states)
        rest_max = [0] * (k + 1)
        for i in range(k - 1, -1, -1):
            rest_max[i] = rest_max[i + 1] + highs[i]
        rest_min = [0] * (k + 1)
        for i in range(k - 1, -1, -1):
            rest_min[i] = rest_min[i + 1] + self.lower[i]
        counts = [0] * k

        def rec(i: int, left: int) -> Iterator[dict[str, int]]:
            if i == k:
                if left == 0:
                    yield {q: c for q, c in zip(self.states, counts) if c}
                return
            lo = max(self.lower[i], left - rest_max[i + 1])
            hi = min(highs[i], left - rest_min[i + 1])
            c = lo
            while c <= hi:
                counts[i] = c
                yield from rec(i + 1, left - c)
                c += 1
            counts[i] = 0

        if k == 0:
            if n == 0:
                yield {}
            return
        yield from rec(0, n)

    def render(self) -> str:
        parts = [f"{q}: {lo}..{_fmt_bound(hi)}" for q, lo, hi in zip(self.states, self.lower, self.upper)]
        if self.register is not None:
            parts.append(f"register: {self.register}")
        return "; ".join(parts)

    def __str__(self) -> str:
        return "(" + self.render() + ")"


def _same_states(a: Sequence[str], b: Sequence[str]) -> None:
    if tuple(a) != tuple(b):
        raise DomainError("operands range over different state sets")


def cube_member(m: object, c: Cube) -> bool:
    return c.contains(m)


@dataclass(frozen=True)
class CountingConstraint:
    """A finite union of cubes over a shared state set; no cubes is the empty set."""

    states: tuple[str, ...]
    cubes: tuple[Cube, ...] = ()

    def __post_init__(self) -> None:
        for c in self.cubes:
            _same_states(self.states, c.states)
            if c.register is not None:
                raise DomainError("counting constraints range over plain multisets")

    @classmethod
    def of(cls, *cubes: Cube) -> CountingConstraint:
        if not cubes:
            raise DomainError("use CountingConstraint(states) for the empty constraint")
        return cls(cubes[0].states, tuple(cubes))

    @classmethod
    def universal(cls, states: Iterable[str]) -> CountingConstraint:
        states = tuple(states)
        return cls(states, (Cube.universal(states),))

    def contains(self, m: Mapping[str, int]) -> bool:
        return any(c.contains(m) for c in self.cubes)

    __contains__ = contains

    def __or__(self, other: CountingConstraint) -> CountingConstraint:
        return constraint_union(self, other)

    def __and__(self, other: CountingConstraint) -> CountingConstraint:
        return constraint_intersect(self, other)

    def __invert__(self) -> CountingConstraint:
        return constraint_complement(self)

    def norm(self) -> NormReport:
        return constraint_norm(self)


def constraint_union(x: CountingConstraint, y: CountingConstraint) -> CountingConstraint:
    _same_states(x.states, y.states)
    return CountingConstraint(x.states, x.cubes + y.cubes)


def constraint_intersect(x: CountingConstraint, y: CountingConstraint) -> CountingConstraint:
    _same_states(x.states, y.states)
    out = []
    for a in x.cubes:
        for b in y.cubes:
            c = a.intersect(b)
            if c is not None and c not in out:
                out.append(c)
    return CountingConstraint(x.states, tuple(out))


def _cube_complement(c: Cube) -> CountingConstraint:
    # Outside the cube means some state is below its lower or above its finite upper bound.
    n = len(c.states)
    out = []
    for i in range(n):
        if c.lower[i] > 0:
            hi = [INF] * n
            hi[i] = c.lower[i] - 1
            out.append(Cube(c.states, (0,) * n, tuple(hi)))
        if c.upper[i] != INF:
            lo = [0] * n
            lo[i] = int(c.upper[i]) + 1
            out.append(Cube(c.states, tuple(lo), (INF,) * n))
    return CountingConstraint(c.states, tuple(out))


def constraint_complement(x: CountingConstraint) -> CountingConstraint:
    result = CountingConstraint.universal(x.states)
    for c in x.cubes:
        result = constraint_intersect(result, _cube_complement(c))
    return result


def constraint_norm(x: CountingConstraint) -> NormReport:
    reports = tuple(c.norm() for c in x.cubes)
    if not reports:
        return NormReport(0, 0, 0, ())
    return NormReport(
        max(r.lnorm for r in reports),
        max(r.unorm for r in reports),
        max(r.norm for r in reports),
        reports,
    )


def bounded_multisets(states: Sequence[str], bound: int, cap: int = DEFAULT_ENUM_CAP) -> Iterator[MultiSet]:
    """Every multiset over ``states`` whose components are all ``<= bound``."""
    total = (bound + 1) ** len(states)
    if total > cap:
        raise ResourceError(f"{total} multisets exceed the enumeration cap {cap}")
    for counts in itertools.product(range(bound + 1), repeat=len(states)):
        yield MultiSet(zip(states, counts))


def constraint_equiv_bounded(x: CountingConstraint, y: CountingConstraint, bound: int,
                             cap: int = DEFAULT_ENUM_CAP) -> bool:
    """Whether ``x`` and ``y`` agree on every multiset with components ``<= bound``."""
    _same_states(x.states, y.states)
    return all(x.contains(m) == y.contains(m) for m in bounded_multisets(x.states, bound, cap))
