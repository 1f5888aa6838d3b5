"""Problem-level wrappers on top of the reachability engine.

Leader protocols, cardinality reachability (CRP) from unbounded initial
supports, empirical cut-off scans, and generators for the two running examples
(the exponential counter family and the four-letter shared-memory system).
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from .engine import (DEFAULT_CAP, CubeReachResult, Verdict, almost_sure_cover_fixed_k, cube_reach_bounded,
                     rbn_saturation, reaches)
from .errors import DomainError, PvError
from .models import AsmsConfiguration, AsmsModel, IoNetModel, Model, RbnModel, RunTrace
from .multiset import INF, Cube, MultiSet
from .reductions import compile_io_to_rbn


@dataclass(frozen=True)
class GeneratedInstance:
    """A built-in model together with its named cubes."""

    model: Model
    cubes: Mapping[str, Cube]


def gen_counter_rbn(n: int) -> GeneratedInstance:
    """Counter network whose last stage needs ``2**n`` token holders to fire.

    Stage ``i`` waits in ``a_i``, hears letter ``i`` twice (``a_i -> b_i -> c_i``)
    and then broadcasts ``i+1``; the token processes each broadcast ``1`` once.
    """
    if n < 1:
        raise DomainError("counter size must be at least 1")
    states = ["tok", "sent"]
    transitions = ["tok !1 sent"]
    for i in range(1, n + 1):
        states += [f"a{i}", f"b{i}", f"c{i}"]
        transitions += [f"a{i} ?{i} b{i}", f"b{i} ?{i} c{i}", f"c{i} !{i + 1} a{i}"]
    model = RbnModel(tuple(states), tuple(str(i) for i in range(1, n + 2)), tuple(transitions),
                     name=f"counter{n}")
    c0 = Cube.build(states, {"tok": (0, INF), **{f"a{i}": 1 for i in range(1, n + 1)}}, default=(0, 0))
    cf = Cube.build(states, {f"c{n}": (1, INF)})
    return GeneratedInstance(model, {"C0": c0, "Cf": cf})


def gen_fig2_asms() -> GeneratedInstance:
    """Shared-memory system where one writer must write both 1 and 2 to let ``a4`` be reached."""
    states = ("a1", "a2", "a3", "a4", "b1", "b2", "b3", "c1", "c2", "c3")
    transitions = ("a1 W(1) a2", "a1 W(2) a2", "a2 R(3) a3", "a3 R(4) a4",
                   "b1 R(1) b2", "b2 W(3) b3", "c1 R(2) c2", "c2 W(4) c3")
    model = AsmsModel(states, ("#", "1", "2", "3", "4"), transitions, name="fig2")
    src = Cube.build(states, {"a1": 1, "b1": (0, INF), "c1": (0, INF)}, default=(0, 0), register="#")
    dst = Cube.build(states, {"a4": (1, INF)})  # any register value
    return GeneratedInstance(model, {"C": src, "Cprime": dst})


# Leader protocols

@dataclass(frozen=True)
class LeaderProtocol:
    """One leader process running ``leader`` among any number of ``contributor`` processes."""

    contributor: Model
    leader: Model
    leader_init: str
    leader_final: str
    contributor_init: str
    register_init: str | None = None
    register_final: str | None = None  # None: any final register value

    def __post_init__(self) -> None:
        if type(self.contributor) is not type(self.leader) or isinstance(self.leader, IoNetModel):
            raise DomainError("leader and contributor must both be broadcast networks or both shared memory")
        if self.contributor.alphabet != self.leader.alphabet:
            raise DomainError("leader and contributor must share their alphabet")
        overlap = set(self.contributor.states) & set(self.leader.states)
        if overlap:
            raise DomainError(f"leader and contributor share states: {sorted(overlap)}")
        for q in (self.leader_init, self.leader_final):
            self.leader._state_idx(q)
        self.contributor._state_idx(self.contributor_init)
        if isinstance(self.leader, AsmsModel):
            if self.register_init is None:
                raise DomainError("shared-memory leader instances need an initial register value")
            for d in (self.register_init, self.register_final):
                if d is not None:
                    self.leader._letter_idx(d)
        elif self.register_init is not None or self.register_final is not None:
            raise DomainError("broadcast leader instances have no register")


def leader_to_cube(lp: LeaderProtocol) -> tuple[Model, Cube, Cube]:
    """Merge leader and contributors into one model plus the source and target leader cubes."""
    kind = type(lp.leader)
    states = lp.leader.states + lp.contributor.states
    model = kind(states, lp.leader.alphabet, lp.leader.transitions + lp.contributor.transitions,
                 name=f"{lp.leader.name}_{lp.contributor.name}".strip("_"))
    leader_bounds = {q: 0 for q in lp.leader.states}
    src = Cube.build(states, {**leader_bounds, lp.leader_init: 1, lp.contributor_init: (0, INF)},
                     default=(0, 0), register=lp.register_init)
    dst = Cube.build(states, {**leader_bounds, lp.leader_final: 1}, default=(0, INF),
                     register=lp.register_final)
    return model, src, dst


@dataclass
class LeaderResult:
    verdict: Verdict
    witness: RunTrace | None = None
    contributors: int | None = None
    per_k: dict[int, str] = field(default_factory=dict)


def leader_reach_bounded(lp: LeaderProtocol, k_max: int, cap: int = DEFAULT_CAP) -> LeaderResult:
    """Scan contributor counts ``1..k_max`` for a run taking the leader to its final state."""
    model, _, dst = leader_to_cube(lp)
    per: dict[int, str] = {}
    for k in range(1, k_max + 1):
        m = MultiSet({lp.leader_init: 1, lp.contributor_init: k})
        c0 = AsmsConfiguration(m, lp.register_init) if isinstance(model, AsmsModel) else m
        res = reaches(model, c0, dst, cap)
        per[k] = res.verdict.value
        if res.witness is not None:
            return LeaderResult(Verdict.YES, res.witness, k, per)
    return LeaderResult(Verdict.BOUNDED_NO, None, None, per)


# Cardinality reachability

CRP_VARIANTS = ("ge1", "ge1eq0", "general")


@dataclass
class CrpResult:
    verdict: Verdict
    witness: RunTrace | None = None
    note: str = ""


def _check_crp_cube(dst: Cube, variant: str) -> None:
    if variant not in CRP_VARIANTS:
        raise DomainError(f"unknown CRP variant {variant!r}; expected one of {CRP_VARIANTS}")
    if dst.register is not None:
        raise DomainError("cardinality targets carry no register value")
    for q, lo, hi in zip(dst.states, dst.lower, dst.upper):
        if variant == "ge1" and (lo not in (0, 1) or hi != INF):
            raise DomainError(f"variant ge1 needs bounds 0..inf or 1..inf, got {q}: {lo}..{hi}")
        if variant == "ge1eq0" and (lo not in (0, 1) or hi not in (0, INF) or lo > hi):
            raise DomainError(f"variant ge1eq0 needs bounds 0..0, 0..inf or 1..inf, got {q}: {lo}..{hi}")


def crp_check(model: RbnModel | IoNetModel, src_support: Iterable[str], dst: Cube, variant: str = "ge1",
              k_max: int = 6, cap: int = DEFAULT_CAP) -> CrpResult:
    """Can some configuration supported on ``src_support`` (any size) reach ``dst``?

    Every state a target requires must lie in the saturation of the support,
    which refutes the instance otherwise.  For ``ge1`` that condition is also
    sufficient: runs covering different targets can be replayed side by side
    on disjoint groups of processes, since any process may ignore a broadcast.
    Remaining cases are searched up to population ``k_max``.
    """
    support = frozenset(src_support)
    _check_crp_cube(dst, variant)
    if set(dst.states) != set(model.states):
        raise DomainError("target cube ranges over different states than the model")
    for q in support:
        model._state_idx(q)
    rbn = compile_io_to_rbn(model).target if isinstance(model, IoNetModel) else model
    if not isinstance(rbn, RbnModel):
        raise DomainError("cardinality reachability is defined for broadcast networks and IO nets")
    required = [q for q, lo in zip(dst.states, dst.lower) if lo > 0]
    coverable = rbn_saturation(rbn, support)
    missing = [q for q in required if q not in coverable]
    if missing:
        return CrpResult(Verdict.NO, None, f"not coverable from the support: {', '.join(missing)}")
    src = Cube.build(model.states, {q: (0, INF) for q in support}, default=(0, 0))
    found = cube_reach_bounded(model, src, dst, range(k_max + 1), cap)
    if found.verdict is Verdict.YES:
        return CrpResult(Verdict.YES, found.witness, found.note)
    if variant == "ge1":
        return CrpResult(Verdict.YES, None,
                         f"every target is coverable by saturation; no witness within population {k_max}")
    return CrpResult(Verdict.BOUNDED_NO, None, found.note)


# Cut-off scanning

@dataclass
class CutoffReport:
    """Almost-sure coverage verdicts per population with an empirical stabilization guess."""

    verdicts: dict[int, bool | None]
    errors: dict[int, str]
    window: int
    stabilized_at: int | None
    polarity: str | None  # "positive", "negative" or None
    empirical: bool = True

    def render(self) -> str:
        lines = [f"k={k} {'error: ' + self.errors[k] if v is None else str(v).lower()}"
                 for k, v in self.verdicts.items()]
        if self.polarity is None:
            lines.append(f"no stabilization over the last {self.window} values")
        else:
            lines.append(f"stabilizes at k={self.stabilized_at}, {self.polarity} (empirical, not a proof)")
        return "\n".join(lines)


def cutoff_scan(model: Model, q_init: str, q_final: str, k_range: Iterable[int], window: int = 2,
                register: str | None = None, cap: int = DEFAULT_CAP) -> CutoffReport:
    if window < 1:
        raise DomainError("window must be at least 1")
    ks = sorted(set(k_range))
    verdicts: dict[int, bool | None] = {}
    errors: dict[int, str] = {}
    for k in ks:
        try:
            verdicts[k] = almost_sure_cover_fixed_k(model, q_init, q_final, k, register, cap)
        except DomainError:
            raise
        except PvError as exc:
            verdicts[k] = None
            errors[k] = str(exc)
    tail = [verdicts[k] for k in ks[-window:]]
    if len(ks) < window or None in tail or len(set(tail)) != 1:
        return CutoffReport(verdicts, errors, window, None, None)
    value = tail[0]
    start = len(ks) - 1
    while start > 0 and verdicts[ks[start - 1]] == value:
        start -= 1
    return CutoffReport(verdicts, errors, window, ks[start], "positive" if value else "negative")


__all__ = [
    "GeneratedInstance", "gen_counter_rbn", "gen_fig2_asms", "LeaderProtocol", "leader_to_cube",
    "LeaderResult", "leader_reach_bounded", "CRP_VARIANTS", "CrpResult", "crp_check", "CutoffReport",
    "cutoff_scan", "CubeReachResult",
]
