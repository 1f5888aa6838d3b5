"""Headline acceptance checks; each prints one PASS/FAIL line (also listed in the run summary)."""

from __future__ import annotations

import random

from oracles import (almost_sure_forward, brute_coverable, rand_asms, rand_io, rand_rbn, random_good_walk,
                     reachable)
from pvnets.analyses import gen_counter_rbn, gen_fig2_asms
from pvnets.engine import (Verdict, almost_sure_cover_fixed_k, cube_reach_bounded, rbn_saturation, reaches)
from pvnets.models import AsmsModel, replay
from pvnets.multiset import (INF, CountingConstraint, Cube, MultiSet, constraint_complement,
                             constraint_equiv_bounded, constraint_intersect, constraint_union)
from pvnets.reductions import (check_strong_simulation, compile_asms_to_rbn, compile_io_to_rbn,
                               compile_rbn_to_asms, compose, normalize_asms_run)


def test_counter_threshold(record_acceptance):
    details, ok = [], True
    for n in (1, 2, 3):
        inst = gen_counter_rbn(n)
        c0, cf = inst.cubes["C0"], inst.cubes["Cf"]
        pops = range(0, 2 ** n + n + 1)
        at = {q: c0.bounds_of(q) for q in c0.states}
        enough = cube_reach_bounded(inst.model, Cube.build(c0.states, {**at, "tok": 2 ** n}), cf, pops)
        short = cube_reach_bounded(inst.model, Cube.build(c0.states, {**at, "tok": (0, 2 ** n - 1)}), cf, pops)
        good = (enough.verdict is Verdict.YES and replay(inst.model, enough.witness).ok
                and cf.contains(enough.witness.final) and short.verdict is Verdict.NO)
        ok &= good
        details.append(f"n={n}: tok={2 ** n} {enough.verdict.value}, tok<={2 ** n - 1} {short.verdict.value}")
    record_acceptance("counter threshold", ok, "; ".join(details))
    assert ok


def test_fig2_negative_and_positive_control(record_acceptance):
    inst = gen_fig2_asms()
    states, dst = inst.model.states, inst.cubes["Cprime"]
    bounded = Cube.build(states, {"a1": 1, "b1": (0, 3), "c1": (0, 3)}, default=(0, 0), register="#")
    neg = cube_reach_bounded(inst.model, bounded, dst, range(0, 8))
    two = Cube.build(states, {"a1": 2, "b1": (0, 3), "c1": (0, 3)}, default=(0, 0), register="#")
    pos = cube_reach_bounded(inst.model, two, dst, range(0, 9))
    ok = neg.verdict is Verdict.NO and pos.verdict is Verdict.YES and replay(inst.model, pos.witness).ok
    record_acceptance("fig2 a4 uncoverable / two writers cover it", ok,
                      f"one a1: {neg.verdict.value}; two a1: {pos.verdict.value} in {len(pos.witness or ())} steps")
    assert ok


def _simulation_sweep(make, gen, seed: int, count: int = 200, bound: int = 3):
    rng = random.Random(seed)
    bad, pairs = [], 0
    for _ in range(count):
        art = make(gen(rng))
        rep = check_strong_simulation(art, bound)
        pairs += rep.pairs_checked
        if not rep.ok:
            bad.append(rep.counterexamples[0])
    return bad, pairs


def test_rbn_to_asms_strong_simulation(record_acceptance):
    bad, pairs = _simulation_sweep(compile_rbn_to_asms, rand_rbn, seed=11)
    record_acceptance("rbn-to-asms strong simulation", not bad,
                      f"200 models, {pairs} pairs up to population 3, {len(bad)} counterexamples")
    assert not bad, [str(c) for c in bad[:3]]


def test_asms_io_and_composed_strong_simulation(record_acceptance):
    bad_a, pairs_a = _simulation_sweep(compile_asms_to_rbn, rand_asms, seed=12)
    bad_i, pairs_i = _simulation_sweep(compile_io_to_rbn, rand_io, seed=13)

    def round_trip(model):
        first = compile_rbn_to_asms(model)
        return compose(first, compile_asms_to_rbn(first.target))

    bad_c, pairs_c = _simulation_sweep(round_trip, rand_rbn, seed=14)
    ok = not (bad_a or bad_i or bad_c)
    record_acceptance("asms-to-rbn, io-to-rbn and composed strong simulation", ok,
                      f"counterexamples {len(bad_a)}/{len(bad_i)}/{len(bad_c)} over "
                      f"{pairs_a}/{pairs_i}/{pairs_c} pairs")
    assert ok


def test_normal_form_on_random_runs(record_acceptance):
    rng = random.Random(21)
    done = failures = longest = 0
    while done < 100:
        art = compile_rbn_to_asms(rand_rbn(rng))
        run = random_good_walk(art, rng, 12)
        if run is None:
            continue
        done += 1
        longest = max(longest, len(run))
        try:
            normal = normalize_asms_run(art, run)
            steps = art.pseudo_steps(normal)
            decoded = art.decode_run(normal)
            assert (normal.initial, normal.final) == (run.initial, run.final)
            assert len(steps) == len(decoded)
            assert replay(art.source, decoded).ok
            assert decoded.final == art.project(run.final)
        except Exception:  # any failure counts against the criterion
            failures += 1
    record_acceptance("normal form of good-to-good runs", failures == 0,
                      f"{done} runs up to length {longest}, {failures} failures")
    assert failures == 0


def test_saturation_matches_brute_force(record_acceptance):
    rng = random.Random(31)
    models = [gen_counter_rbn(1).model] + [rand_rbn(rng, max_states=5, max_transitions=6) for _ in range(120)]
    disagreements, checks = [], 0
    for m in models:
        for size in (1, 2):
            support = tuple(sorted(rng.sample(m.states, size)))
            brute = brute_coverable(m, support, 6)
            sat = rbn_saturation(m, support)
            checks += 1
            if set(sat) != brute:
                disagreements.append((m, support, sorted(sat), sorted(brute)))
    record_acceptance("saturation vs brute-force coverability", not disagreements,
                      f"{checks} (model, support) cases up to population 6, {len(disagreements)} disagreements")
    assert not disagreements, disagreements[:2]


def _random_constraint(rng: random.Random, states):
    cubes = []
    for _ in range(rng.randint(0, 3)):
        bounds = {}
        for q in states:
            lo = rng.randint(0, 4)
            hi = INF if rng.random() < 0.4 else lo + rng.randint(0, 4)
            bounds[q] = (lo, hi)
        cubes.append(Cube.build(states, bounds))
    return CountingConstraint(tuple(states), tuple(cubes))


def test_counting_algebra(record_acceptance):
    rng = random.Random(41)
    failures = 0
    for _ in range(1000):
        states = ("p", "q", "r")[:rng.randint(1, 3)]
        x, y = _random_constraint(rng, states), _random_constraint(rng, states)
        m = MultiSet({q: rng.randint(0, 8) for q in states})
        u, i, c = constraint_union(x, y), constraint_intersect(x, y), constraint_complement(x)
        laws = [
            u.contains(m) == (x.contains(m) or y.contains(m)),
            i.contains(m) == (x.contains(m) and y.contains(m)),
            c.contains(m) == (not x.contains(m)),
            u.norm().norm <= max(x.norm().norm, y.norm().norm),
            i.norm().norm <= x.norm().norm + y.norm().norm,
        ]
        failures += not all(laws)
    q = ("q",)
    left = CountingConstraint.of(Cube.build(q, {"q": (1, 3)}), Cube.build(q, {"q": (2, 4)}))
    same = constraint_equiv_bounded(left, CountingConstraint.of(Cube.build(q, {"q": (1, 4)})), 10)
    ok = failures == 0 and same
    record_acceptance("counting algebra", ok,
                      f"1000 samples, {failures} law violations; (1,3)|(2,4) == (1,4) up to 10: {same}")
    assert ok


def test_almost_sure_checker(record_acceptance):
    rng = random.Random(51)
    mismatches, runs = [], 0
    makers = [lambda: rand_rbn(rng, 3, 5), lambda: rand_asms(rng, 3, 5), lambda: rand_io(rng, 3, 5)]
    for i in range(50):
        model = makers[i % 3]()
        init, final = rng.choice(model.states), rng.choice(model.states)
        reg = model.alphabet[0] if isinstance(model, AsmsModel) else None
        for k in range(1, 5):
            runs += 1
            fast = almost_sure_cover_fixed_k(model, init, final, k, reg)
            slow = almost_sure_forward(model, init, k, final, reg)
            if fast != slow:
                mismatches.append((model, init, final, k))
    record_acceptance("almost-sure fixed-k checker", not mismatches,
                      f"50 models x k=1..4 ({runs} instances), {len(mismatches)} mismatches")
    assert not mismatches


def test_counter_search_is_population_closed():
    # sanity companion for the threshold check: reached configurations keep the start population
    inst = gen_counter_rbn(2)
    start = MultiSet({"tok": 4, "a1": 1, "a2": 1})
    res = reaches(inst.model, start, inst.cubes["Cf"])
    assert {c.size for c in reachable(inst.model, [start])} == {6}
    assert res.verdict is Verdict.YES
