"""Command-line front end.

Exit codes: 0 for YES or plain success, 1 for NO, 2 for BOUNDED-NO or an
inconclusive result, 3 for usage and input errors.
"""

from __future__ import annotations

import argparse
import logging
import random
import sys
from collections.abc import Sequence
from typing import Any, TextIO

from .analyses import CRP_VARIANTS, crp_check, cutoff_scan, gen_counter_rbn, gen_fig2_asms
from .dsl import (CubeDecl, DslDocument, document_of, emit, format_config, format_trace, parse, parse_config,
                  parse_trace)
from .engine import DEFAULT_CAP, DEFAULT_MAX_POPULATION, Verdict, cube_reach_bounded
from .errors import DomainError, PvError
from .models import Model, RunTrace
from .multiset import INF, Cube
from .reductions import compile_model, compile_rbn_to_asms, normalize_asms_run

log = logging.getLogger("pvnets")

EXIT_ERROR = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2, which means BOUNDED-NO here
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _int_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    try:
        return range(int(lo), int(hi if sep else lo) + 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}") from None


def _bound(text: str) -> Any:
    lo, sep, hi = text.partition("..")
    if not lo.isdigit() or (sep and hi != "inf" and not hi.isdigit()):
        raise DomainError(f"bad bound {text!r}; expected N or A..B (B may be inf)")
    if not sep:
        return int(lo)
    return int(lo), INF if hi == "inf" else int(hi)


def resolve_cube(doc: DslDocument, expr: str, model_name: str | None) -> tuple[str, Cube]:
    """``NAME`` or ``NAME+state=N+state=A..B``: a declared cube with some bounds replaced."""
    name, *overrides = expr.split("+")
    decl = doc.get(name)
    if not isinstance(decl, CubeDecl):
        raise DomainError(f"{name!r} is not a cube")
    if model_name is not None and decl.model != model_name:
        raise DomainError(f"cube {name!r} belongs to model {decl.model!r}, not {model_name!r}")
    cube = decl.cube
    if overrides:
        bounds = {q: cube.bounds_of(q) for q in cube.states}
        register = cube.register
        for ov in overrides:
            q, sep, val = ov.partition("=")
            if not sep:
                raise DomainError(f"bad override {ov!r}; expected state=N or state=A..B")
            if q == "reg":
                register = val
                continue
            if q not in bounds:
                raise DomainError(f"unknown state {q!r} in override")
            bounds[q] = _bound(val)
        cube = Cube.build(cube.states, bounds, register=register)
    return decl.model, cube


def _print_trace(out: TextIO, model: Model, trace: RunTrace, head: str = "WITNESS") -> None:
    out.write(f"{head} {len(trace)} steps\n")
    for line in format_trace(model, trace).splitlines():
        out.write(f"  {line}\n")


def _verdict(out: TextIO, v: Verdict, note: str = "") -> int:
    out.write(f"VERDICT {v.value}\n")
    if note:
        out.write(f"NOTE {note}\n")
    return v.exit_code


def _default_pops(cube: Cube) -> range:
    lows, highs = zip(*(cube.bounds_of(q) for q in cube.states)) if cube.states else ((0,), (0,))
    if INF in highs:
        return range(0, DEFAULT_MAX_POPULATION + 1)
    return range(sum(lows), sum(highs) + 1)


def cmd_check_reach(args: argparse.Namespace, out: TextIO) -> int:
    doc = parse(_read(args.file))
    mname, src = resolve_cube(doc, args.src, args.model)
    dname, dst = resolve_cube(doc, args.dst, mname)
    model = doc.model(mname)
    res = cube_reach_bounded(model, src, dst, args.pop or _default_pops(src), args.cap, args.slack)
    code = _verdict(out, res.verdict, res.note)
    if res.witness is not None:
        _print_trace(out, model, res.witness)
    return code


def cmd_reduce(args: argparse.Namespace, out: TextIO) -> int:
    doc = parse(_read(args.file))
    model = doc.model(args.model)
    name = args.model or next(iter(doc.models))
    art = compile_model(args.kind, model)
    suffix = {"rbn-to-asms": "asms", "asms-to-rbn": "rbn", "io-to-rbn": "rbn"}[args.kind]
    tname = f"{name}_{suffix}"
    cubes = {}
    for cname, decl in doc.cubes.items():
        if decl.model == name:
            try:
                cubes[cname] = art.embed_cube(decl.cube)
            except DomainError as exc:
                log.warning("cube %s not translated: %s", cname, exc)
    note = f"// {args.kind} translation of {name}"
    if art.h:
        note += f"; padding {art.h.render()}"
    if art.renamed:
        note += "; renamed " + ", ".join(f"{k} -> {v}" for k, v in art.renamed.items())
    out.write(emit(document_of(art.target, tname, cubes, comment=note)))
    return 0


def cmd_simulate(args: argparse.Namespace, out: TextIO) -> int:
    doc = parse(_read(args.file))
    model = doc.model(args.model)
    if args.start in doc.configs:
        config = doc.configs[args.start].config
    else:
        config = parse_config(model, args.start)
    rng = random.Random(args.seed)
    labels = []
    cur = config
    for _ in range(args.steps):
        succ = sorted(model.labeled_successors(cur), key=lambda p: str(p[0]))
        if not succ:
            break
        label, cur = rng.choice(succ)
        labels.append(label)
    trace = RunTrace.from_labels(model, config, labels)
    out.write(format_trace(model, trace))
    out.write(f"final {format_config(model, trace.final)}\n")
    return 0


def cmd_cutoff(args: argparse.Namespace, out: TextIO) -> int:
    doc = parse(_read(args.file))
    model = doc.model(args.model)
    rep = cutoff_scan(model, args.init, args.target, args.range, args.window, args.register, args.cap)
    out.write(rep.render() + "\n")
    if rep.polarity is None:
        return 2
    return 0 if rep.polarity == "positive" else 1


def cmd_crp(args: argparse.Namespace, out: TextIO) -> int:
    doc = parse(_read(args.file))
    mname, dst = resolve_cube(doc, args.dst, args.model)
    model = doc.model(mname)
    support = [q for q in args.support.split(",") if q]
    res = crp_check(model, support, dst, args.variant, args.kmax, args.cap)
    code = _verdict(out, res.verdict, res.note)
    if res.witness is not None:
        _print_trace(out, model, res.witness)
    return code


def cmd_normalize_run(args: argparse.Namespace, out: TextIO) -> int:
    doc = parse(_read(args.file))
    model = doc.model(args.model)
    art = compile_rbn_to_asms(model)
    trace = parse_trace(art.target, _read(args.trace))
    normal = normalize_asms_run(art, trace)
    for i, ps in enumerate(art.pseudo_steps(normal), 1):
        out.write(f"pseudo-step {i}: {ps.source_label}\n")
    _print_trace(out, art.target, normal, "NORMALIZED")
    _print_trace(out, model, art.decode_run(normal), "DECODED")
    return 0


def cmd_generate(args: argparse.Namespace, out: TextIO) -> int:
    if args.family == "counter":
        if args.n is None:
            raise DomainError("generate counter needs -n")
        inst = gen_counter_rbn(args.n)
        name = f"counter{args.n}"
    else:
        inst = gen_fig2_asms()
        name = "fig2"
    out.write(emit(document_of(inst.model, name, dict(inst.cubes))))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pvnets", description="Broadcast, shared-memory and IO-net reachability toolkit.")
    p.add_argument("--threads", type=int, default=0,
                   help="worker threads (accepted for compatibility; the engine runs single-threaded)")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser, model: bool = True) -> None:
        sp.add_argument("file", nargs="?", default="-", help="DSL document (default: stdin)")
        if model:
            sp.add_argument("--model", help="model name when the document declares several")
        sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum stored configurations per search")

    check = sub.add_parser("check", help="decision procedures")
    checks = check.add_subparsers(dest="check", required=True, parser_class=_Parser)
    reach = checks.add_parser("reach", help="cube reachability over a population range")
    common(reach)
    reach.add_argument("--src", required=True, help="source cube, e.g. C0+tok=8")
    reach.add_argument("--dst", required=True, help="target cube")
    reach.add_argument("--pop", type=_int_range, default=None,
                       help="population range A..B (default: the source cube's sizes if finite, else 0..8)")
    reach.add_argument("--slack", type=int, default=None, help="cap unbounded source components at lower+slack")
    reach.set_defaults(func=cmd_check_reach)

    red = sub.add_parser("reduce", help="compile a model into another formalism")
    red.add_argument("kind", choices=["rbn-to-asms", "asms-to-rbn", "io-to-rbn"])
    common(red)
    red.set_defaults(func=cmd_reduce)

    sim = sub.add_parser("simulate", help="seeded random walk")
    common(sim)
    sim.add_argument("--from", dest="start", required=True, help="config name or literal like p=2,q=1[,reg=a]")
    sim.add_argument("--steps", type=int, default=10)
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=cmd_simulate)

    cut = sub.add_parser("cutoff", help="almost-sure coverage per population, with a stabilization guess")
    common(cut)
    cut.add_argument("--init", required=True)
    cut.add_argument("--target", required=True)
    cut.add_argument("--range", type=_int_range, default=range(1, 5))
    cut.add_argument("--window", type=int, default=2)
    cut.add_argument("--register", help="initial register letter (shared memory only)")
    cut.set_defaults(func=cmd_cutoff)

    crp = sub.add_parser("crp", help="cardinality reachability from an unbounded support")
    common(crp)
    crp.add_argument("--support", required=True, help="comma-separated initial states")
    crp.add_argument("--dst", required=True, help="target cube")
    crp.add_argument("--variant", choices=CRP_VARIANTS, default="ge1")
    crp.add_argument("--kmax", type=int, default=6, help="largest population searched for a witness")
    crp.set_defaults(func=cmd_crp)

    norm = sub.add_parser("normalize-run", help="rewrite a run of the shared-memory compilation into pseudo-steps")
    common(norm)
    norm.add_argument("--trace", required=True, help="trace over the compiled model")
    norm.set_defaults(func=cmd_normalize_run)

    gen = sub.add_parser("generate", help="emit a built-in example")
    gen.add_argument("family", choices=["counter", "fig2"])
    gen.add_argument("-n", type=int)
    gen.set_defaults(func=cmd_generate)
    return p


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors exit 3, --help exits 0
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads:
        log.debug("--threads=%d ignored; running single-threaded", args.threads)
    out = out or sys.stdout
    try:
        return args.func(args, out)
    except (PvError, OSError) as exc:
        print(f"pvnets: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main_entry() -> None:
    sys.exit(main())
