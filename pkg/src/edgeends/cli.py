"""Command line entry point.

Machine output is JSON on stdout; diagnostics go to stderr.  Exit codes:
0 success or pass, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .corpus import CorpusSpec, generate_corpus
from .endspace import (
    EDGE,
    VERTEX,
    OracleConfig,
    class_table,
    edge_end_space,
    end_classes,
    end_space,
    homeomorphic,
    oracle_agreement,
    partition,
)
from .game import (
    Descend,
    FiniteArena,
    IllegalMove,
    Oscillate,
    Random,
    SchemeArena,
    ScriptPolicy,
    adjudicate,
    build_tc,
    ground_descriptor,
    local_basis_check,
    referee_step,
    run_match,
    MatchState,
)
from .ordertree import (
    SchemeError,
    check_partition_tree,
    high_rays,
    load_scheme,
    nesting,
    parse_nmap,
    parse_partition,
    parse_ray,
    rayspace_descriptor,
    save_scheme,
    surgery_table,
    surgery_tprime,
    serialize_partition,
    tgraph_partition,
    tops_of,
    uniform_tgraph,
)
from .presentation import ParseError, load, serialize
from .subbase import (
    BoundExceeded,
    ContextUndecidable,
    FiniteContext,
    GroundUndecidable,
    SubbaseFamily,
    check_hereditary_completeness,
    check_special,
    parse_open_sets,
    parse_points,
    parse_sets,
)
from .transform import (
    RHO,
    TAU,
    PreconditionViolated,
    compute_envelope,
    duplicate_dominators,
    expand_cliques,
    verify_correspondence,
)

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ output


def _human(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                out.append(f"{pad}{k}:")
                out.extend(_human(v, indent + 1))
            else:
                out.append(f"{pad}{k}: {v}")
        return out
    if isinstance(obj, list):
        out = []
        for v in obj:
            if isinstance(v, (dict, list)):
                out.append(f"{pad}-")
                out.extend(_human(v, indent + 1))
            else:
                out.append(f"{pad}- {v}")
        return out
    return [f"{pad}{obj}"]


def emit(args, payload: dict) -> None:
    if getattr(args, "human", False):
        print("\n".join(_human(payload)))
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _config(args) -> OracleConfig:
    return OracleConfig(budget_ms=args.budget) if args.budget else OracleConfig()


# ---------------------------------------------------------------- verbs


def cmd_ends(args, mode: str) -> int:
    p = load(args.file)
    d = end_space(p) if mode == VERTEX else edge_end_space(p)
    emit(args, {"file": args.file, "mode": mode, "descriptor": d.to_json(), "classes": class_table(p, mode)})
    return OK


def cmd_expand(args) -> int:
    p = load(args.file)
    q, m = expand_cliques(p)
    if args.output:
        Path(args.output).write_text(serialize(q), encoding="utf-8")
    payload = {
        "replaced": m.replaced,
        "edge_map": {" ".join(k): " ".join(v) for k, v in sorted(m.edge_map.items())},
        "output": args.output,
    }
    if not args.output:
        payload["egp"] = serialize(q)
    emit(args, payload)
    return OK


def cmd_duplicate(args) -> int:
    p = load(args.file)
    try:
        q, m = duplicate_dominators(p)
    except PreconditionViolated as exc:
        emit(args, {"ok": False, "error": "precondition-violated", "vertex": exc.vertex, "ends": list(exc.ends)})
        return FAIL
    if args.output:
        Path(args.output).write_text(serialize(q), encoding="utf-8")
    payload = {
        "ok": True,
        "split": {v: list(s) for v, s in m.split.items()},
        "mode_disagreements": {k: list(v) for k, v in m.mode_disagreements.items()},
        "output": args.output,
    }
    if not args.output:
        payload["egp"] = serialize(q)
    emit(args, payload)
    return OK


def cmd_verify(args) -> int:
    p = load(args.file)
    rep = verify_correspondence(p, TAU if args.tau else RHO)
    emit(args, rep.to_json())
    return OK if rep.ok else FAIL


def cmd_envelope(args) -> int:
    p = load(args.file)
    point = args.point
    classes = end_classes(p)
    if point in classes:
        point = classes[point]
    elif point not in set(classes.values()):
        raise UsageError(f"unknown end {point!r}; known: {', '.join(sorted(set(classes.values())))}")
    env = compute_envelope(p, point)
    emit(
        args,
        {
            "point": env.point,
            "dominators": sorted(env.dominators),
            "ray_family": sorted(env.ray_family),
            "vertex_set": list(env.vertex_set),
        },
    )
    return OK


def cmd_rayspace(args) -> int:
    t = load_scheme(args.file)
    d = rayspace_descriptor(t)
    rays = [{"ray": r.id, "tops": [str(x) for x in tops_of(t, r)]} for r in high_rays(t)]
    emit(args, {"file": args.file, "descriptor": d.to_json(), "high_rays": rays, "nesting": nesting(t)})
    return OK


def cmd_tgraph(args) -> int:
    t = load_scheme(args.file)
    p = uniform_tgraph(t)
    ok = homeomorphic(end_space(p), rayspace_descriptor(t))
    if args.output:
        Path(args.output).write_text(serialize(p), encoding="utf-8")
    payload = {"ends_match_rayspace": ok, "output": args.output}
    if args.parts:
        Path(args.parts).write_text(serialize_partition(tgraph_partition(t)), encoding="utf-8")
        payload["parts"] = args.parts
    if not args.output:
        payload["egp"] = serialize(p)
    emit(args, payload)
    return OK if ok else FAIL


def cmd_partition_tree(args) -> int:
    p = load(args.file)
    t = load_scheme(args.scheme)
    pt = parse_partition(Path(args.parts).read_text(encoding="utf-8"), t)
    rep = check_partition_tree(p, pt, args.cut)
    emit(args, {"file": args.file, "scheme": args.scheme, "parts": args.parts, **rep.to_json()})
    return OK if rep.ok else FAIL


def cmd_surgery(args) -> int:
    t = load_scheme(args.file)
    nmap = parse_nmap(Path(args.nmap).read_text(encoding="utf-8"))
    new = surgery_tprime(t, nmap)
    ok = homeomorphic(rayspace_descriptor(new), rayspace_descriptor(t))
    if args.output:
        save_scheme(new, args.output)
    emit(
        args,
        {
            "new_tops": surgery_table(t, nmap),
            "descriptor_preserved": ok,
            "descriptor": rayspace_descriptor(new).to_json(),
            "output": args.output,
        },
    )
    return OK if ok else FAIL


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _finite_context(args) -> FiniteContext:
    sets = parse_sets(_read(args.file))
    if args.ground:
        points = parse_points(_read(args.ground))
    else:
        points = sorted(set().union(*sets.values())) if sets else []
    topology = parse_open_sets(_read(args.topology)) if getattr(args, "topology", None) else None
    return FiniteContext.build(points, sets, topology)


def cmd_check_subbase(args) -> int:
    scheme_file = args.file if args.file.endswith(".ots") else args.ground if (args.ground or "").endswith(".ots") else None
    if scheme_file:
        fam = SubbaseFamily.from_scheme(load_scheme(scheme_file), args.cut)
        rep = check_special(fam)
        emit(args, {"ground": "scheme", "cut": args.cut, **rep.to_json()})
        return OK if rep.ok else FAIL
    sets = parse_sets(_read(args.file))
    points = parse_points(_read(args.ground)) if args.ground else sorted(set().union(*sets.values()))
    topology = parse_open_sets(_read(args.topology)) if args.topology else None
    fam = SubbaseFamily.finite(points, sets, topology)
    rep = check_special(fam)
    payload = {"ground": "finite", **rep.to_json()}
    ok = rep.ok
    if args.hereditary:
        hc = check_hereditary_completeness(fam, args.bound)
        payload["hereditary_completeness"] = hc.to_json()
        ok = ok and hc.ok
    payload["ok"] = ok
    emit(args, payload)
    return OK if ok else FAIL


def _policy(spec: str, t, seed: int):
    kind, _, arg = spec.partition(":")
    if kind == "descend":
        return Descend(parse_ray(arg) if arg else high_rays(t)[0].instantiate(0))
    if kind == "random":
        return Random(int(arg) if arg else seed)
    if kind == "oscillate":
        script, _, ray = arg.partition("@")
        target = parse_ray(ray) if ray else high_rays(t)[0].instantiate(0)
        try:
            return Oscillate(target, script or "FP")
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError(f"unknown policy {spec!r}; use descend:RAY, random:SEED or oscillate:SCRIPT[@RAY]")


def cmd_match(args) -> int:
    t = load_scheme(args.file)
    if not high_rays(t):
        raise UsageError("the tree has no high-ray, so there is nothing to play on")
    if args.script:
        policy = ScriptPolicy(_read(args.script).splitlines())
    else:
        policy = _policy(args.policy, t, args.seed)
    try:
        state = run_match(SchemeArena(t), policy, args.rounds)
    except IllegalMove as exc:
        emit(args, {"error": "illegal-move", "reason": exc.reason, "detail": exc.detail})
        return FAIL
    emit(args, state.to_json())
    return OK if state.result.winner == "II" else FAIL


def cmd_play(args, stdin=None, out=None) -> int:
    """Line-oriented match: Player I types moves, the referee answers."""
    stdin = stdin or sys.stdin
    out = out or sys.stdout
    t = load_scheme(args.file)
    arena = SchemeArena(t)
    state = MatchState()
    referee_step(arena, state, arena.root_move())
    lines: list[str] = []
    policy = ScriptPolicy(lines)

    def show() -> None:
        print(f"round {state.round}: you played {state.moves[-1]}", file=out)
        for i, p in enumerate(state.covers[-1].parts):
            print(f"  part {i}: {p}", file=out)

    show()
    while state.round < args.rounds:
        print("> ", end="", file=out, flush=True)
        line = stdin.readline()
        if not line:
            line = "quit"
        lines.append(line.strip())
        if line.strip() == "quit":
            print(file=out)
            break
        try:
            move = policy.next_move(arena, state)
            referee_step(arena, state, move)
        except (IllegalMove, SchemeError, ValueError) as exc:
            bad = lines.pop()
            policy._pos = len(lines)
            if policy.log and policy.log[-1] == bad:
                policy.log.pop()
            print(f"rejected: {exc}", file=out)
            continue
        print("accepted", file=out)
        show()
    result = adjudicate(arena, state, policy)
    print(json.dumps({"rounds": state.round, "transcript": policy.log, "result": result.to_json()}, sort_keys=True), file=out)
    return OK if result.winner == "II" else FAIL


def cmd_build_tc(args) -> int:
    if args.file.endswith(".ots"):
        ctx = FiniteContext.from_scheme(load_scheme(args.file), args.cut)
    else:
        ctx = _finite_context(args)
    tc = build_tc(ctx, args.depth)
    fam = SubbaseFamily.finite(ctx.points, tc.node_family())
    special = check_special(fam)
    payload = {
        **tc.to_json(),
        "special": special.to_json(),
        "local_basis_failures": local_basis_check(ctx, tc),
        "descriptor": rayspace_descriptor(tc.scheme).to_json(),
    }
    ok = special.ok
    if len(ctx.points) <= args.bound:
        hc = check_hereditary_completeness(fam, args.bound)
        payload["hereditary_completeness"] = hc.to_json()
        ok = ok and hc.ok
    else:
        payload["hereditary_completeness"] = None
    try:
        payload["descriptor_matches_ground"] = homeomorphic(rayspace_descriptor(tc.scheme), ground_descriptor(ctx))
        ok = ok and payload["descriptor_matches_ground"]
    except GroundUndecidable as exc:
        payload["descriptor_matches_ground"] = None
        payload["note"] = str(exc)
    emit(args, payload)
    return OK if ok else FAIL


# ----------------------------------------------------------------- corpus


PASS, FAILED, NA = "pass", "fail", "n/a"


def _status(ok: bool) -> str:
    return PASS if ok else FAILED


def _suite_presentation(p, suite: str, config) -> str:
    if suite == "rho":
        return _status(verify_correspondence(p, RHO).ok)
    if suite == "tau":
        rep = verify_correspondence(p, TAU)
        if rep.failures == ["precondition-violated"]:
            return NA
        return _status(rep.ok)
    if suite == "oracle":
        return _status(oracle_agreement(p, 3, config).ok)
    if suite == "refine":
        fine, coarse = partition(p, VERTEX), partition(p, EDGE)
        return _status(all(any(a <= b for b in coarse) for a in fine))
    raise UsageError(suite)


def _suite_scheme(t, suite: str) -> str:
    if suite == "special":
        return _status(check_special(SubbaseFamily.from_scheme(t, 8)).ok)
    if suite == "tgraph":
        if nesting(t) > 2:
            return NA
        p = uniform_tgraph(t)
        same = homeomorphic(rayspace_descriptor(t), end_space(p))
        return _status(same and check_partition_tree(p, tgraph_partition(t)).ok)
    if suite == "strategy":
        rays = high_rays(t)
        return _status(all(run_match(t, Descend(r.instantiate(1)), 4).result.winner == "II" for r in rays))
    raise UsageError(suite)


PRESENTATION_SUITES = ("rho", "tau", "oracle", "refine")
SCHEME_SUITES = ("special", "tgraph", "strategy")


def cmd_corpus(args) -> int:
    corpus = generate_corpus(spec=CorpusSpec(seed=args.seed, presentations=args.n, schemes=args.schemes))
    suites = PRESENTATION_SUITES + SCHEME_SUITES if args.suite == "all" else (args.suite,)
    config = _config(args)
    report = {"seed": args.seed, "n": args.n, "suites": {}}
    ok = True
    for suite in suites:
        if suite in PRESENTATION_SUITES:
            items = corpus.presentations
            fn = lambda item: _suite_presentation(item[1], suite, config)  # noqa: E731
        elif suite in SCHEME_SUITES:
            items = corpus.schemes
            fn = lambda item: _suite_scheme(item[1], suite)  # noqa: E731
        else:
            raise UsageError(f"unknown suite {suite!r}")
        # threads only overlap the work; results keep the corpus order
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(fn, items))
        names = [n for n, _ in items]
        failed = [n for n, r in zip(names, results) if r == FAILED]
        rand = [r for n, r in zip(names, results) if n.startswith(("rand-", "tree-"))]
        fixed = [r for n, r in zip(names, results) if not n.startswith(("rand-", "tree-"))]
        report["suites"][suite] = {
            "summary": f"{rand.count(PASS)}/{len(rand)} pass",
            "fixtures": f"{fixed.count(PASS)}/{len(fixed)} pass",
            "not_applicable": rand.count(NA) + fixed.count(NA),
            "failed": failed,
        }
        ok = ok and not failed
    emit(args, report)
    return OK if ok else FAIL


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="JSON output (default)")
    g.add_argument("--human", action="store_true", default=argparse.SUPPRESS, help="plain text output")
    g.add_argument("--budget", type=int, default=argparse.SUPPRESS, metavar="MS", help="oracle search budget")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")

    ap = argparse.ArgumentParser(prog="edgeends", parents=[common], description="Ends, edge-ends, ray spaces and the end game.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def verb(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    p = verb("ends", "end space of a presentation")
    p.add_argument("file")
    p = verb("edge-ends", "edge-end space of a presentation")
    p.add_argument("file")
    p = verb("expand", "replace infinite-degree vertices by infinite cliques")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p = verb("duplicate", "split dominating vertices")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p = verb("verify", "check that a construction preserves the space")
    p.add_argument("file")
    d = p.add_mutually_exclusive_group(required=True)
    d.add_argument("--rho", action="store_true", help="clique expansion: edge-ends of input vs ends of output")
    d.add_argument("--tau", action="store_true", help="duplication: ends of input vs edge-ends of output")
    p = verb("envelope", "envelope of an end")
    p.add_argument("file")
    p.add_argument("point", help="end point id or a generator in it")
    p = verb("rayspace", "ray space of a tree scheme")
    p.add_argument("file")
    p = verb("tgraph", "uniform T-graph of a tree scheme")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--parts", help="also write the partition tree (T, {t}) to this file")
    p = verb("partition-tree", "check a partition tree (T, V) of a presentation")
    p.add_argument("file", help=".egp presentation")
    p.add_argument("scheme", help=".ots tree scheme")
    p.add_argument("parts", help="parts file ([parts] node = vertices, [chains] seg = ray [+k])")
    p.add_argument("--cut", type=int, help="window size (default: from the presentation)")
    p = verb("surgery", "replace limit nodes following an N map")
    p.add_argument("file")
    p.add_argument("nmap")
    p.add_argument("-o", "--output")
    p = verb("check-subbase", "nested / noetherian / sigma-disjoint / clopen checks")
    p.add_argument("file", help="sets file (lines 'id: p q r') or a .ots scheme")
    p.add_argument("--ground", help="points file or .ots scheme")
    p.add_argument("--topology", help="open sets, one per line (default: discrete)")
    p.add_argument("--hereditary", action="store_true", help="also check hereditary completeness")
    p.add_argument("--bound", type=int, default=12)
    p.add_argument("--cut", type=int, default=8)
    p = verb("match", "play Player II's strategy against a policy")
    p.add_argument("file")
    p.add_argument("--policy", default="descend:", help="descend:RAY | random:SEED | oscillate:SCRIPT[@RAY]")
    p.add_argument("--rounds", type=int, default=6)
    p.add_argument("--script", help="moves file, as typed in play")
    p = verb("play", "interactive match on standard input")
    p.add_argument("file")
    p.add_argument("--rounds", type=int, default=50)
    p = verb("build-tc", "strategy tree of a finite ground")
    p.add_argument("file", help="sets file or .ots scheme (finite shadow)")
    p.add_argument("--ground")
    p.add_argument("--topology")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--cut", type=int, default=4)
    p.add_argument("--bound", type=int, default=12, help="point bound for hereditary completeness")
    p = verb("corpus", "run a property suite over the seeded corpus")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--schemes", type=int, default=50)
    p.add_argument("--suite", default="all", choices=("all",) + PRESENTATION_SUITES + SCHEME_SUITES)
    p.add_argument("--workers", type=int, default=4)
    return ap


HANDLERS = {
    "ends": lambda a: cmd_ends(a, VERTEX),
    "edge-ends": lambda a: cmd_ends(a, EDGE),
    "expand": cmd_expand,
    "duplicate": cmd_duplicate,
    "verify": cmd_verify,
    "envelope": cmd_envelope,
    "rayspace": cmd_rayspace,
    "tgraph": cmd_tgraph,
    "partition-tree": cmd_partition_tree,
    "surgery": cmd_surgery,
    "check-subbase": cmd_check_subbase,
    "match": cmd_match,
    "play": cmd_play,
    "build-tc": cmd_build_tc,
    "corpus": cmd_corpus,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("json", False), ("human", False), ("budget", None), ("seed", 7)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return HANDLERS[args.verb](args)
    except (UsageError, ParseError, SchemeError, FileNotFoundError, KeyError) as exc:
        print(f"edgeends {args.verb}: {exc}", file=sys.stderr)
        return USAGE
    except (ContextUndecidable, GroundUndecidable, BoundExceeded, PreconditionViolated) as exc:
        print(f"edgeends {args.verb}: {exc}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
