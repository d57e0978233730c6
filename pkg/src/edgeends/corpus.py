"""Seeded corpus of small instances plus the fixed fixtures."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .game import Descend, Oscillate, Policy, Random
from .ordertree import TreeScheme, example26_truncation, high_rays, make_scheme, nesting, uniform_tgraph
from .presentation import OMEGA, GraphPresentation, figure1, make_presentation, validate
from .subbase import FiniteContext


@dataclass(frozen=True)
class CorpusSpec:
    seed: int = 7
    presentations: int = 100
    schemes: int = 50
    grounds: int = 25
    max_generators: int = 6
    max_core: int = 6
    max_index: int = 2
    max_omega_vertices: int = 3
    max_segments: int = 6
    max_nesting: int = 2
    max_points: int = 12


@dataclass
class Corpus:
    spec: CorpusSpec
    presentations: list[tuple[str, GraphPresentation]] = field(default_factory=list)
    schemes: list[tuple[str, TreeScheme]] = field(default_factory=list)
    grounds: list[tuple[str, FiniteContext]] = field(default_factory=list)


# ---------------------------------------------------------------- fixtures


def ray() -> GraphPresentation:
    return make_presentation(generators={"r": "ray"})


def ladder_pair() -> GraphPresentation:
    return make_presentation(generators={"r": "ray", "s": "ray"}, ladders=[("r", "s")])


def comb() -> GraphPresentation:
    return make_presentation(generators={"r": "ray"}, combs=[("r", "p")])


def fork() -> TreeScheme:
    return make_scheme({"s": 1, "l": None, "r": None}, [("l", "s", 0), ("r", "s", 0)])


def omega2() -> TreeScheme:
    return make_scheme({"s0": None, "s1": None}, [("s1", "s0", None)])


def tooth() -> TreeScheme:
    return make_scheme({"u": None})


def combtree() -> TreeScheme:
    return make_scheme({"b": None}, [], [("b_tooth", "b", tooth(), "tooth.ots")])


def fixture_schemes() -> list[tuple[str, TreeScheme]]:
    return [
        ("fork", fork()),
        ("omega2", omega2()),
        ("combtree", combtree()),
        ("ex26", example26_truncation(2)),
    ]


def fixture_presentations() -> list[tuple[str, GraphPresentation]]:
    out = [("fig1", figure1()), ("ray", ray()), ("ladder", ladder_pair()), ("comb", comb())]
    out += [(f"tgraph-{name}", uniform_tgraph(t)) for name, t in fixture_schemes()]
    return out


# ------------------------------------------------------------------ random


def random_presentation(rng: random.Random, spec: CorpusSpec) -> GraphPresentation:
    while True:
        ng = rng.randint(1, spec.max_generators)
        nc = rng.randint(0, spec.max_core)
        gens = [f"g{i}" for i in range(ng)]
        core = [f"c{i}" for i in range(nc)]

        def token():
            if core and rng.random() < 0.4:
                return rng.choice(core)
            return f"{rng.choice(gens)}[{rng.randint(0, spec.max_index)}]"

        edges = set()
        for _ in range(rng.randint(0, ng + nc)):
            u, v = token(), token()
            if u != v:
                edges.add((u, v))
        fans = []
        omega_vs = rng.sample(core, min(len(core), rng.randint(0, spec.max_omega_vertices)))
        for v in omega_vs:
            for g in rng.sample(gens, rng.randint(1, min(2, ng))):
                fans.append((v, g, OMEGA))
        for v in core:
            if rng.random() < 0.3:
                g = rng.choice(gens)
                if not any(f[0] == v and f[1] == g for f in fans):
                    fans.append((v, g, sorted(rng.sample(range(spec.max_index + 1), rng.randint(1, 2)))))
        ladders = set()
        if ng >= 2:
            for _ in range(rng.randint(0, 2)):
                a, b = rng.sample(gens, 2)
                ladders.add(tuple(sorted((a, b))))
        combs = []
        for i, g in enumerate(gens):
            if rng.random() < 0.15:
                combs.append((g, f"p{i}"))
        p = make_presentation(core, {g: "ray" for g in gens}, edges, fans, ladders, combs)
        if validate(p).ok:
            return p


def _fragment(rng: random.Random) -> TreeScheme:
    kind = rng.randrange(3)
    if kind == 0:
        return make_scheme({"u": None})
    if kind == 1:
        n = rng.randint(1, 2)
        return make_scheme({"p": n, "u": None}, [("u", "p", n - 1)])
    return make_scheme({"p": rng.randint(1, 2)})


def random_scheme(rng: random.Random, spec: CorpusSpec) -> TreeScheme:
    while True:
        n = rng.randint(1, spec.max_segments)
        segs: dict[str, object] = {}
        atts = []
        for i in range(n):
            name = f"s{i}"
            segs[name] = None if rng.random() < 0.6 else rng.randint(1, 3)
            if i == 0:
                continue
            parent = f"s{rng.randrange(i)}"
            plen = segs[parent]
            if plen is None:
                if rng.random() < 0.35:
                    atts.append((name, parent, None, ""))
                else:
                    atts.append((name, parent, rng.randint(0, spec.max_index)))
            else:
                atts.append((name, parent, rng.randrange(plen)))
        fams = []
        omegas = [k for k, v in segs.items() if v is None]
        if omegas and rng.random() < 0.35:
            base = rng.choice(omegas)
            fams.append((f"{base}_f", base, _fragment(rng), "f.ots"))
        t = make_scheme(segs, atts, fams, root="s0")
        if nesting(t) <= spec.max_nesting:
            return t


def random_ground(rng: random.Random, spec: CorpusSpec, npoints: int | None = None) -> FiniteContext:
    """Laminar family on a finite discrete ground where every point is the
    only point whose smallest set is its own; optional extra sets group
    sibling subtrees and own no point."""
    n = npoints or rng.randint(2, spec.max_points)
    pts = [f"p{i}" for i in range(n)]
    parent: dict[str, str | None] = {}
    for i, x in enumerate(pts):
        parent[x] = rng.choice(pts[:i]) if i and rng.random() < 0.7 else None
    children: dict[str | None, list[str]] = {}
    for x, p in parent.items():
        children.setdefault(p, []).append(x)

    def below(x: str) -> frozenset[str]:
        out = {x}
        for c in children.get(x, []):
            out |= below(c)
        return frozenset(out)

    sets = {f"U{x}": below(x) for x in pts}
    k = 0
    for p, kids in sorted(children.items(), key=lambda kv: str(kv[0])):
        if len(kids) >= 3 and rng.random() < 0.5:
            group = rng.sample(kids, rng.randint(2, len(kids) - 1))
            sets[f"G{k}"] = frozenset().union(*(below(c) for c in group))
            k += 1
    return FiniteContext.build(pts, sets)


def generate_corpus(seed: int = 7, n: int = 100, spec: CorpusSpec | None = None) -> Corpus:
    spec = spec or CorpusSpec(seed=seed, presentations=n)
    rng = random.Random(spec.seed)
    c = Corpus(spec)
    c.presentations = fixture_presentations()
    c.presentations += [(f"rand-{i:03d}", random_presentation(rng, spec)) for i in range(spec.presentations)]
    c.schemes = fixture_schemes()
    c.schemes += [(f"tree-{i:03d}", random_scheme(rng, spec)) for i in range(spec.schemes)]
    c.grounds = [(f"ground-{i:02d}", random_ground(rng, spec)) for i in range(spec.grounds)]
    return c


OSCILLATION_SCRIPTS = ("FP", "L", "FFL", "PL", "LPF", "F", "PPL", "FL", "LLP", "PF")


def match_plan(corpus: Corpus, total: int = 200) -> list[tuple[str, TreeScheme, Policy]]:
    """Descend to every high-ray of every tree, then alternate Random and
    Oscillate matches over the trees until ``total`` matches are planned."""
    plan: list[tuple[str, TreeScheme, Policy]] = []
    for name, t in corpus.schemes:
        plan += [(name, t, Descend(r.instantiate(1))) for r in high_rays(t)]
    k = 0
    for i, (name, t) in enumerate(itertools.cycle(corpus.schemes)):
        if len(plan) >= total:
            break
        rays = high_rays(t)
        if not rays:
            continue
        if i % 2 == 0:
            plan.append((name, t, Random(i)))
        else:
            script = OSCILLATION_SCRIPTS[k % len(OSCILLATION_SCRIPTS)]
            plan.append((name, t, Oscillate(rays[i % len(rays)].instantiate(2), script)))
            k += 1
    return plan[:total]


def sweep_policies(t: TreeScheme, randoms: int = 50) -> list[Policy]:
    """Every Descend target, ``randoms`` seeded Random policies and one
    Oscillate per script."""
    rays = high_rays(t)
    if not rays:
        return []
    out: list[Policy] = [Descend(r.instantiate(1)) for r in rays]
    out += [Random(s) for s in range(randoms)]
    out += [Oscillate(rays[i % len(rays)].instantiate(1), s) for i, s in enumerate(OSCILLATION_SCRIPTS)]
    return out


def sweep_tree(job: tuple[str, TreeScheme, int, int]) -> tuple[str, int, list]:
    """Play one tree against sweep_policies; returns (name, matches, losses)."""
    from .game import run_match

    name, t, randoms, rounds = job
    policies = sweep_policies(t, randoms)
    bad = []
    for p in policies:
        try:
            res = run_match(t, p, rounds).result
            if res.winner != "II":
                bad.append((p.name, res.to_json()))
        except Exception as exc:  # an illegal cover counts as a loss
            bad.append((p.name, repr(exc)))
    return name, len(policies), bad
