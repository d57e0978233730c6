"""End spaces and edge-end spaces of presentations.

Ends are computed symbolically: rays joined by a ladder (or lying in one
infinite clique) are inseparable by finitely many vertices, while a fan
from a single core vertex is cut by deleting that vertex.  Edge-ends also
merge everything joined through Omega fans, since infinitely many edges at
one vertex cannot all be cut.  Comb pendants are isolated ends converging
to their base.  Truncation oracles double-check all of this on finite
graphs.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import networkx as nx

from .presentation import (
    CLIQUE,
    FiniteGraph,
    GraphPresentation,
    pendant_ray,
    split_token,
    truncate,
    vertex_token,
)

VERTEX = "vertex"
EDGE = "edge"


class UnknownEndpoint(KeyError):
    pass


class BoundTooLarge(RuntimeError):
    """Exhaustive separator search would exceed the configured budget."""


def all_vertices_of(k: str) -> str:
    return f"all-vertices-of({k})"


def point_id(members) -> str:
    return f"[{min(members)}]"


# ------------------------------------------------------------- descriptors


@dataclass(frozen=True)
class SpaceDescriptor:
    isolated: frozenset[str] = frozenset()
    limits: frozenset[str] = frozenset()
    sequences: frozenset[tuple[str, str]] = frozenset()  # (family, limit)
    free_families: frozenset[str] = frozenset()

    def points(self) -> list[str]:
        return sorted(self.isolated | self.limits)

    def signature(self) -> tuple[int, int, int]:
        c = canonicalize(self)
        return (len(c.limits), len(c.free_families), len(c.isolated))

    def to_json(self) -> dict:
        c = canonicalize(self)
        seq_count = {lim: 0 for lim in c.limits}
        for _, lim in c.sequences:
            seq_count[lim] += 1
        return {
            "isolated": len(c.isolated),
            "limits": [{"point": lim, "sequences": seq_count[lim]} for lim in sorted(c.limits)],
            "free_families": len(c.free_families),
            "points": sorted(c.isolated),
        }


def well_formed(d: SpaceDescriptor) -> list[str]:
    errs = []
    if d.isolated & d.limits:
        errs.append("a point is both isolated and a limit")
    lims_with_seq = {lim for _, lim in d.sequences}
    if lims_with_seq - d.limits:
        errs.append("sequence converges to an undeclared limit")
    if d.limits - lims_with_seq:
        errs.append("limit without a sequence")
    return errs


def canonicalize(d: SpaceDescriptor) -> SpaceDescriptor:
    """Merge all sequences sharing a limit into one sequence."""
    by_limit: dict[str, list[str]] = {}
    for fam, lim in d.sequences:
        by_limit.setdefault(lim, []).append(fam)
    limits = frozenset(by_limit)
    sequences = frozenset(("+".join(sorted(fams)), lim) for lim, fams in by_limit.items())
    isolated = frozenset((d.isolated | d.limits) - limits)
    return SpaceDescriptor(isolated, limits, sequences, frozenset(d.free_families))


def homeomorphic(d1: SpaceDescriptor, d2: SpaceDescriptor) -> bool:
    return d1.signature() == d2.signature()


# --------------------------------------------------------------- quotients


@dataclass(frozen=True)
class OmegaQuotient:
    nodes: tuple[str, ...]
    omega_edges: tuple[tuple[str, str], ...]
    comb_edges: tuple[tuple[str, str], ...]

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(self.omega_edges)
        return g


def omega_quotient(p: GraphPresentation) -> OmegaQuotient:
    nodes = sorted(set(p.generator_ids()) | set(p.omega_vertices()))
    edges = {tuple(sorted((f.vertex, f.generator))) for f in p.fans if f.is_omega}
    edges |= {tuple(sorted(pair)) for pair in p.ladders}
    return OmegaQuotient(tuple(nodes), tuple(sorted(edges)), tuple(sorted(p.combs)))


def _components(nodes, edges) -> list[frozenset[str]]:
    g = nx.Graph()
    g.add_nodes_from(nodes)
    g.add_edges_from(edges)
    return sorted((frozenset(c) for c in nx.connected_components(g)), key=min)


def end_classes(p: GraphPresentation) -> dict[str, str]:
    """Generator -> end point id (ladder closure; fans never merge)."""
    comps = _components(p.generator_ids(), p.ladders)
    return {g: point_id(c) for c in comps for g in c}


def edge_end_classes(p: GraphPresentation) -> dict[str, str]:
    """Generator -> edge-end point id (components of the Omega quotient)."""
    q = omega_quotient(p)
    gens = set(p.generator_ids())
    out = {}
    for c in _components(q.nodes, q.omega_edges):
        members = c & gens
        if members:
            for g in members:
                out[g] = point_id(members)
    return out


def _descriptor(p: GraphPresentation, classes: dict[str, str]) -> SpaceDescriptor:
    points = set(classes.values())
    limits = {classes[g] for g, _ in p.combs}
    sequences = {(fam, classes[g]) for g, fam in p.combs}
    return canonicalize(
        SpaceDescriptor(frozenset(points - limits), frozenset(limits), frozenset(sequences))
    )


def end_space(p: GraphPresentation) -> SpaceDescriptor:
    return _descriptor(p, end_classes(p))


def edge_end_space(p: GraphPresentation) -> SpaceDescriptor:
    return _descriptor(p, edge_end_classes(p))


def class_table(p: GraphPresentation, mode: str) -> dict[str, list[str]]:
    classes = end_classes(p) if mode == VERTEX else edge_end_classes(p)
    table: dict[str, list[str]] = {}
    for g, pt in sorted(classes.items()):
        table.setdefault(pt, []).append(g)
    return table


def partition(p: GraphPresentation, mode: str) -> set[frozenset[str]]:
    return {frozenset(v) for v in class_table(p, mode).values()}


def dominators(p: GraphPresentation, endpoint: str, mode: str) -> frozenset[str]:
    """Core vertices (and clique tokens) that dominate / edge-dominate a point."""
    classes = end_classes(p) if mode == VERTEX else edge_end_classes(p)
    members = {g for g, pt in classes.items() if pt == endpoint}
    if not members:
        raise UnknownEndpoint(endpoint)
    kinds = p.kinds
    out = {f.vertex for f in p.fans if f.is_omega and f.generator in members}
    out |= {all_vertices_of(g) for g in members if kinds[g] == CLIQUE}
    return frozenset(out)


def edge_dominated_ends(p: GraphPresentation) -> dict[str, list[str]]:
    """For every dominator token, the end points (of end_space) it edge-dominates."""
    ends = end_classes(p)
    out: dict[str, set[str]] = {}
    for pt in sorted(set(edge_end_classes(p).values())):
        doms = dominators(p, pt, EDGE)
        gens = [g for g, e in edge_end_classes(p).items() if e == pt]
        for tok in doms:
            out.setdefault(tok, set()).update(ends[g] for g in gens)
    return {tok: sorted(v) for tok, v in sorted(out.items())}


def locally_finite(p: GraphPresentation) -> bool:
    return not p.omega_vertices() and all(g.kind != CLIQUE for g in p.generators) and not p.combs


# ------------------------------------------------------------------ oracle


@dataclass(frozen=True)
class Separates:
    extra: frozenset  # counted separator part (vertices or edges)
    patch: frozenset  # free finite head removed before counting

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class CannotSeparate:
    certificate: tuple = ()  # disjoint paths when available

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class OracleConfig:
    budget_ms: float = 5000.0
    max_subsets: int = 2_000_000
    exhaustive: bool = False


def default_depth(k: int) -> int:
    return 3 * k + 3


def _resolve_ray(p: GraphPresentation, name: str, n: int) -> str:
    if name in p.kinds:
        return name
    for _, fam in p.combs:
        prefix = fam + "."
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            i = int(name[len(prefix):])
            if i >= n:
                raise ValueError(f"pendant {name} is not present at depth {n}")
            return name
    raise ValueError(f"{name} is neither a generator nor a comb pendant")


def _reduced(p: GraphPresentation, n: int, mode: str):
    """Truncation with the free finite patch removed.

    The patch holds the first n//3 vertices of every generator and pendant
    plus the core.  In vertex mode core vertices with an Omega fan stay
    (they are what a separator has to pay for); in edge mode every edge
    with both ends in the patch is free.
    """
    fg: FiniteGraph = truncate(p, n)
    h = max(1, n // 3)
    head = set()
    for v in fg.vertices:
        _, idx = split_token(v)
        if idx is not None and idx < h:
            head.add(v)
    g = fg.to_networkx()
    if mode == VERTEX:
        patch = frozenset(head | (set(p.core) - set(p.omega_vertices())))
        g.remove_nodes_from(patch)
    else:
        region = head | set(p.core)
        patch = frozenset(e for e in fg.edges if e[0] in region and e[1] in region)
        g.remove_edges_from(patch)
    return g, patch


def _peel(g: nx.Graph, keep: set[str]) -> nx.Graph:
    """Drop vertices of degree <= 1 repeatedly; they lie on no simple path."""
    g = g.copy()
    stack = [v for v in g if g.degree(v) <= 1 and v not in keep]
    while stack:
        v = stack.pop()
        if v not in g or v in keep or g.degree(v) > 1:
            continue
        nbrs = list(g.neighbors(v))
        g.remove_node(v)
        stack.extend(u for u in nbrs if u not in keep and g.degree(u) <= 1)
    return g


SRC, DST = "<a-tail>", "<b-tail>"


def _contract(g: nx.Graph, tail_a: set[str], tail_b: set[str]) -> nx.Graph:
    """Merge each tail into one terminal; parallel edges become capacity."""
    def m(v):
        return SRC if v in tail_a else DST if v in tail_b else v

    h = nx.Graph()
    h.add_nodes_from({m(v) for v in g})
    for u, v in g.edges:
        x, y = m(u), m(v)
        if x == y:
            continue
        if h.has_edge(x, y):
            h[x][y]["capacity"] += 1
            h[x][y]["orig"].append(tuple(sorted((u, v))))
        else:
            h.add_edge(x, y, capacity=1, orig=[tuple(sorted((u, v)))])
    return h


def _tails_split(g: nx.Graph, tail_a, tail_b, drop_nodes=(), drop_edges=()) -> bool:
    view = nx.restricted_view(g, list(drop_nodes), list(drop_edges))
    seen = set()
    for s in tail_a:
        if s in seen or s not in view:
            continue
        comp = nx.node_connected_component(view, s)
        if comp & tail_b:
            return False
        seen |= comp
    return True


def separator_oracle(
    p: GraphPresentation,
    a: str,
    b: str,
    mode: str,
    k: int = 3,
    n: int | None = None,
    config: OracleConfig | None = None,
):
    """Decide whether <= k vertices (edges) beyond the free patch separate
    the depth-n tails of rays ``a`` and ``b`` in ``truncate(p, n)``.

    A tail is the set of vertices with index in [n//3, n); tail vertices
    themselves are never part of a vertex separator.
    """
    config = config or OracleConfig()
    n = default_depth(k) if n is None else n
    if n < 3 * k:
        raise ValueError("depth must be at least 3k")
    a = _resolve_ray(p, a, n)
    b = _resolve_ray(p, b, n)
    if a == b:
        return CannotSeparate()
    h = max(1, n // 3)
    tail_a = {vertex_token(a, i) for i in range(h, n)}
    tail_b = {vertex_token(b, i) for i in range(h, n)}
    g, patch = _reduced(p, n, mode)
    if _tails_split(g, tail_a, tail_b):
        return Separates(frozenset(), patch)
    c = _peel(_contract(g, tail_a, tail_b), {SRC, DST})
    if config.exhaustive:
        return _exhaustive(g, c, tail_a, tail_b, mode, k, patch, config)
    return _certified(g, c, tail_a, tail_b, mode, k, patch)


def _certified(g, c: nx.Graph, tail_a, tail_b, mode: str, k: int, patch):
    """Max-flow route: k+1 disjoint paths refute, an explicit cut confirms.

    Both outcomes are re-checked on the uncontracted graph so the verdict
    does not rest on trusting the flow code.
    """
    if mode == VERTEX:
        if c.has_edge(SRC, DST):
            return CannotSeparate(((SRC, DST),))
        paths = list(nx.node_disjoint_paths(c, SRC, DST))
        inner = [set(q[1:-1]) for q in paths]
        assert all(not (x & y) for x, y in itertools.combinations(inner, 2))
        if len(paths) > k:
            return CannotSeparate(tuple(tuple(q) for q in paths[: k + 1]))
        cut = nx.minimum_node_cut(c, SRC, DST)
        assert len(cut) <= k and _tails_split(g, tail_a, tail_b, drop_nodes=cut)
        return Separates(frozenset(cut), patch)
    value, (side, _) = nx.minimum_cut(c, SRC, DST, capacity="capacity")
    if value > k:
        return CannotSeparate((("flow", value),))
    cut = set()
    for u, v, data in c.edges(data=True):
        if (u in side) != (v in side):
            cut.update(data["orig"])
    assert len(cut) <= k and _tails_split(g, tail_a, tail_b, drop_edges=cut)
    return Separates(frozenset(cut), patch)


def _exhaustive(g, c: nx.Graph, tail_a, tail_b, mode: str, k: int, patch, config: OracleConfig):
    if mode == VERTEX:
        if c.has_edge(SRC, DST):
            return CannotSeparate()
        pool = sorted(v for v in c if v not in (SRC, DST))
    else:
        pool = sorted(e for _, _, d in c.edges(data=True) for e in d["orig"])
    total = sum(math.comb(len(pool), j) for j in range(k + 1))
    if total > config.max_subsets:
        raise BoundTooLarge(f"{total} candidate sets exceed the budget of {config.max_subsets}")
    start = time.monotonic()
    for size in range(k + 1):
        for i, combo in enumerate(itertools.combinations(pool, size)):
            if i % 512 == 0 and (time.monotonic() - start) * 1000 > config.budget_ms:
                raise BoundTooLarge(f"search exceeded {config.budget_ms} ms")
            if mode == VERTEX:
                ok = _tails_split(g, tail_a, tail_b, drop_nodes=combo)
            else:
                ok = _tails_split(g, tail_a, tail_b, drop_edges=combo)
            if ok:
                return Separates(frozenset(combo), patch)
    return CannotSeparate()


@dataclass
class AgreementReport:
    checked: int = 0
    disagreements: list[tuple[str, str, str, bool, bool]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.disagreements


def oracle_agreement(
    p: GraphPresentation, kmax: int = 3, config: OracleConfig | None = None
) -> AgreementReport:
    """Compare symbolic classes with oracle verdicts on every generator pair.

    Two generators count as inseparable when no k <= kmax separates them at
    depth 3k+3.
    """
    rep = AgreementReport()
    gens = p.generator_ids()
    for mode, classes in ((VERTEX, end_classes(p)), (EDGE, edge_end_classes(p))):
        for a, b in itertools.combinations(gens, 2):
            together = classes[a] == classes[b]
            separable = any(
                separator_oracle(p, a, b, mode, k, default_depth(k), config) for k in range(kmax + 1)
            )
            rep.checked += 1
            if together == separable:
                rep.disagreements.append((mode, a, b, together, separable))
    return rep


def pendant_names(p: GraphPresentation, count: int) -> list[str]:
    return [pendant_ray(fam, i) for _, fam in sorted(p.combs) for i in range(count)]
