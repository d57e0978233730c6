"""Clique expansion and dominator duplication, with a correspondence check.

Clique expansion replaces every core vertex of infinite degree by an
infinite clique so that edge-ends of the input become ends of the output.
Dominator duplication splits each dominating vertex into a copy that keeps
the attachments into its end's envelope and a copy that takes the rest, so
that ends of the input become edge-ends of the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .endspace import (
    EDGE,
    VERTEX,
    SpaceDescriptor,
    UnknownEndpoint,
    dominators,
    edge_dominated_ends,
    edge_end_space,
    end_classes,
    end_space,
    homeomorphic,
)
from .presentation import (
    CLIQUE,
    Fan,
    GraphPresentation,
    Generator,
    split_token,
    vertex_token,
)

RHO = "rho"
TAU = "tau"


class PreconditionViolated(ValueError):
    def __init__(self, vertex: str, first: str, second: str):
        super().__init__(f"{vertex} edge-dominates two ends: {first} and {second}")
        self.vertex = vertex
        self.ends = (first, second)


@dataclass(frozen=True)
class Envelope:
    point: str
    dominators: frozenset[str]
    ray_family: frozenset[str]

    @property
    def vertex_set(self) -> tuple[str, ...]:
        """Symbolic union: dominator tokens followed by V(r) for each ray."""
        return tuple(sorted(self.dominators)) + tuple(f"V({r})" for r in sorted(self.ray_family))

    def contains(self, token: str) -> bool:
        name, idx = split_token(token)
        if idx is None:
            return name in self.dominators
        return name in self.ray_family


@dataclass
class ExpansionMap:
    source: GraphPresentation
    target: GraphPresentation
    replaced: dict[str, str] = field(default_factory=dict)
    # original attachment -> image; fans map to ladders, edges to clique vertices
    edge_map: dict[tuple, tuple] = field(default_factory=dict)


@dataclass
class DuplicationMap:
    source: GraphPresentation
    target: GraphPresentation
    # v -> (v, v', dominated end point)
    split: dict[str, tuple[str, str, str]] = field(default_factory=dict)
    kept: dict[str, list] = field(default_factory=dict)
    moved: dict[str, list] = field(default_factory=dict)
    # vertices whose vertex- and edge-mode dominated ends differ
    mode_disagreements: dict[str, tuple[list[str], list[str]]] = field(default_factory=dict)


@dataclass
class Report:
    direction: str
    ok: bool
    source: SpaceDescriptor | None = None
    target: SpaceDescriptor | None = None
    failures: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "direction": self.direction,
            "ok": self.ok,
            "source": self.source.to_json() if self.source else None,
            "target": self.target.to_json() if self.target else None,
            "failures": list(self.failures),
            "details": self.details,
        }


def _fresh(base: str, used: set[str]) -> str:
    name, i = base, 1
    while name in used:
        i += 1
        name = f"{base}{i}"
    used.add(name)
    return name


def _used_names(p: GraphPresentation) -> set[str]:
    return set(p.core) | set(p.kinds) | {fam for _, fam in p.combs}


# ---------------------------------------------------------------- envelope


def compute_envelope(p: GraphPresentation, point: str) -> Envelope:
    classes = end_classes(p)
    members = frozenset(g for g, pt in classes.items() if pt == point)
    if not members:
        raise UnknownEndpoint(point)
    return Envelope(point, dominators(p, point, VERTEX), members)


# ---------------------------------------------------------- clique expansion


def expand_cliques(p: GraphPresentation) -> tuple[GraphPresentation, ExpansionMap]:
    """Replace each core vertex with an Omega fan by an infinite clique.

    Omega fans become ladders into the clique; every finite attachment of a
    replaced vertex goes to its own clique vertex, so distinct edges stay
    distinct.
    """
    dom = p.omega_vertices()
    if not dom:
        return p, ExpansionMap(p, p)
    used = _used_names(p)
    kv = {v: _fresh(f"{v}.k", used) for v in dom}
    next_index = {v: 0 for v in dom}
    # ladder rungs already occupy k[i] for every i, but a clique vertex may
    # carry any number of extra edges, so fresh indices only need to be
    # distinct among the finite attachments
    m = ExpansionMap(p, p, replaced=dict(kv))

    def image(v: str) -> str:
        if v in kv:
            j = next_index[v]
            next_index[v] += 1
            return vertex_token(kv[v], j)
        return v

    edges = set()
    for u, v in sorted(p.finite_edges):
        e = (image(u), image(v))
        edges.add(e)
        m.edge_map[("edge", u, v)] = ("edge",) + e
    fans = set()
    ladders = set(p.ladders)
    for f in sorted(p.fans):
        if f.vertex not in kv:
            fans.add(f)
            continue
        if f.is_omega:
            lad = tuple(sorted((kv[f.vertex], f.generator)))
            ladders.add(lad)
            m.edge_map[("fan", f.vertex, f.generator)] = ("ladder",) + lad
        else:
            for i in f.support:
                e = (image(f.vertex), vertex_token(f.generator, i))
                edges.add(e)
                m.edge_map[("fan", f.vertex, f.generator, i)] = ("edge",) + e
    target = GraphPresentation(
        core=frozenset(p.core - set(dom)),
        generators=frozenset(p.generators | {Generator(k, CLIQUE) for k in kv.values()}),
        finite_edges=frozenset(tuple(sorted(e)) for e in edges),
        fans=frozenset(fans),
        ladders=frozenset(ladders),
        combs=p.combs,
    )
    m.target = target
    return target, m


# ------------------------------------------------------- dominator duplication


def check_single_domination(p: GraphPresentation) -> dict[str, list[str]]:
    """Raise PreconditionViolated unless every dominator token edge-dominates
    at most one end; returns the token -> ends table."""
    table = edge_dominated_ends(p)
    for tok, ends in table.items():
        if len(ends) > 1:
            raise PreconditionViolated(tok, ends[0], ends[1])
    return table


def _vertex_dominated(p: GraphPresentation) -> dict[str, list[str]]:
    classes = end_classes(p)
    out: dict[str, set[str]] = {}
    for pt in set(classes.values()):
        for tok in dominators(p, pt, VERTEX):
            out.setdefault(tok, set()).add(pt)
    return {t: sorted(v) for t, v in out.items()}


def duplicate_dominators(p: GraphPresentation) -> tuple[GraphPresentation, DuplicationMap]:
    """Split every dominating core vertex v into v (envelope side) and v'."""
    table = check_single_domination(p)
    split_vertices = [t for t in table if t in p.core]
    m = DuplicationMap(p, p)
    vmode = _vertex_dominated(p)
    for tok in sorted(set(table) | set(vmode)):
        if table.get(tok, []) != vmode.get(tok, []):
            m.mode_disagreements[tok] = (vmode.get(tok, []), table.get(tok, []))
    if not split_vertices:
        return p, m
    used = _used_names(p)
    envs = {v: compute_envelope(p, table[v][0]) for v in split_vertices}
    prime = {v: _fresh(f"{v}.prime", used) for v in split_vertices}

    def side(v: str, other: str) -> str:
        """Image of the endpoint v of an attachment whose other end is ``other``."""
        if v not in envs:
            return v
        if envs[v].contains(other):
            m.kept.setdefault(v, []).append(other)
            return v
        m.moved.setdefault(v, []).append(other)
        return prime[v]

    edges = set()
    for u, v in sorted(p.finite_edges):
        edges.add(tuple(sorted((side(u, v), side(v, u)))))
    fans = set()
    for f in sorted(p.fans):
        if f.vertex in envs:
            # a fan lies inside the envelope exactly when its generator does
            probe = vertex_token(f.generator, 0)
            fans.add(Fan(side(f.vertex, probe), f.generator, f.support))
        else:
            fans.add(f)
    for v in split_vertices:
        edges.add(tuple(sorted((v, prime[v]))))
        m.split[v] = (v, prime[v], envs[v].point)
    target = GraphPresentation(
        core=frozenset(p.core | set(prime.values())),
        generators=p.generators,
        finite_edges=frozenset(edges),
        fans=frozenset(fans),
        ladders=p.ladders,
        combs=p.combs,
    )
    m.target = target
    return target, m


# ------------------------------------------------------------ verification


def verify_correspondence(p: GraphPresentation, direction: str) -> Report:
    if direction == RHO:
        q, m = expand_cliques(p)
        src, tgt = edge_end_space(p), end_space(q)
        rep = Report(RHO, True, src, tgt, details={"replaced": m.replaced})
        if not homeomorphic(src, tgt):
            rep.failures.append("descriptor-mismatch")
        multi = {t: e for t, e in edge_dominated_ends(q).items() if len(e) > 1}
        if multi:
            rep.failures.append("image-vertex-dominates-two-ends")
            rep.details["multi_dominators"] = multi
    elif direction == TAU:
        src = end_space(p)
        try:
            q, m = duplicate_dominators(p)
        except PreconditionViolated as exc:
            return Report(
                TAU,
                False,
                src,
                None,
                ["precondition-violated"],
                {"vertex": exc.vertex, "ends": list(exc.ends)},
            )
        tgt = edge_end_space(q)
        rep = Report(TAU, True, src, tgt, details={"split": {v: list(s) for v, s in m.split.items()}})
        if m.mode_disagreements:
            rep.details["mode_disagreements"] = {k: list(v) for k, v in m.mode_disagreements.items()}
        if not homeomorphic(src, tgt):
            rep.failures.append("descriptor-mismatch")
    else:
        raise ValueError(f"unknown direction {direction!r}")
    rep.ok = not rep.failures
    return rep


__all__ = [
    "EDGE",
    "RHO",
    "TAU",
    "DuplicationMap",
    "Envelope",
    "ExpansionMap",
    "PreconditionViolated",
    "Report",
    "check_single_domination",
    "compute_envelope",
    "duplicate_dominators",
    "expand_cliques",
    "verify_correspondence",
]
