"""Finite presentations of infinite graphs.

A presentation lists a finite core, ray and clique generators, finite
edges, fans (a core vertex joined to finitely or infinitely many vertices
of a generator), ladders (rungs g[i]-h[i] for every i) and combs (a fresh
pendant ray hanging from every vertex of a base ray).  The module parses
and writes the line-oriented ``.egp`` format, validates presentations and
truncates them to finite graphs for the brute-force oracles.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

RAY = "ray"
CLIQUE = "clique"
OMEGA = "omega"

SECTIONS = ("core", "generators", "edges", "fans", "ladders", "combs")

_TOKEN_RE = re.compile(r"^([^\s\[\],#]+)(?:\[(\d+)\])?$")


class ParseError(ValueError):
    """Syntax error in an .egp file, tagged with a 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class DuplicateIdError(ParseError):
    pass


class TruncationError(ValueError):
    """A declared finite edge references g[i] with i beyond the truncation depth."""


@dataclass(frozen=True, order=True)
class Generator:
    id: str
    kind: str  # RAY or CLIQUE


@dataclass(frozen=True, order=True)
class Fan:
    vertex: str
    generator: str
    support: str | tuple[int, ...]  # OMEGA or explicit indices

    @property
    def is_omega(self) -> bool:
        return self.support == OMEGA


@dataclass(frozen=True)
class GraphPresentation:
    core: frozenset[str] = frozenset()
    generators: frozenset[Generator] = frozenset()
    finite_edges: frozenset[tuple[str, str]] = frozenset()
    fans: frozenset[Fan] = frozenset()
    ladders: frozenset[tuple[str, str]] = frozenset()
    combs: frozenset[tuple[str, str]] = frozenset()

    @property
    def kinds(self) -> dict[str, str]:
        return {g.id: g.kind for g in self.generators}

    def generator_ids(self) -> list[str]:
        return sorted(g.id for g in self.generators)

    def ray_ids(self) -> list[str]:
        return sorted(g.id for g in self.generators if g.kind == RAY)

    def omega_vertices(self) -> list[str]:
        """Core vertices carrying at least one Omega fan."""
        return sorted({f.vertex for f in self.fans if f.is_omega})

    def comb_families(self) -> list[str]:
        return sorted(fam for _, fam in self.combs)


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str) -> None:
        self.violations.append(Violation(kind, detail))

    def kinds(self) -> list[str]:
        return [v.kind for v in self.violations]


@dataclass(frozen=True)
class FiniteGraph:
    vertices: frozenset[str]
    edges: frozenset[tuple[str, str]]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(sorted(self.vertices))
        g.add_edges_from(sorted(self.edges))
        return g

    def degree(self, v: str) -> int:
        return sum(1 for e in self.edges if v in e)


# ---------------------------------------------------------------- tokens


def vertex_token(name: str, index: int | None = None) -> str:
    return name if index is None else f"{name}[{index}]"


def split_token(token: str) -> tuple[str, int | None]:
    m = _TOKEN_RE.match(token)
    if not m:
        raise ValueError(f"bad vertex token {token!r}")
    name, idx = m.group(1), m.group(2)
    return name, (int(idx) if idx is not None else None)


def pendant_ray(family: str, i: int) -> str:
    """Name of the i-th pendant ray of a comb family."""
    return f"{family}.{i}"


def _token_key(token: str) -> tuple[str, int]:
    name, idx = split_token(token)
    return (name, -1 if idx is None else idx)


def _edge(u: str, v: str) -> tuple[str, str]:
    return (u, v) if _token_key(u) <= _token_key(v) else (v, u)


def _plain_edge(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


# ------------------------------------------------------------ construction


def make_presentation(
    core: Iterable[str] = (),
    generators: dict[str, str] | Iterable[tuple[str, str]] = (),
    edges: Iterable[tuple[str, str]] = (),
    fans: Iterable[tuple[str, str, object]] = (),
    ladders: Iterable[tuple[str, str]] = (),
    combs: Iterable[tuple[str, str]] = (),
) -> GraphPresentation:
    """Convenience constructor normalising pairs and fan supports."""
    gens = generators.items() if isinstance(generators, dict) else generators
    fan_set = set()
    for v, g, support in fans:
        if support == OMEGA or support is None:
            fan_set.add(Fan(v, g, OMEGA))
        else:
            fan_set.add(Fan(v, g, tuple(sorted(set(int(i) for i in support)))))
    return GraphPresentation(
        core=frozenset(core),
        generators=frozenset(Generator(i, k) for i, k in gens),
        finite_edges=frozenset(_edge(u, v) for u, v in edges),
        fans=frozenset(fan_set),
        ladders=frozenset(_plain_edge(g, h) for g, h in ladders),
        combs=frozenset((g, f) for g, f in combs),
    )


# -------------------------------------------------------------- validation


def validate(p: GraphPresentation) -> ValidationReport:
    """List every violated well-formedness condition of ``p``."""
    rep = ValidationReport()
    kinds = p.kinds
    families = [fam for _, fam in p.combs]

    if len(kinds) != len(p.generators):
        rep.add("duplicate-id", "generator declared with two kinds")
    for gid, kind in kinds.items():
        if kind not in (RAY, CLIQUE):
            rep.add("bad-kind", f"generator {gid} has kind {kind!r}")
    for name in sorted(set(kinds) & p.core):
        rep.add("duplicate-id", f"{name} is both a core vertex and a generator")
    seen: set[str] = set()
    for fam in families:
        if fam in seen or fam in kinds or fam in p.core:
            rep.add("duplicate-id", f"comb family {fam} collides with another id")
        seen.add(fam)

    def check_token(token: str, where: str) -> None:
        try:
            name, idx = split_token(token)
        except ValueError:
            rep.add("bad-token", f"{token!r} in {where}")
            return
        if idx is None:
            if name not in p.core:
                rep.add("dangling-reference", f"{token} in {where} is not a core vertex")
        elif name not in kinds:
            rep.add("dangling-reference", f"{token} in {where} names no generator")

    for u, v in sorted(p.finite_edges):
        check_token(u, f"edge {u}-{v}")
        check_token(v, f"edge {u}-{v}")
        if u == v:
            rep.add("self-loop", f"edge {u}-{v}")

    fan_pairs: set[tuple[str, str]] = set()
    for f in sorted(p.fans):
        where = f"fan {f.vertex}->{f.generator}"
        if f.vertex not in p.core:
            rep.add("dangling-reference", f"{where}: {f.vertex} is not a core vertex")
        if f.generator in families:
            rep.add("comb-pendant-fan", f"{where}: comb pendants may not carry fans")
        elif f.generator not in kinds:
            rep.add("dangling-reference", f"{where}: {f.generator} is not declared")
        if not f.is_omega and len(f.support) == 0:
            rep.add("empty-fan-support", where)
        if (f.vertex, f.generator) in fan_pairs:
            rep.add("duplicate-fan", where)
        fan_pairs.add((f.vertex, f.generator))

    for g, h in sorted(p.ladders):
        for x in (g, h):
            if x not in kinds:
                rep.add("dangling-reference", f"ladder {g}-{h}: {x} is not declared")
        if g == h:
            rep.add("self-ladder", f"ladder {g}-{h}")

    for g, fam in sorted(p.combs):
        if g not in kinds:
            rep.add("dangling-reference", f"comb {g}/{fam}: {g} is not declared")
        elif kinds[g] != RAY:
            rep.add("comb-base-not-ray", f"comb {g}/{fam}")
        if g == fam:
            rep.add("self-ladder", f"comb {g}/{fam} uses the same id twice")
    return rep


# ---------------------------------------------------------------- truncate


def truncate(p: GraphPresentation, n: int) -> FiniteGraph:
    """Finite subgraph spanned by the core and the first ``n`` vertices of
    every generator, with the first ``n`` comb pendants cut to length ``n``."""
    if n < 1:
        raise ValueError("depth must be positive")
    verts: set[str] = set(p.core)
    edges: set[tuple[str, str]] = set()

    def add(u: str, v: str) -> None:
        if u != v:
            edges.add(_plain_edge(u, v))

    for g in sorted(p.generators):
        names = [vertex_token(g.id, i) for i in range(n)]
        verts.update(names)
        if g.kind == RAY:
            for i in range(n - 1):
                add(names[i], names[i + 1])
        else:
            for i in range(n):
                for j in range(i + 1, n):
                    add(names[i], names[j])

    for f in p.fans:
        idx = range(n) if f.is_omega else [i for i in f.support if i < n]
        for i in idx:
            add(f.vertex, vertex_token(f.generator, i))

    for g, h in p.ladders:
        for i in range(n):
            add(vertex_token(g, i), vertex_token(h, i))

    for g, fam in p.combs:
        for i in range(n):
            s = pendant_ray(fam, i)
            names = [vertex_token(s, j) for j in range(n)]
            verts.update(names)
            for j in range(n - 1):
                add(names[j], names[j + 1])
            add(vertex_token(g, i), names[0])

    for u, v in p.finite_edges:
        for t in (u, v):
            _, idx = split_token(t)
            if idx is not None and idx >= n:
                raise TruncationError(f"edge {u}-{v} needs depth > {idx}, got {n}")
        add(u, v)

    return FiniteGraph(frozenset(verts), frozenset(edges))


# ------------------------------------------------------------- .egp format


def parse(text: str) -> GraphPresentation:
    """Read the .egp format; raises ParseError / DuplicateIdError."""
    section = None
    order = -1
    core: dict[str, int] = {}
    gens: dict[str, str] = {}
    edges: list[tuple[str, str]] = []
    fans: dict[tuple[str, str], Fan] = {}
    ladders: list[tuple[str, str]] = []
    combs: dict[str, str] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or line[1:-1] not in SECTIONS:
                raise ParseError(lineno, f"unknown section header {line!r}")
            pos = SECTIONS.index(line[1:-1])
            if pos <= order:
                raise ParseError(lineno, f"section {line} out of order or repeated")
            order, section = pos, line[1:-1]
            continue
        if section is None:
            raise ParseError(lineno, "content before the first section header")
        toks = line.split()

        def token(t: str) -> str:
            try:
                split_token(t)
            except ValueError:
                raise ParseError(lineno, f"bad vertex token {t!r}") from None
            return t

        def plain(t: str) -> str:
            name, idx = split_token(token(t))
            if idx is not None:
                raise ParseError(lineno, f"{t!r} must be a plain id")
            return name

        if section == "core":
            for t in toks:
                name = plain(t)
                if name in core:
                    raise DuplicateIdError(lineno, f"core vertex {name} declared twice")
                core[name] = lineno
        elif section == "generators":
            if len(toks) != 2 or toks[1] not in (RAY, CLIQUE):
                raise ParseError(lineno, "expected 'id ray|clique'")
            name = plain(toks[0])
            if name in gens or name in core:
                raise DuplicateIdError(lineno, f"id {name} declared twice")
            gens[name] = toks[1]
        elif section == "edges":
            if len(toks) != 2:
                raise ParseError(lineno, "expected 'u v'")
            edges.append((token(toks[0]), token(toks[1])))
        elif section == "fans":
            if len(toks) != 3:
                raise ParseError(lineno, "expected 'v g omega' or 'v g i1,i2,...'")
            v, g = plain(toks[0]), plain(toks[1])
            if toks[2] == OMEGA:
                support: str | tuple[int, ...] = OMEGA
            else:
                try:
                    support = tuple(sorted({int(x) for x in toks[2].split(",")}))
                except ValueError:
                    raise ParseError(lineno, f"bad fan support {toks[2]!r}") from None
                if any(i < 0 for i in support):
                    raise ParseError(lineno, "fan indices must be non-negative")
            if (v, g) in fans:
                raise DuplicateIdError(lineno, f"fan {v} {g} declared twice")
            fans[(v, g)] = Fan(v, g, support)
        elif section == "ladders":
            if len(toks) != 2:
                raise ParseError(lineno, "expected 'g h'")
            ladders.append((plain(toks[0]), plain(toks[1])))
        elif section == "combs":
            if len(toks) != 2:
                raise ParseError(lineno, "expected 'g familyid'")
            g, fam = plain(toks[0]), plain(toks[1])
            if fam in combs or fam in gens or fam in core:
                raise DuplicateIdError(lineno, f"id {fam} declared twice")
            combs[fam] = g

    return GraphPresentation(
        core=frozenset(core),
        generators=frozenset(Generator(i, k) for i, k in gens.items()),
        finite_edges=frozenset(_edge(u, v) for u, v in edges),
        fans=frozenset(fans.values()),
        ladders=frozenset(_plain_edge(g, h) for g, h in ladders),
        combs=frozenset((g, fam) for fam, g in combs.items()),
    )


def serialize(p: GraphPresentation) -> str:
    """Canonical .egp text: fixed section order, sorted entries, LF endings."""
    out = ["[core]"]
    out += sorted(p.core)
    out.append("[generators]")
    out += [f"{g.id} {g.kind}" for g in sorted(p.generators)]
    out.append("[edges]")
    out += [f"{u} {v}" for u, v in sorted(p.finite_edges, key=lambda e: (_token_key(e[0]), _token_key(e[1])))]
    out.append("[fans]")
    for f in sorted(p.fans, key=lambda f: (f.vertex, f.generator)):
        sup = OMEGA if f.is_omega else ",".join(str(i) for i in f.support)
        out.append(f"{f.vertex} {f.generator} {sup}")
    out.append("[ladders]")
    out += [f"{g} {h}" for g, h in sorted(p.ladders)]
    out.append("[combs]")
    out += [f"{g} {fam}" for g, fam in sorted(p.combs)]
    return "\n".join(out) + "\n"


def load(path) -> GraphPresentation:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def figure1() -> GraphPresentation:
    """Double ray whose two halves share an origin, dominated by one vertex."""
    return make_presentation(
        core=["v0", "vinf"],
        generators={"r+": RAY, "r-": RAY},
        edges=[("v0", "r+[0]"), ("v0", "r-[0]")],
        fans=[("vinf", "r+", OMEGA), ("vinf", "r-", OMEGA)],
    )
