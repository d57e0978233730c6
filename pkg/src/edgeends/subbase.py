"""Special subbases: nested, noetherian, sigma-disjoint clopen families.

Two kinds of ground are supported.  A ``FiniteGround`` is an explicit point
set, discrete unless a topology (a list of open sets, read as a base) is
declared.  A scheme ground is the ray space of a ``TreeScheme`` with the
subbase {[t, {}]}; its sets are materialized on the cut model, and the
checks combine the tree-order rules with extensional verification there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import networkx as nx

from .endspace import SpaceDescriptor, canonicalize
from .ordertree import (
    BasicOpen,
    NodeRef,
    RaySpaceModel,
    TreeScheme,
    NotSpecial,
    comparable,
    height,
    order_le,
    specialness,
    tops_of,
)

GROUND_ID = "X"


class GroundUndecidable(ValueError):
    pass


class BoundExceeded(ValueError):
    pass


@dataclass(frozen=True)
class FiniteGround:
    points: tuple[str, ...]
    topology: tuple[frozenset[str], ...] | None = None  # None: discrete

    def is_open(self, s) -> bool:
        s = frozenset(s)
        if self.topology is None:
            return s <= set(self.points)
        covered = set()
        for o in self.topology:
            if o <= s:
                covered |= o
        return covered == s

    def closed_sets(self) -> list[frozenset[str]]:
        pts = frozenset(self.points)
        subsets = (frozenset(c) for k in range(len(pts) + 1) for c in itertools.combinations(sorted(pts), k))
        return [y for y in subsets if self.is_open(pts - y)]

    def descriptor(self) -> SpaceDescriptor:
        if self.topology is not None and any(not self.is_open({p}) for p in self.points):
            raise GroundUndecidable("only discrete finite grounds have a rank-0 descriptor")
        return canonicalize(SpaceDescriptor(isolated=frozenset(self.points)))


@dataclass
class SubbaseFamily:
    ground: FiniteGround | TreeScheme
    sets: dict[str, frozenset]
    cut: int = 8
    nodes: dict[str, NodeRef] = field(default_factory=dict)
    allow_empty: bool = False
    model: RaySpaceModel | None = None

    @property
    def is_scheme(self) -> bool:
        return isinstance(self.ground, TreeScheme)

    @property
    def points(self) -> frozenset:
        if self.is_scheme:
            return frozenset(self.model.rays)
        return frozenset(self.ground.points)

    @classmethod
    def from_scheme(cls, t: TreeScheme, cut: int = 8) -> "SubbaseFamily":
        model = RaySpaceModel(t, cut)
        nodes = {str(n): n for n in model.nodes}
        sets = {k: model.through(n) for k, n in nodes.items()}
        return cls(t, sets, cut, nodes, allow_empty=True, model=model)

    @classmethod
    def finite(cls, points, sets: dict, topology=None) -> "SubbaseFamily":
        ground = FiniteGround(tuple(sorted(points)), None if topology is None else tuple(map(frozenset, topology)))
        return cls(ground, {k: frozenset(v) for k, v in sets.items()})

    def members(self, b: BasicOpen) -> frozenset:
        out = self.sets[b.anchor]
        for e in b.excluded:
            out = out - self.sets[e]
        return out


@dataclass
class CheckResult:
    ok: bool
    witness: object = None
    mode: str = "exhaustive"

    def to_json(self):
        w = self.witness
        if isinstance(w, (tuple, list)):
            w = [sorted(map(str, x)) if isinstance(x, (set, frozenset)) else str(x) for x in w]
        elif w is not None and not isinstance(w, (int, str, dict)):
            w = str(w)
        return {"ok": self.ok, "witness": w, "mode": self.mode}


@dataclass
class SpecialReport:
    nested: CheckResult
    noetherian: CheckResult
    sigma_disjoint: CheckResult
    clopen: CheckResult
    order_antichains: int | None = None

    @property
    def ok(self) -> bool:
        return all(c.ok for c in (self.nested, self.noetherian, self.sigma_disjoint, self.clopen))

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "nested": self.nested.to_json(),
            "noetherian": self.noetherian.to_json(),
            "sigma_disjoint": self.sigma_disjoint.to_json(),
            "clopen": self.clopen.to_json(),
            "order_antichains": self.order_antichains,
        }


# ------------------------------------------------------------------ checks


def _nested_pairs(sets: dict) -> CheckResult:
    for (a, sa), (b, sb) in itertools.combinations(sorted(sets.items()), 2):
        if sa & sb and not (sa <= sb or sb <= sa):
            return CheckResult(False, (a, b))
    return CheckResult(True)


def _greedy_layers(sets: dict) -> list[list[str]]:
    """Split into layers of pairwise disjoint sets, largest sets first."""
    layers: list[list[str]] = []
    unions: list[set] = []
    for k in sorted(sets, key=lambda k: (-len(sets[k]), k)):
        for layer, used in zip(layers, unions):
            if not (sets[k] & used):
                layer.append(k)
                used |= sets[k]
                break
        else:
            layers.append([k])
            unions.append(set(sets[k]))
    return layers


def check_special(f: SubbaseFamily) -> SpecialReport:
    empties = [k for k, v in f.sets.items() if not v]
    if empties and not f.allow_empty:
        bad = CheckResult(False, ("empty set", empties[0]))
        return SpecialReport(bad, bad, bad, bad)
    if f.is_scheme:
        return _check_scheme(f)
    nested = _nested_pairs(f.sets)
    # a finite family has no infinite chains, so every chain has a maximum
    noeth = CheckResult(True, None, "finite")
    layers = _greedy_layers(f.sets)
    sigma = CheckResult(True, {"layers": len(layers)})
    pts = frozenset(f.ground.points)
    clopen = CheckResult(True)
    for k, s in sorted(f.sets.items()):
        if not s <= pts:
            clopen = CheckResult(False, (k, "not a subset of the ground"))
            break
        if not f.ground.is_open(s):
            clopen = CheckResult(False, (k, "not open"))
            break
        if not f.ground.is_open(pts - s):
            clopen = CheckResult(False, (k, "not closed"))
            break
    return SpecialReport(nested, noeth, sigma, clopen)


def _check_scheme(f: SubbaseFamily) -> SpecialReport:
    t: TreeScheme = f.ground
    model: RaySpaceModel = f.model
    nodes = f.nodes
    # nested: the order rule predicts containment or disjointness; both are
    # then confirmed on the materialized sets
    nested = CheckResult(True, None, "order rule + extensional")
    for a, b in itertools.combinations(sorted(nodes), 2):
        na, nb = nodes[a], nodes[b]
        sa, sb = f.sets[a], f.sets[b]
        if order_le(t, na, nb):
            ok = sb <= sa
        elif order_le(t, nb, na):
            ok = sa <= sb
        else:
            ok = not (sa & sb)
        if not ok:
            nested = CheckResult(False, (a, b), "order rule + extensional")
            break
    # increasing chains of [t, {}] are decreasing chains of nodes, which
    # stop because every down-set is well ordered
    noeth = CheckResult(True, None, "structural")
    # sigma-disjoint: one layer per height, each layer checked for disjoint sets
    dec = specialness(t, min(f.cut, 4))
    by_level: dict = {}
    for k, n in nodes.items():
        by_level.setdefault(height(t, n), []).append(k)
    sigma = CheckResult(True, {"levels": len(by_level)}, "levels")
    if isinstance(dec, NotSpecial):
        sigma = CheckResult(False, dec.reason, "levels")
    for ks in by_level.values():
        if not sigma.ok:
            break
        for a, b in itertools.combinations(ks, 2):
            if f.sets[a] & f.sets[b]:
                sigma = CheckResult(False, (a, b), "levels")
                break
    clopen = _clopen_rule(t, model, nodes, f.sets)
    antichains = None if isinstance(dec, NotSpecial) else len(dec.levels)
    return SpecialReport(nested, noeth, sigma, clopen, antichains)


def _clopen_rule(t, model: RaySpaceModel, nodes: dict, sets: dict) -> CheckResult:
    """Every ray outside [t, {}] has a basic neighbourhood missing it: either
    [x, {t0}] for a top t0 of the ray with t0 <= t, or [s, {}] for a node s
    of the ray incomparable with t.  The witness is checked extensionally."""
    # a ray's own chain continues past the cut; its node at the cut index is
    # a valid witness that the cut model does not list
    ray_nodes = {
        r: [n for n in model.nodes if n.index is not None and r in model.through(n)]
        + [NodeRef(r.path, r.seg, model.cut)]
        for r in model.rays
    }
    for k, node in sorted(nodes.items()):
        inside = sets[k]
        for r in model.rays:
            if r in inside:
                continue
            witness = None
            for t0 in tops_of(t, r):
                if order_le(t, t0, node):
                    x = NodeRef(r.path, r.seg, 0)
                    witness = model.basic(x, [t0])
                    break
            if witness is None:
                for s in ray_nodes[r]:
                    if not comparable(t, s, node):
                        witness = model.through(s)
                        break
            if witness is None or r not in witness or witness & inside:
                return CheckResult(False, (k, str(r)), "decision rule + extensional")
    return CheckResult(True, None, "decision rule + extensional")


# ----------------------------------------------------------------- basis


@dataclass
class BasisElement:
    open: BasicOpen
    members: frozenset
    empty: bool
    dropped: list[str] = field(default_factory=list)


def basis_elements(f: SubbaseFamily, anchor: str, excluded) -> BasisElement:
    """Materialize [U, F] with F normalized: exclusions disjoint from U are
    dropped and an exclusion inside another exclusion is dropped."""
    U = f.sets[anchor]
    ex = sorted(set(excluded))
    dropped = [b for b in ex if not (f.sets[b] & U)]
    keep = [b for b in ex if b not in dropped]
    maximal = []
    for b in keep:
        sb = f.sets[b]
        inside = [c for c in keep if c != b and sb <= f.sets[c] and (sb != f.sets[c] or c < b)]
        if inside:
            dropped.append(b)
        else:
            maximal.append(b)
    b = BasicOpen(anchor, frozenset(maximal))
    members = f.members(b)
    return BasisElement(b, members, not members, sorted(dropped))


# -------------------------------------------------- hereditary completeness


@dataclass
class CompletenessResult:
    ok: bool
    closed_sets: int = 0
    witness: tuple | None = None  # (Y, ids of a linked family with empty meet)

    def to_json(self) -> dict:
        w = None
        if self.witness:
            w = {"Y": sorted(self.witness[0]), "family": sorted(self.witness[1])}
        return {"ok": self.ok, "closed_sets": self.closed_sets, "witness": w}


def check_hereditary_completeness(f: SubbaseFamily, bound: int = 12) -> CompletenessResult:
    """Search every closed Y for a family of traces that meets pairwise but
    has empty total intersection.

    For finite families the literal centered condition is vacuous (the
    whole family is one of its own finite subfamilies), so pairwise
    meeting is used as the centered test; it is the stronger requirement.
    A linked family with empty meet exists iff some maximal clique of the
    meet graph has empty meet, so maximal cliques are enumerated.
    """
    if f.is_scheme:
        raise GroundUndecidable("hereditary completeness needs a finite ground")
    if len(f.ground.points) > bound:
        raise BoundExceeded(f"{len(f.ground.points)} points exceed the bound {bound}")
    closed = f.ground.closed_sets()
    for y in closed:
        traces: dict[frozenset, str] = {}
        for k in sorted(f.sets):
            tr = f.sets[k] & y
            if tr and tr not in traces:
                traces[tr] = k
        g = nx.Graph()
        g.add_nodes_from(traces)
        for a, b in itertools.combinations(traces, 2):
            if a & b:
                g.add_edge(a, b)
        for clique in nx.find_cliques(g):
            if not frozenset.intersection(*clique):
                return CompletenessResult(False, len(closed), (y, [traces[c] for c in clique]))
    return CompletenessResult(True, len(closed))


# ------------------------------------------------------------------ files


def parse_sets(text: str) -> dict[str, frozenset[str]]:
    """Lines ``id: p q r``."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ValueError(f"line {lineno}: expected 'id: points'")
        k, v = line.split(":", 1)
        k = k.strip()
        if k in out:
            raise ValueError(f"line {lineno}: duplicate set id {k}")
        out[k] = frozenset(v.split())
    return out


def parse_points(text: str) -> list[str]:
    return sorted({p for line in text.splitlines() for p in line.split("#", 1)[0].split()})


def parse_open_sets(text: str) -> list[frozenset[str]]:
    """One open set per line, points separated by spaces."""
    out = []
    for line in text.splitlines():
        body = line.split("#", 1)[0]
        if body.strip():
            out.append(frozenset(body.split()))
    return out


# ------------------------------------------------------- finite contexts


class ContextUndecidable(ValueError):
    pass


@dataclass
class FiniteContext:
    """A finite ground with a nested subbase; the whole ground is always one
    of the sets (id ``root``)."""

    points: tuple[str, ...]
    sets: dict[str, frozenset[str]]
    root: str = GROUND_ID
    topology: tuple[frozenset[str], ...] | None = None

    @classmethod
    def build(cls, points, sets: dict, topology=None) -> "FiniteContext":
        pts = tuple(sorted(points))
        sets = {k: frozenset(v) for k, v in sets.items() if v}
        whole = sorted(k for k, v in sets.items() if v == frozenset(pts))
        root = whole[0] if whole else GROUND_ID
        if not whole:
            if GROUND_ID in sets:
                raise ValueError(f"set id {GROUND_ID} is reserved for the ground")
            sets[GROUND_ID] = frozenset(pts)
        return cls(pts, sets, root, None if topology is None else tuple(map(frozenset, topology)))

    @classmethod
    def from_family(cls, f: SubbaseFamily) -> "FiniteContext":
        if f.is_scheme:
            return cls.from_scheme(f.ground, f.cut)
        return cls.build(f.ground.points, f.sets, f.ground.topology)

    @classmethod
    def from_scheme(cls, t: TreeScheme, cut: int = 4) -> "FiniteContext":
        """Finite shadow of R(T): model rays as points, [t, {}] as sets."""
        model = RaySpaceModel(t, cut)
        sets = {}
        for n in model.nodes:
            s = frozenset(r.id for r in model.through(n))
            if s:
                sets[str(n)] = s
        return cls.build([r.id for r in model.rays], sets)

    def family(self) -> SubbaseFamily:
        return SubbaseFamily.finite(self.points, self.sets, self.topology)

    def ground(self) -> FiniteGround:
        return FiniteGround(self.points, self.topology)

    def members(self, b: BasicOpen) -> frozenset[str]:
        out = self.sets[b.anchor]
        for e in b.excluded:
            out = out - self.sets[e]
        return out

    def normalize(self, b: BasicOpen) -> BasicOpen | None:
        """Drop exclusions disjoint from the anchor, keep the maximal proper
        ones (identical sets collapse to the smallest id); None if empty."""
        if b.anchor not in self.sets or any(e not in self.sets for e in b.excluded):
            raise KeyError(f"unknown set id in {b}")
        U = self.sets[b.anchor]
        ex = [e for e in b.excluded if self.sets[e] & U]
        if any(U <= self.sets[e] for e in ex):
            return None
        keep = set()
        for e in ex:
            se = self.sets[e]
            bigger = any(
                (se < self.sets[g]) or (se == self.sets[g] and g < e) for g in ex if g != e
            )
            if not bigger:
                keep.add(e)
        out = BasicOpen(b.anchor, frozenset(keep))
        return out if self.members(out) else None

    def proper_subsets(self, U: frozenset) -> list[str]:
        return sorted(k for k, v in self.sets.items() if v < U)

    def largest_inside(self, U: frozenset, x: str) -> str | None:
        """Id of the largest subbasic set strictly inside U containing x."""
        cands = [k for k in self.proper_subsets(U) if x in self.sets[k]]
        if not cands:
            return None
        return min(cands, key=lambda k: (-len(self.sets[k]), k))

    def smallest_containing(self, x: str) -> str:
        cands = [k for k, v in self.sets.items() if x in v]
        return min(cands, key=lambda k: (len(self.sets[k]), k))

    def supersets(self, k: str) -> list[str]:
        """Ids of the sets strictly between U_k and the ground, largest first,
        one id per distinct set."""
        U, whole = self.sets[k], frozenset(self.points)
        seen: dict[frozenset, str] = {}
        for j in sorted(self.sets):
            v = self.sets[j]
            if U < v < whole and v not in seen:
                seen[v] = j
        return [seen[v] for v in sorted(seen, key=len, reverse=True)]
