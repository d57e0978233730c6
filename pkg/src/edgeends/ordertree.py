"""Finite schemes for order trees of height below omega*omega.

A scheme is a tree of segments.  A segment is a finite chain or an
omega-chain; a segment attaches either at a node of its parent segment or
at a top, the limit node sitting above a whole omega-chain.  A family
attaches one copy of a fragment scheme at every index of an omega-chain.

Nodes are addressed by ``NodeRef``: a path of (family, copy) steps, a
segment id and an index (``None`` for a top).  Concrete questions about the
ray space are answered on a cut model that keeps the first ``cut`` indices
of every omega-chain and the first ``cut`` copies of every family.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import networkx as nx

from .endspace import SpaceDescriptor, canonicalize
from .presentation import (
    OMEGA,
    RAY,
    FiniteGraph,
    GraphPresentation,
    make_presentation,
    vertex_token,
)

STAR = "*"
_ID_RE = re.compile(r"^[A-Za-z0-9_]+$")


class SchemeError(ValueError):
    pass


class InvalidRef(SchemeError):
    pass


class NestingTooDeep(SchemeError):
    pass


class RankTooHigh(SchemeError):
    pass


class SurgeryError(SchemeError):
    pass


class EmptyTree(SchemeError):
    pass


# ------------------------------------------------------------------ types


@dataclass(frozen=True, order=True)
class Segment:
    id: str
    length: int | None  # None for an omega-chain

    @property
    def is_omega(self) -> bool:
        return self.length is None


@dataclass(frozen=True, order=True)
class Attach:
    child: str
    parent: str
    index: int | None  # None: attached at the top of ``parent``
    label: str = ""  # distinguishes several tops above one omega-chain


@dataclass(frozen=True)
class Family:
    id: str
    base: str
    fragment: "TreeScheme"
    source: str = ""  # fragment file name used when serializing


@dataclass(frozen=True)
class TreeScheme:
    segments: tuple[Segment, ...]
    attachments: tuple[Attach, ...] = ()
    families: tuple[Family, ...] = ()
    root: str = ""

    @cached_property
    def seg(self) -> dict[str, Segment]:
        return {s.id: s for s in self.segments}

    @cached_property
    def parent_of(self) -> dict[str, Attach]:
        return {a.child: a for a in self.attachments}

    @cached_property
    def family(self) -> dict[str, Family]:
        return {f.id: f for f in self.families}

    def children_at(self, seg: str, index: int | None, label: str = "") -> list[str]:
        return sorted(
            a.child
            for a in self.attachments
            if a.parent == seg and a.index == index and (index is not None or a.label == label)
        )

    def top_labels(self, seg: str) -> list[str]:
        return sorted({a.label for a in self.attachments if a.parent == seg and a.index is None})

    def families_on(self, seg: str) -> list[Family]:
        return sorted((f for f in self.families if f.base == seg), key=lambda f: f.id)

    def omega_segments(self) -> list[str]:
        return sorted(s.id for s in self.segments if s.is_omega)


def make_scheme(segments, attachments=(), families=(), root=None) -> TreeScheme:
    """Convenience constructor.

    ``segments`` maps ids to a length or ``"omega"``; attachments are
    ``(child, parent, index)`` or ``(child, parent, None, label)``;
    families are ``(id, base, fragment)`` triples.
    """
    segs = tuple(
        sorted(Segment(k, None if v in (OMEGA, None) else int(v)) for k, v in dict(segments).items())
    )
    atts = tuple(sorted(Attach(*a) for a in attachments))
    fams = tuple(
        sorted(
            (Family(f[0], f[1], f[2], f[3] if len(f) > 3 else f"{f[0]}.ots") for f in families),
            key=lambda f: f.id,
        )
    )
    if root is None:
        children = {a.child for a in atts}
        roots = [s.id for s in segs if s.id not in children]
        root = roots[0] if len(roots) == 1 else ""
    t = TreeScheme(segs, atts, fams, root)
    errs = scheme_errors(t)
    if errs:
        raise SchemeError("; ".join(errs))
    return t


def scheme_errors(t: TreeScheme) -> list[str]:
    errs = []
    ids = [s.id for s in t.segments]
    if len(set(ids)) != len(ids):
        errs.append("duplicate segment id")
    for s in t.segments:
        if not _ID_RE.match(s.id):
            errs.append(f"bad segment id {s.id!r}")
        if s.length is not None and s.length < 1:
            errs.append(f"segment {s.id} has length < 1")
    if t.root not in t.seg:
        errs.append(f"root {t.root!r} is not a segment")
    seen_child = set()
    for a in t.attachments:
        if a.child in seen_child:
            errs.append(f"segment {a.child} attached twice")
        seen_child.add(a.child)
        if a.child not in t.seg or a.parent not in t.seg:
            errs.append(f"attachment {a.child} at {a.parent} names an unknown segment")
            continue
        if a.child == t.root:
            errs.append("root segment is attached")
        p = t.seg[a.parent]
        if a.index is None:
            if not p.is_omega:
                errs.append(f"top of finite segment {a.parent}")
            if a.label and not _ID_RE.match(a.label):
                errs.append(f"bad top label {a.label!r}")
        elif a.index < 0 or (p.length is not None and a.index >= p.length):
            errs.append(f"attachment index {a.index} out of range for {a.parent}")
    missing = set(t.seg) - seen_child - {t.root}
    if missing:
        errs.append(f"unattached segments {sorted(missing)}")
    g = nx.DiGraph()
    g.add_nodes_from(t.seg)
    g.add_edges_from((a.parent, a.child) for a in t.attachments if a.child in t.seg and a.parent in t.seg)
    if not nx.is_directed_acyclic_graph(g):
        errs.append("attachment graph has a cycle")
    fam_ids = [f.id for f in t.families]
    if len(set(fam_ids)) != len(fam_ids):
        errs.append("duplicate family id")
    for f in t.families:
        if f.base not in t.seg or not t.seg[f.base].is_omega:
            errs.append(f"family {f.id} needs an omega-chain base, got {f.base}")
        errs.extend(f"{f.id}: {e}" for e in scheme_errors(f.fragment))
    return errs


# ---------------------------------------------------------------- NodeRef


@dataclass(frozen=True)
class NodeRef:
    path: tuple[tuple[str, object], ...]  # (family id, copy index or "*")
    seg: str
    index: int | None  # None for a top
    label: str = ""

    @property
    def is_top(self) -> bool:
        return self.index is None

    def __str__(self) -> str:
        prefix = "".join(f"{fam}:{c}/" for fam, c in self.path)
        if self.index is None:
            lab = f"@{self.label}" if self.label else ""
            return f"{prefix}top({self.seg}{lab})"
        return f"{prefix}{self.seg}[{self.index}]"

    def sort_key(self):
        path = tuple((f, (0, c) if isinstance(c, int) else (1, 0)) for f, c in self.path)
        return (path, self.seg, (1, 0) if self.index is None else (0, self.index), self.label)

    def __lt__(self, other: "NodeRef") -> bool:
        return self.sort_key() < other.sort_key()

    def instantiate(self, copy: int) -> "NodeRef":
        return NodeRef(tuple((f, copy if c == STAR else c) for f, c in self.path), self.seg, self.index, self.label)


_REF_RE = re.compile(r"^(?:top\((\w+)(?:@(\w+))?\)|(\w+)\[(\d+)\])$")


def parse_ref(text: str) -> NodeRef:
    parts = text.strip().split("/")
    path = []
    for p in parts[:-1]:
        fam, _, c = p.rpartition(":")
        if not fam:
            raise InvalidRef(f"bad path step {p!r} in {text!r}")
        path.append((fam, STAR if c == STAR else int(c)))
    m = _REF_RE.match(parts[-1])
    if not m:
        raise InvalidRef(f"bad node reference {text!r}")
    if m.group(1):
        return NodeRef(tuple(path), m.group(1), None, m.group(2) or "")
    return NodeRef(tuple(path), m.group(3), int(m.group(4)))


def _ref(x) -> NodeRef:
    return x if isinstance(x, NodeRef) else parse_ref(x)


# ---------------------------------------------------------- tree structure


def scheme_at(t: TreeScheme, path) -> TreeScheme:
    s = t
    for fam, _ in path:
        if fam not in s.family:
            raise InvalidRef(f"unknown family {fam}")
        s = s.family[fam].fragment
    return s


def check_ref(t: TreeScheme, r: NodeRef) -> None:
    s = scheme_at(t, r.path)
    for _, c in r.path:
        if c != STAR and (not isinstance(c, int) or c < 0):
            raise InvalidRef(f"bad copy index in {r}")
    if r.seg not in s.seg:
        raise InvalidRef(f"unknown segment in {r}")
    seg = s.seg[r.seg]
    if r.index is None:
        if r.label not in s.top_labels(r.seg):
            raise InvalidRef(f"{r} is not a top of the scheme")
    elif r.index < 0 or (seg.length is not None and r.index >= seg.length):
        raise InvalidRef(f"index out of range in {r}")


def segment_parent(t: TreeScheme, path, seg: str) -> NodeRef | None:
    """Node directly below the first node of segment ``seg``."""
    s = scheme_at(t, path)
    if seg == s.root:
        if not path:
            return None
        fam, copy = path[-1]
        outer = scheme_at(t, path[:-1])
        return NodeRef(path[:-1], outer.family[fam].base, copy)
    a = s.parent_of[seg]
    return NodeRef(path, a.parent, a.index, a.label)


def _down(t: TreeScheme, r: NodeRef) -> list[tuple]:
    """Strict down-set of ``r`` as ("seg", path, seg, upto) and ("top", ...) entries."""
    out: list[tuple] = []
    parent = segment_parent(t, r.path, r.seg)
    if parent is not None:
        out = _down(t, parent)
        out.append(_entry(parent))
    out.append(("seg", r.path, r.seg, None if r.index is None else r.index))
    return out


def _entry(r: NodeRef) -> tuple:
    if r.index is None:
        return ("top", r.path, r.seg, r.label)
    return ("seg", r.path, r.seg, r.index + 1)


def _in_entries(r: NodeRef, entries) -> bool:
    for e in entries:
        if r.index is None:
            if e[0] == "top" and e[1:] == (r.path, r.seg, r.label):
                return True
        elif e[0] == "seg" and e[1] == r.path and e[2] == r.seg and (e[3] is None or r.index < e[3]):
            return True
    return False


def order_le(t: TreeScheme, a, b) -> bool:
    a, b = _ref(a), _ref(b)
    check_ref(t, a)
    check_ref(t, b)
    return a == b or _in_entries(a, _down(t, b))


def order_lt(t: TreeScheme, a, b) -> bool:
    a, b = _ref(a), _ref(b)
    return a != b and order_le(t, a, b)


def comparable(t: TreeScheme, a, b) -> bool:
    return order_le(t, a, b) or order_le(t, b, a)


def height(t: TreeScheme, r) -> tuple[int, int]:
    """Height as (a, b) meaning omega*a + b."""
    r = _ref(r)
    parent = segment_parent(t, r.path, r.seg)
    if parent is None:
        start = (0, 0)
    else:
        ph = height(t, parent)
        start = (ph[0], ph[1] + 1)
    if r.index is None:
        return (start[0] + 1, 0)
    return (start[0], start[1] + r.index)


def successors(t: TreeScheme, r) -> list[NodeRef]:
    """Immediate successors of a concrete node."""
    r = _ref(r)
    s = scheme_at(t, r.path)
    out = []
    if r.index is not None:
        seg = s.seg[r.seg]
        if seg.length is None or r.index + 1 < seg.length:
            out.append(NodeRef(r.path, r.seg, r.index + 1))
        for f in s.families_on(r.seg):
            out.append(NodeRef(r.path + ((f.id, r.index),), f.fragment.root, 0))
    for c in s.children_at(r.seg, r.index, r.label):
        out.append(NodeRef(r.path, c, 0))
    return sorted(out)


def root_node(t: TreeScheme) -> NodeRef:
    return NodeRef((), t.root, 0)


def hat_node(t: TreeScheme, r) -> NodeRef:
    """Largest limit node (top) below or equal to ``r``; the root if none."""
    r = _ref(r)
    if r.index is None:
        return r
    parent = segment_parent(t, r.path, r.seg)
    while parent is not None:
        if parent.index is None:
            return parent
        parent = segment_parent(t, parent.path, parent.seg)
    return root_node(t)


def cofinal(top: NodeRef, i: int) -> NodeRef:
    """The canonical cofinal sequence below a top: its omega-chain in order."""
    return NodeRef(top.path, top.seg, i)


# --------------------------------------------------------------- high-rays


@dataclass(frozen=True)
class HighRay:
    path: tuple[tuple[str, object], ...]
    seg: str

    def __lt__(self, other: "HighRay") -> bool:
        return NodeRef(self.path, self.seg, 0) < NodeRef(other.path, other.seg, 0)

    @property
    def id(self) -> str:
        return "".join(f"{f}:{c}/" for f, c in self.path) + self.seg

    def __str__(self) -> str:
        return self.id

    @property
    def is_schema(self) -> bool:
        return any(c == STAR for _, c in self.path)

    def instantiate(self, copy: int) -> "HighRay":
        return HighRay(tuple((f, copy if c == STAR else c) for f, c in self.path), self.seg)


def parse_ray(text: str) -> HighRay:
    r = parse_ref(text.strip() + "[0]")
    return HighRay(r.path, r.seg)


def high_rays(t: TreeScheme) -> list[HighRay]:
    """One high-ray per omega-chain; rays inside families are schemas."""
    out: list[HighRay] = []

    def walk(s: TreeScheme, path):
        for sid in s.omega_segments():
            out.append(HighRay(path, sid))
        for f in s.families:
            walk(f.fragment, path + ((f.id, STAR),))

    walk(t, ())
    return out


def tops_of(t: TreeScheme, r: HighRay) -> list[NodeRef]:
    s = scheme_at(t, r.path)
    return [NodeRef(r.path, r.seg, None, lab) for lab in s.top_labels(r.seg)]


def ray_contains(t: TreeScheme, r: HighRay, node) -> bool:
    node = _ref(node)
    if node.path == r.path and node.seg == r.seg:
        return node.index is not None
    return order_le(t, node, NodeRef(r.path, r.seg, 0))


def nesting(t: TreeScheme) -> int:
    """Largest number of omega-chains met along one chain of the tree."""

    def depth(s: TreeScheme, seg: str) -> int:
        own = 1 if s.seg[seg].is_omega else 0
        best = 0
        for a in s.attachments:
            if a.parent == seg:
                best = max(best, depth(s, a.child))
        for f in s.families_on(seg):
            best = max(best, depth(f.fragment, f.fragment.root))
        return own + best

    return depth(t, t.root)


# ------------------------------------------------------------- basic opens


@dataclass(frozen=True)
class BasicOpen:
    """[anchor, excluded]: everything in the anchor's subbasic set minus the
    subbasic sets of the excluded members.  Anchors are NodeRefs on trees
    and set ids on finite grounds."""

    anchor: object
    excluded: frozenset = frozenset()

    def __str__(self) -> str:
        return f"[{self.anchor}, {{{', '.join(sorted(map(str, self.excluded)))}}}]"


def normalize_open(t: TreeScheme, b: BasicOpen) -> BasicOpen | None:
    """Drop exclusions not above the anchor; None when the set is empty
    because an exclusion lies at or below the anchor."""
    a = _ref(b.anchor)
    ex = {_ref(e) for e in b.excluded}
    if any(order_le(t, e, a) for e in ex):
        return None
    above = {e for e in ex if order_lt(t, a, e)}
    minimal = {e for e in above if not any(order_lt(t, f, e) for f in above)}
    return BasicOpen(a, frozenset(minimal))


def node_has_ray(t: TreeScheme, r) -> bool:
    """Does some high-ray pass through the node?"""
    r = _ref(r)
    s = scheme_at(t, r.path)
    if r.index is None:
        return any(_has_ray(s, c) for c in s.children_at(r.seg, None, r.label))
    if s.seg[r.seg].is_omega:
        return True
    return any(_has_ray(s, a.child) for a in s.attachments if a.parent == r.seg and a.index >= r.index)


# -------------------------------------------------------------- cut model


@dataclass
class RaySpaceModel:
    """Finite shadow of R(T): first ``cut`` indices and copies."""

    tree: TreeScheme
    cut: int = 8
    nodes: list[NodeRef] = field(default_factory=list)
    rays: list[HighRay] = field(default_factory=list)

    def __post_init__(self):
        self.nodes, self.rays = [], []
        self._walk(self.tree, ())
        self._members: dict[NodeRef, frozenset[HighRay]] = {}

    def _walk(self, s: TreeScheme, path):
        for seg in s.segments:
            n = self.cut if seg.is_omega else seg.length
            self.nodes.extend(NodeRef(path, seg.id, i) for i in range(n))
            if seg.is_omega:
                self.rays.append(HighRay(path, seg.id))
                self.nodes.extend(NodeRef(path, seg.id, None, lab) for lab in s.top_labels(seg.id))
        for f in s.families:
            for c in range(self.cut):
                self._walk(f.fragment, path + ((f.id, c),))

    def through(self, node) -> frozenset[HighRay]:
        """Rays of the model containing ``node``, i.e. the set [node, {}]."""
        node = _ref(node)
        if node not in self._members:
            self._members[node] = frozenset(r for r in self.rays if ray_contains(self.tree, r, node))
        return self._members[node]

    def basic(self, anchor, excluded=()) -> frozenset[HighRay]:
        out = self.through(anchor)
        for e in excluded:
            out = out - self.through(e)
        return out

    def members(self, b: BasicOpen) -> frozenset[HighRay]:
        return self.basic(b.anchor, b.excluded)


def needed_cut(refs, floor: int = 8) -> int:
    """Smallest cut that shows every index and copy named in ``refs``."""
    best = floor
    for r in refs:
        r = _ref(r)
        if r.index is not None:
            best = max(best, r.index + 2)
        for _, c in r.path:
            if isinstance(c, int):
                best = max(best, c + 2)
    return best


# ------------------------------------------------------------- specialness


@dataclass
class AntichainDecomposition:
    levels: dict[tuple[int, int], list[NodeRef]]
    sampled_cut: int
    verified_pairs: int = 0


@dataclass
class NotSpecial:
    reason: str


def specialness(t: TreeScheme, cut: int = 4):
    """Level decomposition sampled on the cut model, each level verified to
    be an antichain pairwise."""
    model = RaySpaceModel(t, cut)
    levels: dict[tuple[int, int], list[NodeRef]] = {}
    for n in model.nodes:
        levels.setdefault(height(t, n), []).append(n)
    pairs = 0
    for lvl, nodes in levels.items():
        for a, b in itertools.combinations(nodes, 2):
            pairs += 1
            if comparable(t, a, b):
                return NotSpecial(f"{a} and {b} share level {lvl} but are comparable")
    return AntichainDecomposition(dict(sorted(levels.items())), cut, pairs)


# ----------------------------------------------------------------- surgery


def _limit_successors(s: TreeScheme, path) -> dict[NodeRef, list[NodeRef]]:
    out = {}
    for seg in s.omega_segments():
        for lab in s.top_labels(seg):
            top = NodeRef(path, seg, None, lab)
            out[top] = [NodeRef(path, c, 0) for c in s.children_at(seg, None, lab)]
    return out


def surgery_tprime(t: TreeScheme, nmap: dict) -> TreeScheme:
    """Replace every top t with successors by new tops v(t, X), one per
    distinct value X of ``nmap`` on the successors of t.

    Keys of ``nmap`` are the successors of tops; values are finite node sets
    strictly below the top.  Inside families use ``*`` as copy index; the
    value then refers to the same copy.
    """
    nmap = {_ref(k): frozenset(_ref(x) for x in v) for k, v in nmap.items()}
    used = set()
    out = _surgery(t, t, (), nmap, used)
    extra = set(nmap) - used
    if extra:
        raise SurgeryError(f"N names nodes that are not successors of limit nodes: {sorted(map(str, extra))}")
    return out


def _surgery(whole: TreeScheme, s: TreeScheme, path, nmap, used) -> TreeScheme:
    new_atts = [a for a in s.attachments if a.index is not None]
    for top, succs in sorted(_limit_successors(s, path).items()):
        groups: dict[frozenset, list[str]] = {}
        for succ in succs:
            if succ not in nmap:
                raise SurgeryError(f"N is missing the successor {succ} of {top}")
            used.add(succ)
            X = nmap[succ]
            probe = top.instantiate(0)
            for x in X:
                x0 = x.instantiate(0)
                try:
                    below = order_lt(whole, x0, probe)
                except SchemeError as exc:
                    raise SurgeryError(f"bad node {x} in N({succ}): {exc}") from None
                if not below:
                    raise SurgeryError(f"N({succ}) contains {x}, which is not below {top}")
            groups.setdefault(X, []).append(succ.seg)
        for j, (X, children) in enumerate(sorted(groups.items(), key=lambda kv: sorted(map(str, kv[0])))):
            lab = f"{top.label}v{j}" if top.label else f"v{j}"
            for c in children:
                new_atts.append(Attach(c, top.seg, None, lab))
    fams = []
    for f in s.families:
        frag = _surgery(whole, f.fragment, path + ((f.id, STAR),), nmap, used)
        fams.append(Family(f.id, f.base, frag, f.source))
    return TreeScheme(s.segments, tuple(sorted(new_atts)), tuple(fams), s.root)


def surgery_table(t: TreeScheme, nmap: dict) -> dict[str, dict]:
    """For each new top of surgery_tprime(t, nmap): the replaced top and X."""
    nmap = {_ref(k): frozenset(_ref(x) for x in v) for k, v in nmap.items()}
    out = {}
    new = surgery_tprime(t, nmap)

    def walk(old: TreeScheme, fresh: TreeScheme, path):
        for a in fresh.attachments:
            if a.index is None:
                succ = NodeRef(path, a.child, 0)
                old_label = old.parent_of[a.child].label
                top = NodeRef(path, a.parent, None, a.label)
                out[str(top)] = {
                    "replaces": str(NodeRef(path, a.parent, None, old_label)),
                    "X": sorted(map(str, nmap[succ])),
                }
        for f in old.families:
            walk(f.fragment, fresh.family[f.id].fragment, path + ((f.id, STAR),))

    walk(t, new, ())
    return out


# --------------------------------------------------------------- hat tree


def _has_ray(s: TreeScheme, seg: str) -> bool:
    if s.seg[seg].is_omega:
        return True
    if any(_has_ray(s, a.child) for a in s.attachments if a.parent == seg):
        return True
    return False


def _hat(s: TreeScheme) -> TreeScheme | None:
    if not _has_ray(s, s.root):
        return None
    keep: dict[str, int | None] = {}

    def visit(seg: str):
        sg = s.seg[seg]
        if sg.is_omega:
            keep[seg] = None
        else:
            idx = [a.index for a in s.attachments if a.parent == seg and _has_ray(s, a.child)]
            keep[seg] = max(idx) + 1
        for a in s.attachments:
            if a.parent == seg and _has_ray(s, a.child):
                visit(a.child)

    visit(s.root)
    segs = tuple(Segment(k, v) for k, v in sorted(keep.items()))
    atts = tuple(a for a in s.attachments if a.child in keep)
    fams = []
    for f in s.families:
        if f.base in keep:
            frag = _hat(f.fragment)
            if frag is not None:
                fams.append(Family(f.id, f.base, frag, f.source))
    return TreeScheme(segs, atts, tuple(fams), s.root)


def hat_subtree(t: TreeScheme) -> TreeScheme:
    """Restriction to the nodes that lie on some high-ray."""
    out = _hat(t)
    if out is None:
        raise EmptyTree("no node of the tree lies on a high-ray")
    return out


# ---------------------------------------------------------------- T-graph


def _core_name(r: NodeRef) -> str:
    if r.index is None:
        return f"{r.seg}.top" + (f".{r.label}" if r.label else "")
    return f"{r.seg}.{r.index}"


def _token(s: TreeScheme, r: NodeRef) -> str:
    if r.index is not None and s.seg[r.seg].is_omega:
        return vertex_token(r.seg, r.index)
    return _core_name(r)


def _fragment_rays(frag: TreeScheme, fam: str) -> list[str]:
    """Omega-chains of a fragment that can be emitted as comb pendants."""
    if any(a.index is None for a in frag.attachments):
        raise NestingTooDeep(f"family {fam} has a top inside its fragment")
    for f in frag.families:
        if _hat(f.fragment) is not None:
            raise NestingTooDeep(f"family {fam} nests family {f.id} carrying rays")
    return frag.omega_segments()


def uniform_tgraph(t: TreeScheme, max_nesting: int = 2) -> GraphPresentation:
    """Presentation of a uniform T-graph of the scheme.

    Omega-chains become rays, finite nodes and tops become core vertices,
    each top gets an Omega fan into the chain below it, and families whose
    fragments carry rays become combs on their base.
    """
    if nesting(t) > max_nesting:
        raise NestingTooDeep(f"nesting {nesting(t)} exceeds {max_nesting}")
    core, gens, edges, fans, combs = set(), {}, set(), [], set()
    for sg in t.segments:
        if sg.is_omega:
            gens[sg.id] = RAY
            for lab in t.top_labels(sg.id):
                top = NodeRef((), sg.id, None, lab)
                core.add(_core_name(top))
                fans.append((_core_name(top), sg.id, OMEGA))
        else:
            names = [_core_name(NodeRef((), sg.id, i)) for i in range(sg.length)]
            core.update(names)
            edges.update(zip(names, names[1:]))
    for a in t.attachments:
        parent = NodeRef((), a.parent, a.index, a.label)
        edges.add((_token(t, NodeRef((), a.child, 0)), _token(t, parent)))
    for f in t.families:
        for fseg in _fragment_rays(f.fragment, f.id):
            combs.add((f.base, f"{f.id}.{fseg}"))
    return make_presentation(core, gens, edges, fans, (), combs)


# ---------------------------------------------------------------- ray space


def rayspace_descriptor(t: TreeScheme) -> SpaceDescriptor:
    """Descriptor of R(T): rays of a family converge to the family's base ray."""
    isolated = set(t.omega_segments())
    sequences = set()

    def fragment_rays(frag: TreeScheme, fam: str) -> list[str]:
        for f in frag.families:
            if _hat(f.fragment) is not None:
                raise RankTooHigh(f"family {fam} nests family {f.id} carrying rays")
        return frag.omega_segments()

    for f in t.families:
        for fseg in fragment_rays(f.fragment, f.id):
            sequences.add((f"{f.id}.{fseg}", f.base))
    limits = {lim for _, lim in sequences}
    return canonicalize(SpaceDescriptor(frozenset(isolated - limits), frozenset(limits), frozenset(sequences)))


# ------------------------------------------------------- normal tree search


@dataclass
class NormalTree:
    parent: dict[str, str | None]
    roots: list[str]
    order: list[str]

    def ancestors(self, v: str) -> list[str]:
        out = []
        p = self.parent[v]
        while p is not None:
            out.append(p)
            p = self.parent[p]
        return out

    def comparable(self, u: str, v: str) -> bool:
        return u == v or u in self.ancestors(v) or v in self.ancestors(u)

    def violations(self, g: nx.Graph) -> list[tuple[str, str]]:
        return [(u, v) for u, v in g.edges if not self.comparable(u, v)]


def normal_tree_search(g: FiniteGraph, K=()) -> NormalTree:
    """Depth-first spanning forest of g - K, checked to be normal."""
    h = g.to_networkx() if isinstance(g, FiniteGraph) else nx.Graph(g)
    h.remove_nodes_from(set(K))
    if h.number_of_nodes() == 0:
        raise EmptyTree("graph is empty after removing K")
    parent: dict[str, str | None] = {}
    roots, order = [], []
    for comp in sorted(nx.connected_components(h), key=min):
        root = min(comp, key=lambda v: (h.degree(v), v))
        roots.append(root)
        parent[root] = None
        order.append(root)
        for u, v in nx.dfs_edges(h, root):
            parent[v] = u
            order.append(v)
    tree = NormalTree(parent, roots, order)
    bad = tree.violations(h)
    if bad:  # depth-first trees are always normal; this guards the claim
        raise AssertionError(f"tree is not normal on edges {bad[:3]}")
    return tree


# ------------------------------------------------------ binary tree example


def example26_truncation(depth: int = 2) -> TreeScheme:
    """Binary tree of the given depth; each leaf continues as a ray that
    carries a top with a further omega-chain above it."""
    segs, atts = {}, []
    words = [""]
    for d in range(depth + 1):
        for w in [x for x in words if len(x) == d]:
            name = f"b{w}"
            segs[name] = 1
            if d > 0:
                atts.append((name, f"b{w[:-1]}", 0))
            if d < depth:
                words += [w + "0", w + "1"]
            else:
                segs[f"r{w}"] = OMEGA
                segs[f"u{w}"] = OMEGA
                atts.append((f"r{w}", name, 0))
                atts.append((f"u{w}", f"r{w}", None, ""))
    return make_scheme(segs, atts, root="b")


def uncountable_report(depth: int = 2) -> dict:
    """Structural count for the full binary example; no metric verdict."""
    t = example26_truncation(depth)
    leaves = 2**depth
    return {
        "truncation_depth": depth,
        "truncated_high_rays": len(high_rays(t)),
        "truncated_branches": leaves,
        "branch_count_by_depth": {d: 2**d for d in range(depth + 1)},
        "full_tree_branches": "2^aleph0 (uncountable)",
        "reason": "every infinite 0/1 word is a branch and receives its own top",
        "certified": False,
    }


# ------------------------------------------------------------- .ots format


def parse_scheme(text: str, base_dir: Path | str | None = None, loader=None) -> TreeScheme:
    """Parse the .ots format.  Fragment files are read relative to
    ``base_dir`` (or through ``loader(name)`` when given)."""
    section = None
    segs, atts, fams, root = {}, [], [], None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"^\[(\w+)\]\s*(\S*)$", line)
        if m:
            section = m.group(1)
            if section not in ("segments", "attach", "families", "root"):
                raise SchemeError(f"line {lineno}: unknown section [{section}]")
            if section == "root" and m.group(2):
                root = m.group(2)
            continue
        parts = line.split()
        if section == "segments":
            if len(parts) == 2 and parts[1] == OMEGA:
                length = OMEGA
            elif len(parts) == 3 and parts[1] == "finite" and parts[2].isdigit():
                length = int(parts[2])
            else:
                raise SchemeError(f"line {lineno}: expected 'id finite N' or 'id omega'")
            if parts[0] in segs:
                raise SchemeError(f"line {lineno}: duplicate segment {parts[0]}")
            segs[parts[0]] = length
        elif section == "attach":
            if len(parts) != 3 or parts[1] != "at":
                raise SchemeError(f"line {lineno}: expected 'child at seg[i]' or 'child at top(seg)'")
            try:
                r = parse_ref(parts[2])
            except InvalidRef as exc:
                raise SchemeError(f"line {lineno}: {exc}") from None
            atts.append((parts[0], r.seg, r.index, r.label))
        elif section == "families":
            if len(parts) != 2:
                raise SchemeError(f"line {lineno}: expected 'base fragmentfile'")
            base, src = parts
            if loader is not None:
                frag = loader(src)
            else:
                frag = load_scheme(Path(base_dir or ".") / src)
            fid = f"{base}_{Path(src).stem}"
            fams.append((fid, base, frag, src))
        elif section == "root":
            root = parts[0]
        else:
            raise SchemeError(f"line {lineno}: content outside a section")
    if root is None:
        raise SchemeError("missing [root]")
    return make_scheme(segs, atts, fams, root)


def serialize_scheme(t: TreeScheme) -> str:
    out = ["[segments]"]
    for s in sorted(t.segments):
        out.append(f"{s.id} omega" if s.is_omega else f"{s.id} finite {s.length}")
    out.append("[attach]")
    for a in sorted(t.attachments):
        out.append(f"{a.child} at {NodeRef((), a.parent, a.index, a.label)}")
    out.append("[families]")
    for f in sorted(t.families, key=lambda f: f.id):
        out.append(f"{f.base} {f.source}")
    out.append(f"[root] {t.root}")
    return "\n".join(out) + "\n"


def load_scheme(path) -> TreeScheme:
    path = Path(path)
    return parse_scheme(path.read_text(encoding="utf-8"), base_dir=path.parent)


def save_scheme(t: TreeScheme, path) -> None:
    """Write the scheme and any fragment files it references."""
    path = Path(path)
    path.write_text(serialize_scheme(t), encoding="utf-8")
    for f in t.families:
        save_scheme(f.fragment, path.parent / f.source)


def parse_nmap(text: str) -> dict[NodeRef, frozenset[NodeRef]]:
    """Lines ``succ = x1, x2`` (right side may be empty)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SchemeError(f"line {lineno}: expected 'node = nodes'")
        k, v = line.split("=", 1)
        out[parse_ref(k)] = frozenset(parse_ref(x) for x in v.replace(",", " ").split())
    return out


# ---------------------------------------------------------- partition trees


@dataclass(frozen=True)
class ChainRule:
    """Omega-chain ``seg`` (copies ``*`` allowed in ``path``) whose node i
    holds vertex ``ray[i + shift]``; a ``*`` in ``ray`` is the copy index."""

    path: tuple[tuple[str, object], ...]
    seg: str
    ray: str
    shift: int = 0


@dataclass
class PartitionTree:
    """A candidate (T, V): explicit parts for single nodes plus chain rules.

    Node patterns and tokens may use ``*`` for the innermost family copy.
    """

    scheme: TreeScheme
    parts: dict[NodeRef, tuple[str, ...]] = field(default_factory=dict)
    chains: list[ChainRule] = field(default_factory=list)

    def max_shift(self) -> int:
        return max((c.shift for c in self.chains), default=0)

    def part(self, node: NodeRef) -> frozenset[str]:
        copy = node.path[-1][1] if node.path else None
        if node.index is not None:
            for c in self.chains:
                if c.seg == node.seg and _matches(c.path, node.path):
                    return frozenset({vertex_token(_subst(c.ray, copy), node.index + c.shift)})
        for pat, toks in self.parts.items():
            if (pat.seg, pat.index, pat.label) == (node.seg, node.index, node.label) and _matches(pat.path, node.path):
                return frozenset(_subst(x, copy) for x in toks)
        return frozenset()


def _matches(pattern, path) -> bool:
    return len(pattern) == len(path) and all(
        pf == f and (pc == STAR or pc == c) for (pf, pc), (f, c) in zip(pattern, path)
    )


def _subst(token: str, copy) -> str:
    return token if copy is None else token.replace(STAR, str(copy))


@dataclass
class PartitionReport:
    cut: int
    violations: list[tuple[str, str]] = field(default_factory=list)
    theta: dict[str, str] = field(default_factory=dict)  # end class -> high-ray

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> list[str]:
        return sorted({k for k, _ in self.violations})

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "cut": self.cut,
            "violations": [{"kind": k, "detail": d} for k, d in self.violations],
            "theta": dict(sorted(self.theta.items())),
        }


def _finite_indices(p: GraphPresentation) -> int:
    from .presentation import split_token

    idx = [i for f in p.fans if not f.is_omega for i in f.support]
    idx += [split_token(x)[1] or 0 for e in p.finite_edges for x in e]
    return max(idx, default=0)


def _assignment(pt: PartitionTree, cut: int) -> tuple[RaySpaceModel, dict[NodeRef, frozenset[str]]]:
    model = RaySpaceModel(pt.scheme, cut)
    return model, {n: pt.part(n) for n in model.nodes}


def _predecessor(t: TreeScheme, r: NodeRef) -> NodeRef | None:
    if r.index:
        return NodeRef(r.path, r.seg, r.index - 1)
    return segment_parent(t, r.path, r.seg)


def _adhesion(t: TreeScheme, g: nx.Graph, parts, owner, node: NodeRef) -> int:
    up = set().union(*(vs for n, vs in parts.items() if order_le(t, node, n)))
    return len({u for v in up if v in g for u in g[v] if u not in up and u in owner})


def check_partition_tree(p: GraphPresentation, pt: PartitionTree, cut: int | None = None) -> PartitionReport:
    """Check a candidate partition tree of ``p`` on finite windows.

    Parts are computed on the cut model (first ``cut`` indices and copies)
    and tested inside the truncation of ``p`` that contains them: parts
    partition the window and are connected, non-limit parts are single
    vertices, the contraction is a T-graph, successor up-sets have an
    adhesion that does not grow when the window grows, and the end classes
    of ``p`` map bijectively onto high-rays through their tails.
    """
    from .endspace import end_classes
    from .presentation import CLIQUE, pendant_ray, truncate

    t = pt.scheme
    n = cut or max(6, _finite_indices(p) + 4)
    rep = PartitionReport(n)
    bad = rep.violations
    for gid, kind in sorted(p.kinds.items()):
        if kind == CLIQUE:
            bad.append(("unsupported-generator", f"{gid} is a clique"))
    if bad:
        return rep
    shift = pt.max_shift()

    def window(k: int):
        model, parts = _assignment(pt, k)
        g = truncate(p, k + shift).to_networkx()
        owner: dict[str, NodeRef] = {}
        for node, vs in parts.items():
            for v in vs:
                if v in owner:
                    bad.append(("overlapping-parts", f"{v} lies in {owner[v]} and {node}"))
                owner[v] = node
        return model, parts, g, owner

    model, parts, g, owner = window(n)
    for v in sorted(set(truncate(p, n).vertices) - set(owner)):
        bad.append(("uncovered-vertex", v))
    for node, vs in parts.items():
        missing = sorted(v for v in vs if v not in g)
        if missing:
            bad.append(("unknown-vertex", f"{node} holds {missing[0]}"))
        elif not vs:
            bad.append(("empty-part", str(node)))
        elif node.index is not None and len(vs) != 1:
            bad.append(("non-limit-part-size", f"{node} holds {len(vs)} vertices"))
        elif not nx.is_connected(g.subgraph(vs)):
            bad.append(("disconnected-part", str(node)))
    for u, v in sorted(g.edges):
        a, b = owner.get(u), owner.get(v)
        if a is not None and b is not None and a != b and not comparable(t, a, b):
            bad.append(("incomparable-edge", f"{u}-{v} joins {a} and {b}"))

    def adjacent(a: NodeRef, b: NodeRef) -> bool:
        return any(u in g and any(w in parts[b] for w in g[u]) for u in parts[a])

    for node in model.nodes:
        if node.index is None:
            last = NodeRef(node.path, node.seg, n - 1)
            if not adjacent(node, last):
                bad.append(("limit-not-cofinal", f"{node} misses {last}"))
            continue
        pred = _predecessor(t, node)
        if pred is not None and pred in parts and not adjacent(node, pred):
            bad.append(("successor-not-adjacent", f"{node} and {pred}"))
    if bad:
        return rep

    wide_model, wide_parts, wide_g, wide_owner = window(n + 2)
    for node in model.nodes:
        if node.index is None or _predecessor(t, node) is None:
            continue
        small = _adhesion(t, g, parts, owner, node)
        large = _adhesion(t, wide_g, wide_parts, wide_owner, node)
        if large > small:
            bad.append(("infinite-adhesion", f"{node}: {small} neighbours grow to {large}"))

    # Theta on the window: nodes below the owners of a ray's last two vertices,
    # compared with each high-ray on nodes safely inside the window.
    inner = [x for x in model.nodes if (x.index is None or x.index < n - 2) and all(c < n - 2 for _, c in x.path)]
    rays = [r for r in model.rays if all(c < n - 2 for _, c in r.path)]
    ray_sets = {r.id: frozenset(x for x in inner if ray_contains(t, r, x)) for r in rays}
    tails: dict[str, list[str]] = {}
    for gid, cls in end_classes(p).items():
        tails[gid] = [vertex_token(gid, i) for i in range(n + shift)]
    for _, fam in sorted(p.combs):
        for c in range(n - 2):
            tails[pendant_ray(fam, c)] = [vertex_token(pendant_ray(fam, c), i) for i in range(n + shift)]
    classes = dict(end_classes(p))
    classes.update({k: k for k in tails if k not in classes})
    image: dict[str, set[str]] = {}
    for ray, vs in sorted(tails.items()):
        held = [owner[v] for v in vs if v in owner]
        if len(held) < 2:
            bad.append(("ray-not-displayed", f"{ray} has no tail in the window"))
            continue
        theta = frozenset(x for x in inner if order_le(t, x, held[-1]) and order_le(t, x, held[-2]))
        hits = {rid for rid, s in ray_sets.items() if s == theta}
        if len(hits) != 1:
            bad.append(("theta-not-high-ray", f"{ray} matches {sorted(hits)}"))
            continue
        image.setdefault(classes[ray], set()).update(hits)
    for cls, hits in sorted(image.items()):
        if len(hits) > 1:
            bad.append(("theta-not-well-defined", f"class {cls} meets {sorted(hits)}"))
        rep.theta[cls] = min(hits)
    targets = list(rep.theta.values())
    for rid in sorted({x for x in targets if targets.count(x) > 1}):
        bad.append(("theta-not-injective", f"{rid} displays several ends"))
    for rid in sorted(set(ray_sets) - set(targets)):
        bad.append(("theta-not-surjective", f"{rid} displays no end"))
    return rep


def _fragment_chain(frag: TreeScheme, fam: str) -> tuple[list[tuple[str, int]], str]:
    """Finite nodes before the single omega-chain of a chain-shaped fragment."""
    prefix, seg = [], frag.root
    while True:
        sg = frag.seg[seg]
        if sg.is_omega:
            if any(a.parent == seg for a in frag.attachments) or frag.families:
                raise NestingTooDeep(f"fragment of {fam} continues above its omega-chain")
            return prefix, seg
        prefix += [(seg, i) for i in range(sg.length)]
        kids = [a for a in frag.attachments if a.parent == seg]
        if len(kids) != 1 or kids[0].index != sg.length - 1:
            raise SchemeError(f"fragment of {fam} is not a chain")
        seg = kids[0].child


def tgraph_scheme(t: TreeScheme) -> TreeScheme:
    """The scheme without families whose fragments carry no omega-chain;
    those copies hold no vertex of the uniform T-graph."""
    fams = tuple(f for f in t.families if f.fragment.omega_segments())
    return TreeScheme(t.segments, t.attachments, fams, t.root)


def tgraph_partition(t: TreeScheme) -> PartitionTree:
    """The partition tree (T, {t}) behind ``uniform_tgraph``."""
    s = tgraph_scheme(t)
    parts: dict[NodeRef, tuple[str, ...]] = {}
    chains = []
    for sg in s.segments:
        if sg.is_omega:
            chains.append(ChainRule((), sg.id, sg.id))
            for lab in s.top_labels(sg.id):
                top = NodeRef((), sg.id, None, lab)
                parts[top] = (_core_name(top),)
        else:
            for i in range(sg.length):
                parts[NodeRef((), sg.id, i)] = (_core_name(NodeRef((), sg.id, i)),)
    for f in s.families:
        prefix, seg = _fragment_chain(f.fragment, f.id)
        pend = f"{f.id}.{seg}.{STAR}"
        path = ((f.id, STAR),)
        for j, (fseg, i) in enumerate(prefix):
            parts[NodeRef(path, fseg, i)] = (vertex_token(pend, j),)
        chains.append(ChainRule(path, seg, pend, len(prefix)))
    return PartitionTree(s, parts, chains)


def parse_partition(text: str, t: TreeScheme) -> PartitionTree:
    """``[parts]`` lines ``node = v1 v2`` and ``[chains]`` lines
    ``seg = ray`` or ``seg = ray +k``; paths may use ``fam:*/``."""
    section = None
    parts: dict[NodeRef, tuple[str, ...]] = {}
    chains = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("[parts]", "[chains]"):
            section = line[1:-1]
            continue
        if "=" not in line or section is None:
            raise SchemeError(f"line {lineno}: expected 'node = vertices' inside [parts] or [chains]")
        k, v = (x.strip() for x in line.split("=", 1))
        try:
            if section == "parts":
                r = parse_ref(k)
                parts[r] = tuple(v.split())
            else:
                r = parse_ref(k + "[0]")
                words = v.split()
                shift = int(words[1].lstrip("+")) if len(words) == 2 else 0
                if len(words) not in (1, 2):
                    raise ValueError
                chains.append(ChainRule(r.path, r.seg, words[0], shift))
        except (InvalidRef, ValueError):
            raise SchemeError(f"line {lineno}: cannot read {line!r}") from None
    return PartitionTree(t, parts, chains)


def serialize_partition(pt: PartitionTree) -> str:
    out = ["[parts]"]
    for r, toks in sorted(pt.parts.items()):
        out.append(f"{r} = {' '.join(toks)}")
    out.append("[chains]")
    for c in sorted(pt.chains, key=lambda c: (str(c.path), c.seg)):
        key = "".join(f"{f}:{x}/" for f, x in c.path) + c.seg
        out.append(f"{key} = {c.ray}" + (f" +{c.shift}" if c.shift else ""))
    return "\n".join(out) + "\n"
