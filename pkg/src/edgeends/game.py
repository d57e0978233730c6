"""The end game: Player I plays basic opens, Player II answers with a
disjoint basic cover of the last move.

Two arenas are supported.  ``SchemeArena`` plays on the ray space of a
``TreeScheme`` with II using the canonical type-1/2/3 strategy; set
questions are decided on a cut model large enough to show every index the
match has named.  ``FiniteArena`` plays on a finite ground with a nested
subbase, II answering with the K' partition.

A match is finite, so the limit of Player I's moves is taken from the
policy: every policy is eventually periodic in shape and declares the ray
(or point) it converges to.  Adjudication computes the limit twice, once
from the declared target and the accumulated exclusions, once as the
intersection of the moves on the cut model, and insists they agree.
"""

from __future__ import annotations

import itertools
import random as _random
from dataclasses import dataclass, field

from .ordertree import (
    BasicOpen,
    HighRay,
    InvalidRef,
    NodeRef,
    RaySpaceModel,
    SchemeError,
    TreeScheme,
    _ref,
    check_ref,
    cofinal,
    comparable,
    hat_node,
    make_scheme,
    needed_cut,
    node_has_ray,
    normalize_open,
    order_le,
    order_lt,
    root_node,
    scheme_at,
    segment_parent,
    successors,
    tops_of,
)
from .endspace import SpaceDescriptor, canonicalize
from .subbase import ContextUndecidable, FiniteContext

RUNNING = "running"
ADJUDICATED = "adjudicated"
ILLEGAL_REASONS = ("not-contained", "overlap", "not-covering", "not-basic")


class IllegalMove(ValueError):
    def __init__(self, reason: str, detail: str = ""):
        assert reason in ILLEGAL_REASONS
        super().__init__(f"illegal-move({reason}) {detail}".strip())
        self.reason = reason
        self.detail = detail


class LimitNotComputable(ValueError):
    pass


class AnchorNotInTree(ValueError):
    pass


@dataclass(frozen=True)
class Cover:
    target: BasicOpen
    parts: tuple[BasicOpen, ...]
    kinds: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "target": str(self.target),
            "parts": [str(p) for p in self.parts],
            "kinds": list(self.kinds),
        }


@dataclass
class Capture:
    x: str
    A: tuple[BasicOpen, ...]
    members: frozenset = frozenset()
    strict_unique: bool = True
    flags: list[str] = field(default_factory=list)
    winner: str = "II"

    def to_json(self) -> dict:
        return {
            "winner": self.winner,
            "x": self.x,
            "A": [str(a) for a in self.A],
            "A_members": sorted(map(str, self.members)),
            "strict_unique": self.strict_unique,
            "flags": list(self.flags),
        }


@dataclass
class PlayerIWins:
    reason: str
    intersection: frozenset = frozenset()
    flags: list[str] = field(default_factory=list)
    winner: str = "I"

    def to_json(self) -> dict:
        return {
            "winner": self.winner,
            "reason": self.reason,
            "intersection": sorted(map(str, self.intersection)),
            "flags": list(self.flags),
        }


@dataclass
class MatchState:
    moves: list[BasicOpen] = field(default_factory=list)
    covers: list[Cover] = field(default_factory=list)
    status: str = RUNNING
    result: Capture | PlayerIWins | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def round(self) -> int:
        return len(self.moves)

    def to_json(self) -> dict:
        return {
            "rounds": self.round,
            "status": self.status,
            "moves": [str(m) for m in self.moves],
            "covers": [c.to_json() for c in self.covers],
            "result": self.result.to_json() if self.result else None,
            "flags": list(self.flags),
        }


# ================================================================ strategy


def _hat_index(t: TreeScheme, anchor: NodeRef, m: NodeRef):
    """(m-hat, i(m)) with i(m) None when undefined: m-hat must be a top
    strictly above the anchor; i(m) is the first index of m-hat's chain
    lying above the anchor."""
    mh = hat_node(t, m)
    if mh.index is not None or not order_lt(t, anchor, mh):
        return mh, None
    if anchor.path == mh.path and anchor.seg == mh.seg and anchor.index is not None:
        return mh, anchor.index + 1
    return mh, 0


def _branch_ahead(t: TreeScheme, a: NodeRef) -> bool:
    """True when a branch point carrying rays lies a finite number of
    successor steps above ``a``.  Past the last such point of an omega-chain
    the only branching left is at its tops, which lifting never reaches."""
    s = scheme_at(t, a.path)
    seg = s.seg[a.seg]
    if a.index is None or not seg.is_omega:
        return True
    if any(_fragment_has_ray(f.fragment) for f in s.families_on(a.seg)):
        return True
    return any(
        x.parent == a.seg and x.index is not None and x.index > a.index and node_has_ray(t, NodeRef(a.path, x.child, 0))
        for x in s.attachments
    )


def canonical_target(t: TreeScheme, v: BasicOpen) -> BasicOpen | None:
    """Normalize [t, F] and lift the anchor while exactly one successor is
    alive, so that every way of writing the same set gets the same cover.
    Lifting stops when it can no longer drop an exclusion or reach a branch
    point."""
    b = normalize_open(t, v)
    while b is not None:
        alive = []
        for s in successors(t, b.anchor):
            if not node_has_ray(t, s):
                continue
            if normalize_open(t, BasicOpen(s, b.excluded)) is not None:
                alive.append(s)
        if len(alive) != 1:
            break
        lifted = normalize_open(t, BasicOpen(alive[0], b.excluded))
        if len(lifted.excluded) >= len(b.excluded) and not _branch_ahead(t, _ref(b.anchor)):
            break
        b = lifted
    return b


def canonical_cover(t: TreeScheme, v: BasicOpen) -> Cover:
    try:
        check_ref(t, _ref(v.anchor))
    except (InvalidRef, SchemeError) as exc:
        raise AnchorNotInTree(str(exc)) from None
    target = canonical_target(t, v)
    if target is None:
        return Cover(v, ())
    anchor, F = target.anchor, set(target.excluded)
    hats, landmarks = {}, {}
    for m in sorted(F):
        mh, i = _hat_index(t, anchor, m)
        if i is not None:
            hats[m] = mh
            landmarks[m] = cofinal(mh, i)
    Ls = set(landmarks.values())
    H = set(hats.values())
    parts: list[tuple[str, BasicOpen]] = []

    def add(kind: str, a: NodeRef, ex) -> None:
        b = normalize_open(t, BasicOpen(a, frozenset(ex)))
        if b is None or not node_has_ray(t, b.anchor):
            return
        if all(b != p for _, p in parts):
            parts.append((kind, b))

    for s in successors(t, anchor):
        add("1", s, {L for L in Ls if order_le(t, s, L)} | F)
    for m in sorted(landmarks):
        L, mh = landmarks[m], hats[m]
        add("2", L, {y for y in Ls | H if order_lt(t, L, y)} | F)
        add("3", mh, {y for y in Ls if order_lt(t, mh, y)} | F)
    return Cover(v, tuple(p for _, p in parts), tuple(k for k, _ in parts))


def canonical_strategy(t: TreeScheme):
    """Stationary strategy: the cover depends only on the move."""
    return lambda v: canonical_cover(t, v)


# ================================================================= arenas


@dataclass
class SchemeArena:
    tree: TreeScheme
    floor: int = 8
    _models: dict = field(default_factory=dict, repr=False)

    def model(self, refs=()) -> RaySpaceModel:
        cut = needed_cut(refs, self.floor)
        for c, m in self._models.items():
            if c >= cut:
                return m
        m = RaySpaceModel(self.tree, cut)
        self._models = {cut: m}
        return m

    @staticmethod
    def refs(*opens: BasicOpen) -> list[NodeRef]:
        out = []
        for b in opens:
            out.append(_ref(b.anchor))
            out.extend(_ref(e) for e in b.excluded)
        return out

    def members(self, b: BasicOpen, model: RaySpaceModel) -> frozenset:
        return model.basic(_ref(b.anchor), [_ref(e) for e in b.excluded])

    def root_move(self) -> BasicOpen:
        return BasicOpen(root_node(self.tree))

    def strategy(self, v: BasicOpen) -> Cover:
        return canonical_cover(self.tree, v)

    def parse_move(self, anchor: str, excluded) -> BasicOpen:
        try:
            b = BasicOpen(_ref(anchor), frozenset(_ref(e) for e in excluded))
            for r in self.refs(b):
                check_ref(self.tree, r)
        except (InvalidRef, SchemeError) as exc:
            raise IllegalMove("not-basic", str(exc)) from None
        return b

    def symbolic_disjoint(self, p: BasicOpen, q: BasicOpen) -> bool | None:
        """Tree-order verdict: True when the parts are provably disjoint,
        False when they provably meet, None when undecided."""
        a, b = _ref(p.anchor), _ref(q.anchor)
        if not comparable(self.tree, a, b):
            return True
        lo, hi = (p, q) if order_le(self.tree, a, b) else (q, p)
        if any(order_le(self.tree, _ref(e), _ref(hi.anchor)) for e in lo.excluded):
            return True
        return None


@dataclass
class FiniteArena:
    ctx: FiniteContext

    def model(self, refs=()):
        return None

    @staticmethod
    def refs(*opens):
        return []

    def members(self, b: BasicOpen, model=None) -> frozenset:
        return self.ctx.members(b)

    def root_move(self) -> BasicOpen:
        return BasicOpen(self.ctx.root)

    def strategy(self, v: BasicOpen) -> Cover:
        return kprime_partition(self.ctx, v)

    def parse_move(self, anchor: str, excluded) -> BasicOpen:
        b = BasicOpen(anchor, frozenset(excluded))
        if anchor not in self.ctx.sets or any(e not in self.ctx.sets for e in excluded):
            raise IllegalMove("not-basic", f"unknown set id in {b}")
        return b

    def symbolic_disjoint(self, p, q):
        return None


# ================================================================ referee


def referee_cover(arena, cover: Cover) -> None:
    model = arena.model(arena.refs(cover.target, *cover.parts))
    target = arena.members(cover.target, model)
    sets = [arena.members(p, model) for p in cover.parts]
    for (i, p), (j, q) in itertools.combinations(enumerate(cover.parts), 2):
        meet = sets[i] & sets[j]
        verdict = arena.symbolic_disjoint(p, q)
        if meet or verdict is False:
            raise IllegalMove("overlap", f"{p} and {q}")
    union = frozenset().union(*sets) if sets else frozenset()
    if union != target:
        raise IllegalMove("not-covering", f"union differs from {cover.target} on {sorted(map(str, union ^ target))}")


def referee_move(arena, state: MatchState, move: BasicOpen) -> None:
    if not isinstance(move, BasicOpen):
        raise IllegalMove("not-basic", repr(move))
    refs = arena.refs(move)
    if state.covers:
        refs += arena.refs(*state.covers[-1].parts)
    model = arena.model(refs)
    try:
        mem = arena.members(move, model)
    except (InvalidRef, SchemeError, KeyError) as exc:
        raise IllegalMove("not-basic", str(exc)) from None
    if not mem:
        raise IllegalMove("not-basic", f"{move} is empty")
    if state.covers:
        if not any(mem <= arena.members(p, model) for p in state.covers[-1].parts):
            raise IllegalMove("not-contained", str(move))


def referee_step(arena, state: MatchState, move: BasicOpen, cover: Cover | None = None) -> MatchState:
    """Validate Player I's move, then II's answer (computed if not given)."""
    if state.status != RUNNING:
        raise ValueError("match already adjudicated")
    referee_move(arena, state, move)
    cover = arena.strategy(move) if cover is None else cover
    if cover.target != move:
        raise IllegalMove("not-covering", "cover answers a different move")
    referee_cover(arena, cover)
    state.moves.append(move)
    state.covers.append(cover)
    return state


# ================================================================ policies


def _part_containing(arena, cover: Cover, point) -> BasicOpen | None:
    model = arena.model(arena.refs(*cover.parts) + _point_refs(point))
    for p in cover.parts:
        if point in arena.members(p, model):
            return p
    return None


def _point_refs(point) -> list[NodeRef]:
    if isinstance(point, HighRay):
        return [NodeRef(point.path, point.seg, 0)]
    return []


def _ray_start(r: HighRay) -> NodeRef:
    return NodeRef(r.path, r.seg, 0)


def _lift(arena, part: BasicOpen, point) -> BasicOpen:
    """Largest useful shrink of ``part`` around a target ray: re-anchor at the
    first node of the ray's own chain."""
    if not isinstance(arena, SchemeArena):
        return part
    a = _ref(part.anchor)
    if a.path == point.path and a.seg == point.seg and a.index is not None:
        return part
    start = _ray_start(point)
    b = normalize_open(arena.tree, BasicOpen(start, part.excluded))
    return b if b is not None else part


def _path_below(t: TreeScheme, lo: NodeRef, hi: NodeRef, limit: int = 10_000) -> list[NodeRef] | None:
    """Nodes y with lo <= y < hi, or None if there are infinitely many."""
    out, n = [], hi
    while n != lo:
        if len(out) > limit:
            return None
        if n.index is None:
            return None
        if n.index > 0:
            n = NodeRef(n.path, n.seg, n.index - 1)
        else:
            p = segment_parent(t, n.path, n.seg)
            if p is None:
                return None
            n = p
        out.append(n)
    return out


def _branch_offs(t: TreeScheme, lo: NodeRef, hi: NodeRef) -> list[NodeRef] | None:
    path = _path_below(t, lo, hi)
    if path is None:
        return None
    on = set(path) | {hi}
    out = []
    for y in path:
        for s in successors(t, y):
            if s not in on:
                out.append(s)
    return out


class Policy:
    """Player I.  ``target`` is the point the moves converge to."""

    name = "policy"

    def first_move(self, arena) -> BasicOpen:
        return arena.root_move()

    def next_move(self, arena, state: MatchState) -> BasicOpen:
        raise NotImplementedError

    def target(self, arena, state: MatchState):
        return None


@dataclass
class Descend(Policy):
    point: object  # HighRay on schemes, point id on finite grounds
    flags: list[str] = field(default_factory=list)
    name = "descend"

    def next_move(self, arena, state):
        cover = state.covers[-1]
        part = _part_containing(arena, cover, self.point)
        if part is None:
            if "target-lost" not in self.flags:
                self.flags.append("target-lost")
            return cover.parts[0]
        return _lift(arena, part, self.point)

    def target(self, arena, state):
        return self.point


@dataclass
class Random(Policy):
    """A few random parts, each possibly shrunk by excluding one successor
    branch, then descend to a random point of the current move."""

    seed: int
    wander: int | None = None
    _rng: _random.Random | None = None
    _descend: Descend | None = None
    name = "random"

    def __post_init__(self):
        self._rng = _random.Random(self.seed)
        if self.wander is None:
            self.wander = self._rng.randint(0, 3)

    def _choose_point(self, arena, move: BasicOpen):
        model = arena.model(arena.refs(move))
        pts = sorted(arena.members(move, model), key=str)
        # prefer points with small copy indices so targets stay on small models
        if isinstance(arena, SchemeArena):
            small = [r for r in pts if all(isinstance(c, int) and c <= 2 for _, c in r.path)]
            pts = small or pts
        return self._rng.choice(pts)

    def next_move(self, arena, state):
        if self._descend is not None:
            return self._descend.next_move(arena, state)
        cover = state.covers[-1]
        model = arena.model(arena.refs(*cover.parts))
        live = [p for p in cover.parts if arena.members(p, model)]
        part = self._rng.choice(live)
        move = part
        if state.round <= self.wander and isinstance(arena, SchemeArena) and self._rng.random() < 0.5:
            a = _ref(part.anchor)
            opts = []
            for s in successors(arena.tree, a):
                b = normalize_open(arena.tree, BasicOpen(a, part.excluded | {s}))
                if b is not None and arena.members(b, arena.model(arena.refs(b))):
                    opts.append(b)
            if opts:
                move = self._rng.choice(opts)
        if state.round > self.wander:
            self._descend = Descend(self._choose_point(arena, move))
            return _lift(arena, move, self._descend.point) if isinstance(arena, SchemeArena) else move
        return move

    def target(self, arena, state):
        return self._descend.point if self._descend else None


@dataclass
class Oscillate(Policy):
    """Descend towards ``point`` while cycling the shape of the move through
    ``script``: 'P' plays the part as given, 'L' re-anchors it on the
    target's chain, 'F' expresses the re-anchored part from the first anchor
    by excluding every branch left behind.  The script must contain an 'L'
    or an 'F', otherwise the moves need not converge to the target."""

    point: object
    script: str = "FP"
    _anchor: NodeRef | None = None
    name = "oscillate"

    def __post_init__(self):
        if not self.script or set(self.script) - set("PLF") or not set(self.script) & set("LF"):
            raise ValueError(f"bad oscillation script {self.script!r}")

    def first_move(self, arena):
        m = arena.root_move()
        self._anchor = m.anchor
        return m

    def next_move(self, arena, state):
        cover = state.covers[-1]
        part = _part_containing(arena, cover, self.point)
        if part is None:
            return cover.parts[0]
        shape = self.script[(state.round - 1) % len(self.script)]
        if not isinstance(arena, SchemeArena) or shape == "P":
            return part
        lifted = _lift(arena, part, self.point)
        if shape == "L":
            return lifted
        t = arena.tree
        hi = _ref(lifted.anchor)
        offs = _branch_offs(t, self._anchor, hi) if order_le(t, self._anchor, hi) else None
        if offs is None:
            self._anchor = hi
            return lifted
        b = normalize_open(t, BasicOpen(self._anchor, lifted.excluded | set(offs)))
        return b if b is not None else lifted

    def target(self, arena, state):
        return self.point


@dataclass
class ScriptPolicy(Policy):
    """Moves read from lines: ``part K`` (optionally followed by ``shrink a
    e1 e2 ...`` on the same line), a separate ``shrink a e1 ...`` line, or
    ``quit``.  Once the script is exhausted or quits, it descends towards the
    least point of its last move."""

    lines: list[str]
    _pos: int = 0
    _after: Descend | None = None
    log: list[str] = field(default_factory=list)
    name = "script"

    def _least(self, arena, move: BasicOpen):
        model = arena.model(arena.refs(move))
        return min(arena.members(move, model), key=lambda r: (str(r).count("/"), str(r)))

    def _fallback(self, arena, state):
        if self._after is None:
            self._after = Descend(self._least(arena, state.moves[-1]))
        return self._after.next_move(arena, state)

    def _next_line(self):
        while self._pos < len(self.lines):
            line = self.lines[self._pos].split("#", 1)[0].strip()
            self._pos += 1
            if line:
                return line
        return None

    def next_move(self, arena, state):
        if self._after is not None:
            return self._after.next_move(arena, state)
        line = self._next_line()
        if line is None or line == "quit":
            self.log.append("quit")
            return self._fallback(arena, state)
        words = line.split()
        cover = state.covers[-1]
        move = None
        if words[0] == "part":
            if len(words) < 2 or not words[1].isdigit() or int(words[1]) >= len(cover.parts):
                raise IllegalMove("not-contained", f"no part {words[1:2]}")
            move = cover.parts[int(words[1])]
            words = words[2:]
        if words and words[0] == "shrink":
            if len(words) < 2:
                raise IllegalMove("not-basic", "shrink needs an anchor")
            move = arena.parse_move(words[1], words[2:])
        elif words:
            raise IllegalMove("not-basic", f"cannot read {line!r}")
        self.log.append(line)
        return move

    def target(self, arena, state):
        return self._after.point if self._after else None


# =============================================================== matches


def run_match(arena, policy: Policy, rounds: int, adjudicate_result: bool = True) -> MatchState:
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    if isinstance(arena, TreeScheme):
        arena = SchemeArena(arena)
    state = MatchState()
    referee_step(arena, state, policy.first_move(arena))
    while state.round < rounds:
        referee_step(arena, state, policy.next_move(arena, state))
    if adjudicate_result:
        adjudicate(arena, state, policy)
    return state


def _extend(arena, state: MatchState, policy: Policy, total: int) -> MatchState:
    """Continue a copy of the match to ``total`` rounds (for limit reading)."""
    ext = MatchState(list(state.moves), list(state.covers))
    while ext.round < total:
        referee_step(arena, ext, policy.next_move(arena, ext))
    return ext


def adjudicate(arena, state: MatchState, policy: Policy | None = None, horizon: int = 24):
    """Decide the winner from the limit of Player I's moves."""
    if isinstance(arena, FiniteArena):
        return _adjudicate_finite(arena, state, policy, horizon)
    return _adjudicate_scheme(arena, state, policy, horizon)


def _finish(state: MatchState, result, flags=()) -> None:
    result.flags.extend(f for f in flags if f not in result.flags)
    state.result = result
    state.status = ADJUDICATED


def _adjudicate_scheme(arena: SchemeArena, state: MatchState, policy, horizon: int):
    t = arena.tree
    if policy is None:
        raise LimitNotComputable("a scheme match needs its policy to read the limit")
    flags = list(getattr(policy, "flags", []))
    base_cut = needed_cut(arena.refs(*state.moves), arena.floor)
    ext = _extend(arena, state, policy, state.round + base_cut + horizon)
    target = policy.target(arena, ext)
    if target is None:
        raise LimitNotComputable("policy declared no target")
    model = RaySpaceModel(t, max(base_cut, needed_cut(_point_refs(target), arena.floor)))
    # extensional route: intersection of all moves on the cut model
    inter = frozenset(model.rays)
    for m in ext.moves:
        inter &= model.basic(_ref(m.anchor), [_ref(e) for e in m.excluded])
    # symbolic route: the target plus what survives above its tops
    tops = tops_of(t, target)

    def excluded_above(moves) -> frozenset:
        out = set()
        for m in moves:
            for e in m.excluded:
                e = _ref(e)
                if any(order_le(t, tau, e) for tau in tops):
                    out.add(e)
        return frozenset(out)

    f_all = excluded_above(ext.moves)
    steady = f_all == excluded_above(ext.moves[: len(ext.moves) - horizon // 2])
    if not steady:
        flags.append("exclusions-not-steady")
    A = []
    for tau in tops:
        b = normalize_open(t, BasicOpen(tau, f_all))
        if b is not None:
            A.append(b)
    a_members = frozenset().union(*(model.members(b) for b in A)) if A else frozenset()
    if target not in inter:
        _finish(state, PlayerIWins("target-not-in-limit", inter), flags)
        return state.result
    if inter != a_members | {target} or target in a_members:
        _finish(state, PlayerIWins("no-unique-decomposition", inter), flags + ["routes-disagree"])
        return state.result
    s = scheme_at(t, target.path)
    ray_family = any(_fragment_has_ray(f.fragment) for f in s.families_on(target.seg))
    strict = ray_family or not a_members
    _finish(state, Capture(target.id, tuple(A), frozenset(r.id for r in a_members), strict), flags)
    return state.result


def _fragment_has_ray(s: TreeScheme) -> bool:
    return bool(s.omega_segments()) or any(_fragment_has_ray(f.fragment) for f in s.families)


def _adjudicate_finite(arena: FiniteArena, state: MatchState, policy, horizon: int):
    moves = list(state.moves)
    if policy is not None:
        ext = _extend(arena, state, policy, state.round + len(arena.ctx.points) + horizon)
        moves = ext.moves
    return adjudicate_finite(arena.ctx, moves, state)


def adjudicate_finite(ctx: FiniteContext, moves, state: MatchState | None = None):
    """Winner of a finite sequence of moves read as an eventually constant
    match: x wins for II iff it is the only point whose removal from the
    intersection leaves an open set."""
    inter = frozenset(ctx.points)
    for m in moves:
        inter &= ctx.members(m)
    ground = ctx.ground()
    flags = []
    if not inter:
        result = PlayerIWins("empty-intersection", inter, ["empty-intersection"])
    else:
        cands = [x for x in sorted(inter) if ground.is_open(inter - {x})]
        if len(cands) == 1:
            x = cands[0]
            rest = inter - {x}
            A = tuple(BasicOpen(ctx.smallest_containing(y)) for y in sorted(rest))
            result = Capture(x, A, rest)
            anchor_x = _anchor_point(ctx, moves)
            if anchor_x is not None and anchor_x != x:
                flags.append("anchor-rule-disagrees")
        else:
            result = PlayerIWins("no-unique-decomposition", inter)
    if state is not None:
        _finish(state, result, flags)
    else:
        result.flags.extend(flags)
    return result


def _anchor_point(ctx: FiniteContext, moves) -> str | None:
    """Point singled out by the last anchor: the unique point whose smallest
    subbasic set is that anchor's set."""
    if not moves:
        return None
    U = ctx.sets[moves[-1].anchor]
    inter = frozenset(ctx.points)
    for m in moves:
        inter &= ctx.members(m)
    own = [x for x in inter if ctx.sets[ctx.smallest_containing(x)] == U]
    return own[0] if len(own) == 1 else None


# ========================================================== K' partition


def kprime_partition(ctx: FiniteContext, target: BasicOpen) -> Cover:
    """Disjoint basic cover of [U, F] following the four-case recipe."""
    b = ctx.normalize(target)
    if b is None:
        return Cover(target, ())
    U = ctx.sets[b.anchor]
    F = sorted(b.excluded)
    P = ctx.members(b)
    own = [x for x in sorted(P) if ctx.largest_inside(U, x) is None]
    if len(own) > 1:
        raise ContextUndecidable(f"points {own[:2]} both have {b.anchor} as smallest set")
    parts: list[tuple[str, BasicOpen]] = []

    def add(kind: str, anchor: str, ex) -> None:
        nb = ctx.normalize(BasicOpen(anchor, frozenset(ex)))
        if nb is not None and all(ctx.members(nb) != ctx.members(q) for _, q in parts):
            parts.append((kind, nb))

    def ring_parts(rings: dict[str, str]) -> None:
        # a ring W collects the points of W outside F and outside smaller rings
        for a in sorted(set(rings.values())):
            W = ctx.sets[a]
            ex = [f for f in F if ctx.sets[f] <= W] + [r for r in set(rings.values()) if ctx.sets[r] < W]
            add("ring", a, ex)

    if not own:
        # item 1: every point has a largest subbasic set strictly inside U
        tilde = {}
        for x in sorted(P):
            k = ctx.largest_inside(U, x)
            tilde.setdefault(ctx.sets[k], k)
        rings = {}
        for alpha in F:
            home = next((A for A in tilde if ctx.sets[alpha] <= A), None)
            if home is None:
                continue
            chain = [k for k in ctx.supersets(alpha) if ctx.sets[k] < home] + [alpha]
            rings[alpha] = max(chain, key=lambda k: (len(ctx.sets[k]), -chain.index(k)))
        for A, k in sorted(tilde.items(), key=lambda kv: kv[1]):
            add("1", k, [r for r in rings.values() if ctx.sets[r] <= A])
        ring_parts({a: r for a, r in rings.items() if r != a})
        kind = "1"
    else:
        x0 = own[0]
        rings = {}
        for alpha in F:
            chain = [k for k in ctx.supersets(alpha) if ctx.sets[k] < U]
            rings[alpha] = chain[0] if chain else alpha
        moved = {a: r for a, r in rings.items() if ctx.sets[r] != ctx.sets[a]}
        if moved:
            add("2", b.anchor, set(rings.values()))
            ring_parts(moved)
            kind = "2"
        elif len(P) == 1:
            parts.append(("3", b))
            kind = "3"
        else:
            y = min(P - {x0})
            uy = ctx.largest_inside(U, y)
            add("4", uy, [])
            add("4", b.anchor, set(F) | {uy})
            kind = "4"
    return Cover(target, tuple(p for _, p in parts), tuple(k for k, _ in parts) or (kind,))


# ================================================================ T_C


@dataclass
class TCResult:
    scheme: TreeScheme
    table: dict[str, tuple[BasicOpen, frozenset]]
    limits: dict[str, str]  # omega segment -> point it represents
    complete: bool  # every branch ended in a singleton within the depth

    def node_family(self) -> dict[str, frozenset]:
        return {k: v[1] for k, v in self.table.items()}

    def to_json(self) -> dict:
        return {
            "nodes": {k: {"open": str(b), "members": sorted(m)} for k, (b, m) in self.table.items()},
            "limits": dict(self.limits),
            "complete": self.complete,
            "segments": len(self.scheme.segments),
        }


def build_tc(ctx: FiniteContext, depth: int = 8) -> TCResult:
    """Breadth-first strategy tree: the successors of a node are the parts
    of K' applied to each part of its own K' cover.  A singleton node is a
    fixed point of K' and carries an omega-chain standing for its point."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    segments: dict[str, int | None] = {}
    attachments = []
    table: dict[str, tuple[BasicOpen, frozenset]] = {}
    limits: dict[str, str] = {}
    counter = itertools.count()

    def new_node(b: BasicOpen, parent: str | None) -> str:
        name = f"n{next(counter)}"
        segments[name] = 1
        if parent is not None:
            attachments.append((name, parent, 0))
        table[name] = (b, ctx.members(b))
        return name

    root = new_node(BasicOpen(ctx.root), None)
    frontier = [root]
    complete = True
    for level in range(depth + 1):
        nxt = []
        for name in frontier:
            b, mem = table[name]
            if len(mem) == 1:
                seg = f"x{len(limits)}"
                segments[seg] = None
                attachments.append((seg, name, 0))
                limits[seg] = next(iter(mem))
                continue
            if level == depth:
                complete = False
                continue
            kids = []
            for w in kprime_partition(ctx, b).parts:
                for c in kprime_partition(ctx, w).parts:
                    if ctx.members(c) == mem:
                        raise ContextUndecidable(f"K' does not shrink {b}")
                    if all(ctx.members(c) != ctx.members(k) for k in kids):
                        kids.append(c)
            nxt.extend(new_node(c, name) for c in kids)
        frontier = nxt
    return TCResult(make_scheme(segments, attachments, root=root), table, limits, complete)


def ground_descriptor(ctx: FiniteContext) -> SpaceDescriptor:
    return ctx.ground().descriptor()


def local_basis_check(ctx: FiniteContext, tc: TCResult) -> list[str]:
    """Points x for which no node set of the tree lies between x and every
    basic neighbourhood of x; empty means the nodes give a local basis.

    The sets are nested, so every basic neighbourhood of x contains the
    smallest one: the smallest set containing x minus every set missing x.
    """
    nodes = list(tc.node_family().values())
    bad = []
    for x in ctx.points:
        k = ctx.smallest_containing(x)
        ex = frozenset(j for j, v in ctx.sets.items() if x not in v)
        least = ctx.members(BasicOpen(k, ex))
        if not any(x in N and N <= least for N in nodes):
            bad.append(x)
    return bad


def trichotomy_check(subsets: dict[str, frozenset], A: frozenset) -> list[str]:
    """Ids U with A and U neither disjoint nor nested."""
    return sorted(k for k, U in subsets.items() if (A & U) and not (U <= A or A <= U))


__all__ = [
    "ADJUDICATED",
    "RUNNING",
    "AnchorNotInTree",
    "Capture",
    "Cover",
    "Descend",
    "FiniteArena",
    "IllegalMove",
    "LimitNotComputable",
    "MatchState",
    "Oscillate",
    "PlayerIWins",
    "Policy",
    "Random",
    "SchemeArena",
    "ScriptPolicy",
    "TCResult",
    "adjudicate",
    "adjudicate_finite",
    "build_tc",
    "canonical_cover",
    "canonical_strategy",
    "canonical_target",
    "ground_descriptor",
    "kprime_partition",
    "local_basis_check",
    "referee_cover",
    "referee_move",
    "referee_step",
    "run_match",
    "trichotomy_check",
]
