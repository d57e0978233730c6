import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from edgeends.corpus import CorpusSpec, combtree, fork, omega2, random_ground, random_scheme, tooth
from edgeends.game import (
    ADJUDICATED,
    Capture,
    Cover,
    Descend,
    FiniteArena,
    IllegalMove,
    MatchState,
    Oscillate,
    PlayerIWins,
    Random,
    SchemeArena,
    ScriptPolicy,
    adjudicate_finite,
    build_tc,
    canonical_cover,
    kprime_partition,
    local_basis_check,
    referee_cover,
    referee_step,
    run_match,
    trichotomy_check,
)
from edgeends.ordertree import BasicOpen, RaySpaceModel, high_rays, node_has_ray, parse_ref
from edgeends.subbase import ContextUndecidable, FiniteContext, SubbaseFamily, check_special

schemes = st.integers(0, 10**6).map(lambda s: random_scheme(random.Random(s), CorpusSpec()))
grounds = st.integers(0, 10**6).map(lambda s: random_ground(random.Random(s), CorpusSpec(max_points=9)))


def bo(anchor, *excluded):
    return BasicOpen(parse_ref(anchor), frozenset(parse_ref(e) for e in excluded))


# ---------------------------------------------------------------- referee


def test_root_move_accepted():
    arena = SchemeArena(fork())
    state = referee_step(arena, MatchState(), arena.root_move())
    assert state.round == 1 and len(state.covers[0].parts) == 2


def test_overlapping_cover_rejected():
    arena = SchemeArena(fork())
    bad = Cover(bo("s[0]"), (bo("s[0]"), bo("l[0]")))
    with pytest.raises(IllegalMove) as err:
        referee_cover(arena, bad)
    assert err.value.reason == "overlap"


def test_non_covering_rejected():
    with pytest.raises(IllegalMove) as err:
        referee_cover(SchemeArena(fork()), Cover(bo("s[0]"), (bo("l[0]"),)))
    assert err.value.reason == "not-covering"


def test_move_outside_parts_rejected():
    arena = SchemeArena(fork())
    state = referee_step(arena, MatchState(), arena.root_move())
    referee_step(arena, state, bo("l[0]"))
    with pytest.raises(IllegalMove) as err:
        referee_step(arena, state, bo("r[3]"))
    assert err.value.reason == "not-contained"


# --------------------------------------------------------------- strategy


def _rays(t, b, cut=10):
    m = RaySpaceModel(t, cut)
    return m.basic(b.anchor, b.excluded)


def test_omega2_bottom_cover():
    t = omega2()
    v = bo("s0[0]", "top(s0)")
    c = canonical_cover(t, v)
    assert [str(p) for p in c.parts] == ["[s0[1], {top(s0)}]"] and c.kinds == ("2",)
    # independent check over both high-rays
    assert frozenset().union(*(_rays(t, p) for p in c.parts)) == _rays(t, v) == {high_rays(t)[0]}


def test_finite_branching_cover():
    c = canonical_cover(fork(), bo("s[0]"))
    assert [str(p) for p in c.parts] == ["[l[0], {}]", "[r[0], {}]"] and set(c.kinds) == {"1"}


def test_single_chain_cover():
    c = canonical_cover(tooth(), bo("u[3]"))
    assert [str(p) for p in c.parts] == ["[u[4], {}]"]


# ----------------------------------------------------------------- matches


def test_fork_descend_left():
    t = fork()
    left = high_rays(t)[0]
    st_ = run_match(t, Descend(left), 5)
    assert st_.status == ADJUDICATED
    assert isinstance(st_.result, Capture) and st_.result.x == "l" and st_.result.A == ()


def test_omega2_descend_bottom():
    t = omega2()
    res = run_match(t, Descend(high_rays(t)[0]), 6).result
    assert res.winner == "II" and res.x == "s0"
    assert [str(a) for a in res.A] == ["[top(s0), {}]"] and {str(r) for r in res.members} == {"s1"}


def test_combtree_oscillate_grows_exclusions():
    t = combtree()
    st_ = run_match(t, Oscillate(high_rays(t)[0], "F"), 6)
    assert {str(m.anchor) for m in st_.moves} == {"b[0]"}
    assert [len(m.excluded) for m in st_.moves] == list(range(6))
    assert st_.result.winner == "II" and st_.result.x == "b" and st_.result.A == ()


def test_two_point_non_strategy_sequence_loses():
    ctx = FiniteContext.build("ab", {"A": "a", "B": "b"})
    res = adjudicate_finite(ctx, [BasicOpen(ctx.root)])
    assert isinstance(res, PlayerIWins) and res.intersection == {"a", "b"}
    assert adjudicate_finite(ctx, [BasicOpen(ctx.root), BasicOpen("A")]).x == "a"


def test_empty_intersection_goes_to_player_one():
    ctx = FiniteContext.build("ab", {"A": "a", "B": "b"})
    res = adjudicate_finite(ctx, [BasicOpen("A"), BasicOpen("B")])
    assert isinstance(res, PlayerIWins) and "empty-intersection" in res.flags


def test_script_policy_and_quit():
    t = omega2()
    st_ = run_match(SchemeArena(t), ScriptPolicy(["part 0", "shrink s1[0]", "quit"]), 5)
    assert str(st_.moves[2]) == "[s1[0], {}]" and st_.result.x == "s1"


def test_oscillate_script_must_converge():
    with pytest.raises(ValueError):
        Oscillate(high_rays(fork())[0], "PP")


# --------------------------------------------------------------- K' and T_C


def test_kprime_three_points():
    ctx = FiniteContext.build("abc", {"X": "abc", "A": "a", "B": "b"})
    c = kprime_partition(ctx, BasicOpen("X"))
    cells = sorted(sorted(ctx.members(p)) for p in c.parts)
    assert cells == [["a"], ["b", "c"]]
    # one more application splits {b, c}
    inner = [kprime_partition(ctx, p) for p in c.parts]
    assert sorted(sorted(ctx.members(q)) for cv in inner for q in cv.parts) == [["a"], ["b"], ["c"]]


def test_kprime_singleton_trivial():
    ctx = FiniteContext.build("abc", {"X": "abc", "A": "a", "B": "b"})
    c = kprime_partition(ctx, BasicOpen("A"))
    assert c.parts == (BasicOpen("A"),) and c.kinds == ("3",)


def test_kprime_item1_with_ring():
    # every point of X has a largest set inside X; F excludes a small set
    ctx = FiniteContext.build("abcd", {"X": "abcd", "L": "ab", "R": "cd", "A": "a", "C": "c"})
    target = BasicOpen("X", frozenset({"A"}))
    c = kprime_partition(ctx, target)
    referee_cover(FiniteArena(ctx), c)
    assert frozenset().union(*(ctx.members(p) for p in c.parts)) == {"b", "c", "d"}


def test_kprime_undecidable():
    with pytest.raises(ContextUndecidable):
        kprime_partition(FiniteContext.build("ab", {"X": "ab"}), BasicOpen("X"))


def test_tc_three_points():
    ctx = FiniteContext.build("abc", {"X": "abc", "A": "a", "B": "b"})
    tc = build_tc(ctx, 4)
    assert tc.complete and sorted(tc.limits.values()) == ["a", "b", "c"]
    assert local_basis_check(ctx, tc) == []


def test_tc_of_fork_shadow():
    from edgeends.endspace import homeomorphic
    from edgeends.game import ground_descriptor
    from edgeends.ordertree import rayspace_descriptor

    ctx = FiniteContext.from_scheme(fork(), 4)
    tc = build_tc(ctx, 6)
    assert homeomorphic(rayspace_descriptor(tc.scheme), rayspace_descriptor(fork()))
    assert homeomorphic(rayspace_descriptor(tc.scheme), ground_descriptor(ctx))


# -------------------------------------------------------------- properties


def _targets(t, cut=3):
    m = RaySpaceModel(t, cut)
    for n in m.nodes:
        yield BasicOpen(n)
        tops = [x for x in m.nodes if x.index is None]
        for top in tops[:2]:
            yield BasicOpen(n, frozenset({top}))


@settings(max_examples=25, deadline=None)
@given(schemes)
def test_strategy_covers_pass_referee(t):
    arena = SchemeArena(t)
    for v in _targets(t):
        if not node_has_ray(t, v.anchor):
            continue
        referee_cover(arena, arena.strategy(v))


@settings(max_examples=20, deadline=None)
@given(schemes, st.integers(0, 1000))
def test_player_two_wins_random(t, seed):
    if high_rays(t):
        assert run_match(t, Random(seed), 5).result.winner == "II"


@settings(max_examples=20, deadline=None)
@given(grounds)
def test_tc_nested_and_special(ctx):
    try:
        tc = build_tc(ctx, 12)
    except ContextUndecidable:
        return
    sets = list(tc.node_family().values())
    for a, b in itertools.combinations(sets, 2):
        assert not (a & b) or a <= b or b <= a
    assert check_special(SubbaseFamily.finite(ctx.points, tc.node_family())).ok
    assert local_basis_check(ctx, tc) == []


@settings(max_examples=20, deadline=None)
@given(grounds)
def test_trichotomy_on_finite_captures(ctx):
    arena = FiniteArena(ctx)
    for x in ctx.points:
        res = run_match(arena, Descend(x), 3).result
        assert res.winner == "II" and res.x == x
        assert trichotomy_check(ctx.sets, res.members) == []
