import dataclasses
import random

import pytest
from hypothesis import given, settings, strategies as st

from edgeends.corpus import CorpusSpec, combtree, fork, omega2, random_scheme, tooth
from edgeends.endspace import end_classes
from edgeends.ordertree import (
    ChainRule,
    NodeRef,
    PartitionTree,
    SchemeError,
    check_partition_tree,
    high_rays,
    load_scheme,
    make_scheme,
    nesting,
    parse_partition,
    serialize_partition,
    tgraph_partition,
    tgraph_scheme,
    uniform_tgraph,
)
from edgeends.presentation import load
from conftest import FIXTURES

PART = FIXTURES / "partition"
schemes = st.integers(0, 10**6).map(lambda s: random_scheme(random.Random(s), CorpusSpec()))


def fat_top():
    t = load_scheme(PART / "omega2.ots")
    return t, parse_partition((PART / "fat-top.ptree").read_text(), t)


def test_fat_limit_part_is_a_partition_tree():
    t, pt = fat_top()
    rep = check_partition_tree(load(PART / "fat-top.egp"), pt)
    assert rep.ok, rep.violations
    assert rep.theta == {"[s0]": "s0", "[s1]": "s1"}


def test_ladder_breaks_adhesion_and_theta():
    t, pt = fat_top()
    rep = check_partition_tree(load(PART / "ladder.egp"), pt)
    assert {"infinite-adhesion", "theta-not-well-defined", "theta-not-surjective"} <= set(rep.kinds())
    assert all(d.startswith("s1[") for k, d in rep.violations if k == "infinite-adhesion")


def test_missing_fan_leaves_limit_uncofinal():
    p = load(PART / "fat-top.egp")
    t, pt = fat_top()
    rep = check_partition_tree(dataclasses.replace(p, fans=frozenset()), pt)
    assert rep.kinds() == ["limit-not-cofinal"]


def test_disconnected_limit_part():
    p = load(PART / "fat-top.egp")
    t, pt = fat_top()
    rep = check_partition_tree(dataclasses.replace(p, finite_edges=frozenset({("b", "s1[0]")})), pt)
    assert "disconnected-part" in rep.kinds()


def test_parts_must_cover_without_overlap():
    p = load(PART / "fat-top.egp")
    chains = [ChainRule((), "s0", "s0"), ChainRule((), "s1", "s1")]
    short = PartitionTree(omega2(), {NodeRef((), "s0", None): ("a",)}, chains)
    assert "uncovered-vertex" in check_partition_tree(p, short).kinds()
    greedy = PartitionTree(omega2(), {NodeRef((), "s0", None): ("a", "b", "s1[0]")}, chains)
    assert "overlapping-parts" in check_partition_tree(p, greedy).kinds()


def test_successor_parts_hold_one_vertex():
    p = load(PART / "fat-top.egp")
    t = make_scheme({"c": 1, "s0": None, "s1": None}, [("s0", "c", 0), ("s1", "s0", None)], root="c")
    pt = PartitionTree(t, {NodeRef((), "c", 0): ("a", "b")}, [ChainRule((), "s0", "s0"), ChainRule((), "s1", "s1")])
    assert "non-limit-part-size" in check_partition_tree(p, pt).kinds()


def test_swapped_chains_are_not_a_t_graph():
    p = load(PART / "fat-top.egp")
    t, pt = fat_top()
    swapped = PartitionTree(t, pt.parts, [ChainRule((), "s0", "s1"), ChainRule((), "s1", "s0")])
    assert not check_partition_tree(p, swapped).ok


def test_cliques_are_reported_not_checked():
    p = load(PART / "fat-top.egp")
    t, pt = fat_top()
    gens = frozenset(dataclasses.replace(g, kind="clique") if g.id == "s1" else g for g in p.generators)
    assert check_partition_tree(dataclasses.replace(p, generators=gens), pt).kinds() == ["unsupported-generator"]


@pytest.mark.parametrize("make", [fork, omega2, combtree, tooth])
def test_uniform_tgraph_fixtures_display_their_ends(make):
    t = make()
    p = uniform_tgraph(t)
    rep = check_partition_tree(p, tgraph_partition(t))
    assert rep.ok, rep.violations
    # every end class of the generators lands on the high-ray of its chain
    for g, cls in end_classes(p).items():
        assert rep.theta[cls] == g


def test_fragment_with_finite_prefix_shifts_the_pendants():
    frag = make_scheme({"p": 2, "u": None}, [("u", "p", 1)])
    t = make_scheme({"b": None}, [], [("b_f", "b", frag, "f.ots")])
    pt = tgraph_partition(t)
    assert [c.shift for c in pt.chains if c.path] == [2]
    rep = check_partition_tree(uniform_tgraph(t), pt)
    assert rep.ok, rep.violations
    assert rep.theta["b_f.u.1"] == "b_f:1/u"


def test_ray_free_families_hold_no_vertices():
    frag = make_scheme({"p": 2})
    t = make_scheme({"b": None}, [], [("b_f", "b", frag, "f.ots")])
    assert tgraph_scheme(t).families == ()
    assert check_partition_tree(uniform_tgraph(t), tgraph_partition(t)).ok


def test_branching_fragment_is_rejected():
    frag = make_scheme({"p": 1, "u": None, "v": None}, [("u", "p", 0), ("v", "p", 0)])
    t = make_scheme({"b": None}, [], [("b_f", "b", frag, "f.ots")])
    with pytest.raises(SchemeError):
        tgraph_partition(t)


def test_parts_file_round_trip():
    t, pt = fat_top()
    again = parse_partition(serialize_partition(pt), t)
    assert again.parts == pt.parts and again.chains == pt.chains


def test_parts_file_errors():
    with pytest.raises(SchemeError):
        parse_partition("s0 = s0\n", omega2())
    with pytest.raises(SchemeError):
        parse_partition("[chains]\ns0 = s0 +x\n", omega2())


def test_corpus_uniform_tgraphs_are_partition_trees(corpus):
    for name, t in corpus.schemes:
        if nesting(t) > 2:
            continue
        rep = check_partition_tree(uniform_tgraph(t), tgraph_partition(t))
        assert rep.ok, (name, rep.violations)
        assert set(rep.theta.values()) >= {r.id for r in high_rays(t) if not r.is_schema}


@settings(max_examples=40, deadline=None)
@given(schemes)
def test_theta_is_a_bijection_on_uniform_tgraphs(t):
    rep = check_partition_tree(uniform_tgraph(t), tgraph_partition(t))
    assert rep.ok, rep.violations
    assert len(set(rep.theta.values())) == len(rep.theta)
