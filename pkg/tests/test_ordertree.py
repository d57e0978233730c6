import random

import pytest
from hypothesis import given, settings, strategies as st

from edgeends.corpus import CorpusSpec, combtree, fork, omega2, random_scheme, tooth
from edgeends.endspace import end_space, homeomorphic
from edgeends.ordertree import (
    BasicOpen,
    NodeRef,
    NotSpecial,
    RaySpaceModel,
    SchemeError,
    SurgeryError,
    comparable,
    example26_truncation,
    hat_subtree,
    high_rays,
    load_scheme,
    make_scheme,
    nesting,
    normal_tree_search,
    normalize_open,
    order_le,
    order_lt,
    parse_nmap,
    parse_ref,
    parse_scheme,
    rayspace_descriptor,
    serialize_scheme,
    specialness,
    surgery_tprime,
    tops_of,
    uncountable_report,
    uniform_tgraph,
)
from edgeends.presentation import figure1, make_presentation, truncate
from conftest import FIXTURES

schemes = st.integers(0, 10**6).map(lambda s: random_scheme(random.Random(s), CorpusSpec()))
SURGERY = sorted((FIXTURES / "surgery").glob("*.nmap"))


def test_order_le_omega2():
    t = omega2()
    assert order_le(t, "s0[3]", "s1[0]")
    assert order_le(t, "s0[3]", "top(s0)")
    assert not order_le(t, "top(s0)", "s0[7]")


def test_order_le_fork_incomparable():
    t = fork()
    assert not order_le(t, "l[0]", "r[0]") and not order_le(t, "r[0]", "l[0]")
    assert order_le(t, "s[0]", "l[4]")


def test_high_rays_counts():
    assert len(high_rays(tooth())) == 1
    assert len(high_rays(omega2())) == 2
    assert len(high_rays(fork())) == 2


def test_tops():
    t = omega2()
    bottom, full = high_rays(t)
    assert [str(x) for x in tops_of(t, bottom)] == ["top(s0)"] and tops_of(t, full) == []
    assert tops_of(tooth(), high_rays(tooth())[0]) == []


def test_tops_binary_example():
    t = example26_truncation(1)
    r0 = next(r for r in high_rays(t) if r.seg == "r0")
    assert [str(x) for x in tops_of(t, r0)] == ["top(r0)"]


def test_specialness_levels():
    d = specialness(omega2())
    assert all(len(v) == 1 for v in d.levels.values())
    assert max(len(v) for v in specialness(fork()).levels.values()) <= 2
    levels = specialness(combtree(), cut=6).levels
    for n in range(1, 4):
        nodes = levels[(0, n)]
        assert len(nodes) == n + 1
        assert not any(comparable(combtree(), a, b) for a in nodes for b in nodes if a != b)


def test_surgery_omega2():
    t = omega2()
    new = surgery_tprime(t, {"s1[0]": ["s0[5]"]})
    assert len(high_rays(new)) == 2
    assert homeomorphic(rayspace_descriptor(new), rayspace_descriptor(t))


def test_surgery_identity_without_limits():
    assert surgery_tprime(fork(), {}) == fork()


def test_surgery_split():
    t = make_scheme({"s0": None, "a": None, "b": None}, [("a", "s0", None), ("b", "s0", None)])
    new = surgery_tprime(t, {"a[0]": ["s0[1]"], "b[0]": ["s0[2]"]})
    labels = {x.label for x in new.attachments if x.index is None}
    assert labels == {"v0", "v1"}
    assert not order_le(new, "a[0]", "b[0]")
    assert homeomorphic(rayspace_descriptor(new), rayspace_descriptor(t))


def test_surgery_rejects_bad_maps():
    with pytest.raises(SurgeryError):
        surgery_tprime(omega2(), {})
    with pytest.raises(SurgeryError):
        surgery_tprime(omega2(), {"s1[0]": ["s1[3]"]})


def test_hat_subtree():
    assert hat_subtree(omega2()) == omega2()
    pend = make_scheme({"s": None, "p": 2}, [("p", "s", 1)])
    assert [s.id for s in hat_subtree(pend).segments] == ["s"]
    assert hat_subtree(combtree()) == combtree()


def test_uniform_tgraph():
    assert end_space(uniform_tgraph(tooth())).signature() == (0, 0, 1)
    p = uniform_tgraph(omega2())
    assert any(f.is_omega for f in p.fans)
    assert end_space(p).signature() == (0, 0, 2)
    assert homeomorphic(end_space(uniform_tgraph(combtree())), rayspace_descriptor(combtree()))


def test_rayspace_descriptors():
    assert rayspace_descriptor(fork()).signature() == (0, 0, 2)
    assert rayspace_descriptor(omega2()).signature() == (0, 0, 2)
    assert rayspace_descriptor(combtree()).signature() == (1, 0, 0)


def test_bottom_ray_isolated_in_omega2():
    t = omega2()
    m = RaySpaceModel(t, 6)
    assert m.basic("s0[0]", ["top(s0)"]) == {high_rays(t)[0]}


def test_normalize_drops_redundant_exclusion():
    t = omega2()
    b = normalize_open(t, BasicOpen(parse_ref("s0[0]"), frozenset({parse_ref("top(s0)"), parse_ref("s1[2]")})))
    assert b.excluded == {parse_ref("top(s0)")}


def test_normal_tree_path_and_clique():
    path = make_presentation(generators={"r": "ray"})
    tree = normal_tree_search(truncate(path, 5))
    assert len(tree.roots) == 1 and tree.roots[0] in ("r[0]", "r[4]")
    import networkx as nx

    k4 = nx.complete_graph(["a", "b", "c", "d"])
    assert normal_tree_search(k4).violations(k4) == []


def test_normal_tree_figure1_without_vinf():
    g = truncate(figure1(), 4)
    tree = normal_tree_search(g, {"vinf"})
    h = g.to_networkx()
    h.remove_node("vinf")
    assert tree.violations(h) == []
    nbrs = [v for v in g.to_networkx().neighbors("vinf")]
    assert all(tree.comparable(u, v) or "v0" in tree.ancestors(u) + tree.ancestors(v) + [u, v] for u in nbrs for v in nbrs)


def test_uncountable_report_has_no_metric_verdict():
    rep = uncountable_report(3)
    assert rep["certified"] is False and rep["truncated_branches"] == 8
    assert not any("metri" in k for k in rep)


def test_fixture_files_parse():
    for name in ("fork", "omega2", "combtree", "ex26"):
        t = load_scheme(FIXTURES / f"{name}.ots")
        assert high_rays(t)


def test_bad_scheme_text():
    with pytest.raises(SchemeError):
        parse_scheme("[segments]\ns omega\n")
    with pytest.raises(SchemeError):
        parse_scheme("[segments]\ns bogus\n[root] s\n")


@pytest.mark.parametrize("nmap", SURGERY, ids=lambda p: p.stem)
def test_surgery_fixture_preserves_descriptor(nmap):
    t = load_scheme(nmap.with_suffix(".ots"))
    new = surgery_tprime(t, parse_nmap(nmap.read_text()))
    assert homeomorphic(rayspace_descriptor(new), rayspace_descriptor(t))
    if nesting(t) <= 2:
        # independent route: the end space of the rebuilt T-graph
        assert homeomorphic(end_space(uniform_tgraph(new)), rayspace_descriptor(t))


def _sample_nodes(t, cut=3):
    return RaySpaceModel(t, cut).nodes


@settings(max_examples=40, deadline=None)
@given(schemes)
def test_order_le_is_partial_order(t):
    nodes = _sample_nodes(t)[:14]
    for a in nodes:
        assert order_le(t, a, a)
        for b in nodes:
            if a != b and order_le(t, a, b):
                assert not order_le(t, b, a)
                assert order_lt(t, a, b)
            for c in nodes:
                if order_le(t, a, b) and order_le(t, b, c):
                    assert order_le(t, a, c)


@settings(max_examples=40, deadline=None)
@given(schemes)
def test_down_sets_are_chains(t):
    nodes = _sample_nodes(t)
    for x in nodes[:20]:
        below = [a for a in nodes if order_le(t, a, x)]
        assert all(comparable(t, a, b) for a in below for b in below)


@settings(max_examples=40, deadline=None)
@given(schemes)
def test_scheme_round_trip(t):
    frags = {f.source: f.fragment for f in t.families}
    assert parse_scheme(serialize_scheme(t), loader=frags.__getitem__) == t


@settings(max_examples=40, deadline=None)
@given(schemes)
def test_specialness_always_decomposes(t):
    assert not isinstance(specialness(t), NotSpecial)


@settings(max_examples=40, deadline=None)
@given(schemes)
def test_points_biject_with_rays(t):
    d = rayspace_descriptor(t)
    # a schema ray inside a family stands for a sequence of points
    assert len(d.points()) == len([r for r in high_rays(t) if not r.is_schema])
    assert homeomorphic(end_space(uniform_tgraph(t)), d)


def test_noderef_text_round_trip():
    for text in ("s0[3]", "top(s0)", "top(s0@v1)", "b_tooth:2/u[0]", "b_tooth:*/top(u)"):
        assert str(parse_ref(text)) == text
    assert isinstance(parse_ref("s[1]"), NodeRef)
