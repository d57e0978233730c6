import pytest

from edgeends.corpus import comb, ladder_pair, ray
from edgeends.endspace import (
    EDGE,
    VERTEX,
    CannotSeparate,
    Separates,
    SpaceDescriptor,
    UnknownEndpoint,
    canonicalize,
    dominators,
    edge_end_classes,
    edge_end_space,
    end_classes,
    end_space,
    homeomorphic,
    omega_quotient,
    oracle_agreement,
    separator_oracle,
    well_formed,
)
from edgeends.presentation import OMEGA, figure1, make_presentation


def two_rays():
    return make_presentation(generators={"r": "ray", "s": "ray"})


def test_omega_quotient_figure1():
    q = omega_quotient(figure1())
    assert set(q.nodes) == {"r+", "r-", "vinf"}
    assert set(q.omega_edges) == {("r+", "vinf"), ("r-", "vinf")}


def test_omega_quotient_small_cases():
    assert omega_quotient(ray()).omega_edges == ()
    assert omega_quotient(ladder_pair()).omega_edges == (("r", "s"),)


def test_figure1_two_ends_one_edge_end():
    assert end_space(figure1()).signature() == (0, 0, 2)
    assert edge_end_space(figure1()).signature() == (0, 0, 1)


def test_two_disjoint_rays():
    assert edge_end_space(two_rays()).signature() == (0, 0, 2)


def test_comb_one_limit():
    d = edge_end_space(comb())
    assert len(d.limits) == 1 and len(d.sequences) == 1 and not d.isolated
    assert well_formed(d) == []


def test_ladder_one_end():
    assert end_space(ladder_pair()).signature() == (0, 0, 1)


def test_single_clique_one_end():
    assert end_space(make_presentation(generators={"k": "clique"})).signature() == (0, 0, 1)


def test_dominators():
    p = figure1()
    assert dominators(p, end_classes(p)["r+"], VERTEX) == {"vinf"}
    assert dominators(ray(), "[r]", VERTEX) == frozenset()
    q = make_presentation(["v"], {"r": "ray", "s": "ray"}, fans=[("v", "r", OMEGA), ("v", "s", OMEGA)])
    (point,) = set(edge_end_classes(q).values())
    assert dominators(q, point, EDGE) == {"v"}
    with pytest.raises(UnknownEndpoint):
        dominators(ray(), "[zz]", VERTEX)


def test_canonicalize_merges_sequences():
    d = SpaceDescriptor(frozenset(), frozenset({"x"}), frozenset({("a", "x"), ("b", "x")}))
    assert len(canonicalize(d).sequences) == 1


def test_homeomorphic_small():
    two = SpaceDescriptor(frozenset({"a", "b"}))
    lim = SpaceDescriptor(frozenset(), frozenset({"x"}), frozenset({("f", "x")}))
    assert homeomorphic(two, SpaceDescriptor(frozenset({"c", "d"})))
    assert not homeomorphic(lim, two)


def test_oracle_figure1_vertex_separates():
    v = separator_oracle(figure1(), "r+", "r-", VERTEX, 1, 6)
    assert isinstance(v, Separates) and "vinf" in v.extra | v.patch


def test_oracle_figure1_edge_cannot():
    assert isinstance(separator_oracle(figure1(), "r+", "r-", EDGE, 3, 12), CannotSeparate)


def test_oracle_disjoint_rays_k0():
    v = separator_oracle(two_rays(), "r", "s", EDGE, 0, 4)
    assert isinstance(v, Separates) and v.extra == frozenset()


def test_oracle_dominator_not_cut_without_vinf():
    # with vinf kept, no <= 4 other vertices cut vinf's fan from r+; cutting r+ from r- needs vinf
    for k in range(1, 5):
        v = separator_oracle(figure1(), "r+", "r-", VERTEX, k, 3 * k + 3)
        assert "vinf" in v.extra | v.patch


def test_oracle_agreement_fixtures():
    for p in (figure1(), ray(), ladder_pair(), comb()):
        assert oracle_agreement(p, 3).ok


def test_refinement_on_fixtures():
    for p in (figure1(), ladder_pair(), comb(), two_rays()):
        fine, coarse = end_classes(p), edge_end_classes(p)
        for a in fine:
            for b in fine:
                if fine[a] == fine[b]:
                    assert coarse[a] == coarse[b]
