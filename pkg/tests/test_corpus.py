from edgeends.corpus import CorpusSpec, fixture_presentations, fixture_schemes, generate_corpus, match_plan
from edgeends.endspace import EDGE, VERTEX, partition
from edgeends.ordertree import nesting, scheme_errors, serialize_scheme
from edgeends.presentation import serialize, validate


def test_same_seed_same_corpus():
    a, b = generate_corpus(seed=7, n=30), generate_corpus(seed=7, n=30)
    assert [serialize(p) for _, p in a.presentations] == [serialize(p) for _, p in b.presentations]
    assert [serialize_scheme(t) for _, t in a.schemes] == [serialize_scheme(t) for _, t in b.schemes]
    assert [c.sets for _, c in a.grounds] == [c.sets for _, c in b.grounds]


def test_other_seed_differs():
    a, b = generate_corpus(seed=7, n=10), generate_corpus(seed=8, n=10)
    assert [serialize(p) for _, p in a.presentations] != [serialize(p) for _, p in b.presentations]


def test_fixtures_always_included(corpus):
    names = [n for n, _ in corpus.presentations]
    assert names[:4] == ["fig1", "ray", "ladder", "comb"]
    assert [n for n, _ in corpus.schemes][:4] == ["fork", "omega2", "combtree", "ex26"]
    assert len(fixture_presentations()) == 8 and len(fixture_schemes()) == 4


def test_every_member_valid(corpus):
    assert all(validate(p).ok for _, p in corpus.presentations)
    assert all(not scheme_errors(t) for _, t in corpus.schemes)


def test_size_bounds(corpus):
    spec = CorpusSpec()
    for name, p in corpus.presentations:
        if name.startswith("rand-"):
            assert len(p.generators) <= spec.max_generators and len(p.core) <= spec.max_core
    for name, t in corpus.schemes:
        if name.startswith("tree-"):
            assert len(t.segments) <= spec.max_segments and nesting(t) <= spec.max_nesting
    assert all(len(c.points) <= spec.max_points for _, c in corpus.grounds)


def test_refinement_invariant(corpus):
    for _, p in corpus.presentations:
        coarse = partition(p, EDGE)
        assert all(any(a <= b for b in coarse) for a in partition(p, VERTEX))


def test_match_plan_shape(corpus):
    plan = match_plan(corpus)
    kinds = {pol.name for _, _, pol in plan}
    assert len(plan) == 200 and kinds == {"descend", "random", "oscillate"}
