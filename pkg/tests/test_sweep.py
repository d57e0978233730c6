"""Player II wins against every Descend target, 50 seeded Random policies
and 10 Oscillate scripts on every corpus tree."""

from concurrent.futures import ProcessPoolExecutor

from edgeends.corpus import sweep_tree


def test_player_two_wins_full_sweep(corpus):
    jobs = [(n, t, 50, 5) for n, t in corpus.schemes]
    with ProcessPoolExecutor(4) as pool:
        results = list(pool.map(sweep_tree, jobs))
    total = sum(n for _, n, _ in results)
    losses = [(name, b) for name, _, bs in results for b in bs]
    assert total > 3000
    assert losses == []
