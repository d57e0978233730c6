#!/usr/bin/env python3
"""Play every corpus tree against every Descend target, seeded Random
policies and the Oscillate scripts; report Player II's win rate."""

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from edgeends.corpus import generate_corpus, sweep_tree


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--randoms", type=int, default=50)
    ap.add_argument("--rounds", type=int, default=5)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    corpus = generate_corpus(seed=args.seed, n=100)
    jobs = [(n, t, args.randoms, args.rounds) for n, t in corpus.schemes]
    t0 = time.perf_counter()
    with ProcessPoolExecutor(args.workers) as pool:
        results = list(pool.map(sweep_tree, jobs))
    total = sum(n for _, n, _ in results)
    bad = [(name, b) for name, _, bs in results for b in bs]
    print(f"{total - len(bad)}/{total} matches won by II in {time.perf_counter() - t0:.1f}s")
    for name, b in bad[:20]:
        print(f"  {name}: {b}")
    return 0 if not bad else 1


if __name__ == "__main__":
    sys.exit(main())
