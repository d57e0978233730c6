#!/usr/bin/env python3
"""Corpus statistics plus every property suite, as one JSON report."""

import argparse
import json
import sys
from collections import Counter

from edgeends.cli import main as cli_main
from edgeends.corpus import generate_corpus
from edgeends.endspace import edge_end_space, end_space
from edgeends.ordertree import high_rays, nesting


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--n", type=int, default=100)
    args = ap.parse_args()
    c = generate_corpus(seed=args.seed, n=args.n)
    stats = {
        "presentations": len(c.presentations),
        "schemes": len(c.schemes),
        "grounds": len(c.grounds),
        "end_vs_edge_end_points": dict(
            Counter(
                f"{len(end_space(p).points())}->{len(edge_end_space(p).points())}" for _, p in c.presentations
            ).most_common(8)
        ),
        "nesting": dict(Counter(nesting(t) for _, t in c.schemes)),
        "high_rays": dict(Counter(len(high_rays(t)) for _, t in c.schemes)),
        "ground_sizes": dict(Counter(len(g.points) for _, g in c.grounds)),
    }
    print(json.dumps(stats, indent=2, sort_keys=True))
    return cli_main(["corpus", "--seed", str(args.seed), "--n", str(args.n), "--suite", "all"])


if __name__ == "__main__":
    sys.exit(main())
