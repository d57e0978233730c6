#!/usr/bin/env python3
"""Run the ten acceptance checks and print one line per criterion."""

import argparse
import json
import sys

from edgeends.acceptance import run_all
from edgeends.corpus import generate_corpus


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--json", action="store_true", help="also dump failures as JSON")
    args = ap.parse_args()
    results = run_all(generate_corpus(seed=args.seed, n=100))
    for r in results:
        print(r.line())
        if args.json and r.failures:
            print(json.dumps(r.failures, default=str, indent=2))
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
