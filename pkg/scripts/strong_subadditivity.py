"""Random search for strong-subadditivity violations of the p-capacity.

For random small sets K1, K2 inside a region V of a fuzzed finite graph the
script compares ``cap(K1 ∪ K2) + cap(K1 ∩ K2)`` with ``cap(K1) + cap(K2)``
and reports the largest gap.  A positive gap beyond the solver tolerance
would be a counterexample; at p = 2 none can exist, which makes it a sanity
check for the harness.
"""
from __future__ import annotations

import argparse

import numpy as np

from pgraph import random_graph, strong_subadditivity_search


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--graphs", type=int, default=40)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 3.0, 4.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    for p in args.p:
        worst, where = -np.inf, None
        for g in range(args.graphs):
            G = random_graph(rng, int(rng.integers(6, 13)))
            # leave several vertices outside V; a single grounded vertex makes many gaps vanish
            V = [v for v in G.vertices if rng.random() < 0.6]
            if len(V) < 3 or len(V) > G.n - 2:
                continue
            trials = strong_subadditivity_search(G, V, p, args.trials, seed=int(rng.integers(2 ** 31)))
            for t in trials:
                a, b = set(t["K1"]), set(t["K2"])
                if a <= b or b <= a:
                    continue  # nested sets give a zero gap trivially
                if t["gap"] > worst:
                    worst, where = t["gap"], (g, t["K1"], t["K2"])
        flag = "candidate violation" if worst > 1e-8 else "no violation"
        print(f"p={p:<4} graphs={args.graphs} trials<={args.graphs * args.trials} "
              f"max gap={worst:+.3e} ({flag}) at graph {where[0]} K1={where[1]} K2={where[2]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
