"""Run the characterization suite over the example families and several p.

Prints one line per (family, p) with the verdict, the expected label where
one is known, and whether every certificate agreed.
"""
from __future__ import annotations

import argparse
import time

from pgraph import FamilySpec, SuiteConfig, generate, run_suite

FAMILY_MATRIX = [
    ("tree", {"d": 2}),
    ("antitree", {"s": "r+1"}),
    ("line", {"b": "1"}),
    ("line", {"b": "(n+1)^2"}),
    ("lattice", {"d": 2}),
    ("lattice", {"d": 3}),
    ("star", {"w": "0.5^k"}),
    ("wheel", {"w": "0.5^k", "rim": "1"}),
    ("starline", {"w": "0.5^k", "b": "1"}),
]
P_VALUES = [1.5, 2.0, 2.5, 3.0, 4.0]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--stages", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    bad = 0
    for fam, prm in FAMILY_MATRIX:
        for p in P_VALUES:
            G = generate(FamilySpec(fam, prm))
            t0 = time.perf_counter()
            rep = run_suite(G, p, SuiteConfig(stages=args.stages, seed=args.seed, strict=False))
            dt = time.perf_counter() - t0
            bad += not rep.consistent
            print(f"{G.name:32s} p={p:<4} verdict={rep.verdict.label:12s} "
                  f"expected={rep.expected or '-':10s} consistent={rep.consistent} ({dt:.1f}s)")
    print(f"contradictions: {bad}")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
