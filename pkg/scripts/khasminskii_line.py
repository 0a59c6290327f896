"""Build a Khas'minskii potential on the unit-weight line and print its stages.

Emits the per-stage search table and, with ``--csv``, the radial profile
``r, kappa(r)`` for plotting.
"""
from __future__ import annotations

import argparse
import time

from pgraph import FamilySpec, generate, khasminskii_potential


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--stages", type=int, default=4)
    ap.add_argument("--truncation", type=int, default=400)
    ap.add_argument("--csv", action="store_true")
    args = ap.parse_args(argv)
    G = generate(FamilySpec("line", {}))
    t0 = time.perf_counter()
    run = khasminskii_potential(G, [0], args.p, args.stages, args.truncation)
    dt = time.perf_counter() - t0
    if args.csv:
        print("\n".join(run.radial_rows(G.radius)))
        return 0 if run.complete else 2
    print(f"line p={args.p} truncation={args.truncation} complete={run.complete} ({dt:.2f}s)")
    for st in run.stages:
        print(f"  stage {st.n}: j={st.j:<5} radius={st.radius:<5} sup change={st.sup_change:.3e} "
              f"(< {2.0 ** (-st.n - 1):.3e})  gradient increment={st.gradient_increment:.3e} "
              f"(< {2.0 ** -st.n:.3e})")
    if run.diagnostic:
        print("  " + run.diagnostic)
    return 0 if run.complete else 2


if __name__ == "__main__":
    raise SystemExit(main())
