#!/usr/bin/env python3
"""Uniform-constant demo: dispersive, space-time, and inequality sweeps.

Runs the three estimate families across a lattice-spacing sweep and prints
one uniformity verdict per family: the max observed ratio may vary by at
most a factor 3 across spacings for the constants to count as h-uniform.

Usage: python3 scripts/estimate_sweeps_demo.py [--out DIR]
"""
from __future__ import annotations

import argparse
import math
from pathlib import Path

from lnls.corpus import continuum_profiles, lattice_stress_corpus
from lnls.estimates import (
    AdmissiblePair,
    StrichartzQuery,
    dispersive_uniformity,
    strichartz_sweep,
)
from lnls.lattice import Lattice
from lnls.records import uniformity_factor, write_csv
from lnls.spectral import inequality_sweep

THRESHOLD = 3.0


def verdict(name: str, records, out: Path) -> None:
    factor = uniformity_factor(records)
    ok = factor < THRESHOLD
    write_csv(records, out / f"{name}.csv")
    print(f"{name}: uniformity factor {factor:.3f} "
          f"(threshold {THRESHOLD:g}) -> {'PASS' if ok else 'FAIL'}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/sweeps", help="artifact directory")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    h_sweep = (math.pi / 8, math.pi / 16, math.pi / 32, math.pi / 64)

    for d in (1, 2):
        verdict(f"dispersive_d{d}", dispersive_uniformity(d, h_sweep), out)

    corpus = continuum_profiles(2, seed=5, n_random=2)
    for q, r in ((3, math.inf), (6, 4)):
        query = StrichartzQuery(pair=AdmissiblePair(q, r), epsilon=0.1, h_sweep=h_sweep)
        verdict(f"strichartz_q{q:g}_d2", strichartz_sweep(query, corpus), out)

    for kind in ("bernstein", "sobolev", "gagliardo_nirenberg"):
        records = []
        for m in (8, 16, 32, 64):
            stress = lattice_stress_corpus(Lattice(1, m), seed=3)
            records.extend(inequality_sweep(kind, stress, s=0.4, theta=0.5, epsilon=0.1))
        verdict(f"ineq_{kind}_d1", records, out)

    print(f"artifacts in {out}")


if __name__ == "__main__":
    main()
