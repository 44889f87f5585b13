"""Compare cascade cardinality with the exhaustive minimum.

    python scripts/minimality_sweep.py [--instances 200] [--max-strata 8] [--seed 0]

Each instance plants one tie of a random kind (propensity, outcome pair, or
cascade) at random strata. Instances where the cascade stops above the
minimum are listed.
"""

from __future__ import annotations

import argparse
import sys
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from balscore.dgp import Plant, feasible_spec, realize
from balscore.oracle import exhaustive_min_cardinality
from balscore.stratification import cascade

KINDS = ("propensity", "outcome-both", "cascade")


@dataclass(frozen=True)
class Config:
    instances: int = 200
    max_strata: int = 8
    seed: int = 0


def plants_for(kind: str, idx: list[int]) -> list[Plant]:
    i, j, k = idx
    if kind == "propensity":
        return [Plant("propensity-tie", i, j)]
    if kind == "outcome-both":
        return [Plant("outcome1-tie", i, j), Plant("outcome0-tie", i, j)]
    return [Plant("cascade-tie", i, j, k)]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instances", type=int, default=Config.instances)
    parser.add_argument("--max-strata", type=int, default=Config.max_strata)
    parser.add_argument("--seed", type=int, default=Config.seed)
    args = parser.parse_args(argv)
    cfg = Config(args.instances, args.max_strata, args.seed)
    if not 3 <= cfg.max_strata <= 8:
        parser.error("--max-strata must be between 3 and 8")

    rng = np.random.default_rng(cfg.seed)
    tally: Counter = Counter()
    misses = []
    start = time.perf_counter()
    for t in range(cfg.instances):
        n = int(rng.integers(3, cfg.max_strata + 1))
        kind = KINDS[t % len(KINDS)]
        idx = [int(v) for v in rng.permutation(n)[:3]]
        spec = feasible_spec(n, cfg.seed * 100_000 + 1000 * t, plants_for(kind, idx))
        dist = realize(spec)
        best, _ = exhaustive_min_cardinality(dist)
        got = len(cascade(dist)[0].target)
        tally[kind, got == best] += 1
        if got != best:
            misses.append((kind, spec.seed, got, best))
    for kind in KINDS:
        print(f"{kind:<13} {tally[kind, True]} match, {tally[kind, False]} above minimum")
    for miss in misses:
        print("  miss:", miss)
    print(f"{time.perf_counter() - start:.2f} s")
    return 0 if not misses else 1


if __name__ == "__main__":
    sys.exit(main())
