"""Coverage of the stratified estimate on sampled data.

    python scripts/sampling_study.py [--spec configs/propensity_tie.json] [--n 100000] [--seeds 20]

Draws datasets from a generator spec, estimates the effect on each, and
reports how often the estimate lands within k delta-method standard errors
of the exact effect.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from balscore.dgp import load_spec, realize, sample
from balscore.estimation import ate_stratified
from balscore.tabular import Distribution, from_records, to_distribution

DEFAULT_SPEC = Path(__file__).parent / "configs" / "propensity_tie.json"


@dataclass(frozen=True)
class Config:
    spec: str = str(DEFAULT_SPEC)
    n: int = 100_000
    seeds: int = 20
    k: float = 3.0


def standard_error(dist: Distribution, n: int) -> float:
    # between-strata term plus within-stratum binomial terms
    tau = float(ate_stratified(dist).ate)
    between = within = 0.0
    for i in range(len(dist.x_space)):
        px = float(dist.p_x(i))
        arm = [float(dist.p_xz(i, z)) for z in (0, 1)]
        m = [float(dist.p[i][z][1]) / arm[z] for z in (0, 1)]
        between += px * (m[1] - m[0]) ** 2
        within += px**2 * sum(m[z] * (1 - m[z]) / (n * arm[z]) for z in (0, 1))
    return math.sqrt((between - tau**2) / n + within)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--spec", default=Config.spec)
    parser.add_argument("--n", type=int, default=Config.n)
    parser.add_argument("--seeds", type=int, default=Config.seeds)
    parser.add_argument("--k", type=float, default=Config.k)
    cfg = Config(**vars(parser.parse_args(argv)))

    dist = realize(load_spec(cfg.spec))
    tau = float(ate_stratified(dist).ate)
    se = standard_error(dist, cfg.n)
    z = np.array([
        (float(ate_stratified(to_distribution(from_records(sample(dist, cfg.n, s)))).ate) - tau) / se
        for s in range(cfg.seeds)
    ])
    inside = int(np.sum(np.abs(z) <= cfg.k))
    print(f"tau = {tau:.6f}, SE = {se:.6f} at n = {cfg.n}")
    print(f"z mean {z.mean():+.3f}, z sd {z.std(ddof=1):.3f}")
    print(f"{inside}/{cfg.seeds} within {cfg.k:g} SE")
    return 0


if __name__ == "__main__":
    sys.exit(main())
