"""Synthetic distributions with planted score equalities, and seeded sampling.

Parameters follow the factorization p(x) p(z | x) p(y | x, z). A generator
spec lists ``planted`` ties; they are enforced when the spec is built:

``propensity-tie(i, j)``   copies p(Z=1|x_i) to x_j
``outcome1-tie(i, j)``     copies p(Y=1|x_i, Z=1) to x_j
``outcome0-tie(i, j)``     copies p(Y=1|x_i, Z=0) to x_j
``cascade-tie(i, j, k)``   ties the propensity of x_i and x_j, then solves
                           p(Y=1|x_j, z) so that the pooled stratum {x_i, x_j}
                           has the same outcome pair as x_k
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import InfeasiblePlant, InvalidValue
from .scores import group_by_outcome, group_by_propensity, outcome_scores, propensity
from .stratification import cascade
from .tabular import Distribution, Record, as_fraction, format_rational

PLANT_KINDS = ("propensity-tie", "outcome1-tie", "outcome0-tie", "cascade-tie")
DEFAULT_DENOMINATOR = 1000


@dataclass(frozen=True)
class Plant:
    kind: str
    i: int
    j: int
    k: int | None = None

    def __post_init__(self):
        if self.kind not in PLANT_KINDS:
            raise InvalidValue(f"unknown plant kind {self.kind!r}")
        if self.i == self.j:
            raise InvalidValue(f"{self.kind} needs two distinct strata")
        if self.kind == "cascade-tie":
            if self.k is None or self.k in (self.i, self.j):
                raise InvalidValue("cascade-tie needs a target stratum k distinct from i and j")
        elif self.k is not None:
            raise InvalidValue(f"{self.kind} takes no target stratum")


def default_labels(n: int) -> tuple[str, ...]:
    width = len(str(n - 1))
    return tuple(f"x{i:0{width}d}" for i in range(n))


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of a synthetic (X, Z, Y) distribution.

    ``py_given_xz[i]`` is (p(Y=1|x_i, Z=0), p(Y=1|x_i, Z=1)). Construction
    enforces the planted ties, so the stored parameters always satisfy them.
    """

    n_strata: int
    px: tuple[Fraction, ...]
    pz_given_x: tuple[Fraction, ...]
    py_given_xz: tuple[tuple[Fraction, Fraction], ...]
    planted: tuple[Plant, ...] = ()
    seed: int = 0
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        n = self.n_strata
        if n < 1:
            raise InvalidValue("n_strata must be positive")
        px = tuple(as_fraction(v) for v in self.px)
        pz = [as_fraction(v) for v in self.pz_given_x]
        py = [[as_fraction(v) for v in pair] for pair in self.py_given_xz]
        labels = tuple(self.labels) or default_labels(n)
        if not len(px) == len(pz) == len(py) == len(labels) == n:
            raise InvalidValue("every parameter vector needs n_strata entries")
        if any(len(pair) != 2 for pair in py):
            raise InvalidValue("py_given_xz entries must be (p(Y=1|x,Z=0), p(Y=1|x,Z=1)) pairs")
        if sum(px) != 1 or any(v <= 0 for v in px):
            raise InvalidValue("px must be positive and sum to 1")
        planted = tuple(p if isinstance(p, Plant) else Plant(**p) for p in self.planted)
        for plant in planted:
            for idx in (plant.i, plant.j, plant.k):
                if idx is not None and not 0 <= idx < n:
                    raise InvalidValue(f"plant {plant} refers to a stratum outside 0..{n - 1}")
        # copies first, then the mixture solves that depend on them
        for plant in sorted(planted, key=lambda p: p.kind == "cascade-tie"):
            i, j = plant.i, plant.j
            if plant.kind == "propensity-tie":
                pz[j] = pz[i]
            elif plant.kind == "outcome1-tie":
                py[j][1] = py[i][1]
            elif plant.kind == "outcome0-tie":
                py[j][0] = py[i][0]
            else:
                pz[j] = pz[i]
                w = px[i] / (px[i] + px[j])
                for z in (0, 1):
                    # pooled mean w*q_i + (1-w)*q_j must equal q_k
                    solved = (py[plant.k][z] - w * py[i][z]) / (1 - w)
                    if not 0 <= solved <= 1:
                        raise InfeasiblePlant(
                            f"{plant}: p(Y=1|x_{j}, Z={z}) would be {solved}, outside [0, 1]"
                        )
                    py[j][z] = solved
        if any(not 0 < v < 1 for v in pz):
            raise InvalidValue("pz_given_x entries must lie strictly inside (0, 1)")
        if any(not 0 <= v <= 1 for pair in py for v in pair):
            raise InvalidValue("py_given_xz entries must lie in [0, 1]")
        object.__setattr__(self, "px", px)
        object.__setattr__(self, "pz_given_x", tuple(pz))
        object.__setattr__(self, "py_given_xz", tuple(tuple(pair) for pair in py))
        object.__setattr__(self, "planted", planted)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "seed", int(self.seed))


def _distinct_rationals(rng: np.random.Generator, size: int, denominator: int) -> list[Fraction]:
    if size > denominator - 1:
        raise InvalidValue(f"cannot draw {size} distinct values with denominator {denominator}")
    picks = rng.choice(np.arange(1, denominator), size=size, replace=False)
    return [Fraction(int(k), denominator) for k in picks]


def random_spec(
    n_strata: int,
    seed: int,
    planted: Sequence[Plant] = (),
    denominator: int = DEFAULT_DENOMINATOR,
    y_independent_of_z: bool = False,
) -> GeneratorSpec:
    """Random parameters with no accidental ties, then the requested plants.

    Propensities are distinct across strata, and so are the treated and the
    control outcome probabilities, so exact grouping finds only planted ties.
    With ``y_independent_of_z`` each stratum has p(Y=1|x, Z=0) = p(Y=1|x, Z=1).
    """
    rng = np.random.default_rng(seed)
    weights = rng.integers(1, denominator, size=n_strata)
    total = int(weights.sum())
    px = [Fraction(int(w), total) for w in weights]
    pz = _distinct_rationals(rng, n_strata, denominator)
    q1 = _distinct_rationals(rng, n_strata, denominator)
    q0 = q1 if y_independent_of_z else _distinct_rationals(rng, n_strata, denominator)
    return GeneratorSpec(
        n_strata=n_strata,
        px=tuple(px),
        pz_given_x=tuple(pz),
        py_given_xz=tuple(zip(q0, q1)),
        planted=tuple(planted),
        seed=seed,
    )


def feasible_spec(
    n_strata: int,
    seed: int,
    planted: Sequence[Plant] = (),
    max_tries: int = 1000,
    **kwargs: Any,
) -> GeneratorSpec:
    """``random_spec`` at seed, seed+1, ... until the plants are satisfiable.

    Cascade ties solve for a probability that can fall outside [0, 1] for a
    given draw; the other plant kinds always succeed on the first seed.
    """
    for attempt in range(max_tries):
        try:
            return random_spec(n_strata, seed + attempt, planted, **kwargs)
        except InfeasiblePlant:
            continue
    raise InfeasiblePlant(f"no feasible draw in seeds {seed}..{seed + max_tries - 1}")


def realize(spec: GeneratorSpec) -> Distribution:
    return Distribution.from_factors(spec.labels, spec.px, spec.pz_given_x, spec.py_given_xz)


def sample(dist: Distribution, n: int, seed: int) -> list[Record]:
    """n i.i.d. records drawn from ``dist``; the same seed gives the same list."""
    if n < 1:
        raise InvalidValue(f"sample size must be at least 1, got {n}")
    probs = dist.to_array().ravel()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(probs.size, size=n, p=probs)
    labels = dist.x_space.labels
    cells = [(labels[c // 4], (c // 2) % 2, c % 2) for c in range(probs.size)]
    return [cells[c] for c in draws.tolist()]


def audit_plants(spec: GeneratorSpec, dist: Distribution | None = None) -> list[dict[str, Any]]:
    """Check every planted tie through the score groupings of the realized distribution."""
    dist = dist if dist is not None else realize(spec)
    labels = spec.labels
    rows = []
    for plant in spec.planted:
        members = [labels[plant.i], labels[plant.j]]
        if plant.kind == "propensity-tie":
            partition = group_by_propensity(propensity(dist))
        elif plant.kind == "outcome1-tie":
            partition = group_by_outcome(outcome_scores(dist), arm="treated_only")
        elif plant.kind == "outcome0-tie":
            partition = group_by_outcome(outcome_scores(dist), arm="control_only")
        else:
            members.append(labels[plant.k])
            plan, _ = cascade(dist)
            partition = None
        if partition is not None:
            realized = set(members) <= set(partition.block_of(members[0]))
        else:
            realized = len({plan.target_of(m) for m in members}) == 1
        row = {"kind": plant.kind, "strata": members, "realized": realized}
        rows.append(row)
    return rows


def _parse_plants(raw: Sequence[dict]) -> tuple[Plant, ...]:
    plants = []
    for entry in raw:
        if not isinstance(entry, dict) or "kind" not in entry:
            raise InvalidValue(f"plant entries need a 'kind': {entry!r}")
        unknown = set(entry) - {"kind", "i", "j", "k"}
        if unknown:
            raise InvalidValue(f"unknown plant fields {sorted(unknown)}")
        plants.append(Plant(entry["kind"], int(entry["i"]), int(entry["j"]), entry.get("k")))
    return tuple(plants)


def spec_from_dict(obj: dict[str, Any]) -> GeneratorSpec:
    """Read a spec; any of px / pz_given_x / py_given_xz left out is drawn at random from ``seed``."""
    if not isinstance(obj, dict):
        raise InvalidValue("generator spec must be a JSON object")
    known = {"n_strata", "labels", "px", "pz_given_x", "py_given_xz", "planted", "seed",
             "denominator", "y_independent_of_z"}
    unknown = set(obj) - known
    if unknown:
        raise InvalidValue(f"unknown generator spec fields {sorted(unknown)}")
    n = obj.get("n_strata")
    if n is None:
        for key in ("labels", "px", "pz_given_x", "py_given_xz"):
            if key in obj:
                n = len(obj[key])
                break
    if not isinstance(n, int) or isinstance(n, bool):
        raise InvalidValue("n_strata must be an integer")
    seed = int(obj.get("seed", 0))
    planted = _parse_plants(obj.get("planted", []))
    base = random_spec(
        n,
        seed,
        denominator=int(obj.get("denominator", DEFAULT_DENOMINATOR)),
        y_independent_of_z=bool(obj.get("y_independent_of_z", False)),
    )
    py = obj.get("py_given_xz")
    return replace(
        base,
        px=tuple(as_fraction(v) for v in obj["px"]) if "px" in obj else base.px,
        pz_given_x=tuple(as_fraction(v) for v in obj["pz_given_x"]) if "pz_given_x" in obj else base.pz_given_x,
        py_given_xz=tuple(tuple(as_fraction(v) for v in pair) for pair in py) if py is not None else base.py_given_xz,
        planted=planted,
        labels=tuple(obj.get("labels", ())),
    )


def load_spec(path: str | Path) -> GeneratorSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidValue(f"{path}: invalid JSON ({exc.msg})", exc.lineno) from None
    return spec_from_dict(obj)


def spec_to_dict(spec: GeneratorSpec) -> dict[str, Any]:
    plants = []
    for p in spec.planted:
        entry = {"kind": p.kind, "i": p.i, "j": p.j}
        if p.k is not None:
            entry["k"] = p.k
        plants.append(entry)
    return {
        "n_strata": spec.n_strata,
        "labels": list(spec.labels),
        "px": [format_rational(v) for v in spec.px],
        "pz_given_x": [format_rational(v) for v in spec.pz_given_x],
        "py_given_xz": [[format_rational(v) for v in pair] for pair in spec.py_given_xz],
        "planted": plants,
        "seed": spec.seed,
    }
