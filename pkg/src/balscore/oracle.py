"""Brute-force checks that share no code with the estimators or the merge machinery.

Everything here works directly from raw cells of a table or distribution, so
agreement with the main code paths is evidence rather than tautology.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Hashable, Iterator, Mapping, Sequence

from .errors import PositivityViolation, TooManyStrata
from .tabular import ContingencyTable, Distribution

MAX_EXHAUSTIVE_STRATA = 8
VARIABLES = ("X", "Z", "Y", "B")


def brute_ate(table: ContingencyTable) -> Fraction:
    """sum_x [n(x,1,1)/n(x,1,.) - n(x,0,1)/n(x,0,.)] n(x,.,.)/N from raw counts."""
    total = 0
    for row in table.counts:
        total += row[0][0] + row[0][1] + row[1][0] + row[1][1]
    ate = Fraction(0)
    for label, row in zip(table.x_space.labels, table.counts):
        treated = row[1][0] + row[1][1]
        control = row[0][0] + row[0][1]
        if treated == 0:
            raise PositivityViolation(label, 1)
        if control == 0:
            raise PositivityViolation(label, 0)
        ate += (Fraction(row[1][1], treated) - Fraction(row[0][1], control)) * Fraction(treated + control, total)
    return ate


def iter_set_partitions(items: Sequence) -> Iterator[list[list]]:
    """Every set partition of ``items`` exactly once (Bell(n) of them)."""
    items = list(items)
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for sub in iter_set_partitions(rest):
        yield [[head]] + sub
        for k in range(len(sub)):
            yield sub[:k] + [[head] + sub[k]] + sub[k + 1:]


def exhaustive_min_cardinality(dist: Distribution) -> tuple[int, tuple[tuple[str, ...], ...]]:
    """Fewest strata reachable by pooling under exact score equalities.

    A pooled block is admissible when it is a single stratum, or it splits into
    two admissible parts that share either p(Z=1 | part) or both
    p(Y=1 | part, Z=0) and p(Y=1 | part, Z=1). Pooling equal values keeps
    them, so this covers every order of pairwise merges, including merges that
    only become possible after earlier ones. All set partitions are enumerated
    and the smallest one made of admissible blocks is returned with a witness.
    """
    labels = dist.x_space.labels
    n = len(labels)
    if n > MAX_EXHAUSTIVE_STRATA:
        raise TooManyStrata(f"{n} strata; exhaustive search is limited to {MAX_EXHAUSTIVE_STRATA}")
    cells = dist.p
    for label, row in zip(labels, cells):
        for z in (0, 1):
            if row[z][0] + row[z][1] == 0:
                raise PositivityViolation(label, z)

    def sums(mask: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        # p(B, Z=0), p(B, Z=0, Y=1), p(B, Z=1), p(B, Z=1, Y=1)
        c0 = c01 = c1 = c11 = Fraction(0)
        for i in range(n):
            if mask >> i & 1:
                c0 += cells[i][0][0] + cells[i][0][1]
                c01 += cells[i][0][1]
                c1 += cells[i][1][0] + cells[i][1][1]
                c11 += cells[i][1][1]
        return c0, c01, c1, c11

    stats: dict[int, tuple] = {}
    for mask in range(1, 1 << n):
        c0, c01, c1, c11 = sums(mask)
        stats[mask] = (c1 / (c0 + c1), (c01 / c0, c11 / c1))

    valid: dict[int, bool] = {}

    def admissible(mask: int) -> bool:
        if mask in valid:
            return valid[mask]
        if mask & (mask - 1) == 0:
            valid[mask] = True
            return True
        low = mask & -mask
        rest = mask ^ low
        ok = False
        sub = rest
        # splits A | B with the lowest member in A; B = mask ^ A non-empty
        while True:
            a = low | sub
            b = mask ^ a
            if b:
                same = stats[a][0] == stats[b][0] or stats[a][1] == stats[b][1]
                if same and admissible(a) and admissible(b):
                    ok = True
                    break
            if sub == 0:
                break
            sub = (sub - 1) & rest
        valid[mask] = ok
        return ok

    best = None
    for partition in iter_set_partitions(range(n)):
        if best is not None and len(partition) >= len(best):
            continue
        masks = [sum(1 << i for i in block) for block in partition]
        if all(admissible(m) for m in masks):
            best = partition
    witness = tuple(
        tuple(labels[i] for i in sorted(block)) for block in sorted(best, key=min)
    )
    return len(best), witness


@dataclass(frozen=True)
class FactorizationReport:
    claim: str
    holds: bool
    checked: int
    violations: tuple[dict, ...]


_CLAIM = re.compile(r"^\s*([A-Z])\s*(?:⊥|_\|\|_|indep)\s*([A-Z])\s*(?:\|\s*([A-Z ,]*))?$")


def parse_claim(claim: str) -> tuple[str, str, tuple[str, ...]]:
    """Parse ``"X ⊥ Z | B"`` (also ``_||_`` or ``indep``) into (left, right, given)."""
    m = _CLAIM.match(claim)
    if not m:
        raise ValueError(f"cannot parse independence claim {claim!r}")
    given = tuple(v for v in re.split(r"[ ,]+", m.group(3) or "") if v)
    names = (m.group(1), m.group(2), *given)
    for v in names:
        if v not in VARIABLES:
            raise ValueError(f"unknown variable {v!r}; use {VARIABLES}")
    return m.group(1), m.group(2), given


def factorization_check(
    dist: Distribution,
    claim: str | tuple[str, str, Sequence[str]],
    b: Mapping[str, Hashable] | None = None,
) -> FactorizationReport:
    """Verify a conditional independence among X, Z, Y and B = b(X) exactly.

    Uses the division-free form p(a, c, g) p(g) == p(a, g) p(c, g) at every
    configuration with p(g) > 0. ``b`` maps each stratum label to its block
    (any hashable) and is required when B appears in the claim.
    """
    if isinstance(claim, str):
        left, right, given = parse_claim(claim)
        text = claim
    else:
        left, right, given = claim[0], claim[1], tuple(claim[2])
        text = f"{left} ⊥ {right}" + (f" | {','.join(given)}" if given else "")
    involved = (left, right, *given)
    if "B" in involved and b is None:
        raise ValueError("claim mentions B but no block map was given")
    joint: dict[tuple, Fraction] = defaultdict(Fraction)
    for label, row in zip(dist.x_space.labels, dist.p):
        for z, y in product((0, 1), (0, 1)):
            value = {"X": label, "Z": z, "Y": y, "B": b[label] if b is not None else None}
            joint[tuple(value[v] for v in involved)] += row[z][y]

    def marginal(positions: Sequence[int]) -> dict[tuple, Fraction]:
        out: dict[tuple, Fraction] = defaultdict(Fraction)
        for key, p in joint.items():
            out[tuple(key[k] for k in positions)] += p
        return out

    g_pos = list(range(2, len(involved)))
    p_g = marginal(g_pos)
    p_ag = marginal([0, *g_pos])
    p_cg = marginal([1, *g_pos])
    left_values = sorted({k[0] for k in joint}, key=str)
    right_values = sorted({k[1] for k in joint}, key=str)
    violations = []
    checked = 0
    for g, pg in p_g.items():
        if pg == 0:
            continue
        for a, c in product(left_values, right_values):
            checked += 1
            lhs = joint.get((a, c, *g), Fraction(0)) * pg
            rhs = p_ag.get((a, *g), Fraction(0)) * p_cg.get((c, *g), Fraction(0))
            if lhs != rhs:
                violations.append({
                    left: a,
                    right: c,
                    "given": dict(zip(given, g)),
                    "p_joint": lhs / pg / pg,
                    "p_product": rhs / pg / pg,
                })
    return FactorizationReport(text, not violations, checked, tuple(violations))
