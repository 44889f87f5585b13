"""Per-stratum balancing scores and the partitions of strata they induce.

Two scores are computed from a Distribution:

* the propensity score L(x) = p(Z=1 | X=x);
* the outcome score pair (p(Y=1 | Z=0, x), p(Y=1 | Z=1, x)).

Strata sharing a score value can be pooled without changing the average
treatment effect. ``group_scores`` turns any score map into a partition, either
by exact equality or by single-linkage within a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence, Union

from .errors import PositivityViolation
from .tabular import Distribution, Number, as_fraction

ARMS = ("both", "treated_only", "control_only")


class OutcomeScorePair(NamedTuple):
    p0: Fraction  # p(Y=1 | Z=0, x)
    p1: Fraction  # p(Y=1 | Z=1, x)


Score = Union[Fraction, OutcomeScorePair, tuple]
PropensityMap = dict[str, Fraction]


@dataclass(frozen=True)
class ScorePartition:
    """Disjoint blocks of stratum labels, each with the distinct score values found in it.

    In exact mode every witness has one entry; under a tolerance a block may
    hold several nearby values.
    """

    blocks: tuple[tuple[str, ...], ...]
    witness: tuple[tuple[Score, ...], ...]

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def block_of(self, label: str) -> tuple[str, ...]:
        for block in self.blocks:
            if label in block:
                return block
        raise KeyError(label)

    def as_sets(self) -> set[frozenset[str]]:
        return {frozenset(b) for b in self.blocks}

    def is_identity(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def refines(self, other: "ScorePartition") -> bool:
        """True when every block of ``self`` lies inside a single block of ``other``."""
        coarse = {label: i for i, block in enumerate(other.blocks) for label in block}
        return all(len({coarse[label] for label in block}) == 1 for block in self.blocks)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1


def propensity(dist: Distribution) -> PropensityMap:
    out = {}
    for i, label in enumerate(dist.x_space.labels):
        px = dist.p_x(i)
        if px == 0:
            raise PositivityViolation(label)
        out[label] = dist.p_xz(i, 1) / px
    return out


def outcome_scores(dist: Distribution) -> dict[str, OutcomeScorePair]:
    out = {}
    for i, label in enumerate(dist.x_space.labels):
        pair = []
        for z in (0, 1):
            pxz = dist.p_xz(i, z)
            if pxz == 0:
                raise PositivityViolation(label, z)
            pair.append(dist.p[i][z][1] / pxz)
        out[label] = OutcomeScorePair(*pair)
    return out


def _coerce(value) -> Score:
    if isinstance(value, tuple):
        coerced = tuple(as_fraction(v) for v in value)
        return OutcomeScorePair(*coerced) if isinstance(value, OutcomeScorePair) else coerced
    return as_fraction(value)


def _distance(a: Score, b: Score) -> Fraction:
    # Chebyshev distance; for scalars this is |a - b|
    if isinstance(a, tuple):
        return max(abs(u - v) for u, v in zip(a, b))
    return abs(a - b)


def group_scores(scores: Mapping[str, Number | Sequence[Number]], epsilon: Number | None = None) -> ScorePartition:
    """Partition strata by their score values.

    With ``epsilon=None`` blocks are classes of identical values. Otherwise two
    strata are linked when their (Chebyshev) distance is at most ``epsilon``,
    ties included, and blocks are the connected components of that relation
    (single linkage). Block order follows the first appearance of a member in
    ``scores``; members keep their order too.
    """
    labels = list(scores)
    values = [_coerce(scores[label]) for label in labels]
    uf = UnionFind(len(labels))
    if epsilon is None:
        first: dict = {}
        for i, v in enumerate(values):
            uf.union(first.setdefault(v, i), i)
    else:
        eps = as_fraction(epsilon)
        if eps < 0:
            raise ValueError(f"epsilon must be non-negative, got {epsilon}")
        if values and not isinstance(values[0], tuple):
            # scalars: chaining neighbours in sorted order is single linkage
            order = sorted(range(len(values)), key=values.__getitem__)
            for a, b in zip(order, order[1:]):
                if values[b] - values[a] <= eps:
                    uf.union(a, b)
        else:
            for i in range(len(values)):
                for j in range(i + 1, len(values)):
                    if _distance(values[i], values[j]) <= eps:
                        uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(len(labels)):
        groups.setdefault(uf.find(i), []).append(i)
    blocks, witness = [], []
    for members in sorted(groups.values(), key=lambda m: m[0]):
        blocks.append(tuple(labels[i] for i in members))
        distinct = []
        for i in members:
            if values[i] not in distinct:
                distinct.append(values[i])
        witness.append(tuple(sorted(distinct)))
    return ScorePartition(tuple(blocks), tuple(witness))


def group_by_propensity(L: Mapping[str, Number], epsilon: Number | None = None) -> ScorePartition:
    return group_scores(L, epsilon)


def group_by_outcome(
    scores: Mapping[str, OutcomeScorePair],
    epsilon: Number | None = None,
    arm: str = "both",
) -> ScorePartition:
    """Group on the full pair (``arm="both"``) or on a single component.

    ``treated_only`` compares p(Y=1|Z=1, x); ``control_only`` compares
    p(Y=1|Z=0, x).
    """
    if arm == "both":
        return group_scores({k: OutcomeScorePair(*v) for k, v in scores.items()}, epsilon)
    if arm == "treated_only":
        return group_scores({k: v[1] for k, v in scores.items()}, epsilon)
    if arm == "control_only":
        return group_scores({k: v[0] for k, v in scores.items()}, epsilon)
    raise ValueError(f"arm must be one of {ARMS}, got {arm!r}")
