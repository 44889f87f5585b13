"""Merging confounder strata.

A MergePlan is an onto relabeling of the strata of X into a coarser variable.
Plans are built from ScorePartitions, applied to tables or distributions by
summing cells, and can be chained by ``cascade``, which re-scores the merged
distribution after every merge because pooling strata mixes their
conditionals and may create new equalities.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, TypeVar

from .errors import InvalidPartition, InvalidPlan, PositivityViolation
from .scores import (
    OutcomeScorePair,
    ScorePartition,
    group_by_outcome,
    group_by_propensity,
    outcome_scores,
    propensity,
)
from .tabular import CategoricalSpace, ContingencyTable, Distribution, Number

PROVENANCE_KINDS = ("propensity", "outcome-both", "outcome-treated", "outcome-control", "user")
CASCADE_KINDS = ("propensity", "outcome-both")
DEFAULT_POLICY = ("propensity", "outcome-both")

T = TypeVar("T", ContingencyTable, Distribution)


@dataclass(frozen=True)
class MergePlan:
    """Onto map from ``source`` strata to ``target`` strata.

    ``assignment[i]`` is the target index of source stratum ``i``.
    ``provenance[j]`` records which score equality justified target block ``j``
    (None for a block holding a single source stratum).
    """

    source: CategoricalSpace
    target: CategoricalSpace
    assignment: tuple[int, ...]
    provenance: tuple[str | None, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if len(self.assignment) != len(self.source):
            raise InvalidPlan("assignment must map every source stratum")
        if set(self.assignment) != set(range(len(self.target))):
            raise InvalidPlan("assignment must be onto the target space")
        if len(self.provenance) != len(self.target):
            raise InvalidPlan("need one provenance entry per target stratum")

    def blocks(self) -> tuple[tuple[str, ...], ...]:
        """Source labels grouped per target stratum, in target order."""
        members: list[list[str]] = [[] for _ in self.target.labels]
        for i, j in enumerate(self.assignment):
            members[j].append(self.source.labels[i])
        return tuple(tuple(m) for m in members)

    def target_of(self, label: str) -> str:
        return self.target.labels[self.assignment[self.source.index(label)]]

    def is_identity(self) -> bool:
        return len(self.target) == len(self.source)

    @classmethod
    def from_mapping(
        cls,
        source: Sequence[str],
        mapping: Mapping[str, str],
        target: Sequence[str] | None = None,
        provenance: Sequence[str | None] | None = None,
    ) -> "MergePlan":
        """Build from ``{source label: target label}``, e.g. a hand-written plan file."""
        source_space = CategoricalSpace(tuple(source))
        if set(mapping) != set(source_space.labels):
            raise InvalidPlan("mapping keys must be exactly the source strata")
        if target is None:
            target = []
            for label in source_space.labels:
                if mapping[label] not in target:
                    target.append(mapping[label])
        target_space = CategoricalSpace(tuple(target))
        try:
            assignment = tuple(target_space.index(mapping[label]) for label in source_space.labels)
        except KeyError as exc:
            raise InvalidPlan(f"mapping refers to an unknown target stratum: {exc}") from None
        if provenance is None:
            sizes = [assignment.count(j) for j in range(len(target_space))]
            provenance = ["user" if s > 1 else None for s in sizes]
        return cls(source_space, target_space, assignment, tuple(provenance))


@dataclass(frozen=True)
class DualPlan:
    """Separate stratifications for the treated and the control arm.

    The two plans are deliberately kept apart: together they do not define a
    single coarsened confounder.
    """

    treated_plan: MergePlan
    control_plan: MergePlan

    def __post_init__(self):
        if self.treated_plan.source != self.control_plan.source:
            raise InvalidPlan("treated and control plans must share a source space")


def _block_label(members: Sequence[str]) -> str:
    return "+".join(sorted(members))


def plan_from_partition(
    partition: ScorePartition, source: CategoricalSpace, kind: str = "user"
) -> MergePlan:
    """One target stratum per block, labelled by its sorted members joined with "+".

    Target strata are ordered by the position of their first member in ``source``.
    """
    if kind not in PROVENANCE_KINDS:
        raise ValueError(f"unknown provenance kind {kind!r}")
    seen = [label for block in partition.blocks for label in block]
    if len(seen) != len(set(seen)) or set(seen) != set(source.labels) or not all(partition.blocks):
        raise InvalidPartition("partition blocks must be non-empty, disjoint and cover the source space")
    blocks = sorted(
        (sorted(block, key=source.index) for block in partition.blocks),
        key=lambda b: source.index(b[0]),
    )
    target = CategoricalSpace(tuple(_block_label(b) for b in blocks))
    where = {label: j for j, block in enumerate(blocks) for label in block}
    assignment = tuple(where[label] for label in source.labels)
    provenance = tuple(kind if len(b) > 1 else None for b in blocks)
    return MergePlan(source, target, assignment, provenance)


def identity_plan(space: CategoricalSpace) -> MergePlan:
    return MergePlan(space, space, tuple(range(len(space))), (None,) * len(space))


def compose(first: MergePlan, second: MergePlan) -> MergePlan:
    """The plan equivalent to applying ``first`` and then ``second``.

    Target strata are relabelled from the original source labels, so the result
    is the same as building a plan directly from the final partition. Provenance
    lists every step kind involved in a block, in order.
    """
    if second.source != first.target:
        raise InvalidPlan("second plan must start where the first one ends")
    final = [second.assignment[j] for j in first.assignment]
    groups: dict[int, list[int]] = {}
    for i, j in enumerate(final):
        groups.setdefault(j, []).append(i)
    blocks = sorted(groups.values(), key=lambda m: m[0])
    labels = first.source.labels
    target = CategoricalSpace(tuple(_block_label([labels[i] for i in b]) for b in blocks))
    where = {i: k for k, b in enumerate(blocks) for i in b}
    provenance = []
    for b in blocks:
        kinds: list[str] = []
        for i in b:
            kind = first.provenance[first.assignment[i]]
            if kind is not None:
                kinds.extend(k for k in kind.split(",") if k not in kinds)
        kind = second.provenance[final[b[0]]]
        if kind is not None:
            kinds.extend(k for k in kind.split(",") if k not in kinds)
        provenance.append(",".join(kinds) if len(b) > 1 else None)
    return MergePlan(first.source, target, tuple(where[i] for i in range(len(labels))), tuple(provenance))


def apply_plan(data: T, plan: MergePlan) -> T:
    """Sum the cells of merged strata. Works on tables and distributions alike."""
    if data.x_space != plan.source:
        raise InvalidPlan(
            f"plan source {plan.source.labels} does not match data strata {data.x_space.labels}"
        )
    cells = data.counts if isinstance(data, ContingencyTable) else data.p
    zero = 0 if isinstance(data, ContingencyTable) else Fraction(0)
    merged = [[[zero, zero], [zero, zero]] for _ in plan.target.labels]
    for i, j in enumerate(plan.assignment):
        for z in (0, 1):
            for y in (0, 1):
                merged[j][z][y] += cells[i][z][y]
    return type(data)(plan.target, merged)


@dataclass(frozen=True)
class BalanceViolation:
    stratum: str
    z: int
    block: str
    joint: Fraction  # p(X=x, Z=z | B)
    product: Fraction  # p(X=x | B) p(Z=z | B)


@dataclass(frozen=True)
class BalanceReport:
    violations: tuple[BalanceViolation, ...]

    @property
    def clean(self) -> bool:
        return not self.violations


def check_balance(dist: Distribution, plan: MergePlan) -> BalanceReport:
    """Check X independent of Z given the merged stratum, cell by cell."""
    if dist.x_space != plan.source:
        raise InvalidPlan("plan source does not match distribution strata")
    violations = []
    for j, block in enumerate(plan.blocks()):
        p_b = sum((dist.p_x(x) for x in block), Fraction(0))
        if p_b == 0:
            raise PositivityViolation(plan.target.labels[j])
        for z in (0, 1):
            p_bz = sum((dist.p_xz(x, z) for x in block), Fraction(0)) / p_b
            for x in block:
                joint = dist.p_xz(x, z) / p_b
                product = dist.p_x(x) / p_b * p_bz
                if joint != product:
                    violations.append(BalanceViolation(x, z, plan.target.labels[j], joint, product))
    return BalanceReport(tuple(violations))


def score_partition(dist: Distribution, kind: str, epsilon: Number | None = None) -> ScorePartition:
    if kind == "propensity":
        return group_by_propensity(propensity(dist), epsilon)
    arm = {"outcome-both": "both", "outcome-treated": "treated_only", "outcome-control": "control_only"}
    if kind in arm:
        return group_by_outcome(outcome_scores(dist), epsilon, arm[kind])
    raise ValueError(f"unknown grouping kind {kind!r}")


@dataclass(frozen=True)
class CascadeStep:
    kind: str
    plan: MergePlan  # from the strata current at this step to the merged ones
    n_before: int
    n_after: int


def cascade(
    dist: Distribution,
    policy: Sequence[str] = DEFAULT_POLICY,
    epsilon: Number | None = None,
) -> tuple[MergePlan, list[CascadeStep]]:
    """Apply the grouping steps of ``policy`` in order, re-scoring after each merge,
    until a whole pass merges nothing.

    Returns the composed plan from the original strata and the log of merging
    steps (steps that found nothing to merge are not logged).
    """
    for kind in policy:
        if kind not in CASCADE_KINDS:
            raise ValueError(f"cascade steps must be in {CASCADE_KINDS}, got {kind!r}")
    n = len(dist.x_space)
    current = dist
    composed = identity_plan(dist.x_space)
    log: list[CascadeStep] = []
    merged = True
    while merged:
        merged = False
        for kind in policy:
            partition = score_partition(current, kind, epsilon)
            if partition.is_identity():
                continue
            step = plan_from_partition(partition, current.x_space, kind)
            log.append(CascadeStep(kind, step, len(step.source), len(step.target)))
            current = apply_plan(current, step)
            composed = compose(composed, step)
            merged = True
    assert len(log) < max(n, 2), "each merge removes a stratum, so fewer than n merges are possible"
    return composed, log


def dual_plan(scores: Mapping[str, OutcomeScorePair], epsilon: Number | None = None) -> DualPlan:
    """Treated arm pooled on p(Y=1|Z=1, x), control arm on p(Y=1|Z=0, x)."""
    space = CategoricalSpace(tuple(scores))
    treated = group_by_outcome(scores, epsilon, "treated_only")
    control = group_by_outcome(scores, epsilon, "control_only")
    return DualPlan(
        plan_from_partition(treated, space, "outcome-treated"),
        plan_from_partition(control, space, "outcome-control"),
    )
