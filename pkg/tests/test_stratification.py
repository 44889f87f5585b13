from fractions import Fraction

import pytest
from hypothesis import given

from balscore.errors import InvalidPartition, InvalidPlan
from balscore.oracle import factorization_check
from balscore.scores import (
    OutcomeScorePair,
    ScorePartition,
    group_by_outcome,
    group_by_propensity,
    outcome_scores,
    propensity,
)
from balscore.stratification import (
    MergePlan,
    apply_plan,
    cascade,
    check_balance,
    compose,
    dual_plan,
    identity_plan,
    plan_from_partition,
)
from balscore.tabular import CategoricalSpace, ContingencyTable, Distribution, table_from_distribution

from conftest import positive_distributions, positive_tables

F = Fraction
ABC = CategoricalSpace(("a", "b", "c"))


def partition(*blocks):
    return ScorePartition(tuple(tuple(b) for b in blocks), tuple(() for _ in blocks))


def test_plan_from_partition_names_blocks():
    plan = plan_from_partition(partition("ab", "c"), ABC, "propensity")
    assert plan.target.labels == ("a+b", "c")
    assert [plan.target_of(x) for x in "abc"] == ["a+b", "a+b", "c"]
    assert plan.provenance == ("propensity", None)


def test_plan_from_identity_partition():
    plan = plan_from_partition(partition("a", "b", "c"), ABC)
    assert plan.target == ABC and plan.is_identity()


def test_plan_from_single_block():
    plan = plan_from_partition(partition("cab"), ABC)
    assert plan.target.labels == ("a+b+c",) and plan.target.cardinality == 1


def test_plan_from_partition_mismatch():
    with pytest.raises(InvalidPartition):
        plan_from_partition(partition("ab"), ABC)
    with pytest.raises(InvalidPartition):
        plan_from_partition(partition("ab", "bc"), ABC)


def test_merge_plan_must_be_onto():
    with pytest.raises(InvalidPlan):
        MergePlan(ABC, CategoricalSpace(("u", "v")), (0, 0, 0), (None, None))


def _table(counts):
    return ContingencyTable.from_counts(counts, labels=["a", "b", "c"])


def test_apply_plan_sums_cells():
    table = _table({("a", 1, 1): 2, ("b", 1, 1): 3, ("c", 0, 0): 1})
    merged = apply_plan(table, plan_from_partition(partition("ab", "c"), ABC))
    assert merged.n("a+b", 1, 1) == 5
    assert merged.total == table.total


def test_apply_identity_plan():
    table = _table({("a", 1, 1): 2, ("b", 0, 1): 3, ("c", 0, 0): 1})
    assert apply_plan(table, identity_plan(ABC)) == table


def test_apply_full_merge():
    table = _table({("a", 1, 1): 2, ("b", 1, 1): 3, ("c", 0, 0): 1, ("c", 1, 0): 4})
    merged = apply_plan(table, plan_from_partition(partition("abc"), ABC))
    assert merged.counts == (((1, 0), (4, 5)),)


def test_apply_plan_space_mismatch():
    table = _table({("a", 1, 1): 1})
    with pytest.raises(InvalidPlan):
        apply_plan(table, identity_plan(CategoricalSpace(("a", "b"))))


@given(positive_tables(max_strata=5))
def test_apply_plan_preserves_margins(table):
    labels = table.x_space.labels
    plan = plan_from_partition(partition(labels[: len(labels) // 2 + 1], *labels[len(labels) // 2 + 1:]), table.x_space)
    merged = apply_plan(table, plan)
    assert merged.total == table.total
    for z in (0, 1):
        for y in (0, 1):
            assert sum(r[z][y] for r in merged.counts) == sum(r[z][y] for r in table.counts)


def test_check_balance_clean_for_equal_propensity():
    dist = Distribution.from_factors(
        ["a", "b", "c"], [F(1, 5), F(2, 5), F(2, 5)], [F(1, 3), F(1, 3), F(3, 4)],
        [(F(1, 2), F(1, 4)), (F(1, 3), F(2, 3)), (F(1, 5), F(4, 5))],
    )
    plan = plan_from_partition(group_by_propensity(propensity(dist)), dist.x_space, "propensity")
    assert plan.target.labels == ("a+b", "c")
    assert check_balance(dist, plan).clean
    assert factorization_check(dist, "X ⊥ Z | B", {x: plan.target_of(x) for x in "abc"}).holds


def test_check_balance_flags_unequal_propensity():
    dist = Distribution.from_factors(
        ["a", "b", "c"], [F(1, 5), F(2, 5), F(2, 5)], [F(1, 3), F(1, 2), F(3, 4)],
        [(F(1, 2), F(1, 4))] * 3,
    )
    plan = plan_from_partition(partition("ab", "c"), dist.x_space)
    report = check_balance(dist, plan)
    assert {(v.stratum, v.z) for v in report.violations} == {("a", 0), ("a", 1), ("b", 0), ("b", 1)}
    # p(a, Z=1 | a+b) = (1/5 * 1/3) / (3/5) = 1/9; p(a | a+b) p(Z=1 | a+b) = 1/3 * 4/9
    v = next(v for v in report.violations if (v.stratum, v.z) == ("a", 1))
    assert (v.joint, v.product) == (F(1, 9), F(4, 27))


def test_check_balance_identity_plan():
    dist = Distribution.from_factors(["a", "b"], [F(1, 2)] * 2, [F(1, 3), F(1, 2)], [(F(1, 2), F(1, 4))] * 2)
    assert check_balance(dist, identity_plan(dist.x_space)).clean


@given(positive_distributions(coarse=True))
def test_propensity_plans_always_balance(dist):
    plan = plan_from_partition(group_by_propensity(propensity(dist)), dist.x_space, "propensity")
    assert check_balance(dist, plan).clean


def cascade_instance():
    """Y independent of Z given X; a and b share a propensity, and the pooled
    stratum a+b then has the outcome probability of c.

    w = p(a) / p(a or b) = 2/5, so q_b solves 2/5 * 1/5 + 3/5 * q_b = 1/2: q_b = 7/10.
    """
    px = [F(1, 5), F(3, 10), F(1, 4), F(1, 4)]
    pz = [F(1, 3), F(1, 3), F(1, 2), F(2, 3)]
    q = [F(1, 5), F(7, 10), F(1, 2), F(9, 10)]
    return Distribution.from_factors(["a", "b", "c", "d"], px, pz, [(v, v) for v in q])


def test_cascade_instance_oracle():
    dist = cascade_instance()
    pooled = sum(dist.p[i][z][1] for i in (0, 1) for z in (0, 1)) / (dist.p_x(0) + dist.p_x(1))
    assert pooled == F(1, 2) == outcome_scores(dist)["c"].p1


def test_cascade_two_step_merge():
    dist = cascade_instance()
    plan, log = cascade(dist)
    assert [s.kind for s in log] == ["propensity", "outcome-both"]
    assert [(s.n_before, s.n_after) for s in log] == [(4, 3), (3, 2)]
    assert plan.target.labels == ("a+b+c", "d")
    assert plan.provenance == ("propensity,outcome-both", None)
    b = {x: plan.target_of(x) for x in dist.x_space.labels}
    assert factorization_check(dist, "Y ⊥ Z | B", b).holds


def test_cascade_nothing_to_merge():
    dist = Distribution.from_factors(
        ["a", "b", "c"], [F(1, 3)] * 3, [F(1, 4), F(1, 2), F(3, 4)],
        [(F(1, 5), F(2, 5)), (F(1, 7), F(3, 7)), (F(1, 9), F(4, 9))],
    )
    plan, log = cascade(dist)
    assert plan.is_identity() and log == []


def test_cascade_full_pooling_by_propensity():
    dist = Distribution.from_factors(
        ["a", "b", "c"], [F(1, 3)] * 3, [F(1, 2)] * 3,
        [(F(1, 5), F(2, 5)), (F(1, 7), F(3, 7)), (F(1, 9), F(4, 9))],
    )
    plan, log = cascade(dist)
    assert len(plan.target) == 1 and len(log) == 1 and log[0].kind == "propensity"


def test_cascade_rejects_single_arm_steps():
    with pytest.raises(ValueError):
        cascade(cascade_instance(), policy=["outcome-treated"])


def test_cascade_reverse_policy():
    plan, log = cascade(cascade_instance(), policy=["outcome-both", "propensity"])
    assert len(plan.target) == 2


def _members_after(steps, source):
    members = {label: (label,) for label in source.labels}
    for step in steps:
        grouped: dict = {}
        for label in step.source.labels:
            grouped.setdefault(step.target_of(label), []).extend(members[label])
        members = {k: tuple(sorted(v)) for k, v in grouped.items()}
    return members


@given(positive_distributions(coarse=True))
def test_cascade_composition_matches_stepwise(dist):
    plan, log = cascade(dist)
    table = table_from_distribution(dist)
    stepwise = table
    for step in log:
        stepwise = apply_plan(stepwise, step.plan)
    direct = apply_plan(table, plan)
    members = _members_after([s.plan for s in log], dist.x_space)
    assert len(direct.x_space) == len(stepwise.x_space)
    for label in stepwise.x_space.labels:
        composed_label = plan.target_of(members[label][0])
        assert set(b for b in plan.blocks()[plan.target.index(composed_label)]) == set(members[label])
        assert stepwise.counts[stepwise.x_space.index(label)] == direct.counts[direct.x_space.index(composed_label)]


def test_compose_requires_matching_spaces():
    with pytest.raises(InvalidPlan):
        compose(identity_plan(ABC), identity_plan(CategoricalSpace(("a", "b"))))


def test_dual_plan_five_strata():
    scores = {
        "a": OutcomeScorePair(F(1, 10), F(1, 2)),
        "b": OutcomeScorePair(F(2, 10), F(1, 2)),
        "c": OutcomeScorePair(F(3, 10), F(6, 10)),
        "d": OutcomeScorePair(F(3, 10), F(7, 10)),
        "e": OutcomeScorePair(F(4, 10), F(8, 10)),
    }
    dual = dual_plan(scores)
    assert dual.treated_plan.target.labels == ("a+b", "c", "d", "e")
    assert dual.control_plan.target.labels == ("a", "b", "c+d", "e")
    assert dual.treated_plan.provenance[0] == "outcome-treated"
    assert dual.control_plan.provenance[2] == "outcome-control"
    # agrees with componentwise grouping
    assert group_by_outcome(scores, arm="treated_only").as_sets() == {frozenset(b) for b in ("ab", "c", "d", "e")}


def test_dual_plan_all_identical():
    scores = {k: OutcomeScorePair(F(1, 3), F(2, 3)) for k in "abc"}
    dual = dual_plan(scores)
    assert len(dual.treated_plan.target) == len(dual.control_plan.target) == 1


def test_dual_plan_all_distinct():
    scores = {k: OutcomeScorePair(F(i, 7), F(i + 3, 7)) for i, k in enumerate("abc")}
    dual = dual_plan(scores)
    assert dual.treated_plan.is_identity() and dual.control_plan.is_identity()


def test_from_mapping_round_trip():
    plan = plan_from_partition(partition("ac", "b"), ABC, "propensity")
    rebuilt = MergePlan.from_mapping(ABC.labels, {x: plan.target_of(x) for x in "abc"}, plan.target.labels, plan.provenance)
    assert rebuilt == plan
