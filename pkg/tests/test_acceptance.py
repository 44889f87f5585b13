"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` to see the lines
inline; they are also written to the terminal when output is captured.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from balscore.dgp import Plant, feasible_spec, random_spec, realize, sample
from balscore.estimation import ate_do, ate_dual_stratified, ate_float, ate_ipw, ate_stratified
from balscore.oracle import brute_ate, exhaustive_min_cardinality, factorization_check
from balscore.scores import group_by_outcome, group_by_propensity, group_scores, outcome_scores, propensity
from balscore.stratification import apply_plan, cascade, dual_plan, plan_from_partition
from balscore.tabular import CategoricalSpace, ContingencyTable, Distribution, from_records, to_distribution

F = Fraction


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, detail):
        line = f"[acceptance {number}] {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        with capsys.disabled():
            print("\n" + line)
        return passed

    return emit


def as_map(plan):
    return {x: plan.target_of(x) for x in plan.source.labels}


def planted_instances(count, seed0=0):
    """Specs cycling through propensity, outcome-both and dual-arm plants.

    Strata are shuffled per instance so ties are not always between neighbours.
    """
    rng = np.random.default_rng(seed0)
    out = []
    for t in range(count):
        n = int(rng.integers(3, 9))
        i, j, k = (int(v) for v in rng.permutation(n)[:3])
        kind = ("propensity", "outcome-both", "dual")[t % 3]
        if kind == "propensity":
            plants = [Plant("propensity-tie", i, j)]
        elif kind == "outcome-both":
            plants = [Plant("outcome1-tie", i, j), Plant("outcome0-tie", i, j)]
        else:
            # treated arm ties i, j; control arm ties j, k (overlapping on j)
            plants = [Plant("outcome1-tie", i, j), Plant("outcome0-tie", j, k)]
        out.append((kind, random_spec(n, seed0 + t, plants)))
    return out


def test_1_route_equivalence(report):
    specs = [random_spec(3 + s % 6, 10_000 + s) for s in range(1000)]
    dists = [realize(spec) for spec in specs]
    start = time.perf_counter()
    agree = 0
    for dist in dists:
        tau = ate_stratified(dist).ate
        agree += tau == ate_do(dist).ate == ate_ipw(dist, propensity(dist)).ate
    elapsed = time.perf_counter() - start
    passed = agree == 1000 and elapsed < 10
    report(1, "route equivalence", passed, f"{agree}/1000 exact (stratified = do = ipw), {elapsed:.2f} s")
    assert passed


def test_2_merge_invariance(report):
    exact = floats = merged = 0
    worst = 0.0
    instances = planted_instances(500, seed0=20_000)
    for kind, spec in instances:
        dist = realize(spec)
        tau = ate_stratified(dist).ate
        if kind == "dual":
            dual = dual_plan(outcome_scores(dist))
            merged += len(dual.treated_plan.target) < len(dist.x_space) and len(dual.control_plan.target) < len(dist.x_space)
            after = ate_dual_stratified(dist, dual).ate
            float_after = float(after)  # dual route has no separate float path
        else:
            part = group_by_propensity(propensity(dist)) if kind == "propensity" else group_by_outcome(outcome_scores(dist))
            plan = plan_from_partition(part, dist.x_space, kind)
            merged += len(plan.target) < len(dist.x_space)
            pooled = apply_plan(dist, plan)
            after = ate_stratified(pooled).ate
            float_after = ate_float(pooled.to_array())
        exact += after == tau
        err = abs(float_after - float(tau))
        worst = max(worst, err)
        floats += err <= 1e-12
    passed = exact == floats == merged == 500
    report(2, "merge invariance", passed,
           f"{exact}/500 exact, {floats}/500 float within 1e-12 (max err {worst:.1e}), {merged}/500 plans merged")
    assert passed


def test_3_balance_iff(report):
    clean = corrupted = detected = 0
    rng = np.random.default_rng(3)
    for _, spec in planted_instances(300, seed0=30_000):
        dist = realize(spec)
        L = propensity(dist)
        part = group_by_propensity(L)
        plan = plan_from_partition(part, dist.x_space, "propensity")
        b = as_map(plan)
        clean += factorization_check(dist, "X ⊥ Z | B", b).holds
        if corrupted < 100:
            # move one stratum into a block whose propensity differs
            blocks = [list(block) for block in part.blocks]
            if len(blocks) < 2:
                continue
            src, dst = rng.choice(len(blocks), size=2, replace=False)
            x = blocks[src][int(rng.integers(len(blocks[src])))]
            bad = dict(b)
            bad[x] = b[blocks[dst][0]]
            assert L[x] != L[blocks[dst][0]]
            corrupted += 1
            detected += not factorization_check(dist, "X ⊥ Z | B", bad).holds
    passed = clean == 300 and corrupted == detected == 100
    report(3, "balance iff", passed, f"{clean}/300 propensity plans balance, {detected}/{corrupted} corrupted plans detected")
    assert passed


def cascade_tie_instances(count, seed0):
    rng = np.random.default_rng(seed0)
    out = []
    for t in range(count):
        n = int(rng.integers(3, 9))
        i, j, k = (int(v) for v in rng.permutation(n)[:3])
        out.append(feasible_spec(n, seed0 + 1000 * t, [Plant("cascade-tie", i, j, k)], y_independent_of_z=True))
    return out


def test_4_cascade(report):
    ok_merges = ok_indep = ok_premise = 0
    specs = cascade_tie_instances(100, seed0=40_000)
    for spec in specs:
        dist = realize(spec)
        ok_premise += factorization_check(dist, "Y ⊥ Z | X").holds
        plan, log = cascade(dist)
        ok_merges += len(log) >= 2
        ok_indep += factorization_check(dist, "Y ⊥ Z | B", as_map(plan)).holds
    passed = ok_merges == ok_indep == ok_premise == 100
    report(4, "cascade", passed,
           f"{ok_merges}/100 with >= 2 merges, {ok_indep}/100 Y indep Z | B exact (premise held in {ok_premise}/100)")
    assert passed


def test_5_minimality(report):
    instances = [spec for _, spec in planted_instances(150, seed0=50_000)]
    instances += cascade_tie_instances(100, seed0=55_000)
    # disjoint mixtures: a propensity tie next to an outcome-pair tie
    for t in range(50):
        n = 4 + t % 5
        instances.append(
            random_spec(n, 59_000 + t, [Plant("propensity-tie", 0, 1), Plant("outcome1-tie", 2, 3), Plant("outcome0-tie", 2, 3)])
        )
    match = 0
    mismatches = []
    for spec in instances:
        dist = realize(spec)
        best, _ = exhaustive_min_cardinality(dist)
        plan, _ = cascade(dist)
        if len(plan.target) == best:
            match += 1
        else:
            mismatches.append((spec.seed, len(plan.target), best))
    total = len(instances)
    passed = match == total
    detail = f"{match}/{total} cascade cardinality = exhaustive minimum"
    if mismatches:
        detail += f"; first mismatches (seed, cascade, minimum): {mismatches[:3]}"
    report(5, "cascade minimality", passed, detail)
    assert passed


def misspecified_instance():
    return Distribution.from_factors(
        ["a", "b"], [F(1, 2)] * 2, [F(1, 5), F(4, 5)], [(F(1, 5), F(4, 5)), (F(3, 10), F(9, 10))]
    )


def test_6_misspecification(report):
    same_part = same_ate = 0
    instances = [spec for kind, spec in planted_instances(150, seed0=60_000) if kind == "propensity"]
    for spec in instances:
        dist = realize(spec)
        L = propensity(dist)
        # strictly increasing distortions of the true score
        for wrong in ({x: v * v for x, v in L.items()}, {x: v / (2 - v) for x, v in L.items()}):
            true_part = group_by_propensity(L)
            wrong_part = group_scores(wrong)
            same_part += true_part.as_sets() == wrong_part.as_sets()
            grouped_true = ate_stratified(apply_plan(dist, plan_from_partition(true_part, dist.x_space))).ate
            grouped_wrong = ate_stratified(apply_plan(dist, plan_from_partition(wrong_part, dist.x_space))).ate
            same_ate += grouped_true == grouped_wrong
    total = 2 * len(instances)
    dist = misspecified_instance()
    truth = ate_stratified(dist).ate
    biased = ate_ipw(dist, {x: v * v for x, v in propensity(dist).items()}).ate
    delta = abs(biased - truth)
    passed = same_part == same_ate == total and delta > F(5, 100)
    report(6, "misspecification", passed,
           f"(a) {same_part}/{total} identical partitions, {same_ate}/{total} identical grouped ATE; "
           f"(b) ipw with squared scores = {float(biased):.6f} vs truth {float(truth):.6f}, delta = {float(delta):.6f}")
    assert passed


def delta_method_se(dist, n):
    """Standard error of the plug-in stratified ATE under multinomial sampling."""
    tau = float(ate_stratified(dist).ate)
    var_between = 0.0
    var_within = 0.0
    for i in range(len(dist.x_space)):
        px = float(dist.p_x(i))
        p_arm = [float(dist.p_xz(i, z)) for z in (0, 1)]
        m = [float(dist.p[i][z][1]) / p_arm[z] for z in (0, 1)]
        tau_x = m[1] - m[0]
        var_between += px * tau_x ** 2
        var_within += px ** 2 * sum(m[z] * (1 - m[z]) / (n * p_arm[z]) for z in (0, 1))
    return math.sqrt((var_between - tau ** 2) / n + var_within)


def test_7_sampling_consistency(report):
    n, seeds = 100_000, range(20)
    dist = realize(random_spec(5, 7_007))
    tau = float(ate_stratified(dist).ate)
    se = delta_method_se(dist, n)
    inside = 0
    for seed in seeds:
        estimate = float(ate_stratified(to_distribution(from_records(sample(dist, n, seed)))).ate)
        inside += abs(estimate - tau) <= 3 * se
    passed = inside / len(seeds) >= 0.95
    report(7, "sampling consistency", passed, f"{inside}/{len(seeds)} runs within 3 SE (tau = {tau:.5f}, SE = {se:.5f})")
    assert passed


def random_table(rng, n_strata):
    labels = tuple(f"s{i}" for i in range(n_strata))
    counts = []
    for _ in labels:
        row = []
        for _z in (0, 1):
            total = int(rng.integers(1, 40))
            ones = int(rng.integers(0, total + 1))
            row.append((total - ones, ones))
        counts.append(tuple(row))
    return ContingencyTable(CategoricalSpace(labels), counts)


def test_8_oracle_independence(report):
    rng = np.random.default_rng(8)
    agree = 0
    for _ in range(1000):
        table = random_table(rng, int(rng.integers(1, 9)))
        agree += brute_ate(table) == ate_stratified(to_distribution(table)).ate
    passed = agree == 1000
    report(8, "oracle independence", passed, f"{agree}/1000 brute-force = stratified (exact)")
    assert passed
