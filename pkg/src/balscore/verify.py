"""The battery of identity checks behind ``balscore verify``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from . import estimation as est
from .oracle import MAX_EXHAUSTIVE_STRATA, brute_ate, exhaustive_min_cardinality, factorization_check
from .scores import outcome_scores
from .stratification import (
    MergePlan,
    apply_plan,
    cascade,
    check_balance,
    dual_plan,
    plan_from_partition,
    score_partition,
)
from .tabular import ContingencyTable, Distribution, format_rational


@dataclass
class Check:
    name: str
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "details": self.details}


def _block_map(plan: MergePlan) -> dict[str, str]:
    return {label: plan.target_of(label) for label in plan.source.labels}


def run_checks(
    dist: Distribution,
    table: ContingencyTable | None = None,
    user_plan: MergePlan | None = None,
) -> list[Check]:
    """Route equivalence, merge invariance, balance and minimality on one distribution.

    ``table`` adds the raw-count oracle comparison. ``user_plan`` is checked as
    a balancing score: X must be independent of Z given its blocks.
    """
    checks = []
    strat = est.ate_stratified(dist).ate
    fmt = format_rational

    if table is not None:
        brute = brute_ate(table)
        checks.append(Check("oracle_agreement", brute == strat, {"brute_ate": fmt(brute), "ate_stratified": fmt(strat)}))

    do, ipw = est.ate_do(dist).ate, est.ate_ipw(dist).ate
    checks.append(Check(
        "route_equivalence",
        strat == do == ipw,
        {"stratified": fmt(strat), "do_calculus": fmt(do), "ipw": fmt(ipw)},
    ))

    plans = {
        kind: plan_from_partition(score_partition(dist, kind), dist.x_space, kind)
        for kind in ("propensity", "outcome-both")
    }
    plans["cascade"], log = cascade(dist)
    merged = {name: est.ate_stratified(apply_plan(dist, plan)).ate for name, plan in plans.items()}
    dual = est.ate_dual_stratified(dist, dual_plan(outcome_scores(dist))).ate
    merged["dual"] = dual
    checks.append(Check(
        "merge_invariance",
        all(v == strat for v in merged.values()),
        {
            "original": fmt(strat),
            "merged": {name: fmt(v) for name, v in merged.items()},
            "cardinality": {name: len(plan.target) for name, plan in plans.items()},
        },
    ))

    prop = plans["propensity"]
    balance = check_balance(dist, prop)
    oracle_balance = factorization_check(dist, "X ⊥ Z | B", _block_map(prop))
    checks.append(Check(
        "propensity_balance",
        balance.clean and oracle_balance.holds,
        {"violations": len(balance.violations), "oracle_violations": len(oracle_balance.violations)},
    ))

    if user_plan is not None:
        report = factorization_check(dist, "X ⊥ Z | B", _block_map(user_plan))
        own = check_balance(dist, user_plan)
        user_ate = est.ate_stratified(apply_plan(dist, user_plan)).ate
        checks.append(Check(
            "user_plan_balance",
            report.holds and own.clean,
            {
                "violations": [
                    {"stratum": v.stratum, "z": v.z, "block": v.block,
                     "p_joint": fmt(v.joint), "p_product": fmt(v.product)}
                    for v in own.violations
                ],
                "ate_merged": fmt(user_ate),
                "ate_delta": fmt(user_ate - strat),
            },
        ))

    n = len(dist.x_space)
    if n <= MAX_EXHAUSTIVE_STRATA:
        best, witness = exhaustive_min_cardinality(dist)
        reached = len(plans["cascade"].target)
        checks.append(Check(
            "minimality",
            best == reached,
            {
                "cascade_cardinality": reached,
                "exhaustive_minimum": best,
                "witness": [list(b) for b in witness],
                "cascade_steps": [s.kind for s in log],
            },
        ))
    else:
        checks.append(Check("minimality", True, {"skipped": f"more than {MAX_EXHAUSTIVE_STRATA} strata"}))
    return checks
