"""JSON shapes for partitions, plans, estimates and reports.

Rationals are written as ``{"rational": "num/den", "decimal": "..."}``; the
rational string is authoritative, the 17-digit decimal is for reading.
Key order is fixed so identical inputs give byte-identical output.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import InvalidPlan
from .estimation import EffectEstimate
from .scores import ScorePartition
from .stratification import DualPlan, MergePlan
from .tabular import as_fraction, format_decimal, format_rational


def rational(q: Fraction) -> dict[str, str]:
    return {"rational": format_rational(q), "decimal": format_decimal(q)}


def _score_value(v) -> Any:
    if isinstance(v, tuple):
        return [rational(c) for c in v]
    return rational(v)


def partition_to_dict(partition: ScorePartition, score: str, epsilon=None) -> dict[str, Any]:
    return {
        "score": score,
        "mode": "exact" if epsilon is None else "epsilon",
        "epsilon": None if epsilon is None else format_rational(as_fraction(epsilon)),
        "n_blocks": partition.n_blocks,
        "blocks": [
            {"members": list(block), "values": [_score_value(v) for v in values]}
            for block, values in zip(partition.blocks, partition.witness)
        ],
    }


def plan_to_dict(plan: MergePlan) -> dict[str, Any]:
    return {
        "source": list(plan.source.labels),
        "target": list(plan.target.labels),
        "assignment": {label: plan.target_of(label) for label in plan.source.labels},
        "provenance": list(plan.provenance),
    }


def plan_from_dict(obj: Any) -> MergePlan:
    if not isinstance(obj, dict) or not {"source", "assignment"} <= set(obj):
        raise InvalidPlan("a merge plan needs 'source' and 'assignment'")
    return MergePlan.from_mapping(obj["source"], obj["assignment"], obj.get("target"), obj.get("provenance"))


def dual_plan_to_dict(dual: DualPlan) -> dict[str, Any]:
    return {"treated": plan_to_dict(dual.treated_plan), "control": plan_to_dict(dual.control_plan)}


def dual_plan_from_dict(obj: Any) -> DualPlan:
    if not isinstance(obj, dict) or not {"treated", "control"} <= set(obj):
        raise InvalidPlan("a dual plan needs 'treated' and 'control' plans")
    return DualPlan(plan_from_dict(obj["treated"]), plan_from_dict(obj["control"]))


def load_plan(path: str | Path) -> MergePlan | DualPlan:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidPlan(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if isinstance(obj, dict) and "treated" in obj:
        return dual_plan_from_dict(obj)
    return plan_from_dict(obj)


def estimate_to_dict(est: EffectEstimate) -> dict[str, Any]:
    plan = est.plan_used
    if isinstance(plan, DualPlan):
        plan_json = dual_plan_to_dict(plan)
    elif isinstance(plan, MergePlan):
        plan_json = plan_to_dict(plan)
    else:
        plan_json = None
    return {
        "route": est.route,
        "ate": rational(est.ate),
        "per_stratum": [
            {"stratum": label, "effect": rational(effect), "weight": rational(weight)}
            for label, (effect, weight) in est.per_stratum.items()
        ],
        "arm_terms": {
            arm: [
                {"stratum": label, "mean": rational(mean), "weight": rational(weight)}
                for label, (mean, weight) in terms.items()
            ]
            for arm, terms in est.arm_terms.items()
        },
        "plan": plan_json,
    }


def _default(obj):
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, default=_default)
