"""Command-line interface.

    balscore score    data.csv [--score propensity|outcome] [--arm both|treated|control] [--epsilon E]
    balscore plan     data.csv [--score ...|--cascade|--dual] [--epsilon E]
    balscore estimate data.csv --route stratified|do|ipw|dual [--plan plan.json] [--format json|table]
    balscore simulate spec.json --n N [--seed S] --out data.csv
    balscore verify   data.csv|spec.json [--plan plan.json] [--report out.json]

Exit codes: 0 ok, 1 verification failure, 2 input error, 3 positivity
violation, 4 degenerate weight, 5 infeasible plant.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import estimation as est
from .dgp import audit_plants, load_spec, realize, sample, spec_to_dict
from .errors import (
    BalscoreError,
    DegenerateWeight,
    InfeasiblePlant,
    InvalidValue,
    PositivityViolation,
)
from .scores import group_by_outcome, group_by_propensity, outcome_scores, propensity
from .serialize import (
    dual_plan_to_dict,
    dumps,
    estimate_to_dict,
    load_plan,
    partition_to_dict,
    plan_to_dict,
    rational,
)
from .stratification import DualPlan, apply_plan, cascade, dual_plan, plan_from_partition
from .tabular import from_records, read_csv, table_from_distribution, to_distribution, write_csv
from .verify import run_checks

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_POSITIVITY = 3
EXIT_DEGENERATE = 4
EXIT_INFEASIBLE = 5

SEED_ENV = "BALSCORE_SEED"
ARM_FLAGS = {"both": "both", "treated": "treated_only", "control": "control_only"}


def _load_dist(path: str):
    table = from_records(read_csv(path))
    return table, to_distribution(table)


def _epsilon(args):
    if args.mode == "epsilon" and args.epsilon is None:
        raise InvalidValue("--mode epsilon requires --epsilon")
    if args.mode == "exact" and args.epsilon is not None:
        raise InvalidValue("--mode exact does not take --epsilon")
    return args.epsilon


def _partition(dist, score: str, arm: str, epsilon):
    if score == "propensity":
        return group_by_propensity(propensity(dist), epsilon), "propensity"
    kind = {"both": "outcome-both", "treated_only": "outcome-treated", "control_only": "outcome-control"}[arm]
    return group_by_outcome(outcome_scores(dist), epsilon, arm), kind


def cmd_score(args) -> int:
    _, dist = _load_dist(args.input)
    epsilon = _epsilon(args)
    partition, kind = _partition(dist, args.score, ARM_FLAGS[args.arm], epsilon)
    out = partition_to_dict(partition, kind, epsilon)
    print(dumps(out))
    return EXIT_OK


def cmd_plan(args) -> int:
    _, dist = _load_dist(args.input)
    epsilon = _epsilon(args)
    if args.dual:
        print(dumps(dual_plan_to_dict(dual_plan(outcome_scores(dist), epsilon))))
        return EXIT_OK
    if args.cascade:
        plan, log = cascade(dist, epsilon=epsilon)
        out = plan_to_dict(plan)
        out["steps"] = [
            {"kind": s.kind, "n_before": s.n_before, "n_after": s.n_after, "plan": plan_to_dict(s.plan)}
            for s in log
        ]
        print(dumps(out))
        return EXIT_OK
    partition, kind = _partition(dist, args.score, ARM_FLAGS[args.arm], epsilon)
    if kind in ("outcome-treated", "outcome-control"):
        raise InvalidValue("single-arm plans only make sense as a pair; use --dual")
    print(dumps(plan_to_dict(plan_from_partition(partition, dist.x_space, kind))))
    return EXIT_OK


def _format_table(result: dict) -> str:
    lines = [f"route: {result['route']}", f"ate:   {result['ate']['rational']} ({result['ate']['decimal']})"]
    if result["per_stratum"]:
        width = max(len("stratum"), *(len(r["stratum"]) for r in result["per_stratum"]))
        lines.append(f"{'stratum':<{width}}  {'effect':>22}  {'weight':>22}")
        for r in result["per_stratum"]:
            lines.append(f"{r['stratum']:<{width}}  {r['effect']['decimal']:>22}  {r['weight']['decimal']:>22}")
    for arm, rows in result["arm_terms"].items():
        lines.append(f"[{arm} arm]")
        width = max(len("stratum"), *(len(r["stratum"]) for r in rows))
        for r in rows:
            lines.append(f"{r['stratum']:<{width}}  {r['mean']['decimal']:>22}  {r['weight']['decimal']:>22}")
    return "\n".join(lines)


def cmd_estimate(args) -> int:
    _, dist = _load_dist(args.input)
    plan = load_plan(args.plan) if args.plan else None
    if args.route == "dual":
        if plan is None:
            plan = dual_plan(outcome_scores(dist))
        elif not isinstance(plan, DualPlan):
            raise InvalidValue("--route dual needs a dual plan file with 'treated' and 'control'")
        estimate = est.ate_dual_stratified(dist, plan)
    else:
        if isinstance(plan, DualPlan):
            raise InvalidValue(f"--route {args.route} needs a single merge plan, not a dual plan")
        if plan is not None:
            dist = apply_plan(dist, plan)
        route = {"stratified": est.ate_stratified, "do": est.ate_do, "ipw": est.ate_ipw}[args.route]
        estimate = route(dist)
        if plan is not None:
            estimate = est.EffectEstimate(estimate.ate, estimate.route, estimate.per_stratum, plan)
    result = estimate_to_dict(estimate)
    print(_format_table(result) if args.format == "table" else dumps(result))
    return EXIT_OK


def _resolve_seed(flag: int | None, fallback: int) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InvalidValue(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return fallback


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise InvalidValue(f"--n must be at least 1, got {args.n}")
    spec = load_spec(args.spec)
    seed = _resolve_seed(args.seed, spec.seed)
    dist = realize(spec)
    records = sample(dist, args.n, seed)
    write_csv(records, args.out)
    summary = {
        "out": str(args.out),
        "n": args.n,
        "seed": seed,
        "spec": spec_to_dict(spec),
        "ate": {
            "stratified": rational(est.ate_stratified(dist).ate),
        },
        "planted_audit": audit_plants(spec, dist),
    }
    print(dumps(summary))
    return EXIT_OK


def cmd_verify(args) -> int:
    path = Path(args.input)
    if path.suffix.lower() == ".json":
        spec = load_spec(path)
        dist = realize(spec)
        table = table_from_distribution(dist)
        audit = audit_plants(spec, dist)
    else:
        table, dist = _load_dist(str(path))
        audit = None
    user_plan = load_plan(args.plan) if args.plan else None
    if isinstance(user_plan, DualPlan):
        raise InvalidValue("verify --plan takes a single merge plan")
    checks = [c.to_dict() for c in run_checks(dist, table, user_plan)]
    if audit is not None:
        checks.append({"name": "planted_ties", "passed": all(r["realized"] for r in audit), "details": {"audit": audit}})
    passed = all(c["passed"] for c in checks)
    report = {"input": str(path), "n_strata": len(dist.x_space), "passed": passed, "checks": checks}
    text = dumps(report)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK if passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="balscore", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def grouping_flags(p):
        p.add_argument("--mode", choices=["exact", "epsilon"], default=None)
        p.add_argument("--epsilon", type=float, default=None, help="single-linkage tolerance (ties included)")
        p.add_argument("--score", choices=["propensity", "outcome"], default="propensity")
        p.add_argument("--arm", choices=list(ARM_FLAGS), default="both", help="outcome score component(s)")

    p = sub.add_parser("score", help="print the partition of strata induced by a score")
    p.add_argument("input")
    grouping_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("plan", help="print a merge plan (single score, cascade or dual)")
    p.add_argument("input")
    grouping_flags(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--cascade", action="store_true", help="propensity and outcome merges to fixpoint")
    g.add_argument("--dual", action="store_true", help="separate treated/control stratifications")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("estimate", help="estimate the average treatment effect")
    p.add_argument("input")
    p.add_argument("--route", choices=["stratified", "do", "ipw", "dual"], default="stratified")
    p.add_argument("--plan", help="merge plan JSON (dual plan for --route dual)")
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="sample a dataset from a generator spec")
    p.add_argument("spec")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help=f"overrides ${SEED_ENV} and the spec seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the identity checks on a dataset or generator spec")
    p.add_argument("input", help="x,z,y CSV or generator spec JSON")
    p.add_argument("--plan", help="merge plan to check as a balancing score")
    p.add_argument("--report", help="also write the JSON report here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PositivityViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_POSITIVITY
    except DegenerateWeight as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except InfeasiblePlant as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (BalscoreError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
