"""Balancing scores for causal effect estimation on discrete observational data.

Exact-rational propensity and outcome scores, strata merging plans, and
stratified / intervention / inverse-weighting estimators of the average
treatment effect, with brute-force oracles for the identities that tie them
together.
"""

from .errors import (
    BalscoreError,
    DegenerateWeight,
    EmptyInput,
    InfeasiblePlant,
    InvalidPartition,
    InvalidPlan,
    InvalidValue,
    PositivityViolation,
    TooManyStrata,
)
from .estimation import (
    EffectEstimate,
    InterventionDistribution,
    ate_do,
    ate_dual_stratified,
    ate_float,
    ate_ipw,
    ate_stratified,
    intervene,
    potential_outcome_dist,
    stratum_effect,
)
from .scores import (
    OutcomeScorePair,
    ScorePartition,
    group_by_outcome,
    group_by_propensity,
    group_scores,
    outcome_scores,
    propensity,
)
from .stratification import (
    BalanceReport,
    DualPlan,
    MergePlan,
    apply_plan,
    cascade,
    check_balance,
    compose,
    dual_plan,
    identity_plan,
    plan_from_partition,
)
from .tabular import (
    CategoricalSpace,
    ContingencyTable,
    Distribution,
    conditional,
    from_records,
    read_csv,
    table_from_distribution,
    to_distribution,
    write_csv,
)

__version__ = "0.1.0"
