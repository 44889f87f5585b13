"""Average treatment effect estimators over an exact Distribution.

Three routes are provided and agree exactly on any positive distribution:

* stratified adjustment: sum_x [p(Y=1|x,Z=1) - p(Y=1|x,Z=0)] p(x);
* intervention: E[Y | do(Z=1)] - E[Y | do(Z=0)] with
  p(y, x | do(z)) = p(x) p(y | z, x);
* inverse propensity weighting with caller-supplied per-stratum scores.

Binary Y means every expectation is just p(Y=1 | .).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .errors import DegenerateWeight, PositivityViolation
from .stratification import DualPlan, MergePlan, apply_plan
from .tabular import Distribution, Number, Stratum, as_fraction

ROUTES = ("stratified", "do_calculus", "ipw", "dual_stratified")


@dataclass(frozen=True)
class EffectEstimate:
    """An ATE with its per-stratum decomposition.

    ``per_stratum`` maps a label to (effect, weight). For the stratified and
    do routes the effect is tau(x) and the weight p(x); for IPW the effect is the
    stratum's weighted contribution divided by p(x). Dual estimates keep one
    table per arm in ``arm_terms`` instead: label -> (p(Y=1 | stratum, z), p(stratum)).
    """

    ate: Fraction
    route: str
    per_stratum: dict[str, tuple[Fraction, Fraction]] = field(default_factory=dict)
    plan_used: MergePlan | DualPlan | None = None
    arm_terms: dict[str, dict[str, tuple[Fraction, Fraction]]] = field(default_factory=dict)


@dataclass(frozen=True)
class InterventionDistribution:
    z_set: int
    p_y: dict[int, Fraction]
    p_yx: dict[tuple[int, str], Fraction]


def _arm_mean(dist: Distribution, i: int, z: int) -> Fraction:
    pxz = dist.p_xz(i, z)
    if pxz == 0:
        raise PositivityViolation(dist.x_space.labels[i], z)
    return dist.p[i][z][1] / pxz


def stratum_effect(dist: Distribution, x: Stratum) -> Fraction:
    """tau(x) = p(Y=1 | x, Z=1) - p(Y=1 | x, Z=0)."""
    i = dist.x_space.index(x)
    return _arm_mean(dist, i, 1) - _arm_mean(dist, i, 0)


def ate_stratified(dist: Distribution, plan_used: MergePlan | None = None) -> EffectEstimate:
    per_stratum = {}
    ate = Fraction(0)
    for i, label in enumerate(dist.x_space.labels):
        tau = stratum_effect(dist, i)
        weight = dist.p_x(i)
        per_stratum[label] = (tau, weight)
        ate += tau * weight
    return EffectEstimate(ate, "stratified", per_stratum, plan_used)


def intervene(dist: Distribution, z: int) -> InterventionDistribution:
    """Joint and marginal law of (Y, X) after setting Z=z.

    The propensity factor of the observational joint cancels, leaving
    p(x) p(y | z, x); this needs p(z | x) > 0 everywhere.
    """
    if z not in (0, 1):
        raise ValueError(f"z must be 0 or 1, got {z!r}")
    p_yx = {}
    p_y = {0: Fraction(0), 1: Fraction(0)}
    for i, label in enumerate(dist.x_space.labels):
        q = _arm_mean(dist, i, z)
        px = dist.p_x(i)
        for y, py in ((0, 1 - q), (1, q)):
            p_yx[(y, label)] = px * py
            p_y[y] += px * py
    return InterventionDistribution(z, p_y, p_yx)


def potential_outcome_dist(dist: Distribution, i: int) -> dict[int, Fraction]:
    """Law of the potential outcome Y_i; identical to p(y | do(Z=i)) under ignorability."""
    return dict(intervene(dist, i).p_y)


def ate_do(dist: Distribution) -> EffectEstimate:
    treated, control = intervene(dist, 1), intervene(dist, 0)
    per_stratum = {}
    for label in dist.x_space.labels:
        px = treated.p_yx[(0, label)] + treated.p_yx[(1, label)]
        per_stratum[label] = ((treated.p_yx[(1, label)] - control.p_yx[(1, label)]) / px, px)
    return EffectEstimate(treated.p_y[1] - control.p_y[1], "do_calculus", per_stratum)


def ate_ipw(dist: Distribution, scores: Mapping[str, Number] | None = None) -> EffectEstimate:
    """sum_x p(Y=1, Z=1, x) / s(x) - sum_x p(Y=1, Z=0, x) / (1 - s(x)).

    ``scores`` defaults to the true propensity. Any other map reproduces the
    effect of a misspecified propensity model used as weights.
    """
    if scores is None:
        scores = {}
        for i, label in enumerate(dist.x_space.labels):
            px = dist.p_x(i)
            if px == 0:
                raise PositivityViolation(label)
            scores[label] = dist.p_xz(i, 1) / px
    per_stratum = {}
    ate = Fraction(0)
    for i, label in enumerate(dist.x_space.labels):
        s = as_fraction(scores[label])
        if not 0 < s < 1:
            raise DegenerateWeight(label, s)
        contribution = dist.p[i][1][1] / s - dist.p[i][0][1] / (1 - s)
        px = dist.p_x(i)
        if px == 0:
            raise PositivityViolation(label)
        per_stratum[label] = (contribution / px, px)
        ate += contribution
    return EffectEstimate(ate, "ipw", per_stratum)


def ate_dual_stratified(dist: Distribution, dual: DualPlan) -> EffectEstimate:
    """Treated mean taken over the treated-arm stratification, control mean over the
    control-arm one."""
    arm_terms: dict[str, dict[str, tuple[Fraction, Fraction]]] = {}
    means = {}
    for name, z, plan in (("treated", 1, dual.treated_plan), ("control", 0, dual.control_plan)):
        merged = apply_plan(dist, plan)
        terms = {}
        mean = Fraction(0)
        for i, label in enumerate(merged.x_space.labels):
            q = _arm_mean(merged, i, z)
            w = merged.p_x(i)
            terms[label] = (q, w)
            mean += q * w
        arm_terms[name] = terms
        means[name] = mean
    return EffectEstimate(means["treated"] - means["control"], "dual_stratified", {}, dual, arm_terms)


def ate_float(p: np.ndarray) -> float:
    """Stratified ATE in floating point from an (n, 2, 2) joint array.

    Independent of the exact path; used to check the reporting boundary.
    """
    p = np.asarray(p, dtype=float)
    arm = p.sum(axis=2)
    if np.any(arm <= 0):
        raise PositivityViolation(str(int(np.argwhere(arm <= 0)[0][0])))
    means = p[:, :, 1] / arm
    return float(np.sum((means[:, 1] - means[:, 0]) * arm.sum(axis=1)))
