"""Effective lifespan limits: the age beyond which survival is "extremely unlikely".

Formally: the smallest age at which the probability that anyone in a given
exposure plan is still alive drops to the chosen threshold epsilon.  The
exceedance probability is monotone non-increasing in age, so the limit is
found by bisection; hazard endpoints (where exceedance jumps to exactly
zero) are detected and reported with a flag instead of being chased
numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import MradlabError
from .hazards import HazardModel
from .survival import ExposurePlan, cohort_exceedance

BRACKET_TOLERANCE = 1e-6
_MAX_SPAN = 2.0**21  # ~2 million years of bracket expansion before giving up


class LimitSolveError(MradlabError):
    """The exceedance probability never falls to the requested epsilon."""


@dataclass(frozen=True)
class EffectiveLimitResult:
    epsilon: float
    limit_age: float
    exposure: ExposurePlan
    achieved_probability: float
    iterations: int
    bracket: float
    at_base_age: bool = False
    exact_endpoint: bool = False

    @property
    def limit_age_ceil(self) -> int:
        """Integer convenience view of the fractional limit age."""
        return math.ceil(self.limit_age)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "limit_age": self.limit_age,
            "limit_age_ceil": self.limit_age_ceil,
            "base_age": self.exposure.base_age,
            "start_year": self.exposure.start_year,
            "counts": list(self.exposure.counts),
            "achieved_probability": self.achieved_probability,
            "iterations": self.iterations,
            "bracket": self.bracket,
            "at_base_age": self.at_base_age,
            "exact_endpoint": self.exact_endpoint,
        }


def epsilon_at_age(model: HazardModel, plan: ExposurePlan, age: float) -> float:
    """Inverse query: the exceedance probability at a given age."""
    if age < plan.base_age:
        raise ValueError(f"age {age} below plan base_age {plan.base_age}")
    return cohort_exceedance(model, plan, age)


def solve_effective_limit(model: HazardModel, plan: ExposurePlan, epsilon: float,
                          tolerance: float = BRACKET_TOLERANCE) -> EffectiveLimitResult:
    """Smallest age where the plan's exceedance probability is <= epsilon.

    Bisection to a bracket of `tolerance` years.  Degenerate cases: if the
    exceedance at the base age is already <= epsilon the base age itself is
    returned (at_base_age flag); if the model has a hard endpoint over which
    the probability jumps discontinuously past epsilon, the endpoint is
    returned exactly (exact_endpoint flag, achieved probability 0).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be strictly between 0 and 1")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")

    def exceedance(age: float) -> float:
        return cohort_exceedance(model, plan, age)

    base = plan.base_age
    at_base = exceedance(base)
    if at_base <= epsilon:
        return EffectiveLimitResult(epsilon, base, plan, at_base, 0, 0.0, at_base_age=True)

    endpoint = model.endpoint()
    if endpoint is not None and endpoint <= base:
        # Nobody survives past the base age at all.
        return EffectiveLimitResult(epsilon, base, plan, 0.0, 0, 0.0, exact_endpoint=True)

    lo = base
    if endpoint is not None:
        if exceedance(endpoint) > epsilon:
            # Exceedance is still above epsilon at the endpoint and exactly
            # zero beyond it: the limit is the endpoint itself.
            return EffectiveLimitResult(epsilon, endpoint, plan, 0.0, 0, 0.0,
                                        exact_endpoint=True)
        hi = endpoint
    else:
        span = 1.0
        hi = base + span
        while exceedance(hi) > epsilon:
            span *= 2.0
            if span > _MAX_SPAN:
                floor = exceedance(base + _MAX_SPAN)
                raise LimitSolveError(
                    f"exceedance never falls to epsilon={epsilon:g}: still "
                    f"{floor:g} at {_MAX_SPAN:.0f} years past the base age "
                    "(the hazard admits a positive probability of indefinite survival)"
                )
            lo = hi
            hi = base + span

    iterations = 0
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # float resolution exhausted
            break
        if exceedance(mid) > epsilon:
            lo = mid
        else:
            hi = mid
        iterations += 1
    return EffectiveLimitResult(epsilon, hi, plan, exceedance(hi), iterations, hi - lo)


def limit_profile(model: HazardModel, plan: ExposurePlan,
                  epsilons: Sequence[float]) -> list[EffectiveLimitResult]:
    """Solve the limit for several epsilons; rows ordered by descending epsilon."""
    if len(epsilons) == 0:
        raise ValueError("epsilons must be non-empty")
    ordered = sorted(epsilons, reverse=True)
    return [solve_effective_limit(model, plan, eps) for eps in ordered]
