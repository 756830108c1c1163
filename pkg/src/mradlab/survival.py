"""Exceedance probabilities for individuals and cohorts.

Individuals are independent; a cohort's chance that anyone outlives a
target age is one minus the product of per-individual survival
complements, accumulated in log space because the interesting numbers
live at extreme tails.  Also provides the classic order-statistics model
for the yearly maximum: the mean of the maximum of n exponential excesses
above the supercentenarian threshold is mu * H_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SUPERCENTENARIAN_AGE = 110.0
_EULER_GAMMA = 0.5772156649015329
_HARMONIC_EXACT_LIMIT = 1_000_000


@dataclass(frozen=True)
class ExposurePlan:
    """Per-calendar-year counts of individuals reaching the base age.

    counts[i] individuals reach `base_age` during calendar year
    `start_year + i`.
    """

    base_age: float = SUPERCENTENARIAN_AGE
    start_year: int = 2000
    counts: tuple[int, ...] = (1,)

    def __post_init__(self) -> None:
        if not math.isfinite(self.base_age) or self.base_age < 0:
            raise ValueError("base_age must be finite and non-negative")
        if len(self.counts) < 1:
            raise ValueError("plan must cover at least one year")
        for count in self.counts:
            if count < 0 or count != int(count):
                raise ValueError("yearly counts must be non-negative integers")
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @property
    def horizon_years(self) -> int:
        return len(self.counts)

    @property
    def total_count(self) -> int:
        return sum(self.counts)

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(self.start_year + i for i in range(len(self.counts)))

    @classmethod
    def constant(cls, count: int, years: int = 1, base_age: float = SUPERCENTENARIAN_AGE,
                 start_year: int = 2000) -> "ExposurePlan":
        return cls(base_age=base_age, start_year=start_year, counts=(count,) * years)


def individual_exceedance(model, base_age: float, target_age: float) -> float:
    """Probability that one individual alive at `base_age` is still alive at `target_age`."""
    return model.cumulative_survival(base_age, target_age)


def cohort_exceedance(model, plan: ExposurePlan, target_age: float) -> float:
    """Probability that anyone in the plan survives to `target_age`.

    Individuals are independent and every cohort faces the same age-indexed
    hazard, so the complement is (1 - p)**total with p the single-individual
    exceedance; computed as -expm1(total * log1p(-p)) to stay accurate when
    p is as small as 1e-13.
    """
    if target_age < plan.base_age:
        raise ValueError(f"target_age {target_age} below plan base_age {plan.base_age}")
    total = plan.total_count
    if total == 0:
        return 0.0
    p = individual_exceedance(model, plan.base_age, target_age)
    if total == 1:
        return p
    if p >= 1.0:
        return 1.0
    if p == 0.0:
        return 0.0
    return -math.expm1(total * math.log1p(-p))


def expected_waiting_time(model, yearly_count: int, target_age: float,
                          base_age: float = SUPERCENTENARIAN_AGE) -> float:
    """Expected years until some year's cohort produces a survivor past `target_age`.

    With `yearly_count` individuals reaching `base_age` each year, the
    yearly success probability is constant, so the waiting time is its
    reciprocal; +inf when the probability is zero.
    """
    if yearly_count < 1:
        raise ValueError("yearly_count must be at least 1")
    plan = ExposurePlan(base_age=base_age, counts=(int(yearly_count),))
    p_year = cohort_exceedance(model, plan, target_age)
    if p_year == 0.0:
        return math.inf
    return 1.0 / p_year


def harmonic_number(n: int) -> float:
    """H_n = sum_{i<=n} 1/i; exact summation up to 1e6, asymptotic beyond."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n <= _HARMONIC_EXACT_LIMIT:
        return math.fsum(1.0 / i for i in range(1, n + 1))
    return math.log(n) + _EULER_GAMMA + 1.0 / (2.0 * n) - 1.0 / (12.0 * n * n)


def max_exponential_mean(n: int, mean_excess: float,
                         threshold_age: float = SUPERCENTENARIAN_AGE) -> float:
    """Mean of threshold_age + max of n exponential excesses: 110 + mu * H_n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if mean_excess <= 0:
        raise ValueError("mean_excess must be positive")
    return threshold_age + mean_excess * harmonic_number(n)


def max_exponential_cdf(n: int, mean_excess: float, age: float,
                        threshold_age: float = SUPERCENTENARIAN_AGE) -> float:
    """P(max of n exponential excesses above the threshold is <= age)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if mean_excess <= 0:
        raise ValueError("mean_excess must be positive")
    if age < threshold_age:
        raise ValueError(f"age {age} below threshold {threshold_age}")
    single = -math.expm1(-(age - threshold_age) / mean_excess)
    return single**n
