"""Exceedance arithmetic and the max-of-exponentials overlay model."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mradlab import (
    ExposurePlan,
    cohort_exceedance,
    expected_waiting_time,
    hard_limit_scenario,
    harmonic_number,
    individual_exceedance,
    life_table_scenario,
    max_exponential_cdf,
    max_exponential_mean,
    plateau_scenario,
)


def plateau(q, x_p=110.0):
    return plateau_scenario(plateau_q=q, transition_age=x_p)


# -- exposure plans ---------------------------------------------------------------


def test_plan_validation():
    with pytest.raises(ValueError):
        ExposurePlan(counts=())
    with pytest.raises(ValueError):
        ExposurePlan(counts=(1, -2))
    plan = ExposurePlan(base_age=110.0, start_year=1990, counts=(5, 0, 7))
    assert plan.horizon_years == 3
    assert plan.total_count == 12
    assert plan.years == (1990, 1991, 1992)


# -- individual exceedance ----------------------------------------------------------


def test_individual_fifteen_year_plateau():
    # Annual survival 0.47 (death probability 0.53): direct product oracle.
    model = plateau(0.53)
    assert individual_exceedance(model, 110.0, 125.0) == pytest.approx(0.47**15, rel=1e-13)


def test_individual_degenerate_and_hard_limit():
    model = plateau(0.53)
    assert individual_exceedance(model, 110.0, 110.0) == 1.0
    wall = hard_limit_scenario(limit_age=115.0)
    assert individual_exceedance(wall, 110.0, 120.0) == 0.0
    with pytest.raises(ValueError):
        individual_exceedance(model, 125.0, 110.0)


# -- cohort exceedance ---------------------------------------------------------------


def test_cohort_ten_thousand_individuals():
    # p = 0.53**15 per individual; closed-form oracle computed directly.
    model = plateau(0.47)
    plan = ExposurePlan(base_age=110.0, counts=(10_000,))
    p_single = 0.53**15
    expected = 1.0 - (1.0 - p_single) ** 10_000
    value = cohort_exceedance(model, plan, 125.0)
    assert value == pytest.approx(expected, rel=1e-10)
    assert value == pytest.approx(0.5188, abs=1e-3)


def test_cohort_empty_plan_and_reduction():
    model = plateau(0.47)
    empty = ExposurePlan(base_age=110.0, counts=(0, 0))
    assert cohort_exceedance(model, empty, 120.0) == 0.0
    single = ExposurePlan(base_age=110.0, counts=(1,))
    assert cohort_exceedance(model, single, 121.0) == pytest.approx(
        individual_exceedance(model, 110.0, 121.0), rel=1e-14)


def test_cohort_accurate_at_extreme_tails():
    # At p ~ 1e-13 the naive 1-(1-p)**n would lose every significant digit.
    model = plateau(0.5)
    plan = ExposurePlan(base_age=110.0, counts=(4,))
    p = 2.0**-40
    expected = -math.expm1(4 * math.log1p(-p))
    value = cohort_exceedance(model, plan, 150.0)
    assert value == pytest.approx(expected, rel=1e-13)
    assert value == pytest.approx(4 * p, rel=1e-9)


def test_repeated_bernoulli_consecutive_wins():
    # Ten consecutive survivals at 48.7% per year, as a cumulative product.
    model = plateau(1.0 - 0.487, x_p=0.0)
    p10 = individual_exceedance(model, 0.0, 10.0)
    assert p10 == pytest.approx(0.487**10, rel=1e-13)
    assert p10 == pytest.approx(7.5e-4, rel=2e-2)


def test_cohort_target_below_base_rejected():
    with pytest.raises(ValueError):
        cohort_exceedance(plateau(0.5), ExposurePlan(base_age=110.0, counts=(1,)), 100.0)


@given(st.floats(0.05, 0.95), st.integers(1, 50), st.integers(1, 5),
       st.floats(111.0, 140.0), st.floats(0.0, 20.0))
@settings(max_examples=120)
def test_cohort_monotonicity(q, count, years, target, extra):
    model = plateau(q)
    plan = ExposurePlan(base_age=110.0, counts=(count,) * years)
    low = cohort_exceedance(model, plan, target)
    high = cohort_exceedance(model, plan, target + extra)
    assert high <= low + 1e-15
    doubled = ExposurePlan(base_age=110.0, counts=(2 * count,) * years)
    assert cohort_exceedance(model, doubled, target) >= low - 1e-15


def test_plateau_positive_for_every_finite_target():
    model = plateau(0.47)
    plan = ExposurePlan(base_age=110.0, counts=(1,))
    for target in (150.0, 200.0, 400.0):
        assert cohort_exceedance(model, plan, target) > 0.0
    wall = hard_limit_scenario(limit_age=115.0)
    for delta in (1e-9, 0.5, 10.0):
        assert cohort_exceedance(wall, plan, 115.0 + delta) == 0.0


# -- expected waiting time ---------------------------------------------------------


def test_waiting_time_reciprocal():
    # One-year table with survival exactly 1e-4 to the next age.
    table = life_table_scenario([(110, 0.9999), (111, 1.0)])
    p_year = cohort_exceedance(table, ExposurePlan(base_age=110.0, counts=(1,)), 111.0)
    waiting = expected_waiting_time(table, 1, 111.0)
    assert waiting == pytest.approx(1.0 / p_year, rel=1e-14)
    assert waiting == pytest.approx(10_000.0, rel=1e-10)


def test_waiting_time_edges():
    wall = hard_limit_scenario(limit_age=115.0)
    assert expected_waiting_time(wall, 10, 120.0) == math.inf
    model = plateau(0.47)
    assert expected_waiting_time(model, 5, 110.0) == 1.0  # certain every year
    with pytest.raises(ValueError):
        expected_waiting_time(model, 0, 120.0)


# -- harmonic numbers and the overlay ------------------------------------------------


def test_harmonic_small_values():
    assert harmonic_number(1) == 1.0
    assert harmonic_number(2) == 1.5
    # Independent oracle: fractions summed exactly.
    from fractions import Fraction

    exact = Fraction(0)
    for i in range(1, 36):
        exact += Fraction(1, i)
    assert harmonic_number(35) == pytest.approx(float(exact), rel=1e-15)


def test_harmonic_asymptotic_continuity():
    exact = harmonic_number(1_000_000)
    asymptotic = math.log(1_000_001) + 0.5772156649015329 \
        + 1 / (2 * 1_000_001) - 1 / (12 * 1_000_001**2)
    assert harmonic_number(1_000_001) == pytest.approx(asymptotic, rel=1e-15)
    assert asymptotic == pytest.approx(exact + 1 / 1_000_001, rel=1e-12)


def test_max_exponential_mean_values():
    assert max_exponential_mean(1, 2.5) == pytest.approx(112.5, rel=1e-15)
    h5 = sum(1.0 / i for i in range(1, 6))
    assert max_exponential_mean(5, 1.31) == pytest.approx(110 + 1.31 * h5, rel=1e-14)
    assert max_exponential_mean(5, 1.31) == pytest.approx(112.99, abs=5e-3)
    assert max_exponential_mean(35, 1.31) == pytest.approx(115.43, abs=5e-3)
    with pytest.raises(ValueError):
        max_exponential_mean(0, 1.0)
    with pytest.raises(ValueError):
        max_exponential_mean(5, 0.0)


@given(st.integers(1, 400), st.floats(0.1, 5.0))
@settings(max_examples=100)
def test_max_exponential_mean_increasing_in_n(n, mu):
    assert max_exponential_mean(n + 1, mu) > max_exponential_mean(n, mu)


def test_max_exponential_cdf_values():
    assert max_exponential_cdf(1, 1.0, 110.0) == 0.0
    assert max_exponential_cdf(1, 1.0, 111.0) == pytest.approx(1 - math.exp(-1.0), rel=1e-14)
    expected = (1 - math.exp(-5.0 / 1.31)) ** 10
    assert max_exponential_cdf(10, 1.31, 115.0) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.800, abs=1e-3)
    with pytest.raises(ValueError):
        max_exponential_cdf(10, 1.31, 109.0)


def test_max_exponential_against_monte_carlo():
    # Simulation oracle for both the cdf value and the mean, n = 10.
    gen = np.random.default_rng(2024)
    reps = 1_000_000
    maxima = 1.31 * gen.standard_exponential((reps, 10)).max(axis=1)
    empirical_cdf = float(np.mean(maxima <= 5.0))
    analytic = max_exponential_cdf(10, 1.31, 115.0)
    se = math.sqrt(analytic * (1 - analytic) / reps)
    assert abs(empirical_cdf - analytic) <= 4 * se

    empirical_mean = 110.0 + float(maxima.mean())
    mean_se = float(maxima.std(ddof=1)) / math.sqrt(reps)
    assert abs(empirical_mean - max_exponential_mean(10, 1.31)) <= 4 * mean_se
