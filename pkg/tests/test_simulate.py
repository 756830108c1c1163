"""Monte Carlo lifetime simulation: determinism, oracles, and series shape."""

import math

import numpy as np
import pytest

from mradlab import (
    ExposurePlan,
    SimulationConfig,
    cohort_exceedance,
    empirical_exceedance,
    fit_linear,
    hard_limit_scenario,
    harmonic_number,
    plateau_scenario,
    simulate_lifetimes,
    simulate_mrad_series,
)
from mradlab import simulate as simulate_module
from mradlab.dataio import parse_records, records_to_csv
from mradlab.tails import lr_test_exp_vs_gpd

PLATEAU_53 = plateau_scenario(plateau_q=0.53, transition_age=110.0)  # survival 0.47
PLATEAU_50 = plateau_scenario(plateau_q=0.5, transition_age=110.0)


def config(model, counts, seed=1, start_year=2000, replications=1, base_age=110.0):
    plan = ExposurePlan(base_age=base_age, start_year=start_year, counts=counts)
    return SimulationConfig(model=model, plan=plan, seed=seed, replications=replications)


# -- simulate_lifetimes -----------------------------------------------------------


def test_hard_limit_bounds_simulated_ages():
    cfg = config(hard_limit_scenario(limit_age=115.0), (500, 500), seed=3)
    records = simulate_lifetimes(cfg)
    assert len(records) == 1000
    assert all(110.0 <= r.age_at_death < 116.0 for r in records)


def test_plateau_survival_fraction_binomial_oracle():
    cfg = config(PLATEAU_50, (1_000_000,), seed=5)
    records = simulate_lifetimes(cfg)
    fraction = sum(r.age_at_death >= 120.0 for r in records) / 1_000_000
    expected = 0.5**10
    se = math.sqrt(expected * (1 - expected) / 1_000_000)
    assert abs(fraction - expected) <= 3 * se


def test_determinism_same_seed_byte_identical():
    cfg = config(PLATEAU_53, (20, 30), seed=42, start_year=1990)
    first = records_to_csv(simulate_lifetimes(cfg))
    second = records_to_csv(simulate_lifetimes(cfg))
    assert first == second
    different_seed = config(PLATEAU_53, (20, 30), seed=43, start_year=1990)
    assert records_to_csv(simulate_lifetimes(different_seed)) != first
    other_replication = records_to_csv(simulate_lifetimes(cfg, replication=1))
    assert other_replication != first


def test_records_round_trip_losslessly():
    cfg = config(PLATEAU_53, (25,), seed=11, start_year=1985)
    records = simulate_lifetimes(cfg)
    assert parse_records(records_to_csv(records)) == records


def test_record_fields():
    cfg = config(PLATEAU_53, (3,), seed=2, start_year=1995)
    records = simulate_lifetimes(cfg)
    assert [r.record_id for r in records] == [
        "r0-y1995-0000", "r0-y1995-0001", "r0-y1995-0002"]
    for r in records:
        assert r.age_at_death >= 110.0
        assert r.death_date.year >= 1995
        assert r.validated


def test_empty_plan():
    cfg = config(PLATEAU_53, (0, 0), seed=1)
    assert simulate_lifetimes(cfg) == []


def test_replications_validated():
    with pytest.raises(ValueError):
        config(PLATEAU_53, (1,), replications=0)


# -- simulate_mrad_series -----------------------------------------------------------


def test_series_single_individual_single_year():
    cfg = config(PLATEAU_53, (1,), seed=9, start_year=1991)
    records = simulate_lifetimes(cfg)
    series = simulate_mrad_series(cfg)
    assert len(series) == 1
    assert series.rows[0].mrad == records[0].age_at_death
    assert series.rows[0].death_count == 1


def test_series_stationary_plateau_level_and_trend():
    # 35 entrants/year for 30 years; mean yearly MRAD across 500 worlds
    # should sit in the mid-110s, cross-checked against the
    # max-of-exponentials overlay with the matched tail rate.
    from mradlab.trends import YearlyExtremeSeries

    plan = ExposurePlan(base_age=110.0, start_year=1970, counts=(35,) * 30)
    cfg = SimulationConfig(model=PLATEAU_53, plan=plan, seed=99, replications=500)
    means = []
    trend_ok = 0
    for rep in range(500):
        series = simulate_mrad_series(cfg, replication=rep)
        means.append(np.mean([row.mrad for row in series.rows]))
        if rep < 25:
            # Steady-state window: skip the burn-in (no old cohorts yet) and
            # the run-out after entries stop, both of which trend by design.
            steady = YearlyExtremeSeries(tuple(
                row for row in series.rows if 1980 <= row.year <= 1999))
            trend_ok += fit_linear(steady, "mrad").p_value > 0.05
    grand_mean = float(np.mean(means))
    assert 114.0 <= grand_mean <= 117.0
    # matched overlay: tail rate of the geometric yearly deaths
    mu_tail = -1.0 / math.log(0.47)
    overlay = 110.0 + mu_tail * harmonic_number(35)
    assert abs(grand_mean - overlay) < 1.5
    # stationary plan: no significant trend in the typical steady-state world
    assert trend_ok >= 20


def test_series_growing_plan_rises_by_harmonic_difference():
    # Counts 5 -> 35 over a decade; the rise in mean MRAD matches
    # mu_tail * (H_35 - H_5) from the order-statistics oracle.
    counts = (5,) * 15 + tuple(5 + 3 * i for i in range(1, 11)) + (35,) * 15
    plan = ExposurePlan(base_age=110.0, start_year=1960, counts=counts)
    cfg = SimulationConfig(model=PLATEAU_53, plan=plan, seed=7, replications=300)
    early, late = [], []
    for rep in range(300):
        series = simulate_mrad_series(cfg, replication=rep)
        for row in series.rows:
            if 1966 <= row.year <= 1974:
                early.append(row.mrad)
            elif 1988 <= row.year <= 1999:
                late.append(row.mrad)
    rise = float(np.mean(late) - np.mean(early))
    mu_tail = -1.0 / math.log(0.47)
    predicted = mu_tail * (harmonic_number(35) - harmonic_number(5))
    assert predicted == pytest.approx(2.47, abs=0.01)
    assert abs(rise - predicted) < 0.3


def test_simulated_excesses_near_exponential():
    # Yearly coin tosses make excess lifetimes geometric + uniform, which is
    # close to (but not exactly) exponential; the LR test therefore rejects
    # somewhat above the 5% nominal rate.  The band below documents that
    # discretization bias at cohort size 100.
    plan = ExposurePlan(base_age=110.0, start_year=2000, counts=(100,))
    rejections = 0
    replications = 400
    for rep in range(replications):
        cfg = SimulationConfig(model=PLATEAU_53, plan=plan, seed=202, replications=1)
        records = simulate_lifetimes(cfg, replication=rep)
        sample = [r.age_at_death - 110.0 for r in records if r.age_at_death > 110.0]
        _, p_value = lr_test_exp_vs_gpd(sample)
        rejections += p_value < 0.05
    assert 0.02 <= rejections / replications <= 0.22


# -- empirical_exceedance -------------------------------------------------------------


def test_exceedance_at_base_age_is_one():
    cfg = config(PLATEAU_53, (5,), seed=21, replications=200)
    estimate, se = empirical_exceedance(cfg, 110.0)
    assert estimate == 1.0
    assert se == 0.0


def test_exceedance_past_hard_limit_is_zero():
    cfg = config(hard_limit_scenario(limit_age=115.0), (50,), seed=22, replications=500)
    for target in (115.5, 116.0, 125.0):
        estimate, _ = empirical_exceedance(cfg, target)
        assert estimate == 0.0


def test_exceedance_matches_analytic():
    plan = ExposurePlan(base_age=110.0, start_year=1995, counts=(10, 10, 10))
    cfg = SimulationConfig(model=PLATEAU_53, plan=plan, seed=31, replications=40_000)
    for target in (115.0, 118.0, 120.5):
        estimate, se = empirical_exceedance(cfg, target)
        analytic = cohort_exceedance(PLATEAU_53, plan, target)
        assert abs(estimate - analytic) <= 4 * max(se, 1e-12)


def test_exceedance_chunk_independence(monkeypatch):
    cfg = config(PLATEAU_53, (7,), seed=33, replications=1000)
    full, _ = empirical_exceedance(cfg, 116.0)
    monkeypatch.setattr(simulate_module, "_REPLICATION_CHUNK_VALUES", 91)
    chunked, _ = empirical_exceedance(cfg, 116.0)
    assert chunked == full


def test_exceedance_validation():
    cfg = config(PLATEAU_53, (5,), seed=1, replications=99)
    with pytest.raises(ValueError):
        empirical_exceedance(cfg, 115.0)
    cfg = config(PLATEAU_53, (5,), seed=1, replications=100)
    with pytest.raises(ValueError):
        empirical_exceedance(cfg, 100.0)


def test_seeds_give_independent_series():
    plan = ExposurePlan(base_age=110.0, start_year=1980, counts=(25,) * 20)
    mrads = []
    for seed in (1, 2):
        cfg = SimulationConfig(model=PLATEAU_53, plan=plan, seed=seed)
        series = simulate_mrad_series(cfg)
        mrads.append({row.year: row.mrad for row in series.rows})
    shared_years = sorted(set(mrads[0]) & set(mrads[1]))
    a = np.array([mrads[0][y] for y in shared_years])
    b = np.array([mrads[1][y] for y in shared_years])
    assert abs(float(np.corrcoef(a, b)[0, 1])) < 0.5  # crude, small sample
