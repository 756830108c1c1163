"""Hazard trajectory unit tests and invariants."""

import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mradlab import hazards
from mradlab.hazards import (
    HazardModel,
    HazardVariant,
    decline_scenario,
    gompertz_crossing_age,
    hard_limit_scenario,
    life_table_scenario,
    plateau_scenario,
    sigmoid_scenario,
)


def plateau(q, x_p=110.0):
    return plateau_scenario(plateau_q=q, transition_age=x_p)


# -- annual_death_prob ---------------------------------------------------------


def test_plateau_value_past_transition():
    model = plateau(0.53, 110.0)
    assert model.annual_death_prob(130.0) == 0.53
    assert model.annual_death_prob(110.0) == 0.53


def test_hard_limit_is_one_at_endpoint():
    model = hard_limit_scenario(limit_age=115.0)
    assert model.annual_death_prob(115.0) == 1.0
    assert model.annual_death_prob(200.0) == 1.0
    assert model.annual_death_prob(114.9) < 1.0


def test_sigmoid_asymptote_never_attained():
    model = sigmoid_scenario(asymptote=1.0, transition_age=110.0)
    huge = model.annual_death_prob(1e6)
    assert huge < 1.0
    assert huge > model.annual_death_prob(200.0)


def test_rejects_bad_ages():
    model = plateau(0.5)
    for bad in (-1.0, math.nan, math.inf):
        with pytest.raises(ValueError):
            model.annual_death_prob(bad)


def test_gompertz_segment_continuous_at_crossing():
    crossing = gompertz_crossing_age(0.53)
    model = plateau_scenario(plateau_q=0.53)  # transition defaults to the crossing
    assert model.transition_age == pytest.approx(crossing)
    below = model.annual_death_prob(crossing - 1e-6)
    assert below == pytest.approx(0.53, abs=1e-5)


# -- cumulative_survival --------------------------------------------------------


def test_coin_toss_forty_years():
    # 0.5 per-year survival from 110 to 150: product of forty halves is
    # exactly 2**-40 in binary floating point.
    model = plateau(0.5, 110.0)
    assert model.cumulative_survival(110.0, 150.0) == 2.0**-40


def test_empty_interval_is_certain():
    model = plateau(0.5)
    assert model.cumulative_survival(110.0, 110.0) == 1.0


def test_plateau_fifteen_years():
    model = plateau(0.47, 110.0)
    expected = 0.53**15  # direct product oracle
    assert model.cumulative_survival(110.0, 125.0) == pytest.approx(expected, rel=1e-13)


def test_reversed_interval_rejected():
    with pytest.raises(ValueError):
        plateau(0.5).cumulative_survival(120.0, 110.0)


def test_fractional_boundaries_pro_rated():
    model = plateau(0.47, 110.0)
    s = 0.53
    assert model.cumulative_survival(110.0, 110.5) == pytest.approx(s**0.5, rel=1e-13)
    assert model.cumulative_survival(110.25, 112.5) == pytest.approx(s**2.25, rel=1e-13)


def test_survival_zero_past_hard_limit():
    model = hard_limit_scenario(limit_age=115.0)
    assert model.cumulative_survival(110.0, 115.0) > 0.0
    assert model.cumulative_survival(110.0, 115.5) == 0.0
    assert model.cumulative_survival(110.0, 120.0) == 0.0


# -- trajectory_table -----------------------------------------------------------


def test_trajectory_plateau_rows():
    model = plateau(0.53, 110.0)
    rows = model.trajectory_table(100.0, 120.0, 1.0)
    assert len(rows) == 21
    assert [age for age, _ in rows] == [100.0 + i for i in range(21)]
    for age, q in rows:
        if age >= 110.0:
            assert q == 0.53


def test_trajectory_hard_limit_rows():
    model = hard_limit_scenario(limit_age=115.0)
    rows = model.trajectory_table(110.0, 120.0, 1.0)
    for age, q in rows:
        assert (q == 1.0) == (age >= 115.0)


def test_trajectory_sigmoid_strictly_increasing():
    model = sigmoid_scenario(asymptote=1.0, transition_age=110.0)
    rows = model.trajectory_table(30.0, 200.0, 1.0)
    values = [q for _, q in rows]
    assert all(b > a for a, b in zip(values, values[1:]))
    assert values[-1] < 1.0


def test_trajectory_rejects_bad_step():
    with pytest.raises(ValueError):
        plateau(0.5).trajectory_table(100.0, 120.0, 0.0)


# -- endpoint -------------------------------------------------------------------


def test_endpoints():
    assert hard_limit_scenario(limit_age=115.0).endpoint() == 115.0
    assert plateau(0.53).endpoint() is None
    assert sigmoid_scenario(asymptote=1.0).endpoint() is None
    assert decline_scenario().endpoint() is None
    table = life_table_scenario([(110, 0.5), (111, 0.7), (112, 1.0)])
    assert table.endpoint() == 112.0
    open_table = life_table_scenario([(110, 0.5), (111, 0.7)])
    assert open_table.endpoint() is None


# -- validation -----------------------------------------------------------------


def test_constructor_validation():
    with pytest.raises(ValueError):
        HazardModel(HazardVariant.PLATEAU, transition_age=110.0, plateau_q=0.0)
    with pytest.raises(ValueError):
        HazardModel(HazardVariant.PLATEAU, transition_age=110.0, plateau_q=1.5)
    with pytest.raises(ValueError):
        HazardModel(HazardVariant.HARD_LIMIT)  # no limit age
    with pytest.raises(ValueError):
        HazardModel(HazardVariant.DECLINE, transition_age=110.0, decline_rate=-1.0)
    with pytest.raises(ValueError):
        HazardModel(HazardVariant.SIGMOID, transition_age=110.0, asymptote=0.1)
    with pytest.raises(ValueError):
        life_table_scenario([(110, 0.5), (112, 0.6)])  # gap
    with pytest.raises(ValueError):
        life_table_scenario([(110, 1.2)])


# -- property tests -------------------------------------------------------------


@st.composite
def hazard_models(draw):
    variant = draw(st.sampled_from(list(HazardVariant)))
    a = draw(st.floats(1e-6, 1e-3))
    b = draw(st.floats(0.05, 0.15))
    if variant is HazardVariant.HARD_LIMIT:
        return hard_limit_scenario(float(draw(st.integers(100, 130))), a, b)
    if variant is HazardVariant.PLATEAU:
        q = draw(st.floats(0.01, 1.0))
        x_p = float(draw(st.integers(90, 120))) if q == 1.0 else draw(st.floats(90.0, 120.0))
        return plateau_scenario(q, x_p, a, b)
    if variant is HazardVariant.DECLINE:
        return decline_scenario(draw(st.floats(90.0, 120.0)),
                                draw(st.floats(0.01, 0.5)), a, b)
    if variant is HazardVariant.SIGMOID:
        x_p = draw(st.floats(90.0, 120.0))
        floor = hazards._gompertz_annual_q(a, b, x_p)
        assume(floor < 0.98)
        c = draw(st.floats(min(floor + 0.01, 1.0), 1.0))
        return sigmoid_scenario(c, x_p, a, b)
    qs = draw(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12))
    return life_table_scenario([(100 + i, q) for i, q in enumerate(qs)])


@given(hazard_models(), st.floats(0.0, 300.0))
@settings(max_examples=200)
def test_annual_prob_in_unit_interval(model, age):
    q = model.annual_death_prob(age)
    assert 0.0 <= q <= 1.0


@given(hazard_models(), st.floats(100.0, 120.0), st.floats(0.0, 15.0), st.floats(0.0, 15.0))
@settings(max_examples=150)
def test_telescoping(model, start, d1, d2):
    mid = start + d1
    end = mid + d2
    whole = model.cumulative_survival(start, end)
    split = model.cumulative_survival(start, mid) * model.cumulative_survival(mid, end)
    assert whole == pytest.approx(split, rel=1e-12, abs=1e-300)


@given(st.floats(0.01, 0.99), st.integers(1, 64))
@settings(max_examples=100)
def test_plateau_closed_form_power(q, k):
    model = plateau(q, 110.0)
    s = 1.0 - q
    assert model.cumulative_survival(110.0, 110.0 + k) == pytest.approx(s**k, rel=1e-13)


@given(hazard_models())
@settings(max_examples=150)
def test_endpoint_iff_certain_death(model):
    endpoint = model.endpoint()
    if endpoint is not None:
        assert model.annual_death_prob(endpoint) == 1.0
        assert model.cumulative_survival(max(endpoint - 5.0, 0.0), endpoint + 1.0) == 0.0
    else:
        for age in (0.0, 50.0, 105.0, 111.0, 125.0, 180.0, 299.0):
            assert model.annual_death_prob(age) < 1.0


@given(hazard_models(), st.floats(100.0, 118.0), st.floats(0.1, 30.0))
@settings(max_examples=150)
def test_survival_zero_iff_certain_death_inside(model, start, span):
    end = start + span
    survival = model.cumulative_survival(start, end)
    endpoint = model.endpoint()
    expected_zero = endpoint is not None and end > endpoint
    assert (survival == 0.0) == expected_zero


# -- scenario config files ------------------------------------------------------


def test_load_scenarios(tmp_path):
    config = tmp_path / "scenarios.ini"
    config.write_text(
        "[mystery]\n"
        "variant = plateau\n"
        "plateau_q = 0.53\n"
        "transition_age = 110\n"
        "\n"
        "[wall]\n"
        "variant = hard_limit\n"
        "limit_age = 118\n"
    )
    scenarios = hazards.load_scenarios(config)
    assert scenarios["mystery"].annual_death_prob(120.0) == 0.53
    assert scenarios["wall"].endpoint() == 118.0


def test_load_scenarios_rejects_unknown_keys(tmp_path):
    config = tmp_path / "bad.ini"
    config.write_text("[x]\nvariant = plateau\nbogus = 1\n")
    with pytest.raises(hazards.ScenarioConfigError):
        hazards.load_scenarios(config)


def test_trajectory_csv_header(tmp_path):
    import io

    buffer = io.StringIO()
    hazards.write_trajectory_csv([(110.0, 0.53)], buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "age,annual_death_prob"
    assert lines[1] == "110.0,0.53"
