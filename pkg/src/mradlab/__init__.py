"""mradlab: models and statistics for the lifespan-limit debate.

Late-life mortality trajectories, analytic and simulated exceedance
probabilities, effective lifespan limits, extreme-value tail inference on
death records, and trend-break analysis of yearly maximum reported age at
death (MRAD).
"""

__version__ = "0.1.0"


class MradlabError(Exception):
    """Base class for mradlab domain errors."""


from .hazards import (  # noqa: E402
    HazardModel,
    HazardVariant,
    decline_scenario,
    gompertz_crossing_age,
    hard_limit_scenario,
    life_table_scenario,
    load_scenarios,
    plateau_scenario,
    sigmoid_scenario,
)
from .survival import (  # noqa: E402
    ExposurePlan,
    cohort_exceedance,
    expected_waiting_time,
    harmonic_number,
    individual_exceedance,
    max_exponential_cdf,
    max_exponential_mean,
)
from .limits import (  # noqa: E402
    EffectiveLimitResult,
    LimitSolveError,
    epsilon_at_age,
    limit_profile,
    solve_effective_limit,
)
from .dataio import (  # noqa: E402
    LifeRecord,
    LifeTable,
    ParseError,
    age_at_death,
    parse_life_table,
    parse_records,
    read_records,
    result_envelope,
    write_records,
)
from .tails import (  # noqa: E402
    FitError,
    HazardEstimate,
    TailFit,
    excesses,
    fit_exponential,
    fit_gpd,
    hazard_by_age,
    lr_test_exp_vs_gpd,
    split_period_test,
)
from .trends import (  # noqa: E402
    LinearFit,
    SegmentedFit,
    YearlyExtremeSeries,
    correlate,
    correlate_values,
    fit_linear,
    fit_segmented,
    yearly_extremes,
)
from .simulate import (  # noqa: E402
    SimulationConfig,
    SimulationError,
    empirical_exceedance,
    simulate_lifetimes,
    simulate_mrad_series,
)

__all__ = [
    "MradlabError",
    "HazardModel",
    "HazardVariant",
    "hard_limit_scenario",
    "plateau_scenario",
    "decline_scenario",
    "sigmoid_scenario",
    "life_table_scenario",
    "gompertz_crossing_age",
    "load_scenarios",
    "ExposurePlan",
    "individual_exceedance",
    "cohort_exceedance",
    "expected_waiting_time",
    "harmonic_number",
    "max_exponential_mean",
    "max_exponential_cdf",
    "EffectiveLimitResult",
    "LimitSolveError",
    "solve_effective_limit",
    "epsilon_at_age",
    "limit_profile",
    "LifeRecord",
    "LifeTable",
    "ParseError",
    "age_at_death",
    "parse_records",
    "read_records",
    "write_records",
    "parse_life_table",
    "result_envelope",
    "TailFit",
    "HazardEstimate",
    "FitError",
    "excesses",
    "fit_exponential",
    "fit_gpd",
    "lr_test_exp_vs_gpd",
    "split_period_test",
    "hazard_by_age",
    "YearlyExtremeSeries",
    "SegmentedFit",
    "LinearFit",
    "yearly_extremes",
    "fit_segmented",
    "fit_linear",
    "correlate",
    "correlate_values",
    "SimulationConfig",
    "SimulationError",
    "simulate_lifetimes",
    "simulate_mrad_series",
    "empirical_exceedance",
]
