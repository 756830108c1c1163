"""Late-life mortality trajectories behind one interface.

Every model exposes the annual probability of death q(x) as a function of
age.  Below a transition age the hazard follows a Gompertz law, converted
from the continuous hazard h(x) = a*exp(b*x) to an annual probability via

    q(x) = 1 - exp(-(a/b) * (exp(b*(x+1)) - exp(b*x)))

Past the transition the five variants diverge: certain death at a finite
age (hard limit), a constant plateau, an exponential late-life decline, a
logistic approach to an asymptote, or direct table lookup.
"""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence

from . import MradlabError

# Defaults give q ~ 1e-4 at age 0 and a hazard doubling time of ~8 years.
DEFAULT_GOMPERTZ_A = 1e-4
DEFAULT_GOMPERTZ_B = 0.085

# q values are capped one ulp below 1 so that q(x) == 1.0 happens only where
# a variant dictates certain death (hard limit endpoint, table entry of 1).
_ONE_BELOW = math.nextafter(1.0, 0.0)
_EXP_OVERFLOW = 700.0

TRAJECTORY_CSV_HEADER = "age,annual_death_prob"


class HazardVariant(enum.Enum):
    HARD_LIMIT = "hard_limit"
    PLATEAU = "plateau"
    DECLINE = "decline"
    SIGMOID = "sigmoid"
    LIFE_TABLE = "life_table"


def _gompertz_annual_q(a: float, b: float, age: float) -> float:
    # Integrated hazard over [age, age+1), computed in log space to survive
    # extreme ages without overflow.
    log_dh = math.log(a / b) + b * age + math.log(math.expm1(b))
    if log_dh > _EXP_OVERFLOW:
        return _ONE_BELOW
    q = -math.expm1(-math.exp(log_dh))
    return min(q, _ONE_BELOW)


def _gompertz_annual_q_slope(a: float, b: float, age: float) -> float:
    # d/dx of the annual probability; used to splice the sigmoid on smoothly.
    dh = (a / b) * math.expm1(b) * math.exp(b * age)
    return b * dh * math.exp(-dh)


def gompertz_crossing_age(target_q: float, gompertz_a: float = DEFAULT_GOMPERTZ_A,
                          gompertz_b: float = DEFAULT_GOMPERTZ_B) -> float:
    """Age at which the Gompertz annual death probability reaches `target_q`."""
    if not 0.0 < target_q < 1.0:
        raise ValueError("target_q must be in (0, 1)")
    amp = (gompertz_a / gompertz_b) * math.expm1(gompertz_b)
    return math.log(-math.log1p(-target_q) / amp) / gompertz_b


@dataclass(frozen=True)
class HazardModel:
    """One parametric late-life mortality trajectory.

    Fields not used by the chosen variant stay None.  Models are immutable
    and all methods are pure, so instances are safe to share across threads.
    """

    variant: HazardVariant
    gompertz_a: float = DEFAULT_GOMPERTZ_A
    gompertz_b: float = DEFAULT_GOMPERTZ_B
    transition_age: Optional[float] = None
    plateau_q: Optional[float] = None
    decline_rate: Optional[float] = None
    asymptote: Optional[float] = None
    limit_age: Optional[float] = None
    table: Optional[tuple[tuple[int, float], ...]] = None

    def __post_init__(self) -> None:
        if self.gompertz_a <= 0 or self.gompertz_b <= 0:
            raise ValueError("gompertz parameters must be positive")
        v = self.variant
        if v is HazardVariant.HARD_LIMIT:
            if self.limit_age is None or not math.isfinite(self.limit_age) or self.limit_age < 0:
                raise ValueError("hard-limit model needs a finite non-negative limit_age")
            if self.limit_age != math.floor(self.limit_age):
                # The annual grid samples q at whole years only; a mid-year
                # certain-death age would be invisible to it.
                raise ValueError("limit_age must be a whole year")
        elif v is HazardVariant.PLATEAU:
            self._require_transition()
            if self.plateau_q is None or not 0.0 < self.plateau_q <= 1.0:
                raise ValueError("plateau_q must be in (0, 1]")
            if self.plateau_q == 1.0 and self.transition_age != math.floor(self.transition_age):
                raise ValueError("a plateau at q = 1 must start on a whole year")
        elif v is HazardVariant.DECLINE:
            self._require_transition()
            if self.decline_rate is None or self.decline_rate <= 0:
                raise ValueError("decline_rate must be positive")
        elif v is HazardVariant.SIGMOID:
            self._require_transition()
            if self.asymptote is None or not 0.0 < self.asymptote <= 1.0:
                raise ValueError("asymptote must be in (0, 1]")
            value = _gompertz_annual_q(self.gompertz_a, self.gompertz_b, self.transition_age)
            if value >= self.asymptote:
                raise ValueError(
                    f"asymptote {self.asymptote} not above the hazard "
                    f"{value:.4g} already reached at the transition age"
                )
            slope = _gompertz_annual_q_slope(self.gompertz_a, self.gompertz_b, self.transition_age)
            steepness = slope / (value * (1.0 - value / self.asymptote))
            midpoint = self.transition_age + math.log(self.asymptote / value - 1.0) / steepness
            object.__setattr__(self, "_sigmoid_steepness", steepness)
            object.__setattr__(self, "_sigmoid_midpoint", midpoint)
        elif v is HazardVariant.LIFE_TABLE:
            if not self.table:
                raise ValueError("life-table model needs a non-empty table")
            ages = [row[0] for row in self.table]
            if ages != list(range(ages[0], ages[0] + len(ages))):
                raise ValueError("life-table ages must be contiguous integers")
            for age, q in self.table:
                if not 0.0 <= q <= 1.0:
                    raise ValueError(f"life-table q at age {age} outside [0, 1]")
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unknown variant {v}")

    def _require_transition(self) -> None:
        if self.transition_age is None or not math.isfinite(self.transition_age) or self.transition_age < 0:
            raise ValueError(f"{self.variant.value} model needs a finite non-negative transition_age")

    # -- annual probability ------------------------------------------------

    def annual_death_prob(self, age: float) -> float:
        """Probability of dying within one year for someone aged `age`."""
        if not math.isfinite(age) or age < 0:
            raise ValueError(f"age must be finite and non-negative, got {age}")
        v = self.variant
        if v is HazardVariant.HARD_LIMIT:
            if age >= self.limit_age:
                return 1.0
            return self._gompertz(age)
        if v is HazardVariant.PLATEAU:
            if age >= self.transition_age:
                return self.plateau_q
            return self._gompertz(age)
        if v is HazardVariant.DECLINE:
            if age > self.transition_age:
                peak = self._gompertz(self.transition_age)
                return peak * math.exp(-self.decline_rate * (age - self.transition_age))
            return self._gompertz(age)
        if v is HazardVariant.SIGMOID:
            if age >= self.transition_age:
                return self._logistic(age)
            return self._gompertz(age)
        return self._table_q(age)

    def _gompertz(self, age: float) -> float:
        return _gompertz_annual_q(self.gompertz_a, self.gompertz_b, age)

    def _logistic(self, age: float) -> float:
        c = self.asymptote
        t = self._sigmoid_steepness * (age - self._sigmoid_midpoint)
        if t >= 0:
            e = math.exp(-t) if t < _EXP_OVERFLOW else 0.0
            q = c / (1.0 + e)
        else:
            e = math.exp(t) if -t < _EXP_OVERFLOW else 0.0
            q = c * e / (1.0 + e)
        # The asymptote is approached, never attained.
        return min(q, math.nextafter(c, 0.0))

    def _table_q(self, age: float) -> float:
        first_age = self.table[0][0]
        last_age = self.table[-1][0]
        idx = int(math.floor(age))
        idx = min(max(idx, first_age), last_age)
        return self.table[idx - first_age][1]

    # -- survival ----------------------------------------------------------

    def cumulative_survival(self, from_age: float, to_age: float) -> float:
        """Probability of surviving from `from_age` to `to_age`.

        Whole years contribute factors (1 - q(y)); fractional boundary years
        are pro-rated by exponent, (1 - q(y))**fraction, so the result is a
        continuous, monotone function of both endpoints.
        """
        for name, value in (("from_age", from_age), ("to_age", to_age)):
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if from_age > to_age:
            raise ValueError(f"reversed interval: from_age {from_age} > to_age {to_age}")
        if from_age == to_age:
            return 1.0
        result = 1.0
        cursor = from_age
        floor_cursor = math.floor(cursor)
        if cursor > floor_cursor:
            upper = min(to_age, floor_cursor + 1.0)
            result *= (1.0 - self.annual_death_prob(floor_cursor)) ** (upper - cursor)
            cursor = upper
        if cursor >= to_age:
            return result
        year = int(cursor)
        while year + 1 <= to_age and result > 0.0:
            result *= 1.0 - self.annual_death_prob(float(year))
            year += 1
        if result > 0.0 and year < to_age:
            result *= (1.0 - self.annual_death_prob(float(year))) ** (to_age - year)
        return result

    # -- inspection ----------------------------------------------------------

    def trajectory_table(self, age_start: float, age_end: float,
                         step: float = 1.0) -> list[tuple[float, float]]:
        """Evenly spaced (age, annual_death_prob) rows over [age_start, age_end]."""
        if step <= 0:
            raise ValueError("step must be positive")
        if age_start >= age_end:
            raise ValueError("age_start must be below age_end")
        count = int(math.floor((age_end - age_start) / step + 1e-9)) + 1
        rows = []
        for i in range(count):
            age = age_start + i * step
            rows.append((age, self.annual_death_prob(age)))
        return rows

    def endpoint(self) -> Optional[float]:
        """Smallest age with q = 1 (survival past it impossible), if any."""
        if self.variant is HazardVariant.HARD_LIMIT:
            return self.limit_age
        if self.variant is HazardVariant.PLATEAU and self.plateau_q == 1.0:
            return self.transition_age
        if self.variant is HazardVariant.LIFE_TABLE:
            for age, q in self.table:
                if q == 1.0:
                    return float(age)
        return None


# -- scenario constructors ---------------------------------------------------


def hard_limit_scenario(limit_age: float = 115.0,
                        gompertz_a: float = DEFAULT_GOMPERTZ_A,
                        gompertz_b: float = DEFAULT_GOMPERTZ_B) -> HazardModel:
    """Mortality rises exponentially and hits 1 at `limit_age`."""
    return HazardModel(HazardVariant.HARD_LIMIT, gompertz_a, gompertz_b,
                       limit_age=limit_age)


def plateau_scenario(plateau_q: float = 0.53,
                     transition_age: Optional[float] = None,
                     gompertz_a: float = DEFAULT_GOMPERTZ_A,
                     gompertz_b: float = DEFAULT_GOMPERTZ_B) -> HazardModel:
    """Mortality rises exponentially, then stays constant at `plateau_q`.

    With the default transition_age=None the plateau starts where the
    Gompertz curve first reaches `plateau_q`, making the trajectory
    continuous.
    """
    if transition_age is None:
        transition_age = gompertz_crossing_age(plateau_q, gompertz_a, gompertz_b)
    return HazardModel(HazardVariant.PLATEAU, gompertz_a, gompertz_b,
                       transition_age=transition_age, plateau_q=plateau_q)


def decline_scenario(transition_age: float = 110.0, decline_rate: float = 0.1,
                     gompertz_a: float = DEFAULT_GOMPERTZ_A,
                     gompertz_b: float = DEFAULT_GOMPERTZ_B) -> HazardModel:
    """Mortality rises exponentially, then decays exponentially past the peak."""
    return HazardModel(HazardVariant.DECLINE, gompertz_a, gompertz_b,
                       transition_age=transition_age, decline_rate=decline_rate)


def sigmoid_scenario(asymptote: float = 1.0, transition_age: float = 110.0,
                     gompertz_a: float = DEFAULT_GOMPERTZ_A,
                     gompertz_b: float = DEFAULT_GOMPERTZ_B) -> HazardModel:
    """Mortality levels off towards `asymptote`, splined C1-smoothly at the transition."""
    return HazardModel(HazardVariant.SIGMOID, gompertz_a, gompertz_b,
                       transition_age=transition_age, asymptote=asymptote)


def life_table_scenario(table: Iterable[tuple[int, float]]) -> HazardModel:
    """Annual death probabilities read straight from a life table."""
    return HazardModel(HazardVariant.LIFE_TABLE, table=tuple((int(a), float(q)) for a, q in table))


# -- scenario configuration files ---------------------------------------------

_SCENARIO_BUILDERS = {
    "hard_limit": (hard_limit_scenario, {"limit_age", "gompertz_a", "gompertz_b"}),
    "plateau": (plateau_scenario, {"plateau_q", "transition_age", "gompertz_a", "gompertz_b"}),
    "decline": (decline_scenario, {"transition_age", "decline_rate", "gompertz_a", "gompertz_b"}),
    "sigmoid": (sigmoid_scenario, {"asymptote", "transition_age", "gompertz_a", "gompertz_b"}),
}


class ScenarioConfigError(MradlabError):
    """A scenario configuration file could not be interpreted."""


def load_scenarios(path: str | Path) -> dict[str, HazardModel]:
    """Read scenario definitions from a key/value config file.

    One section per scenario: the section name labels it, `variant` picks
    the trajectory, the remaining keys set that variant's parameters.
    Life-table scenarios point at their CSV with `table_path` (resolved
    relative to the config file).
    """
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ScenarioConfigError(f"cannot read scenario file {path}")
    scenarios: dict[str, HazardModel] = {}
    for name in parser.sections():
        section = parser[name]
        variant = section.get("variant")
        if variant is None:
            raise ScenarioConfigError(f"scenario [{name}] is missing the variant key")
        if variant == "life_table":
            table_path = section.get("table_path")
            if table_path is None:
                raise ScenarioConfigError(f"scenario [{name}] needs table_path")
            from .dataio import read_life_table

            table = read_life_table(path.parent / table_path)
            scenarios[name] = life_table_scenario(table.rows)
            continue
        if variant not in _SCENARIO_BUILDERS:
            raise ScenarioConfigError(f"scenario [{name}] has unknown variant {variant!r}")
        builder, allowed = _SCENARIO_BUILDERS[variant]
        kwargs = {}
        for key in section:
            if key == "variant":
                continue
            if key not in allowed:
                raise ScenarioConfigError(f"scenario [{name}]: unknown key {key!r} for {variant}")
            kwargs[key] = float(section[key])
        try:
            scenarios[name] = builder(**kwargs)
        except ValueError as exc:
            raise ScenarioConfigError(f"scenario [{name}]: {exc}") from exc
    return scenarios


def write_trajectory_csv(rows: Sequence[tuple[float, float]], fh: IO[str]) -> None:
    """Emit trajectory rows as CSV with the canonical header."""
    fh.write(TRAJECTORY_CSV_HEADER + "\n")
    for age, q in rows:
        fh.write(f"{age!r},{q!r}\n")
