"""Extreme-value inference on excess lifetimes over a threshold.

Two nested tail families: exponential (constant force of mortality, rate
lambda) and generalized Pareto (shape xi, scale sigma), with xi = 0 handled
as an exact branch so the constant-hazard null is representable.  A shape
xi < 0 implies a finite upper endpoint at threshold + sigma/|xi|.

Likelihood-ratio tests use a chi-square(1) reference.  Caveat: xi = 0 is an
interior point of the allowed shape range (-1, 1), so no boundary
correction applies; the split-period test is the plain exponential-rate LR.
Records may carry an optional left-truncation age (entry into observation),
which turns likelihood contributions into conditional densities; calendar
interval truncation is not supported.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, stats

from . import MradlabError
from .dataio import LifeRecord

_MIN_GPD_SAMPLES = 10
_SHAPE_BOUND = 0.999
_CHI2_95_1DF = 3.841458820694124  # chi2.ppf(0.95, 1)
_Z95 = 1.959963984540054


class FitError(MradlabError):
    """Tail fitting failed (degenerate sample or non-convergence)."""


@dataclass(frozen=True)
class TailFit:
    """A fitted tail model for excesses above `threshold`."""

    threshold: float
    model_kind: str  # "exponential" or "gpd"
    log_likelihood: float
    sample_size: int
    rate: Optional[float] = None            # exponential rate per year
    rate_ci: Optional[tuple[float, float]] = None
    shape: Optional[float] = None           # GPD shape
    scale: Optional[float] = None           # GPD scale in years
    shape_ci: Optional[tuple[float, float]] = None
    endpoint: Optional[float] = None        # threshold + scale/|shape| when shape < 0

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "model_kind": self.model_kind,
            "log_likelihood": self.log_likelihood,
            "sample_size": self.sample_size,
            "rate": self.rate,
            "rate_ci": list(self.rate_ci) if self.rate_ci else None,
            "shape": self.shape,
            "scale": self.scale,
            "shape_ci": list(self.shape_ci) if self.shape_ci else None,
            "endpoint": self.endpoint,
        }


@dataclass(frozen=True)
class HazardEstimate:
    """Raw annual death probability estimate at one age."""

    age: int
    deaths: int
    at_risk: int
    q_hat: float
    ci_low: float
    ci_high: float


def excesses(records: Sequence[LifeRecord | float], threshold: float) -> list[float]:
    """Excess lifetimes (age - threshold) for records dying past the threshold.

    Accepts LifeRecord objects or plain ages; input order is preserved.  An
    empty result is legal and merely warned about.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    ages = [r.age_at_death if isinstance(r, LifeRecord) else float(r) for r in records]
    out = [age - threshold for age in ages if age > threshold]
    if not out:
        warnings.warn(f"no records above threshold {threshold}", stacklevel=2)
    return out


def _as_positive_array(values: Sequence[float], what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError(f"{what} must be finite and strictly positive")
    return arr


def _entry_array(entry: Optional[Sequence[float]], n: int) -> Optional[np.ndarray]:
    if entry is None:
        return None
    arr = np.asarray(entry, dtype=float)
    if arr.shape != (n,):
        raise ValueError("entry_excesses must match the sample length")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("entry_excesses must be finite and non-negative")
    return arr


def fit_exponential(sample: Sequence[float], threshold: float = 0.0,
                    entry_excesses: Optional[Sequence[float]] = None) -> TailFit:
    """Closed-form exponential MLE: rate = 1 / mean excess.

    With left truncation the sufficient statistic becomes sum(x - entry) by
    the memoryless property.  The 95% CI is a normal approximation on
    log(rate): rate * exp(+-1.96/sqrt(n)).
    """
    x = _as_positive_array(sample, "excesses")
    n = x.size
    if n < 2:
        raise FitError(f"need at least 2 excesses to fit, got {n}")
    entry = _entry_array(entry_excesses, n)
    exposed = float(np.sum(x)) if entry is None else float(np.sum(x - entry))
    if exposed <= 0:
        raise FitError("total exposure is not positive")
    rate = n / exposed
    log_likelihood = n * math.log(rate) - rate * exposed
    spread = math.exp(_Z95 / math.sqrt(n))
    return TailFit(
        threshold=threshold,
        model_kind="exponential",
        log_likelihood=log_likelihood,
        sample_size=n,
        rate=rate,
        rate_ci=(rate / spread, rate * spread),
    )


def _gpd_negloglik(shape: float, scale: float, x: np.ndarray,
                   entry: Optional[np.ndarray]) -> float:
    if scale <= 0 or not math.isfinite(scale):
        return math.inf
    if shape == 0.0:
        exposed = np.sum(x) if entry is None else np.sum(x - entry)
        return x.size * math.log(scale) + float(exposed) / scale
    z = shape * x / scale
    if np.min(z) <= -1.0:
        return math.inf
    value = x.size * math.log(scale) + (1.0 + 1.0 / shape) * float(np.sum(np.log1p(z)))
    if entry is not None:
        value -= float(np.sum(np.log1p(shape * entry / scale))) / shape
    return value


def _gpd_starts(x: np.ndarray) -> list[tuple[float, float]]:
    mean = float(np.mean(x))
    var = float(np.var(x))
    xmax = float(np.max(x))
    starts: list[tuple[float, float]] = []
    if var > 0:
        ratio = mean * mean / var
        shape0 = 0.5 * (1.0 - ratio)
        scale0 = 0.5 * mean * (ratio + 1.0)
        starts.append((float(np.clip(shape0, -0.9, 0.9)), scale0))
    for shape in (-0.4, 0.2, 1e-3):
        scale = mean * max(1.0 - shape, 0.1)
        starts.append((shape, scale))
    # Repair infeasible starts: a negative shape needs scale > |shape| * max(x).
    fixed = []
    for shape, scale in starts:
        if shape < 0:
            scale = max(scale, abs(shape) * xmax * 1.05)
        fixed.append((shape, max(scale, 1e-12)))
    return fixed


def _profile_reduction_nll(thetas: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Profile negative log-likelihood over theta = shape/scale.

    For fixed theta the inner maximum has the closed form
    shape = mean(log1p(theta*x)), scale = shape/theta, giving
    nll = n * (log(scale) + shape + 1).  Returns (nll, shape) per theta,
    with infeasible or out-of-bound rows set to +inf.
    """
    n = x.size
    z = thetas[:, None] * x[None, :]
    feasible = z.min(axis=1) > -1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        shape = np.where(feasible[:, None], np.log1p(np.where(z > -1.0, z, 0.0)),
                         np.nan).mean(axis=1)
        scale = shape / thetas
        nll = n * (np.log(scale) + shape + 1.0)
    bad = (~feasible) | ~np.isfinite(nll) | (np.abs(shape) > _SHAPE_BOUND) | (scale <= 0)
    nll = np.where(bad, np.inf, nll)
    return nll, shape


def _maximize_gpd_profile(x: np.ndarray) -> tuple[float, float, float]:
    """GPD optimum via the one-dimensional profile reduction (no truncation)."""
    n = x.size
    xmax = float(np.max(x))
    mean = float(np.mean(x))
    # theta must stay above -1/xmax (feasibility); shape(theta) grows only
    # logarithmically in theta, so the positive side needs a long reach
    # before the +-_SHAPE_BOUND cap filters it out.
    tiny = 1e-9 / mean
    negative = -np.geomspace(tiny, 0.999999 / xmax, 350)
    positive = np.geomspace(tiny, 1e3 / mean, 350)
    thetas = np.concatenate([negative[::-1], positive])
    nll, _ = _profile_reduction_nll(thetas, x)
    best_idx = int(np.argmin(nll))
    if not math.isfinite(nll[best_idx]):
        raise FitError("GPD profile scan found no feasible parameters")
    lo = thetas[max(best_idx - 1, 0)]
    hi = thetas[min(best_idx + 1, thetas.size - 1)]
    result = optimize.minimize_scalar(
        lambda t: float(_profile_reduction_nll(np.array([t]), x)[0][0]),
        bounds=(min(lo, hi), max(lo, hi)),
        method="bounded",
        options={"xatol": 1e-13},
    )
    candidates = [float(result.x), float(thetas[best_idx])]
    values, shapes = _profile_reduction_nll(np.array(candidates), x)
    pick = int(np.argmin(values))
    theta, value, shape = candidates[pick], float(values[pick]), float(shapes[pick])
    return shape, shape / theta, value


def _maximize_gpd(x: np.ndarray, entry: Optional[np.ndarray]) -> tuple[float, float, float]:
    """Return (shape, scale, negloglik) at the GPD optimum.

    Without truncation the exact one-dimensional profile reduction is used
    (dense scan plus bounded refinement); with truncation the profile has no
    closed form, so bounded quasi-Newton over (shape, log scale) runs from
    several starts.  The exact exponential point is always a candidate, so
    the fitted likelihood never falls below the nested exponential one.
    """
    best: Optional[tuple[float, float, float]] = None
    messages: list[str] = []
    if entry is None:
        try:
            best = _maximize_gpd_profile(x)
        except FitError as exc:
            messages.append(str(exc))
    else:
        def objective(theta: np.ndarray) -> float:
            return _gpd_negloglik(float(theta[0]), math.exp(float(theta[1])), x, entry)

        for shape0, scale0 in _gpd_starts(x):
            result = optimize.minimize(
                objective,
                x0=np.array([shape0, math.log(scale0)]),
                method="L-BFGS-B",
                bounds=[(-_SHAPE_BOUND, _SHAPE_BOUND), (None, None)],
            )
            if not np.all(np.isfinite(result.x)):
                messages.append(str(result.message))
                continue
            value = objective(result.x)
            if math.isfinite(value) and (best is None or value < best[2]):
                best = (float(result.x[0]), math.exp(float(result.x[1])), value)
            if not result.success:
                messages.append(str(result.message))
    exposed = float(np.sum(x)) if entry is None else float(np.sum(x - entry))
    scale_exp = exposed / x.size
    nll_exp = _gpd_negloglik(0.0, scale_exp, x, entry)
    if best is None or nll_exp <= best[2] + 1e-9:
        if best is None and not math.isfinite(nll_exp):
            raise FitError("GPD optimization failed from every start: " + "; ".join(messages))
        return 0.0, scale_exp, nll_exp
    return best


def _profile_negloglik(shape: float, x: np.ndarray, entry: Optional[np.ndarray],
                       scale_hint: float) -> float:
    xmax = float(np.max(x))
    lo = abs(shape) * xmax * (1 + 1e-10) if shape < 0 else scale_hint * 1e-8
    lo = max(lo, 1e-300)
    hi = max(scale_hint * 1e6, lo * 10)
    result = optimize.minimize_scalar(
        lambda ls: _gpd_negloglik(shape, math.exp(ls), x, entry),
        bounds=(math.log(lo), math.log(hi)),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(result.fun)


def _profile_shape_ci(shape_hat: float, nll_hat: float, x: np.ndarray,
                      entry: Optional[np.ndarray], scale_hint: float) -> tuple[float, float]:
    """95% profile-likelihood interval for the GPD shape."""

    def deviance(shape: float) -> float:
        return 2.0 * (_profile_negloglik(shape, x, entry, scale_hint) - nll_hat)

    def edge(direction: float) -> float:
        inside = shape_hat
        step = 0.05
        probe = shape_hat + direction * step
        while -_SHAPE_BOUND <= probe <= _SHAPE_BOUND:
            if deviance(probe) > _CHI2_95_1DF:
                break
            inside = probe
            step *= 2.0
            probe = shape_hat + direction * step
        else:
            return direction * _SHAPE_BOUND
        probe = float(np.clip(probe, -_SHAPE_BOUND, _SHAPE_BOUND))
        lo, hi = (inside, probe) if direction > 0 else (probe, inside)
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if (deviance(mid) > _CHI2_95_1DF) == (direction > 0):
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-4:
                break
        return 0.5 * (lo + hi)

    return (edge(-1.0), edge(1.0))


def fit_gpd(sample: Sequence[float], threshold: float = 0.0,
            entry_excesses: Optional[Sequence[float]] = None,
            compute_ci: bool = True) -> TailFit:
    """Generalized Pareto MLE on threshold excesses.

    Refuses samples below 10 values (unstable) and degenerate all-equal
    samples.  When the fitted shape is negative the implied endpoint
    threshold + scale/|shape| is reported.
    """
    x = _as_positive_array(sample, "excesses")
    n = x.size
    if n < _MIN_GPD_SAMPLES:
        raise FitError(f"need at least {_MIN_GPD_SAMPLES} excesses for a GPD fit, got {n}")
    if np.ptp(x) == 0:
        raise FitError("degenerate sample: all excesses are equal")
    entry = _entry_array(entry_excesses, n)
    shape, scale, nll = _maximize_gpd(x, entry)
    endpoint = threshold + scale / abs(shape) if shape < 0 else None
    shape_ci = None
    if compute_ci:
        shape_ci = _profile_shape_ci(shape, nll, x, entry, scale)
    return TailFit(
        threshold=threshold,
        model_kind="gpd",
        log_likelihood=-nll,
        sample_size=n,
        shape=shape,
        scale=scale,
        shape_ci=shape_ci,
        endpoint=endpoint,
    )


def lr_test_exp_vs_gpd(sample: Sequence[float],
                       entry_excesses: Optional[Sequence[float]] = None) -> tuple[float, float]:
    """Likelihood-ratio test of the exponential tail inside the GPD family.

    Returns (statistic, p_value); the statistic is 2 * (gpd - exponential)
    log-likelihood, never negative because the exponential point is a GPD
    candidate.  Small p rejects constant force of mortality.
    """
    gpd_fit = fit_gpd(sample, entry_excesses=entry_excesses, compute_ci=False)
    exp_fit = fit_exponential(sample, entry_excesses=entry_excesses)
    statistic = 2.0 * (gpd_fit.log_likelihood - exp_fit.log_likelihood)
    statistic = max(statistic, 0.0)
    return statistic, float(stats.chi2.sf(statistic, df=1))


def split_period_test(sample_a: Sequence[float],
                      sample_b: Sequence[float]) -> tuple[float, float]:
    """LR test of equal exponential rates in two periods against free rates.

    Returns (statistic, p_value) with a chi-square(1) reference; symmetric
    in its arguments.
    """
    a = _as_positive_array(sample_a, "excesses")
    b = _as_positive_array(sample_b, "excesses")
    if a.size < 2 or b.size < 2:
        raise FitError("each period needs at least 2 excesses")
    n_a, n_b = a.size, b.size
    sum_a, sum_b = float(np.sum(a)), float(np.sum(b))
    loglik_split = n_a * math.log(n_a / sum_a) + n_b * math.log(n_b / sum_b)
    loglik_pooled = (n_a + n_b) * math.log((n_a + n_b) / (sum_a + sum_b))
    statistic = max(2.0 * (loglik_split - loglik_pooled), 0.0)
    return statistic, float(stats.chi2.sf(statistic, df=1))


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score 95% interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if successes == 0 else max(center - half, 0.0)
    high = 1.0 if successes == trials else min(center + half, 1.0)
    return (low, high)


def hazard_by_age(records: Sequence[LifeRecord | float],
                  ages: Sequence[int]) -> list[HazardEstimate]:
    """Raw annual death probabilities with Wilson 95% intervals.

    For each integer age x: at risk = deaths at ages >= x, deaths = deaths in
    [x, x+1).  Ages where nobody is at risk yield no estimate (rather than a
    division error).  Assumes a cohort fully observed from the youngest
    requested age (no censoring).
    """
    death_ages = np.asarray(
        [r.age_at_death if isinstance(r, LifeRecord) else float(r) for r in records],
        dtype=float,
    )
    estimates: list[HazardEstimate] = []
    for age in ages:
        if age != int(age):
            raise ValueError(f"ages must be integers, got {age}")
        age = int(age)
        at_risk = int(np.sum(death_ages >= age))
        if at_risk == 0:
            continue
        deaths = int(np.sum((death_ages >= age) & (death_ages < age + 1)))
        q_hat = deaths / at_risk
        ci_low, ci_high = wilson_interval(deaths, at_risk)
        estimates.append(HazardEstimate(age, deaths, at_risk, q_hat, ci_low, ci_high))
    return estimates


HAZARD_CSV_HEADER = "age,n,d,q_hat,ci_low,ci_high"


def write_hazard_csv(estimates: Sequence[HazardEstimate], fh) -> None:
    fh.write(HAZARD_CSV_HEADER + "\n")
    for e in estimates:
        fh.write(f"{e.age},{e.at_risk},{e.deaths},{e.q_hat!r},{e.ci_low!r},{e.ci_high!r}\n")
