"""Yearly extreme-age series and trend analysis.

Builds per-calendar-year summaries of death records (count, maximum
reported age at death, and the 2nd..k-th highest ages) and fits trends to
any of those columns: single-line least squares, two independent lines
around a searched break year, and rank or product-moment correlations.

The break search scans every interior year with enough support on both
sides and keeps the split with the smallest total squared error.  The
F-test p-value treats the chosen break as if it had been fixed in advance,
which overstates significance when the break was searched for; the
permutation option (shuffling single-line residuals and re-searching)
gives an honest reference at extra cost.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import IO, Optional, Sequence

import numpy as np
from scipy import stats

from .dataio import LifeRecord

SUPERCENTENARIAN_AGE = 110.0
_MIN_SEGMENT = 4


@dataclass(frozen=True)
class YearRow:
    """One calendar year of extreme-age data."""

    year: int
    death_count: int
    top_ages: tuple[float, ...]  # descending; [0] is the MRAD

    @property
    def mrad(self) -> float:
        return self.top_ages[0]

    def kth_highest(self, k: int) -> Optional[float]:
        """k-th highest age at death that year (k = 1 is the MRAD)."""
        if k < 1:
            raise ValueError("k must be at least 1")
        return self.top_ages[k - 1] if len(self.top_ages) >= k else None


@dataclass(frozen=True)
class YearlyExtremeSeries:
    rows: tuple[YearRow, ...]
    threshold: float = SUPERCENTENARIAN_AGE
    k_max: int = 5
    country: Optional[str] = None

    def __post_init__(self) -> None:
        years = [row.year for row in self.rows]
        if years != sorted(set(years)):
            raise ValueError("rows must be strictly increasing in year")
        for row in self.rows:
            if row.death_count < len(row.top_ages):
                raise ValueError(f"year {row.year}: more ranked ages than deaths")
            if list(row.top_ages) != sorted(row.top_ages, reverse=True):
                raise ValueError(f"year {row.year}: top ages must be non-increasing")

    def __len__(self) -> int:
        return len(self.rows)

    def _value(self, row: YearRow, field: str) -> Optional[float]:
        if field == "year":
            return float(row.year)
        if field == "n_t":
            return float(row.death_count)
        if field == "mrad":
            return row.mrad
        if field.startswith("rank"):
            return row.kth_highest(int(field[4:]))
        raise ValueError(f"unknown field {field!r}")

    def column(self, field: str) -> tuple[np.ndarray, np.ndarray]:
        """(years, values) for one field, dropping years where it is absent."""
        years, values = [], []
        for row in self.rows:
            value = self._value(row, field)
            if value is not None:
                years.append(row.year)
                values.append(value)
        return np.asarray(years, dtype=float), np.asarray(values, dtype=float)

    def columns(self, x_field: str, y_field: str) -> tuple[np.ndarray, np.ndarray]:
        """Aligned (x, y) pairs over years where both fields are present."""
        xs, ys = [], []
        for row in self.rows:
            x = self._value(row, x_field)
            y = self._value(row, y_field)
            if x is not None and y is not None:
                xs.append(x)
                ys.append(y)
        return np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)

    def to_csv(self, fh: IO[str]) -> None:
        ranks = [f"rank{k}" for k in range(2, self.k_max + 1)]
        fh.write(",".join(["year", "n_t", "mrad"] + ranks) + "\n")
        for row in self.rows:
            cells = [str(row.year), str(row.death_count), repr(row.mrad)]
            for k in range(2, self.k_max + 1):
                value = row.kth_highest(k)
                cells.append("" if value is None else repr(value))
            fh.write(",".join(cells) + "\n")


def yearly_extremes(records: Sequence[LifeRecord], k_max: int = 5,
                    country: Optional[str] = None,
                    threshold: float = SUPERCENTENARIAN_AGE) -> YearlyExtremeSeries:
    """Per-year death counts and top-k exact ages among qualifying deaths.

    Qualifying deaths are those at or above `threshold` (and matching
    `country` when given).  Only years with at least one qualifying death
    get a row; ties are reported as repeated values.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    by_year: dict[int, list[float]] = {}
    for record in records:
        if country is not None and record.country != country:
            continue
        age = record.age_at_death
        if age < threshold:
            continue
        by_year.setdefault(record.death_year, []).append(age)
    if not by_year:
        warnings.warn("no qualifying records; series is empty", stacklevel=2)
    rows = []
    for year in sorted(by_year):
        ages = sorted(by_year[year], reverse=True)
        rows.append(YearRow(year=year, death_count=len(ages),
                            top_ages=tuple(ages[:k_max])))
    return YearlyExtremeSeries(tuple(rows), threshold=threshold, k_max=k_max,
                               country=country)


# -- least squares helpers ----------------------------------------------------


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """(slope, intercept, sse) of ordinary least squares."""
    n = x.size
    x_mean = float(np.mean(x))
    y_mean = float(np.mean(y))
    dx = x - x_mean
    dy = y - y_mean
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise ValueError("degenerate regression: no variation in x")
    slope = float(np.dot(dx, dy)) / sxx
    intercept = y_mean - slope * x_mean
    residual = dy - slope * dx
    return slope, intercept, float(np.dot(residual, residual))


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    p_value: float
    stderr: float
    n: int

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "p_value": self.p_value, "stderr": self.stderr, "n": self.n}


def fit_linear(series: YearlyExtremeSeries, field: str = "mrad") -> LinearFit:
    """Single ordinary-least-squares line; p-value for slope != 0 via Student t."""
    x, y = series.column(field)
    return fit_linear_values(x, y)


def fit_linear_values(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError(f"need at least 3 rows, got {n}")
    slope, intercept, sse = _ols(x, y)
    sxx = float(np.sum((x - np.mean(x)) ** 2))
    dof = n - 2
    if sse <= 0.0:
        # Noiseless data: the slope is either exactly zero or exactly trending.
        return LinearFit(slope, intercept, 1.0 if slope == 0.0 else 0.0, 0.0, n)
    stderr = math.sqrt(sse / dof / sxx)
    t_stat = slope / stderr
    p_value = 2.0 * float(stats.t.sf(abs(t_stat), dof))
    return LinearFit(slope, intercept, p_value, stderr, n)


# -- segmented (trend-break) regression ----------------------------------------


@dataclass(frozen=True)
class SegmentedFit:
    break_year: float
    slope_before: float
    slope_after: float
    intercept_before: float
    intercept_after: float
    sse_segmented: float
    sse_single: float
    f_statistic: float
    p_value: float
    permutation_p: Optional[float] = None
    n: int = 0

    def as_dict(self) -> dict:
        return {
            "break_year": self.break_year,
            "slope_before": self.slope_before,
            "slope_after": self.slope_after,
            "intercept_before": self.intercept_before,
            "intercept_after": self.intercept_after,
            "sse_segmented": self.sse_segmented,
            "sse_single": self.sse_single,
            "f_statistic": self.f_statistic,
            "p_value": self.p_value,
            "permutation_p": self.permutation_p,
            "n": self.n,
        }


def _prefix_sums(values: np.ndarray) -> np.ndarray:
    out = np.zeros(values.shape[:-1] + (values.shape[-1] + 1,), dtype=float)
    np.cumsum(values, axis=-1, out=out[..., 1:])
    return out


class _BreakScanner:
    """Precomputed prefix sums for scanning every candidate break of one x grid.

    Works on batches of y vectors so permutation references reuse the x-side
    work.  x is centred once for numerical stability.
    """

    def __init__(self, x: np.ndarray, min_segment: int = _MIN_SEGMENT):
        n = x.size
        if n < 2 * min_segment:
            raise ValueError(
                f"need at least {2 * min_segment} rows for a break search, got {n}"
            )
        self.x_raw = x
        self.x_shift = float(np.mean(x))
        self.x = x - self.x_shift
        self.n = n
        # Candidate break at index i: left segment [0..i], right [i+1..n-1].
        self.splits = np.arange(min_segment - 1, n - min_segment)
        self.p1 = _prefix_sums(np.ones_like(self.x))
        self.px = _prefix_sums(self.x)
        self.pxx = _prefix_sums(self.x * self.x)

    def _segment_terms(self, py: np.ndarray, pxy: np.ndarray, pyy: np.ndarray,
                       i: np.ndarray, j: np.ndarray):
        """SSE and slope of per-segment OLS over index range [i, j), batched."""
        m = self.p1[j] - self.p1[i]
        sx = self.px[j] - self.px[i]
        sxx = self.pxx[j] - self.pxx[i]
        sy = py[..., j] - py[..., i]
        sxy = pxy[..., j] - pxy[..., i]
        syy = pyy[..., j] - pyy[..., i]
        var_x = sxx - sx * sx / m
        cov = sxy - sx * sy / m
        var_y = syy - sy * sy / m
        slope = cov / var_x
        sse = var_y - cov * cov / var_x
        return np.maximum(sse, 0.0), slope, sy / m - slope * (sx / m)

    def _hinge_residual_makers(self) -> np.ndarray:
        # I - H_b for the continuous (joined) model [1, x, (x - b)+] at every
        # candidate break; one n x n matrix per candidate, computed once.
        makers = np.empty((self.splits.size, self.n, self.n))
        identity = np.eye(self.n)
        for row, split in enumerate(self.splits):
            hinge = np.maximum(self.x - self.x[split], 0.0)
            design = np.column_stack([np.ones(self.n), self.x, hinge])
            hat = design @ np.linalg.pinv(design)
            makers[row] = identity - hat
        return makers

    def scan(self, y_batch: np.ndarray, continuous: bool = False):
        """Minimum segmented SSE per row of `y_batch`, plus single-line SSE.

        Returns (best_split_index, sse_segmented, sse_single) arrays; ties in
        SSE (within a tiny tolerance) resolve to the latest candidate year so
        noiseless kinked data reports the last year of the first regime.
        """
        y = np.atleast_2d(np.asarray(y_batch, dtype=float))
        py = _prefix_sums(y)
        pxy = _prefix_sums(y * self.x)
        pyy = _prefix_sums(y * y)
        if continuous:
            if not hasattr(self, "_residual_makers"):
                self._residual_makers = self._hinge_residual_makers()
            residuals = np.einsum("cij,bj->bci", self._residual_makers, y)
            total = np.einsum("bci,bi->bc", residuals, y)
            total = np.maximum(total, 0.0)
        else:
            i0 = np.zeros_like(self.splits)
            left_sse, _, _ = self._segment_terms(py, pxy, pyy, i0, self.splits + 1)
            nn = np.full_like(self.splits, self.n)
            right_sse, _, _ = self._segment_terms(py, pxy, pyy, self.splits + 1, nn)
            total = left_sse + right_sse  # (batch, n_candidates)
        single_sse, _, _ = self._segment_terms(py, pxy, pyy, np.array([0]), np.array([self.n]))
        single_sse = single_sse[..., 0]
        min_sse = np.min(total, axis=-1)
        tol = 1e-12 * np.maximum(single_sse, 1.0)
        within = total <= (min_sse + tol)[..., None]
        # Latest candidate within tolerance of the minimum.
        best = within.shape[-1] - 1 - np.argmax(within[..., ::-1], axis=-1)
        best_sse = np.take_along_axis(total, best[..., None], axis=-1)[..., 0]
        return best, best_sse, single_sse


def fit_segmented(series: YearlyExtremeSeries, field: str = "mrad",
                  min_segment: int = _MIN_SEGMENT,
                  continuous: bool = False,
                  n_permutations: int = 0,
                  seed: Optional[int] = None) -> SegmentedFit:
    """Two least-squares lines around the best break year.

    By default the lines are independent (a discontinuity at the break is
    permitted); `continuous=True` instead joins them at the break, which is
    more efficient when the underlying trend really is a kink.  The break
    year is the last year of the first regime; candidates are all interior
    years leaving at least `min_segment` rows on each side, and the one
    minimising total SSE wins.  The F statistic compares the segmented fit
    (4 parameters including the break) against the single line (2
    parameters) with an F(2, n-4) reference; see the module docstring for
    the searched-break caveat and the permutation alternative
    (`n_permutations` > 0, seeded).
    """
    x, y = series.column(field)
    return fit_segmented_values(x, y, min_segment=min_segment, continuous=continuous,
                                n_permutations=n_permutations, seed=seed)


def fit_segmented_values(x: Sequence[float], y: Sequence[float],
                         min_segment: int = _MIN_SEGMENT,
                         continuous: bool = False,
                         n_permutations: int = 0,
                         seed: Optional[int] = None) -> SegmentedFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scanner = _BreakScanner(x, min_segment=min_segment)
    best, sse_seg, sse_single = scanner.scan(y, continuous=continuous)
    split = int(scanner.splits[int(best[0])])
    sse_seg = float(sse_seg[0])
    sse_single = float(sse_single[0])
    break_year = float(x[split])

    if continuous:
        # Centred design for conditioning; the hinge column is shift-invariant.
        centred = x - scanner.x_shift
        hinge = np.maximum(x - break_year, 0.0)
        design = np.column_stack([np.ones(x.size), centred, hinge])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        slope_before = float(coef[1])
        slope_after = float(coef[1] + coef[2])
        intercept_before = float(coef[0]) - slope_before * scanner.x_shift
        intercept_after = intercept_before - float(coef[2]) * break_year
    else:
        slope_before, intercept_before, _ = _ols(x[: split + 1], y[: split + 1])
        slope_after, intercept_after, _ = _ols(x[split + 1:], y[split + 1:])

    n = x.size
    dof = n - 4
    if sse_seg <= 1e-12 * max(sse_single, 1.0):
        f_statistic = math.inf
        p_value = 0.0
    else:
        f_statistic = ((sse_single - sse_seg) / 2.0) / (sse_seg / dof)
        p_value = float(stats.f.sf(f_statistic, 2, dof))

    permutation_p = None
    if n_permutations > 0:
        slope_s, intercept_s, _ = _ols(x, y)
        fitted = intercept_s + slope_s * x
        residuals = y - fitted
        rng = np.random.default_rng(seed)
        perms = np.stack([fitted + rng.permutation(residuals)
                          for _ in range(n_permutations)])
        _, perm_sse_seg, perm_sse_single = scanner.scan(perms, continuous=continuous)
        with np.errstate(divide="ignore", invalid="ignore"):
            perm_f = ((perm_sse_single - perm_sse_seg) / 2.0) / (perm_sse_seg / dof)
        perm_f = np.where(np.isfinite(perm_f), perm_f, np.inf)
        exceed = int(np.sum(perm_f >= f_statistic))
        permutation_p = (1 + exceed) / (n_permutations + 1)

    return SegmentedFit(
        break_year=break_year,
        slope_before=slope_before,
        slope_after=slope_after,
        intercept_before=intercept_before,
        intercept_after=intercept_after,
        sse_segmented=sse_seg,
        sse_single=sse_single,
        f_statistic=f_statistic,
        p_value=p_value,
        permutation_p=permutation_p,
        n=n,
    )


# -- correlation ----------------------------------------------------------------


def correlate(series: YearlyExtremeSeries, x_field: str, y_field: str,
              method: str = "pearson") -> tuple[float, float]:
    """Correlation between two series columns; returns (coefficient, p_value)."""
    x, y = series.columns(x_field, y_field)
    return correlate_values(x, y, method=method)


def correlate_values(x: Sequence[float], y: Sequence[float],
                     method: str = "pearson") -> tuple[float, float]:
    """Pearson or Spearman (mid-rank ties) correlation with a t-approximation p."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("x and y must have the same length")
    n = x.size
    if n < 3:
        raise ValueError(f"need at least 3 paired rows, got {n}")
    if method == "spearman":
        x = stats.rankdata(x)  # average ranks on ties
        y = stats.rankdata(y)
    elif method != "pearson":
        raise ValueError(f"method must be 'pearson' or 'spearman', got {method!r}")
    dx = x - np.mean(x)
    dy = y - np.mean(y)
    var_x = float(np.dot(dx, dx))
    var_y = float(np.dot(dy, dy))
    if var_x == 0.0 or var_y == 0.0:
        raise ValueError("zero-variance field in correlation")
    r = float(np.dot(dx, dy)) / math.sqrt(var_x * var_y)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t_stat = r * math.sqrt((n - 2) / (1.0 - r * r))
    p_value = 2.0 * float(stats.t.sf(abs(t_stat), n - 2))
    return r, p_value
