"""Binned reliability curves, Wilson intervals and calibration residuals."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .censoring import ObservedDataset
from .model import ValidationError

TABLE_COLUMNS = ("bin_low", "bin_high", "count", "mean_forecast", "frequency", "ci_low", "ci_high")


@dataclass(frozen=True)
class BinningScheme:
    """Equal-width bins on [0, 1]; the last bin includes 1."""

    n_bins: int = 20

    def __post_init__(self):
        if isinstance(self.n_bins, bool) or int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise ValidationError(f"n_bins must be a positive integer, got {self.n_bins}")

    @property
    def edges(self) -> np.ndarray:
        # k/n rather than linspace so that e.g. 0.3 lands exactly on an edge
        return np.arange(self.n_bins + 1) / self.n_bins

    def assign(self, probabilities) -> np.ndarray:
        p = np.asarray(probabilities, dtype=float)
        if p.size and (np.nanmin(p) < 0 or np.nanmax(p) > 1 or np.isnan(p).any()):
            raise ValidationError("probabilities must lie in [0, 1]")
        idx = np.searchsorted(self.edges, p, side="right") - 1
        return np.minimum(idx, self.n_bins - 1)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValidationError("Wilson interval needs at least one trial")
    z = norm.ppf(0.5 + confidence / 2)
    p_hat = successes / trials
    denom = 1 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denom
    margin = z / denom * math.sqrt(p_hat * (1 - p_hat) / trials + z * z / (4 * trials * trials))
    low = 0.0 if successes == 0 else max(0.0, center - margin)
    high = 1.0 if successes == trials else min(1.0, center + margin)
    return min(low, p_hat), max(high, p_hat)


@dataclass(frozen=True)
class CalibrationCurve:
    """Per-bin estimates; empty bins hold NaN estimates."""

    bin_low: np.ndarray
    bin_high: np.ndarray
    count: np.ndarray
    mean_forecast: np.ndarray
    frequency: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray

    def __len__(self):
        return len(self.count)

    def __eq__(self, other):
        if not isinstance(other, CalibrationCurve):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, c), getattr(other, c), equal_nan=True) for c in TABLE_COLUMNS
        )

    @property
    def populated(self) -> np.ndarray:
        return self.count > 0

    def covers_forecast(self, min_count: int = 1) -> np.ndarray:
        """Per eligible bin: does the Wilson interval contain the mean forecast?"""
        sel = self.count >= min_count
        return (self.ci_low[sel] <= self.mean_forecast[sel]) & (self.mean_forecast[sel] <= self.ci_high[sel])


def bin_forecasts(observed: ObservedDataset, scheme: BinningScheme = BinningScheme()) -> CalibrationCurve:
    if len(observed) == 0:
        raise ValidationError("cannot bin an empty dataset")
    n = scheme.n_bins
    idx = scheme.assign(observed.probabilities)
    count = np.bincount(idx, minlength=n)
    psum = np.bincount(idx, weights=observed.probabilities, minlength=n)
    hits = np.bincount(idx, weights=observed.positive.astype(float), minlength=n)
    mean_forecast = np.full(n, np.nan)
    frequency = np.full(n, np.nan)
    ci_low = np.full(n, np.nan)
    ci_high = np.full(n, np.nan)
    for b in np.flatnonzero(count):
        mean_forecast[b] = psum[b] / count[b]
        frequency[b] = hits[b] / count[b]
        ci_low[b], ci_high[b] = wilson_interval(int(hits[b]), int(count[b]))
    edges = scheme.edges
    return CalibrationCurve(edges[:-1].copy(), edges[1:].copy(), count, mean_forecast, frequency, ci_low, ci_high)


def mean_residual(observed: ObservedDataset) -> float:
    """Average of outcome minus forecast; positive means forecasts ran low."""
    if len(observed) == 0:
        raise ValidationError("mean residual of an empty dataset is undefined")
    return float(np.mean(observed.residuals))


def residual_standard_error(observed: ObservedDataset) -> float:
    """Monte-Carlo standard error of :func:`mean_residual`."""
    n = len(observed)
    if n < 2:
        raise ValidationError("need at least two records for a standard error")
    return float(np.std(observed.residuals, ddof=1) / math.sqrt(n))


def positive_frequency(observed: ObservedDataset) -> float:
    if len(observed) == 0:
        raise ValidationError("frequency of an empty dataset is undefined")
    return float(np.mean(observed.positive))


# ---- tabular form -------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "" if math.isnan(x) else repr(float(x))


def curve_to_table(curve: CalibrationCurve) -> list[dict]:
    """Rows in bin order; empty bins keep ``None`` in the estimate fields."""
    rows = []
    for b in range(len(curve)):
        row = {}
        for c in TABLE_COLUMNS:
            v = getattr(curve, c)[b]
            if c == "count":
                row[c] = int(v)
            else:
                row[c] = None if math.isnan(v) else float(v)
        rows.append(row)
    return rows


def table_to_curve(rows: list[dict]) -> CalibrationCurve:
    cols = {}
    for c in TABLE_COLUMNS:
        vals = [r[c] for r in rows]
        if c == "count":
            cols[c] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            cols[c] = np.array([np.nan if v in (None, "") else float(v) for v in vals])
    return CalibrationCurve(**cols)


def table_to_csv(rows: list[dict], extra: dict | None = None) -> str:
    """Render rows as CSV; ``extra`` prepends constant columns (e.g. a view label)."""
    extra = extra or {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*extra, *TABLE_COLUMNS])
    for r in rows:
        w.writerow([*extra.values(), *(("" if r[c] is None else _fmt(r[c])) for c in TABLE_COLUMNS)])
    return buf.getvalue()


def csv_to_table(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for r in reader:
        row = {"count": int(r["count"])}
        for c in TABLE_COLUMNS:
            if c != "count":
                row[c] = None if r[c] == "" else float(r[c])
        rows.append(row)
    return rows


def table_to_json(rows: list[dict], **fields) -> str:
    return json.dumps({**fields, "rows": rows}, indent=2) + "\n"
