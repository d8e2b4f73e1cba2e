"""Synthetic forecasting data with a perfect (or deliberately biased) forecaster.

Each event draws a location ``mu ~ U(mu_range)``, a scale
``sigma ~ U(sigma_range)``, an occurrence time ``~ N(mu, sigma)`` and a
scheduled resolution date ``t_i ~ U(0, T)``. The perfect forecaster reports
the true probability of occurrence by ``t_i``.

Random numbers come from independent substreams, one per block of
``BLOCK_SIZE`` consecutive events, keyed by ``(seed, block index)``. Blocks
can therefore be generated in any order or in parallel with identical
results.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import expit, logit

from .censoring import ObservedDataset
from .model import (
    EventRecord,
    ForecastRecord,
    OccurrenceModel,
    Outcome,
    Snapshot,
    ValidationError,
    check_time,
    classify_many,
)

BLOCK_SIZE = 4096


def _default_snapshots(horizon: float) -> tuple[float, ...]:
    return tuple(k * horizon / 10 for k in range(1, 11))


@dataclass(frozen=True)
class SimulationConfig:
    n_events: int = 100_000
    horizon: float = 1.0
    mu_range: tuple[float, float] | None = None
    sigma_range: tuple[float, float] | None = None
    snapshot_times: tuple[float, ...] | None = None
    seed: int = 20240801
    bias: float = 0.0

    def __post_init__(self):
        # fill horizon-relative defaults
        T = self.horizon
        if not (isinstance(T, (int, float)) and math.isfinite(T) and T > 0):
            raise ValidationError(f"horizon must be a positive number, got {T}")
        if self.mu_range is None:
            object.__setattr__(self, "mu_range", (0.0, float(T)))
        if self.sigma_range is None:
            object.__setattr__(self, "sigma_range", (0.05 * T, 0.3 * T))
        if self.snapshot_times is None:
            object.__setattr__(self, "snapshot_times", _default_snapshots(T))
        object.__setattr__(self, "mu_range", tuple(float(v) for v in self.mu_range))
        object.__setattr__(self, "sigma_range", tuple(float(v) for v in self.sigma_range))
        object.__setattr__(self, "snapshot_times", tuple(float(v) for v in self.snapshot_times))
        self.validate()

    def validate(self):
        if isinstance(self.n_events, bool) or not isinstance(self.n_events, (int, np.integer)):
            raise ValidationError("n_events must be an integer")
        if self.n_events < 1:
            raise ValidationError(f"n_events must be >= 1, got {self.n_events}")
        lo, hi = self.mu_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ValidationError(f"bad mu_range {self.mu_range}")
        lo, hi = self.sigma_range
        if not (math.isfinite(hi) and 0 < lo <= hi):
            raise ValidationError(f"sigma_range needs 0 < low <= high, got {self.sigma_range}")
        times = self.snapshot_times
        for t in times:
            check_time(t, self.horizon, "snapshot time")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError("snapshot_times must be strictly increasing")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit in 64 unsigned bits")
        if not math.isfinite(self.bias):
            raise ValidationError("bias must be finite")


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    """Column-oriented simulated events; index ``i`` is event ``i`` everywhere."""

    config: SimulationConfig
    event_ids: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    occurrence: np.ndarray
    scheduled: np.ndarray
    probabilities: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.event_ids)

    @cached_property
    def events(self) -> list[EventRecord]:
        return [
            EventRecord(e, float(o), float(t))
            for e, o, t in zip(self.event_ids, self.occurrence, self.scheduled)
        ]

    @cached_property
    def models(self) -> list[OccurrenceModel]:
        return [OccurrenceModel(float(m), float(s)) for m, s in zip(self.mu, self.sigma)]

    @cached_property
    def forecasts(self) -> list[ForecastRecord]:
        return [ForecastRecord(e, float(p)) for e, p in zip(self.event_ids, self.probabilities)]


def forecast_at(model: OccurrenceModel, t: float) -> float:
    """Probability under ``model`` that the event has happened by ``t``."""
    return float(model.cdf(t))


def distort_forecast(p: float, bias: float) -> float:
    """Shift ``p`` by ``bias`` on the log-odds scale."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"probability must lie strictly inside (0, 1), got {p}")
    return float(expit(logit(p) + bias))


def _distort_array(p: np.ndarray, bias: float) -> np.ndarray:
    if bias == 0.0:
        return p
    # exact 0/1 stay put (expit(+-inf) is +-1/0)
    with np.errstate(divide="ignore"):
        return expit(logit(p) + bias)


def _block(config: SimulationConfig, index: int):
    start = index * BLOCK_SIZE
    size = min(BLOCK_SIZE, config.n_events - start)
    rng = np.random.default_rng(np.random.SeedSequence(int(config.seed), spawn_key=(index,)))
    # always draw a full block so event i depends on (seed, i) alone
    mu = rng.uniform(*config.mu_range, size=BLOCK_SIZE)[:size]
    sigma = rng.uniform(*config.sigma_range, size=BLOCK_SIZE)[:size]
    scheduled = rng.uniform(0.0, config.horizon, size=BLOCK_SIZE)[:size]
    occurrence = mu + sigma * rng.standard_normal(BLOCK_SIZE)[:size]
    return mu, sigma, scheduled, occurrence


def sample_events(config: SimulationConfig, workers: int = 1) -> SyntheticDataset:
    """Draw ``config.n_events`` events and their perfect forecasts.

    ``workers`` only changes how blocks are scheduled, never the result.
    """
    config.validate()
    n_blocks = -(-config.n_events // BLOCK_SIZE)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _block(config, b), range(n_blocks)))
    else:
        parts = [_block(config, b) for b in range(n_blocks)]
    mu, sigma, scheduled, occurrence = (np.concatenate(col) for col in zip(*parts))
    width = len(str(config.n_events - 1))
    event_ids = np.array([f"e{i:0{width}d}" for i in range(config.n_events)], dtype=object)
    probabilities = OccurrenceModel.cdf_array(mu, sigma, scheduled)
    probabilities = _distort_array(probabilities, config.bias)
    return SyntheticDataset(config, event_ids, mu, sigma, occurrence, scheduled, probabilities)


def generate_snapshots(dataset: SyntheticDataset) -> list[Snapshot]:
    """One independent view of the dataset per configured snapshot time."""
    return [
        Snapshot(
            collection_time=t,
            event_ids=dataset.event_ids,
            probabilities=dataset.probabilities,
            scheduled=dataset.scheduled,
            outcomes=classify_many(dataset.occurrence, dataset.scheduled, t),
        )
        for t in dataset.config.snapshot_times
    ]


def observe_density_forecasts(dataset: SyntheticDataset, t_c: float) -> ObservedDataset:
    """Evaluate each event's density forecast at ``min(t_i, t_c)``.

    A forecaster who publishes the whole occurrence distribution can be scored
    on "happened by ``t_c``" for questions still open at ``t_c``, so every
    event resolves and nothing is selected on observation time.
    """
    t_c = check_time(t_c, dataset.config.horizon, "collection time")
    cutoff = np.minimum(dataset.scheduled, t_c)
    probabilities = _distort_array(
        OccurrenceModel.cdf_array(dataset.mu, dataset.sigma, cutoff), dataset.config.bias
    )
    return ObservedDataset(
        collection_time=t_c,
        event_ids=dataset.event_ids,
        probabilities=probabilities,
        scheduled=cutoff,
        positive=dataset.occurrence <= cutoff,
        filtered=True,
    )


def snapshot_counts(snapshot: Snapshot) -> dict:
    return {
        "collection_time": snapshot.collection_time,
        "positive": snapshot.count(Outcome.POSITIVE),
        "negative": snapshot.count(Outcome.NEGATIVE),
        "censored": snapshot.count(Outcome.CENSORED),
    }
