"""Observed datasets at a collection time and the scheduled-resolution filter."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import Outcome, ValidationError, check_time, classify_many


@dataclass(frozen=True, eq=False)
class ObservedDataset:
    """Resolved forecasts (censored ones already dropped), one row per forecast.

    ``positive`` holds the outcome indicator. ``filtered`` records whether the
    scheduled-resolution filter has been applied.
    """

    collection_time: float
    event_ids: np.ndarray
    probabilities: np.ndarray
    scheduled: np.ndarray
    positive: np.ndarray
    filtered: bool = False
    forecaster_ids: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.probabilities)
        cols = [self.event_ids, self.scheduled, self.positive]
        if self.forecaster_ids is not None:
            cols.append(self.forecaster_ids)
        if any(len(c) != n for c in cols):
            raise ValidationError("ObservedDataset columns differ in length")

    def __len__(self):
        return len(self.probabilities)

    @property
    def residuals(self) -> np.ndarray:
        return self.positive.astype(float) - self.probabilities

    @property
    def scheduled_after(self) -> np.ndarray:
        """Mask of records whose schedule lies beyond the collection time."""
        return self.scheduled > self.collection_time

    @property
    def early_negatives(self) -> int:
        """Negatives resolved before their schedule; impossible for simulated data."""
        return int(np.count_nonzero(self.scheduled_after & ~self.positive))

    def take(self, mask) -> "ObservedDataset":
        return replace(
            self,
            event_ids=self.event_ids[mask],
            probabilities=self.probabilities[mask],
            scheduled=self.scheduled[mask],
            positive=self.positive[mask],
            forecaster_ids=None if self.forecaster_ids is None else self.forecaster_ids[mask],
        )

    def records(self):
        """Yield ``(event_id, probability, scheduled, Outcome)`` tuples."""
        for e, p, t, y in zip(self.event_ids, self.probabilities, self.scheduled, self.positive):
            yield e, float(p), float(t), Outcome.POSITIVE if y else Outcome.NEGATIVE


def observe(
    event_ids,
    occurrence,
    scheduled,
    probabilities,
    t_c: float,
    horizon: float | None = 1.0,
    forecaster_ids=None,
) -> ObservedDataset:
    """Classify every forecast at ``t_c`` and keep the resolved ones.

    ``occurrence`` uses NaN for events that never happen. Surprisingly early
    positives (``t_i > t_c``) are kept; use :func:`filter_scheduled` to drop
    them.
    """
    t_c = check_time(t_c, horizon, "collection time")
    scheduled = np.asarray(scheduled, dtype=float)
    codes = classify_many(occurrence, scheduled, t_c)
    keep = codes != Outcome.CENSORED
    return ObservedDataset(
        collection_time=t_c,
        event_ids=np.asarray(event_ids, dtype=object)[keep],
        probabilities=np.asarray(probabilities, dtype=float)[keep],
        scheduled=scheduled[keep],
        positive=codes[keep] == Outcome.POSITIVE,
        filtered=False,
        forecaster_ids=None if forecaster_ids is None else np.asarray(forecaster_ids, dtype=object)[keep],
    )


def observe_dataset(dataset, t_c: float) -> ObservedDataset:
    """:func:`observe` applied to a :class:`~earlybias.simulate.SyntheticDataset`."""
    return observe(
        dataset.event_ids,
        dataset.occurrence,
        dataset.scheduled,
        dataset.probabilities,
        t_c,
        horizon=dataset.config.horizon,
    )


def filter_scheduled(observed: ObservedDataset) -> ObservedDataset:
    """Keep only forecasts scheduled to resolve by the collection time."""
    if observed.filtered:
        return observed
    kept = observed.take(~observed.scheduled_after)
    return replace(kept, filtered=True)


def surprisingly_early_subset(observed: ObservedDataset) -> ObservedDataset:
    """Records known at collection time although scheduled after it.

    In the simulation these are all positives. Ingested archives can also
    contain early negatives, which land here too and are counted by
    :attr:`ObservedDataset.early_negatives`.
    """
    if observed.filtered:
        raise ValidationError("surprisingly_early_subset needs an unfiltered dataset")
    return observed.take(observed.scheduled_after)
