"""Events, forecasts and the censoring rule that decides what is observable.

An event can happen at any time. A binary question asks whether it happens
by its scheduled resolution date ``t_i``. At a collection time ``t_c`` the
outcome is known if the event already happened (and by ``t_i``), or if
``t_i`` has passed without it happening. Otherwise the record is censored.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Hashable, Optional

import numpy as np
from scipy.special import ndtr


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def check_time(value: float, horizon: float | None = None, name: str = "time") -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value}")
    if horizon is not None:
        if not horizon > 0:
            raise ValidationError(f"horizon must be positive, got {horizon}")
        if not 0.0 <= value <= horizon:
            raise ValidationError(f"{name}={value} outside [0, {horizon}]")
    return value


class Outcome(enum.IntEnum):
    NEGATIVE = 0
    POSITIVE = 1
    CENSORED = 2


@dataclass(frozen=True)
class OccurrenceModel:
    """Normal distribution of an event's occurrence time.

    Also serves as a density forecast: ``cdf(t)`` is the probability that the
    event has happened by ``t``.
    """

    location: float
    scale: float

    def __post_init__(self):
        if not (math.isfinite(self.location) and math.isfinite(self.scale)):
            raise ValidationError("location and scale must be finite")
        if self.scale <= 0:
            raise ValidationError(f"scale must be positive, got {self.scale}")

    def cdf(self, t):
        return ndtr((np.asarray(t, dtype=float) - self.location) / self.scale)

    @staticmethod
    def cdf_array(location, scale, t) -> np.ndarray:
        """Elementwise CDF for many models at once."""
        return ndtr((np.asarray(t, dtype=float) - location) / scale)


@dataclass(frozen=True)
class EventRecord:
    event_id: Hashable
    occurrence_time: Optional[float]
    scheduled_resolution: float


@dataclass(frozen=True)
class ForecastRecord:
    event_id: Hashable
    probability: float
    forecaster_id: Optional[Hashable] = None

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValidationError(f"probability {self.probability} outside [0, 1]")


def classify_observation(event: EventRecord, t_c: float, horizon: float = 1.0) -> Outcome:
    """Return what an observer at ``t_c`` knows about ``event``.

    Both comparisons are closed: an occurrence exactly at ``t_i`` counts as
    having happened by ``t_i``, and ``t_i == t_c`` counts as resolvable.
    """
    t_c = check_time(t_c, horizon, "collection time")
    t_i = event.scheduled_resolution
    occ = event.occurrence_time
    if occ is not None and occ <= min(t_i, t_c):
        return Outcome.POSITIVE
    if t_i <= t_c:
        return Outcome.NEGATIVE
    return Outcome.CENSORED


def classify_many(occurrence, scheduled, t_c: float) -> np.ndarray:
    """Vectorised :func:`classify_observation`; NaN occurrence means "never".

    Returns an int8 array of :class:`Outcome` codes.
    """
    occ = np.asarray(occurrence, dtype=float)
    sched = np.asarray(scheduled, dtype=float)
    out = np.full(sched.shape, Outcome.CENSORED, dtype=np.int8)
    out[sched <= t_c] = Outcome.NEGATIVE
    # NaN compares False, so never-occurring events are not Positive
    out[occ <= np.minimum(sched, t_c)] = Outcome.POSITIVE
    return out


@dataclass(frozen=True)
class Snapshot:
    """All forecasts as seen at one collection time, censored ones included."""

    collection_time: float
    event_ids: np.ndarray
    probabilities: np.ndarray
    scheduled: np.ndarray
    outcomes: np.ndarray

    def __len__(self):
        return len(self.outcomes)

    def count(self, outcome: Outcome) -> int:
        return int(np.count_nonzero(self.outcomes == outcome))

    def records(self):
        for eid, p, o in zip(self.event_ids, self.probabilities, self.outcomes):
            yield ForecastRecord(eid, float(p)), Outcome(int(o))
