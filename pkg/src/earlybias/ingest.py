"""Reading and writing forecast archives.

An archive is a UTF-8 delimited text file with a header row and one forecast
per row. Columns (any order)::

    event_id, forecaster_id, forecast_probability, forecast_time,
    scheduled_resolution_time, resolution_time, outcome

``forecaster_id``, ``resolution_time`` and ``outcome`` may be empty.
``outcome`` is ``yes`` or ``no`` and is present exactly when
``resolution_time`` is. Times are either plain reals (``unitless``) or
ISO-8601 UTC timestamps ending in ``Z`` (``iso8601``); one file never mixes
the two.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .censoring import ObservedDataset
from .model import ValidationError

FIELDS = (
    "event_id",
    "forecaster_id",
    "forecast_probability",
    "forecast_time",
    "scheduled_resolution_time",
    "resolution_time",
    "outcome",
)
CONVENTIONS = ("unitless", "iso8601")
_ISO = re.compile(r"(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?Z")


class ArchiveError(ValidationError):
    """A row of an archive failed validation."""

    def __init__(self, row: int, field: str, message: str):
        self.row = row
        self.field = field
        super().__init__(f"row {row}, field {field!r}: {message}")


@dataclass(frozen=True)
class ArchiveRecord:
    event_id: str
    forecaster_id: Optional[str]
    forecast_probability: float
    forecast_time: float
    scheduled_resolution_time: float
    resolution_time: Optional[float] = None
    outcome: Optional[str] = None

    @property
    def early_negative(self) -> bool:
        return self.outcome == "no" and self.resolution_time < self.scheduled_resolution_time


@dataclass(frozen=True)
class ArchiveSummary:
    n_forecasts: int = 0
    n_events: int = 0
    n_forecasters: int = 0
    n_events_scheduled_after_collection: int = 0
    n_early_negatives_flagged: int = 0
    collection_time: Optional[float] = None


def parse_time(text: str, convention: str) -> float:
    """Convert a time field to a float (POSIX seconds for timestamps)."""
    if convention == "unitless":
        value = float(text)
        if not math.isfinite(value):
            raise ValueError(f"non-finite time {text!r}")
        return value
    if convention == "iso8601":
        m = _ISO.fullmatch(text)
        if m is None:
            raise ValueError(f"timestamp {text!r} is not YYYY-MM-DDTHH:MM:SS[.ffffff]Z")
        *parts, frac = m.groups()
        micro = int((frac or "0").ljust(6, "0"))
        dt = datetime(*map(int, parts), micro, tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValidationError(f"unknown time convention {convention!r}; use one of {CONVENTIONS}")


def format_time(value: float, convention: str) -> str:
    if convention == "unitless":
        return repr(float(value))
    dt = datetime.fromtimestamp(value, tz=timezone.utc)
    spec = "microseconds" if dt.microsecond else "seconds"
    return dt.replace(tzinfo=None).isoformat(timespec=spec) + "Z"


def _field(row: dict, name: str, lineno: int, convert, optional: bool = False):
    text = (row.get(name) or "").strip()
    if text == "":
        if optional:
            return None
        raise ArchiveError(lineno, name, "required value is empty")
    try:
        return convert(text)
    except (ValueError, OverflowError) as exc:
        raise ArchiveError(lineno, name, str(exc)) from None


def _probability(text: str) -> float:
    p = float(text)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {text} outside [0, 1]")
    return p


def _outcome(text: str) -> str:
    if text not in ("yes", "no"):
        raise ValueError(f"outcome must be 'yes' or 'no', got {text!r}")
    return text


def read_records(source, time_convention: str = "unitless") -> list[ArchiveRecord]:
    """Parse and validate every row; raise :class:`ArchiveError` on the first bad one."""
    if time_convention not in CONVENTIONS:
        raise ValidationError(f"unknown time convention {time_convention!r}; use one of {CONVENTIONS}")
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_records(fh, time_convention)

    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        raise ArchiveError(1, "header", "missing header row")
    missing = [f for f in FIELDS if f not in reader.fieldnames]
    if missing:
        raise ArchiveError(1, "header", f"missing columns {missing}")

    to_time = lambda s: parse_time(s, time_convention)  # noqa: E731
    records = []
    seen = set()
    per_event: dict[str, tuple] = {}
    for lineno, row in enumerate(reader, start=2):
        if None in row:
            raise ArchiveError(lineno, "row", "more values than header columns")
        rec = ArchiveRecord(
            event_id=_field(row, "event_id", lineno, str),
            forecaster_id=_field(row, "forecaster_id", lineno, str, optional=True),
            forecast_probability=_field(row, "forecast_probability", lineno, _probability),
            forecast_time=_field(row, "forecast_time", lineno, to_time),
            scheduled_resolution_time=_field(row, "scheduled_resolution_time", lineno, to_time),
            resolution_time=_field(row, "resolution_time", lineno, to_time, optional=True),
            outcome=_field(row, "outcome", lineno, _outcome, optional=True),
        )
        if (rec.outcome is None) != (rec.resolution_time is None):
            field = "outcome" if rec.outcome is None else "resolution_time"
            raise ArchiveError(lineno, field, "outcome and resolution_time must be both present or both empty")
        key = (rec.event_id, rec.forecaster_id, rec.forecast_time)
        if key in seen:
            raise ArchiveError(lineno, "event_id", f"duplicate forecast {key}")
        seen.add(key)
        event_facts = (rec.scheduled_resolution_time, rec.resolution_time, rec.outcome)
        if per_event.setdefault(rec.event_id, event_facts) != event_facts:
            raise ArchiveError(lineno, "event_id", f"event {rec.event_id!r} has conflicting resolution fields")
        records.append(rec)
    return records


def summarize(records: list[ArchiveRecord], collection_time: float | None = None) -> ArchiveSummary:
    """Counts for an archive; ``collection_time`` defaults to the latest resolution."""
    if not records:
        return ArchiveSummary(collection_time=collection_time)
    if collection_time is None:
        resolved = [r.resolution_time for r in records if r.resolution_time is not None]
        collection_time = max(resolved) if resolved else None
    after = set()
    if collection_time is not None:
        after = {
            r.event_id
            for r in records
            if r.outcome is not None
            and r.resolution_time <= collection_time < r.scheduled_resolution_time
        }
    return ArchiveSummary(
        n_forecasts=len(records),
        n_events=len({r.event_id for r in records}),
        n_forecasters=len({r.forecaster_id for r in records if r.forecaster_id is not None}),
        n_events_scheduled_after_collection=len(after),
        n_early_negatives_flagged=len({r.event_id for r in records if r.early_negative}),
        collection_time=collection_time,
    )


def parse_archive(
    source, time_convention: str = "unitless", collection_time=None
) -> tuple[list[ArchiveRecord], ArchiveSummary]:
    """Read an archive and summarise it.

    ``collection_time`` may be a float or a string in the file's convention.
    """
    records = read_records(source, time_convention)
    if isinstance(collection_time, str):
        try:
            collection_time = parse_time(collection_time, time_convention)
        except ValueError as exc:
            raise ValidationError(f"bad collection time {collection_time!r}: {exc}") from None
    return records, summarize(records, collection_time)


def write_archive(records: Iterable[ArchiveRecord], dest, time_convention: str = "unitless") -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            return write_archive(records, fh, time_convention)
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(FIELDS)
    ft = lambda v: "" if v is None else format_time(v, time_convention)  # noqa: E731
    for r in records:
        w.writerow([
            r.event_id,
            r.forecaster_id or "",
            repr(float(r.forecast_probability)),
            ft(r.forecast_time),
            ft(r.scheduled_resolution_time),
            ft(r.resolution_time),
            r.outcome or "",
        ])


def archive_text(records: Iterable[ArchiveRecord], time_convention: str = "unitless") -> str:
    buf = io.StringIO()
    write_archive(records, buf, time_convention)
    return buf.getvalue()


def records_from_synthetic(dataset) -> list[ArchiveRecord]:
    """Archive rows for a simulated dataset, as fully resolved at the horizon.

    Positives carry their occurrence time as ``resolution_time``; negatives
    resolve at their scheduled date. Forecasts are all made at time 0.
    """
    out = []
    for eid, p, occ, t_i in zip(dataset.event_ids, dataset.probabilities, dataset.occurrence, dataset.scheduled):
        hit = occ <= t_i
        out.append(ArchiveRecord(
            event_id=str(eid),
            forecaster_id=None,
            forecast_probability=float(p),
            forecast_time=0.0,
            scheduled_resolution_time=float(t_i),
            resolution_time=float(occ) if hit else float(t_i),
            outcome="yes" if hit else "no",
        ))
    return out


def to_observed(records: list[ArchiveRecord], t_c: float) -> ObservedDataset:
    """Rewind an archive to collection time ``t_c`` and keep what was known then.

    A record counts as resolved at ``t_c`` when its ``resolution_time`` is at
    or before ``t_c``. Unresolved records scheduled after ``t_c`` are censored
    and dropped. An unresolved record whose schedule has already passed
    contradicts the archive and raises :class:`ValidationError`.
    """
    t_c = float(t_c)
    n = len(records)
    ids = np.empty(n, dtype=object)
    who = np.empty(n, dtype=object)
    prob = np.empty(n)
    sched = np.empty(n)
    pos = np.zeros(n, dtype=bool)
    keep = np.zeros(n, dtype=bool)
    for j, r in enumerate(records):
        known = r.resolution_time is not None and r.resolution_time <= t_c
        if not known and r.scheduled_resolution_time <= t_c:
            raise ValidationError(
                f"event {r.event_id!r} is scheduled at {r.scheduled_resolution_time} "
                f"but unresolved at collection time {t_c}"
            )
        ids[j], who[j], prob[j], sched[j] = r.event_id, r.forecaster_id, r.forecast_probability, r.scheduled_resolution_time
        pos[j] = known and r.outcome == "yes"
        keep[j] = known
    return ObservedDataset(
        collection_time=t_c,
        event_ids=ids[keep],
        probabilities=prob[keep],
        scheduled=sched[keep],
        positive=pos[keep],
        filtered=False,
        forecaster_ids=who[keep],
    )
