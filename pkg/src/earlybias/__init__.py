"""Calibration of forecasts on time-varying events under observation-time censoring."""

from .calibration import (
    BinningScheme,
    CalibrationCurve,
    bin_forecasts,
    curve_to_table,
    mean_residual,
    residual_standard_error,
    table_to_curve,
    wilson_interval,
)
from .censoring import ObservedDataset, filter_scheduled, observe, observe_dataset, surprisingly_early_subset
from .ingest import ArchiveRecord, ArchiveSummary, parse_archive, to_observed, write_archive
from .model import (
    EventRecord,
    ForecastRecord,
    OccurrenceModel,
    Outcome,
    Snapshot,
    ValidationError,
    classify_observation,
)
from .simulate import (
    SimulationConfig,
    SyntheticDataset,
    distort_forecast,
    forecast_at,
    generate_snapshots,
    observe_density_forecasts,
    sample_events,
)
from .stats import ShiftResult, calibration_shift, raw_frequency_difference, shift_significance

__version__ = "0.1.0"
