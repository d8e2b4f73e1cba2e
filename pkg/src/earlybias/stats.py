"""How much the surprisingly-early records move calibration, and a permutation test."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .calibration import BinningScheme, mean_residual, positive_frequency
from .censoring import ObservedDataset, filter_scheduled
from .model import ValidationError

RESAMPLE_BLOCK = 250
# above this many candidates per draw, sample indices instead of ranking keys
_DENSE_LIMIT = 4096


@dataclass(frozen=True)
class ShiftResult:
    shift: float
    raw_frequency_difference: float
    excluded_count: int
    p_value: float | None
    n_resamples: int
    seed: int
    stratified: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def calibration_shift(unfiltered: ObservedDataset, filtered: ObservedDataset) -> float:
    """Mean residual with every record minus mean residual after filtering."""
    if unfiltered.collection_time != filtered.collection_time:
        raise ValidationError(
            f"collection times differ: {unfiltered.collection_time} vs {filtered.collection_time}"
        )
    if len(filtered) == len(unfiltered):
        return 0.0
    return mean_residual(unfiltered) - mean_residual(filtered)


def raw_frequency_difference(unfiltered: ObservedDataset, filtered: ObservedDataset) -> float:
    """Positive frequency with every record minus positive frequency after filtering."""
    if len(filtered) == len(unfiltered):
        return 0.0
    return positive_frequency(unfiltered) - positive_frequency(filtered)


def _subset_sums(rng: np.random.Generator, values: np.ndarray, k: int, draws: int) -> np.ndarray:
    """Sums of ``draws`` uniformly random size-``k`` subsets of ``values``."""
    n = len(values)
    if k == 0:
        return np.zeros(draws)
    if k == n:
        return np.full(draws, values.sum())
    if n <= _DENSE_LIMIT:
        keys = rng.random((draws, n))
        picked = np.argpartition(keys, k - 1, axis=1)[:, :k]
        return values[picked].sum(axis=1)
    # draw the smaller side and take the complement if needed
    m = min(k, n - k)
    total = values.sum()
    out = np.empty(draws)
    for j in range(draws):
        s = values[rng.choice(n, m, replace=False)].sum()
        out[j] = s if m == k else total - s
    return out


def _block_sums(seed: int, block: int, draws: int, strata) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    sums = np.zeros(draws)
    for values, k in strata:
        sums += _subset_sums(rng, values, k, draws)
    return sums


def shift_significance(
    unfiltered: ObservedDataset,
    n_resamples: int = 10_000,
    seed: int = 0,
    stratify: BinningScheme | None = None,
    workers: int = 1,
) -> ShiftResult:
    """One-sided permutation test for a positive calibration shift.

    Under the null the excluded records' residuals are exchangeable with the
    retained ones. Each resample picks ``excluded_count`` records without
    replacement (within forecast bins when ``stratify`` is given) and treats
    them as the excluded set. The p-value is ``(b + 1) / (n + 1)`` where ``b``
    counts resampled shifts at least as large as the observed one.
    """
    if unfiltered.filtered:
        raise ValidationError("shift_significance needs the unfiltered dataset")
    if n_resamples < 1000:
        raise ValidationError(f"n_resamples must be >= 1000, got {n_resamples}")
    filtered = filter_scheduled(unfiltered)
    excluded = unfiltered.scheduled_after
    k = int(np.count_nonzero(excluded))
    if k == 0:
        raise ValidationError("no surprisingly-early records; the test is undefined")
    if len(filtered) == 0:
        raise ValidationError("every record is surprisingly early; nothing to compare against")

    r = unfiltered.residuals
    if stratify is None:
        strata = [(r, k)]
    else:
        bins = stratify.assign(unfiltered.probabilities)
        strata = [
            (r[bins == b], int(np.count_nonzero(excluded & (bins == b))))
            for b in range(stratify.n_bins)
            if np.any(bins == b)
        ]
    observed_sum = r[excluded].sum()

    sizes = [min(RESAMPLE_BLOCK, n_resamples - s) for s in range(0, n_resamples, RESAMPLE_BLOCK)]
    jobs = [(int(seed), b, d, strata) for b, d in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda j: _block_sums(*j), jobs))
    else:
        blocks = [_block_sums(*j) for j in jobs]
    sums = np.concatenate(blocks)

    # shift is increasing in the excluded sum, so compare sums directly;
    # the slack absorbs summation-order rounding
    slack = 1e-9 * max(1.0, abs(observed_sum))
    b = int(np.count_nonzero(sums >= observed_sum - slack))
    return ShiftResult(
        shift=calibration_shift(unfiltered, filtered),
        raw_frequency_difference=raw_frequency_difference(unfiltered, filtered),
        excluded_count=k,
        p_value=(b + 1) / (n_resamples + 1),
        n_resamples=n_resamples,
        seed=int(seed),
        stratified=stratify is not None,
    )
