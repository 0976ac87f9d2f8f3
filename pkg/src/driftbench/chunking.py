"""Chunked drift evaluation over the current dataset.

Chunks are contiguous, non-overlapping row ranges that cover all current
rows. Each chunk is compared to the full reference; sigma-band
thresholds are fitted first on reference-side chunk statistics produced
with the same chunk spec.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .dataset import ReferenceCurrentSplit, TimeSeriesDataset
from .decision import SigmaBand, ThresholdSpec, apply_threshold, fit_sigma_band
from .errors import DataError, UsageError
from .methods import METHOD_SPECS, MethodError, MethodOutput, evaluate

PERIODS = ("hour", "day", "week", "month", "quarter")


@dataclass(frozen=True)
class ChunkSpec:
    """Chunking strategy: by time period, by chunk size, or by chunk count."""

    kind: str
    period: str | None = None
    size: int | None = None
    count: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "time_period":
            if self.period not in PERIODS or self.size is not None or self.count is not None:
                raise UsageError("time_period spec needs only a valid period")
        elif self.kind == "size":
            if not self.size or self.size < 1 or self.period or self.count:
                raise UsageError("size spec needs only a positive size")
        elif self.kind == "count":
            if not self.count or self.count < 1 or self.period or self.size:
                raise UsageError("count spec needs only a positive count")
        else:
            raise UsageError(f"unknown chunk kind: {self.kind!r}")

    @staticmethod
    def by_count(count: int = 10) -> "ChunkSpec":
        return ChunkSpec("count", count=count)

    @staticmethod
    def by_size(size: int) -> "ChunkSpec":
        return ChunkSpec("size", size=size)

    @staticmethod
    def by_period(period: str) -> "ChunkSpec":
        return ChunkSpec("time_period", period=period)


@dataclass(frozen=True)
class Chunk:
    """Half-open row range [begin, end) with its key and time span."""

    key: str
    start_time: int
    end_time: int
    begin: int
    end: int


@dataclass(frozen=True)
class ChunkResult:
    chunk: Chunk
    variable: str
    method: str
    output: MethodOutput | None
    drift_flag: bool
    evaluable: bool = True


def _period_key(ts: int, period: str) -> str:
    dt = datetime.fromtimestamp(int(ts), tz=timezone.utc)
    if period == "hour":
        return dt.strftime("%Y-%m-%dT%H")
    if period == "day":
        return dt.strftime("%Y-%m-%d")
    if period == "week":
        year, week, _ = dt.isocalendar()
        return f"{year}-W{week:02d}"
    if period == "month":
        return dt.strftime("%Y-%m")
    return f"{dt.year}-Q{(dt.month - 1) // 3 + 1}"


def make_chunks(current: TimeSeriesDataset, spec: ChunkSpec) -> list[Chunk]:
    """Partition the current dataset's rows according to the spec.

    Count-based chunks have size floor(n / count) with the remainder
    absorbed by the final chunk; size-based chunking appends a trailing
    remainder chunk; time-period chunking produces calendar buckets (ISO
    weeks for ``week``) and skips empty buckets.
    """
    n = current.row_count
    if n == 0:
        raise DataError("cannot chunk an empty dataset")
    bounds: list[tuple[str, int, int]] = []
    if spec.kind == "count":
        count = int(spec.count)
        if count > n:
            raise DataError(f"chunk count {count} exceeds {n} rows")
        base = n // count
        for i in range(count):
            begin = i * base
            end = (i + 1) * base if i < count - 1 else n
            bounds.append((f"chunk_{i}", begin, end))
    elif spec.kind == "size":
        size = int(spec.size)
        if size > n:
            raise DataError(f"chunk size {size} exceeds {n} rows")
        begin = 0
        i = 0
        while begin < n:
            end = min(begin + size, n)
            bounds.append((f"chunk_{i}", begin, end))
            begin = end
            i += 1
    else:
        keys = [_period_key(ts, spec.period) for ts in current.time]
        begin = 0
        for i in range(1, n + 1):
            if i == n or keys[i] != keys[begin]:
                bounds.append((keys[begin], begin, i))
                begin = i
    return [
        Chunk(key, int(current.time[b]), int(current.time[e - 1]), b, e)
        for key, b, e in bounds
    ]


def chunked_detect(
    split: ReferenceCurrentSplit,
    variable: str,
    method: str,
    spec: ChunkSpec,
    threshold: ThresholdSpec,
    seed: int = 0,
) -> list[ChunkResult]:
    """Evaluate one method per chunk of the current dataset.

    Each chunk's values are compared against the full reference column.
    Chunks smaller than the method's minimum sample size (or failing the
    method's own preconditions) are marked unevaluable and excluded from
    the drift ratio denominator.
    """
    mspec = METHOD_SPECS.get(method)
    if mspec is None:
        raise UsageError(f"unknown method: {method}")
    if mspec.dataset_level:
        raise UsageError(f"{method} has no per-variable output")
    col = split.current.column(variable)
    ref_vals = split.reference.column(variable).values
    chunks = make_chunks(split.current, spec)

    band: SigmaBand | None = None
    if threshold.kind == "sigma_band":
        ref_stats = []
        for ref_chunk in make_chunks(split.reference, spec):
            vals = split.reference.column(variable).values[
                ref_chunk.begin : ref_chunk.end
            ]
            if vals.size < mspec.min_samples:
                continue
            try:
                ref_stats.append(
                    evaluate(
                        method, ref_vals, vals, seed=seed, dtype=col.dtype
                    ).statistic
                )
            except MethodError:
                continue
        band = fit_sigma_band(ref_stats, threshold.factor)

    results: list[ChunkResult] = []
    for chunk in chunks:
        vals = col.values[chunk.begin : chunk.end]
        if vals.size < mspec.min_samples:
            results.append(ChunkResult(chunk, variable, method, None, False, False))
            continue
        try:
            out = evaluate(method, ref_vals, vals, seed=seed, dtype=col.dtype)
        except MethodError:
            results.append(ChunkResult(chunk, variable, method, None, False, False))
            continue
        flag = apply_threshold(out, threshold, band)
        results.append(ChunkResult(chunk, variable, method, out, flag))
    return results


def chunk_drift_ratio(results: list[ChunkResult]) -> float:
    """Share of evaluable chunks flagged as drifted."""
    evaluable = [r for r in results if r.evaluable]
    if not evaluable:
        raise DataError("no evaluable chunks")
    return sum(1 for r in evaluable if r.drift_flag) / len(evaluable)


def chunk_verdict(ratio: float) -> bool:
    """Variable-level verdict: drift when at least half the chunks flag."""
    return ratio >= 0.5
