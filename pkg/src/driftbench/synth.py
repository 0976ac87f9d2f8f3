"""Seeded synthetic datasets with known drift ground truth.

Two scenario families mirror the structure of the study's use cases: an
occupancy-style concept shift (inputs drift, binary target does not) and
an energy-consumption-style dataset shift (input and target both drift).
A third ``custom`` scenario produces plain iid series for calibration
runs and arbitrary injections. Generation is a pure function of the
config; the same config yields bit-identical data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from scipy.signal import lfilter

from .dataset import ReferenceCurrentSplit, TimeSeriesDataset, VariableColumn, split
from .decision import GroundTruthDriftSpec
from .errors import DataError, UsageError

SCENARIOS = ("uc1_concept", "uc2_dataset", "custom")

_YEAR_S = 365.25 * 86400.0
_DAY_S = 86400.0


@dataclass(frozen=True)
class DriftInjection:
    """One additive drift applied to the current window of a variable.

    ``onset`` is a fraction of the current window in [0, 1); values
    above 1e6 are interpreted as epoch-second timestamps. Magnitude is
    measured in reference standard deviations. ``period_s`` (recurring)
    and ``ramp_s`` (incremental) are durations in seconds.
    """

    kind: str
    variable: str
    magnitude: float
    onset: float = 0.0
    period_s: float | None = None
    ramp_s: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("abrupt", "incremental", "recurring"):
            raise UsageError(f"unknown injection kind: {self.kind!r}")
        if self.magnitude < 0:
            raise UsageError("injection magnitude must be >= 0")
        if self.kind == "recurring" and not (self.period_s and self.period_s > 0):
            raise UsageError("recurring injection needs period_s > 0")
        if self.kind == "incremental" and not (self.ramp_s and self.ramp_s > 0):
            raise UsageError("incremental injection needs ramp_s > 0")


@dataclass
class SynthConfig:
    """Scenario selector plus shape and drift knobs.

    ``params`` carries scenario-specific magnitudes; missing entries take
    the documented defaults.
    """

    scenario: str = "uc1_concept"
    seed: int = 0
    rows: int | None = None
    sample_interval_s: int | None = None
    injections: tuple[DriftInjection, ...] = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise UsageError(f"unknown scenario: {self.scenario!r}")
        self.injections = tuple(self.injections)


def _ts(iso: str) -> int:
    return int(
        datetime.strptime(iso, "%Y-%m-%dT%H:%M:%SZ")
        .replace(tzinfo=timezone.utc)
        .timestamp()
    )


def _ar1(rng: np.random.Generator, n: int, phi: float, sigma: float) -> np.ndarray:
    eps = rng.normal(0.0, sigma, n)
    if phi == 0.0:
        return eps
    return lfilter([1.0], [1.0, -phi], eps)


def inject(series, inj: DriftInjection, sigma_ref: float, step_s: float = 1.0) -> np.ndarray:
    """Apply one drift injection to a series (typically the current window).

    Abrupt adds a step of magnitude * sigma_ref from the onset;
    incremental ramps linearly up to that level over ``ramp_s``;
    recurring adds a sinusoid of that amplitude from the onset.
    """
    v = np.asarray(series, dtype=np.float64).copy()
    n = v.size
    if inj.onset > 1e6:
        raise UsageError("timestamp onsets must be resolved by the caller")
    start = int(inj.onset * n)
    if not 0 <= start < n:
        raise DataError("injection onset outside the series")
    if inj.magnitude == 0.0:
        return v
    amp = inj.magnitude * sigma_ref
    t = np.arange(n - start, dtype=np.float64) * step_s
    if inj.kind == "abrupt":
        v[start:] += amp
    elif inj.kind == "incremental":
        v[start:] += amp * np.minimum(t / inj.ramp_s, 1.0)
    else:
        v[start:] += amp * np.sin(2.0 * np.pi * t / inj.period_s)
    return v


def _apply_injections(
    ds: TimeSeriesDataset,
    split_ts: int,
    injections: tuple[DriftInjection, ...],
    step_s: float,
) -> tuple[TimeSeriesDataset, set[str]]:
    if not injections:
        return ds, set()
    injected: set[str] = set()
    cur_start = int(np.searchsorted(ds.time, split_ts, side="left"))
    columns = []
    for col in ds.columns:
        values = col.values
        for inj in injections:
            if inj.variable != col.name:
                continue
            if inj.onset > 1e6:
                onset_idx = int(np.searchsorted(ds.time[cur_start:], int(inj.onset)))
                frac = onset_idx / max(ds.row_count - cur_start, 1)
                inj = DriftInjection(
                    inj.kind, inj.variable, inj.magnitude, frac, inj.period_s, inj.ramp_s
                )
            sigma_ref = float(values[:cur_start].std())
            current = inject(values[cur_start:], inj, sigma_ref, step_s)
            values = np.concatenate([values[:cur_start], current])
            if inj.magnitude > 0:
                injected.add(col.name)
        columns.append(VariableColumn(col.name, col.role, col.dtype, values))
    return TimeSeriesDataset(ds.name, ds.time, tuple(columns)), injected


def _build_uc1(cfg: SynthConfig) -> tuple[TimeSeriesDataset, int, GroundTruthDriftSpec]:
    rows = cfg.rows or 46555
    step = cfg.sample_interval_s or 180
    if rows < 200:
        raise DataError("uc1_concept needs at least 200 rows")
    p = cfg.params
    co2_noise_scale = float(p.get("co2_noise_scale", 1.8))
    temp_shift_sigma = float(p.get("temp_shift_sigma", 1.2))
    flip_prob = float(p.get("occupancy_flip_prob", 0.10))
    degrade_window = tuple(p.get("degrade_window", (0.6, 0.8)))
    degrade_shrink = float(p.get("degrade_shrink", 0.45))
    include_gap = bool(p.get("include_gap", False))

    start = _ts("2021-03-30T00:12:00Z")
    times = start + np.arange(rows, dtype=np.int64) * step
    split_ts = _ts("2021-05-09T00:00:00Z")
    if not times[0] < split_ts < times[-1]:
        split_ts = int(times[0] + 0.4 * (times[-1] - times[0]))
    if include_gap:
        gap_lo, gap_hi = _ts("2021-04-30T00:00:00Z"), _ts("2021-05-09T00:00:00Z")
        keep = (times < gap_lo) | (times >= gap_hi)
        times = times[keep]
        rows = times.size

    rng = np.random.default_rng(cfg.seed)
    hours = (times % 86400) / 3600.0
    weekday = ((times // 86400) + 3) % 7  # epoch day 0 was a Thursday
    schedule = ((hours >= 8) & (hours < 18) & (weekday < 5)).astype(np.float64)
    flips = rng.random(rows) < flip_prob
    occupancy = np.where(flips, 1.0 - schedule, schedule)

    cur = times >= split_ts
    temperature = (
        21.0
        + 1.5 * np.sin(2.0 * np.pi * (hours - 14.0) / 24.0)
        + rng.normal(0.0, 0.8, rows)
    )
    temperature[cur] += temp_shift_sigma * float(temperature[~cur].std())

    co2_noise = _ar1(rng, rows, 0.8, 18.0)
    co2_noise[cur] *= co2_noise_scale
    co2 = 450.0 + 60.0 * occupancy + co2_noise

    confidence = 0.98 + rng.normal(0.0, 0.008, rows)
    cur_idx = np.flatnonzero(cur)
    lo = cur_idx[int(degrade_window[0] * cur_idx.size)]
    hi = cur_idx[min(int(degrade_window[1] * cur_idx.size), cur_idx.size - 1)]
    in_window = (np.arange(rows) >= lo) & (np.arange(rows) < hi)
    confidence[in_window] = 0.5 + (confidence[in_window] - 0.5) * degrade_shrink
    confidence = np.clip(confidence, 0.5, 0.999)
    prediction = np.where(occupancy > 0.5, confidence, 1.0 - confidence)

    ds = TimeSeriesDataset(
        "uc1_concept",
        times,
        (
            VariableColumn("co2", "input", "numeric", co2),
            VariableColumn("temperature", "input", "numeric", temperature),
            VariableColumn("occupancy", "target", "binary", occupancy),
            VariableColumn("prediction", "prediction", "numeric", prediction),
        ),
    )
    truth = GroundTruthDriftSpec(
        flags={"co2": True, "temperature": True, "occupancy": False},
        roles={"co2": "input", "temperature": "input", "occupancy": "target"},
        shift_kind="concept",
    )
    return ds, split_ts, truth


def _build_uc2(cfg: SynthConfig) -> tuple[TimeSeriesDataset, int, GroundTruthDriftSpec]:
    rows = cfg.rows or 26280
    step = cfg.sample_interval_s or 3600
    if rows * step < 400 * _DAY_S:
        raise DataError(
            "uc2_dataset needs rows covering one seasonal period plus a current window"
        )
    p = cfg.params
    consumption_scale = float(p.get("consumption_scale", 1.29))
    temp_shift = float(p.get("temp_outside_shift", -1.5))
    amp_scale = float(p.get("winter_amp_scale", 1.2))

    start = _ts("2019-04-01T00:00:00Z")
    times = start + np.arange(rows, dtype=np.int64) * step
    split_ts = _ts("2020-04-01T00:00:00Z")

    rng = np.random.default_rng(cfg.seed)
    # seasonal phase: coldest around mid January
    cold = _ts("2019-01-15T00:00:00Z")
    year_phase = 2.0 * np.pi * (times - cold) / _YEAR_S
    hours = (times % 86400) / 3600.0
    seasonal = -11.0 * np.cos(year_phase)
    cur = times >= split_ts
    seasonal[cur] *= amp_scale
    temp_outside = (
        6.0
        + seasonal
        + 2.5 * np.sin(2.0 * np.pi * (hours - 15.0) / 24.0)
        + rng.normal(0.0, 2.0, rows)
    )
    temp_outside[cur] += temp_shift

    heating = np.maximum(17.0 - temp_outside, 0.0)
    consumption = (
        75.0
        + 2.8 * heating
        + 4.0 * np.sin(2.0 * np.pi * (hours - 7.0) / 24.0)
        + _ar1(rng, rows, 0.8, 6.0)
    )
    consumption[cur] *= consumption_scale

    ds = TimeSeriesDataset(
        "uc2_dataset",
        times,
        (
            VariableColumn("temp_outside", "input", "numeric", temp_outside),
            VariableColumn("consumption", "target", "numeric", consumption),
        ),
    )
    truth = GroundTruthDriftSpec(
        flags={"temp_outside": True, "consumption": True},
        roles={"temp_outside": "input", "consumption": "target"},
        shift_kind="dataset",
    )
    return ds, split_ts, truth


def _build_custom(cfg: SynthConfig) -> tuple[TimeSeriesDataset, int, GroundTruthDriftSpec]:
    rows = cfg.rows or 4000
    step = cfg.sample_interval_s or 60
    if rows < 4:
        raise DataError("custom scenario needs at least 4 rows")
    p = cfg.params
    n_columns = int(p.get("columns", 1))
    phi = float(p.get("ar_phi", 0.0))
    split_frac = float(p.get("split_fraction", 0.5))

    start = _ts("2022-01-01T00:00:00Z")
    times = start + np.arange(rows, dtype=np.int64) * step
    split_ts = int(times[int(rows * split_frac)])

    rng = np.random.default_rng(cfg.seed)
    columns = []
    for i in range(n_columns):
        name = "value" if i == 0 else f"value_{i + 1}"
        columns.append(
            VariableColumn(name, "input", "numeric", _ar1(rng, rows, phi, 1.0))
        )
    ds = TimeSeriesDataset("custom", times, tuple(columns))
    truth = GroundTruthDriftSpec(
        flags={c.name: False for c in columns},
        roles={c.name: "input" for c in columns},
        shift_kind="covariate",
    )
    return ds, split_ts, truth


def generate(cfg: SynthConfig) -> tuple[ReferenceCurrentSplit, GroundTruthDriftSpec]:
    """Build a seeded scenario dataset and its drift ground truth."""
    if cfg.scenario == "uc1_concept":
        ds, split_ts, truth = _build_uc1(cfg)
    elif cfg.scenario == "uc2_dataset":
        ds, split_ts, truth = _build_uc2(cfg)
    else:
        ds, split_ts, truth = _build_custom(cfg)
    step = float(cfg.sample_interval_s or (ds.time[1] - ds.time[0]))
    ds, injected = _apply_injections(ds, split_ts, cfg.injections, step)
    if injected:
        flags = dict(truth.flags)
        for name in injected:
            flags[name] = True
        truth = GroundTruthDriftSpec(flags, dict(truth.roles), truth.shift_kind)
    return split(ds, split_ts), truth
