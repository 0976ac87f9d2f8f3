"""Time series ingestion, cleaning, smoothing and reference/current splitting.

Datasets are immutable after construction and all operations return new
objects, so they are safe to share across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import DataError

ROLES = ("input", "target", "prediction", "time-index")
DTYPES = ("numeric", "binary", "categorical")

#: CSV tokens treated as missing values (case-insensitive).
MISSING_MARKERS = frozenset({"", "na", "nan"})

DEFAULT_TIME_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


@dataclass(frozen=True, eq=False)
class VariableColumn:
    """A named, typed column. Values are float64; NaN marks missing entries."""

    name: str
    role: str
    dtype: str = "numeric"
    values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise DataError(f"unknown column role: {self.role!r}")
        if self.dtype not in DTYPES:
            raise DataError(f"unknown column dtype: {self.dtype!r}")
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float64)
        )


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """Rows ordered by a UTC time index (epoch seconds, int64).

    Invariants enforced on construction: time is non-decreasing, every
    column has exactly ``row_count`` values, and there is at most one
    target and one prediction column.
    """

    name: str
    time: np.ndarray
    columns: tuple[VariableColumn, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "time", np.asarray(self.time, dtype=np.int64))
        object.__setattr__(self, "columns", tuple(self.columns))
        n = self.time.size
        if n > 1 and np.any(np.diff(self.time) < 0):
            raise DataError("time index must be non-decreasing")
        for col in self.columns:
            if col.values.size != n:
                raise DataError(
                    f"column {col.name!r} has {col.values.size} values, expected {n}"
                )
        for role in ("target", "prediction"):
            if sum(1 for c in self.columns if c.role == role) > 1:
                raise DataError(f"more than one {role} column")

    @property
    def row_count(self) -> int:
        return int(self.time.size)

    def column(self, name: str) -> VariableColumn:
        for col in self.columns:
            if col.name == name:
                return col
        raise DataError(f"column not found: {name}")

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def has_missing(self) -> bool:
        return any(np.any(np.isnan(c.values)) for c in self.columns)

    def _slice(self, begin: int, end: int, name: str | None = None) -> "TimeSeriesDataset":
        cols = tuple(
            VariableColumn(c.name, c.role, c.dtype, c.values[begin:end])
            for c in self.columns
        )
        return TimeSeriesDataset(name or self.name, self.time[begin:end], cols)


@dataclass(frozen=True, eq=False)
class ReferenceCurrentSplit:
    """A dataset partitioned at a timestamp into reference and current halves."""

    reference: TimeSeriesDataset
    current: TimeSeriesDataset
    split_timestamp: int

    def __post_init__(self) -> None:
        if self.reference.row_count == 0 or self.current.row_count == 0:
            raise DataError("split produced an empty half")
        if not (
            self.reference.time.max() < self.split_timestamp <= self.current.time.min()
        ):
            raise DataError("split timestamp does not separate reference from current")
        ref_sig = [(c.name, c.role, c.dtype) for c in self.reference.columns]
        cur_sig = [(c.name, c.role, c.dtype) for c in self.current.columns]
        if ref_sig != cur_sig:
            raise DataError("reference and current column layouts differ")


@dataclass(frozen=True)
class MovingAverageConfig:
    """Trailing simple moving average of width ``window``."""

    window: int
    alignment: str = "trailing"

    def __post_init__(self) -> None:
        if self.window < 1:
            raise DataError("moving average window must be >= 1")


def parse_timestamp(token: str, time_format: str = DEFAULT_TIME_FORMAT) -> int:
    """Parse one timestamp token to UTC epoch seconds.

    ``time_format`` is a strftime pattern, or the literal ``"epoch"`` for
    integer epoch seconds.
    """
    token = token.strip()
    if time_format == "epoch":
        return int(float(token))
    dt = datetime.strptime(token, time_format)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(ts: int, time_format: str = DEFAULT_TIME_FORMAT) -> str:
    if time_format == "epoch":
        return str(int(ts))
    return datetime.fromtimestamp(int(ts), tz=timezone.utc).strftime(time_format)


def _normalize_schema(schema: dict) -> dict[str, tuple[str, str]]:
    """Accept {'col': 'role'} or {'col': {'role': ..., 'dtype': ...}}."""
    norm: dict[str, tuple[str, str]] = {}
    for name, entry in schema.items():
        if isinstance(entry, str):
            role, dtype = entry, "numeric"
        else:
            role = entry.get("role")
            dtype = entry.get("dtype", "numeric")
        if role not in ROLES:
            raise DataError(f"column {name!r}: unknown role {role!r}")
        if dtype not in DTYPES:
            raise DataError(f"column {name!r}: unknown dtype {dtype!r}")
        norm[name] = (role, dtype)
    return norm


def load_csv(
    path: str | Path,
    schema: dict,
    time_format: str = DEFAULT_TIME_FORMAT,
) -> TimeSeriesDataset:
    """Load a CSV file into a TimeSeriesDataset.

    The header row is mandatory and ``schema`` maps column names to roles
    (optionally with dtypes). Exactly one column must carry the
    ``time-index`` role. Exact duplicate rows (over the mapped columns)
    are removed, rows are sorted by time with a stable sort so ties keep
    file order, and unmapped columns are dropped.
    """
    p = Path(path)
    if not p.is_file():
        raise DataError(f"file not found: {p}")
    norm = _normalize_schema(schema)
    time_cols = [name for name, (role, _) in norm.items() if role == "time-index"]
    if len(time_cols) != 1:
        raise DataError("schema must name exactly one time-index column")
    time_col = time_cols[0]

    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"empty file: {p}")
        for name in norm:
            if name not in header:
                raise DataError(f"column not found: {name}")
        positions = {name: header.index(name) for name in norm}
        names = list(norm)
        seen: set[tuple[str, ...]] = set()
        kept: list[tuple[int, tuple[str, ...]]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            mapped = tuple(row[positions[name]] for name in names)
            if mapped in seen:
                continue
            seen.add(mapped)
            kept.append((lineno, mapped))

    n = len(kept)
    t_idx = names.index(time_col)
    times = np.empty(n, dtype=np.int64)
    for k, (lineno, vals) in enumerate(kept):
        try:
            times[k] = parse_timestamp(vals[t_idx], time_format)
        except (ValueError, OverflowError) as exc:
            raise DataError(
                f"row {lineno}: unparseable timestamp {vals[t_idx]!r}"
            ) from exc
    order = np.argsort(times, kind="stable")

    columns = []
    for j, name in enumerate(names):
        if name == time_col:
            continue
        role, dtype = norm[name]
        raw = np.empty(n, dtype=np.float64)
        for k, (lineno, vals) in enumerate(kept):
            token = vals[j].strip()
            if token.lower() in MISSING_MARKERS:
                raw[k] = np.nan
            else:
                try:
                    raw[k] = float(token)
                except ValueError as exc:
                    raise DataError(
                        f"row {lineno}: unparseable value {token!r} in column {name!r}"
                    ) from exc
        columns.append(VariableColumn(name, role, dtype, raw[order]))
    return TimeSeriesDataset(p.stem, times[order], tuple(columns))


def write_csv(
    ds: TimeSeriesDataset,
    path: str | Path,
    time_format: str = DEFAULT_TIME_FORMAT,
    time_name: str = "time",
) -> Path:
    """Write a dataset in the same CSV dialect ``load_csv`` reads.

    Float values are written with ``repr`` so a load/write cycle on a
    cleaned dataset round-trips exactly.
    """
    p = Path(path)
    with open(p, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([time_name] + [c.name for c in ds.columns])
        for i in range(ds.row_count):
            row = [format_timestamp(ds.time[i], time_format)]
            for c in ds.columns:
                v = c.values[i]
                row.append("" if np.isnan(v) else repr(float(v)))
            writer.writerow(row)
    return p


def polynomial_interpolate(values, order: int = 2) -> np.ndarray:
    """Fill interior gaps with a local least-squares polynomial.

    Each missing point is estimated from the nearest ``2 * (order + 1)``
    known points. Leading and trailing gaps are left missing for the
    caller to handle.
    """
    v = np.asarray(values, dtype=np.float64).copy()
    if order < 1:
        raise DataError("interpolation order must be >= 1")
    known = np.flatnonzero(~np.isnan(v))
    if known.size < order + 1:
        raise DataError(
            f"insufficient known points for order-{order} interpolation"
        )
    missing = np.flatnonzero(np.isnan(v))
    if missing.size == 0:
        return v
    first, last = known[0], known[-1]
    width = 2 * (order + 1)
    for i in missing:
        if i < first or i > last:
            continue  # boundary gap, caller decides
        nearest = known[np.argsort(np.abs(known - i), kind="stable")[:width]]
        xs = nearest.astype(np.float64) - i
        ys = v[nearest]
        deg = min(order, nearest.size - 1)
        coef = np.polyfit(xs, ys, deg)
        v[i] = coef[-1]  # polynomial evaluated at the gap (x = 0)
    return v


def kalman_smooth(values, process_var: float = 0.01, obs_var: float = 1.0) -> np.ndarray:
    """Local-level (random walk) Kalman filter plus fixed-interval smoothing.

    The filter is initialised on the first observation, which makes the
    output shift-equivariant and equal to the batch least-squares
    solution of the same state-space model.
    """
    y = np.asarray(values, dtype=np.float64)
    if y.size == 0:
        return y.copy()
    if not np.all(np.isfinite(y)):
        raise DataError("kalman_smooth requires finite inputs")
    if process_var <= 0 or obs_var <= 0:
        raise DataError("process_var and obs_var must be > 0")
    q, r = float(process_var), float(obs_var)
    n = y.size
    xf = np.empty(n)
    pf = np.empty(n)
    xf[0], pf[0] = y[0], r
    for t in range(1, n):
        xp = xf[t - 1]
        pp = pf[t - 1] + q
        k = pp / (pp + r)
        xf[t] = xp + k * (y[t] - xp)
        pf[t] = (1.0 - k) * pp
    xs = xf.copy()
    for t in range(n - 2, -1, -1):
        a = pf[t] / (pf[t] + q)
        xs[t] = xf[t] + a * (xs[t + 1] - xf[t])
    return xs


def moving_average(values, window: int) -> np.ndarray:
    """Trailing simple mean; output length is ``len(values) - window + 1``."""
    v = np.asarray(values, dtype=np.float64)
    if window < 1 or window > v.size:
        raise DataError(
            f"moving average window {window} out of range for series of {v.size}"
        )
    if window == 1:
        return v.copy()
    c = np.concatenate([[0.0], np.cumsum(v)])
    return (c[window:] - c[:-window]) / window


def growth_rate(
    split: ReferenceCurrentSplit,
    variable: str,
    cfg_ref: MovingAverageConfig,
    cfg_cur: MovingAverageConfig,
) -> float:
    """Ratio of smoothed current mean to smoothed reference mean."""
    rv = split.reference.column(variable).values
    cv = split.current.column(variable).values
    ref_mean = float(np.mean(moving_average(rv, cfg_ref.window)))
    cur_mean = float(np.mean(moving_average(cv, cfg_cur.window)))
    if ref_mean == 0.0:
        raise DataError("reference smoothed mean is zero; growth rate undefined")
    return cur_mean / ref_mean


def clean(
    ds: TimeSeriesDataset,
    policy: str = "drop_missing",
    order: int = 2,
) -> TimeSeriesDataset:
    """Remove missing values.

    ``drop_missing`` drops any row containing a missing marker.
    ``interpolate`` first fills interior gaps of numeric columns with
    ``polynomial_interpolate`` and then drops rows that are still
    missing (leading/trailing gaps, non-numeric columns).
    """
    if policy not in ("drop_missing", "interpolate"):
        raise DataError(f"unknown cleaning policy: {policy!r}")
    for col in ds.columns:
        if col.values.size and np.all(np.isnan(col.values)):
            raise DataError(f"column entirely missing: {col.name}")
    columns = list(ds.columns)
    if policy == "interpolate":
        columns = [
            VariableColumn(
                c.name,
                c.role,
                c.dtype,
                polynomial_interpolate(c.values, order)
                if c.dtype == "numeric"
                else c.values,
            )
            for c in columns
        ]
    keep = np.ones(ds.row_count, dtype=bool)
    for c in columns:
        keep &= ~np.isnan(c.values)
    out = TimeSeriesDataset(
        ds.name,
        ds.time[keep],
        tuple(
            VariableColumn(c.name, c.role, c.dtype, c.values[keep]) for c in columns
        ),
    )
    for c in out.columns:
        if c.dtype == "binary" and not np.all(np.isin(c.values, (0.0, 1.0))):
            raise DataError(f"binary column {c.name!r} contains values outside {{0, 1}}")
    return out


def split(ds: TimeSeriesDataset, at: int) -> ReferenceCurrentSplit:
    """Partition rows at a timestamp: reference gets time < at, current time >= at."""
    k = int(np.searchsorted(ds.time, at, side="left"))
    if k == 0 or k == ds.row_count:
        raise DataError("split timestamp leaves an empty half")
    return ReferenceCurrentSplit(
        ds._slice(0, k), ds._slice(k, ds.row_count), int(at)
    )
