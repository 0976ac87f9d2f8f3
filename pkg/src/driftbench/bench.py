"""Benchmark controller: timed detection runs with memory accounting.

Each plan is executed for one discarded warm-up pass plus the requested
repetitions. Wall time uses the monotonic clock, CPU time the process
clock, and peak memory the allocator high-water mark (tracemalloc),
reset per repetition. Detection outputs are reduced to a checksum so the
work cannot be optimised away while results stay comparable. Timed
repetitions run strictly sequentially on one thread.
"""

from __future__ import annotations

import csv
import gc
import hashlib
import json
import time
import tracemalloc
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import ReferenceCurrentSplit
from .errors import DataError, MethodError, UsageError
from .methods import METHOD_SPECS, evaluate, spot_the_difference
from .pipeline import report_to_json, run_detection, thresholds_for
from .report import build_plot_bundle

RESULTS_HEADER = (
    "run_id,repetition,method_set,report_included,wall_ms,cpu_ms,"
    "peak_mem_bytes,per_method_avg_ms"
)


@dataclass(frozen=True)
class BenchmarkRecord:
    run_id: str
    repetition: int
    method_set: str
    report_included: bool
    wall_ms: float
    cpu_ms: float
    peak_mem_bytes: int
    per_method_avg_ms: float
    checksum: str


@dataclass
class BenchmarkPlan:
    """What to measure: a split, a method set, repetitions, report mode."""

    split: ReferenceCurrentSplit
    methods: list[str]
    repetitions: int = 5
    include_report: bool = False
    seed: int = 0
    run_id: str = "bench"

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise UsageError("repetitions must be >= 1")
        if not self.methods:
            raise UsageError("method set must be non-empty")
        for m in self.methods:
            if m not in METHOD_SPECS:
                raise UsageError(f"unknown method: {m}")

    @property
    def method_set_label(self) -> str:
        return "+".join(self.methods) if len(self.methods) <= 3 else f"set{len(self.methods)}"


def _detect_once(plan: BenchmarkPlan) -> str:
    """One full detection pass; returns a checksum over all outputs."""
    split = plan.split
    digest = hashlib.sha256()
    analysed = [c for c in split.reference.columns if c.role in ("input", "target")]
    for col in analysed:
        ref_vals = split.reference.column(col.name).values
        cur_vals = split.current.column(col.name).values
        for method in plan.methods:
            if METHOD_SPECS[method].dataset_level:
                continue
            try:
                out = evaluate(method, ref_vals, cur_vals, seed=plan.seed, dtype=col.dtype)
                digest.update(f"{col.name}:{method}:{out.drift_value!r}".encode())
            except MethodError as exc:
                digest.update(f"{col.name}:{method}:error:{exc}".encode())
    if "spot_the_difference" in plan.methods:
        frame_r = np.column_stack([c.values for c in split.reference.columns if c.role in ("input", "target")])
        frame_c = np.column_stack([split.current.column(c.name).values for c in analysed])
        try:
            out = spot_the_difference(frame_r, frame_c, seed=plan.seed)
            digest.update(f"std:{out.drift_value!r}".encode())
        except MethodError as exc:
            digest.update(f"std:error:{exc}".encode())
    if plan.include_report:
        thresholds = thresholds_for(plan.methods, None, chunked=False)
        report = run_detection(
            split,
            plan.methods,
            thresholds,
            seed=plan.seed,
            ks_approx_cutoff=None,
            share_method=plan.methods[0],
        )
        digest.update(report_to_json(report).encode())
        try:
            bundle = _inline_plot_bundle(split, report)
            digest.update(json.dumps(bundle, sort_keys=True).encode())
        except UsageError:
            pass
    return digest.hexdigest()


def _inline_plot_bundle(split: ReferenceCurrentSplit, report: dict) -> dict:
    """Plot data computed directly from the in-memory split (no reload)."""
    from .methods import shared_histogram

    bundle: dict = {"variables": {}}
    for var in report["variables"]:
        if var.get("role") == "prediction":
            continue
        name = var["name"]
        ref_vals = split.reference.column(name).values
        cur_vals = split.current.column(name).values
        hist = shared_histogram(ref_vals, cur_vals)
        bundle["variables"][name] = {
            "series": {
                "time": [int(t) for t in split.current.time],
                "value": [float(v) for v in cur_vals],
                "reference_mean": float(ref_vals.mean()),
            },
            "histogram": {
                "edges": [float(e) for e in hist.edges],
                "ref_probs": [float(p) for p in hist.ref_probs],
                "cur_probs": [float(p) for p in hist.cur_probs],
            },
        }
    return bundle


def run_benchmark(plan: BenchmarkPlan) -> tuple[list[BenchmarkRecord], list[str]]:
    """Run the plan and return one record per timed repetition plus warnings."""
    warnings: list[str] = []
    if time.get_clock_info("perf_counter").resolution > 1e-3:
        warnings.append("monotonic clock resolution coarser than 1 ms")
    n_methods = len(plan.methods)

    _detect_once(plan)  # warm-up, discarded

    records: list[BenchmarkRecord] = []
    started = not tracemalloc.is_tracing()
    if started:
        tracemalloc.start()
    try:
        for rep in range(plan.repetitions):
            gc.collect()
            tracemalloc.reset_peak()
            cpu0 = time.process_time_ns()
            t0 = time.perf_counter_ns()
            checksum = _detect_once(plan)
            wall_raw_ms = (time.perf_counter_ns() - t0) / 1e6
            cpu_ms = (time.process_time_ns() - cpu0) / 1e6
            peak = tracemalloc.get_traced_memory()[1]
            # construct wall from the per-method average so the
            # avg * n == wall identity holds exactly
            avg = wall_raw_ms / n_methods
            records.append(
                BenchmarkRecord(
                    run_id=plan.run_id,
                    repetition=rep,
                    method_set=plan.method_set_label,
                    report_included=plan.include_report,
                    wall_ms=avg * n_methods,
                    cpu_ms=cpu_ms,
                    peak_mem_bytes=int(peak),
                    per_method_avg_ms=avg,
                    checksum=checksum,
                )
            )
    finally:
        if started:
            tracemalloc.stop()
    return records, warnings


def aggregate(records: list[BenchmarkRecord]) -> list[dict]:
    """Mean/min/max/population sigma per metric, grouped by set and mode."""
    if not records:
        raise DataError("no benchmark records to aggregate")
    groups: dict[tuple[str, bool], list[BenchmarkRecord]] = {}
    for rec in records:
        groups.setdefault((rec.method_set, rec.report_included), []).append(rec)
    rows = []
    for (label, with_report), recs in sorted(groups.items()):
        row: dict = {
            "method_set": label,
            "report_included": with_report,
            "repetitions": len(recs),
        }
        for metric in ("wall_ms", "cpu_ms", "peak_mem_bytes", "per_method_avg_ms"):
            vals = np.array([getattr(r, metric) for r in recs], dtype=np.float64)
            row[metric] = {
                "mean": float(vals.mean()),
                "min": float(vals.min()),
                "max": float(vals.max()),
                "sigma": float(vals.std()),
            }
        rows.append(row)
    return rows


def format_summary(rows: list[dict]) -> str:
    lines = [
        f"{'method_set':<12} {'report':<7} {'wall_ms':>12} {'cpu_ms':>12} "
        f"{'peak_mem_bytes':>16} {'per_method_ms':>14}"
    ]
    for row in rows:
        lines.append(
            f"{row['method_set']:<12} {str(row['report_included']).lower():<7} "
            f"{row['wall_ms']['mean']:>12.3f} {row['cpu_ms']['mean']:>12.3f} "
            f"{row['peak_mem_bytes']['mean']:>16.0f} {row['per_method_avg_ms']['mean']:>14.3f}"
        )
    return "\n".join(lines)


def write_results_csv(
    records: list[BenchmarkRecord], path: str | Path, append: bool = False
) -> Path:
    """Persist records; floats get 3 decimals, the header is written once."""
    p = Path(path)
    exists = p.is_file() and p.stat().st_size > 0
    mode = "a" if append and exists else "w"
    with open(p, mode, newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if mode == "w":
            writer.writerow(RESULTS_HEADER.split(","))
        for r in records:
            writer.writerow(
                [
                    r.run_id,
                    r.repetition,
                    r.method_set,
                    str(r.report_included).lower(),
                    f"{r.wall_ms:.3f}",
                    f"{r.cpu_ms:.3f}",
                    r.peak_mem_bytes,
                    f"{r.per_method_avg_ms:.3f}",
                ]
            )
    return p
