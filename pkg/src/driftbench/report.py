"""Plot-data bundles derived from a detection report.

Emits pure data, no rendering: per variable a time/value series with the
reference mean and one-sigma band, overlaid reference/current histogram
probabilities on the exact bin edges used in detection, and (when the
report was chunked) the per-chunk statistic series with threshold lines
and flags.
"""

from __future__ import annotations

import numpy as np

from . import dataset as ds_mod
from .errors import UsageError
from .methods import shared_histogram

REPORT_KEYS = {
    "dataset",
    "split_timestamp",
    "variables",
    "share",
    "alarm",
    "groups",
    "seed",
}


def build_plot_bundle(report: dict, histogram_bins: int | None = None) -> dict:
    """Recompute plot series from the dataset a report references.

    Histogram edges are produced by the same shared-histogram routine
    used during detection, so they match bit for bit.
    """
    unknown = set(report) - REPORT_KEYS
    if unknown:
        raise UsageError(f"unknown report key: {sorted(unknown)[0]}")
    for key in ("dataset", "split_timestamp", "variables"):
        if key not in report:
            raise UsageError(f"missing report key: {key}")
    ds_info = report["dataset"]
    if "path" not in ds_info or "schema" not in ds_info:
        raise UsageError("report dataset entry lacks path/schema; cannot rebuild plots")
    time_format = ds_info.get("time_format", ds_mod.DEFAULT_TIME_FORMAT)
    loaded = ds_mod.load_csv(ds_info["path"], ds_info["schema"], time_format)
    cleaned = ds_mod.clean(loaded, "drop_missing")
    split = ds_mod.split(cleaned, int(report["split_timestamp"]))

    bundle: dict = {"dataset": ds_info.get("name", "dataset"), "variables": {}}
    for var in report["variables"]:
        name = var["name"]
        if var.get("role") == "prediction":
            continue
        ref_vals = split.reference.column(name).values
        cur_vals = split.current.column(name).values
        ref_mean = float(ref_vals.mean())
        ref_sigma = float(ref_vals.std())
        hist = shared_histogram(ref_vals, cur_vals, histogram_bins)
        entry: dict = {
            "series": {
                "time": [int(t) for t in split.current.time],
                "value": [float(v) for v in cur_vals],
                "reference_mean": ref_mean,
                "band": [ref_mean - ref_sigma, ref_mean + ref_sigma],
            },
            "histogram": {
                "edges": [float(e) for e in hist.edges],
                "ref_probs": [float(p) for p in hist.ref_probs],
                "cur_probs": [float(p) for p in hist.cur_probs],
            },
        }
        chunk_sections = []
        for res in var.get("results", []):
            if "chunks" not in res:
                continue
            thr = res.get("threshold", {})
            chunk_sections.append(
                {
                    "method": res["method"],
                    "threshold": thr,
                    "keys": [c["key"] for c in res["chunks"]],
                    "start_time": [c["start_time"] for c in res["chunks"]],
                    "end_time": [c["end_time"] for c in res["chunks"]],
                    "statistic": [c["statistic"] for c in res["chunks"]],
                    "drift": [c["drift"] for c in res["chunks"]],
                }
            )
        if chunk_sections:
            entry["chunks"] = chunk_sections
        else:
            entry["notice"] = "no chunk results in report; chunk plots omitted"
        bundle["variables"][name] = entry
    return bundle
