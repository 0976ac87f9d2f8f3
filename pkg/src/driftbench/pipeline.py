"""End-to-end detection: load, clean, split, evaluate, decide, report.

The report dict produced here is the single source of truth for the
JSON emitted by the CLI and consumed by the plot-data builder. Top-level
keys: dataset, split_timestamp, variables, share, alarm, groups (when
ground truth is available), seed.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from .chunking import ChunkSpec, chunk_drift_ratio, chunk_verdict, chunked_detect
from .dataset import ReferenceCurrentSplit
from .decision import (
    GroundTruthDriftSpec,
    ThresholdSpec,
    apply_threshold,
    cbpe_accuracy,
    classify_group,
    dataset_alarm,
    default_threshold,
)
from .errors import DataError, MethodError, UsageError
from .methods import (
    METHOD_SPECS,
    P_VALUE,
    TABLE_METHODS,
    evaluate,
    spot_the_difference,
)

DETECT_KEYS = {
    "dataset",
    "split_at",
    "clean",
    "methods",
    "thresholds",
    "chunks",
    "weights",
    "share_threshold",
    "share_method",
    "ks_approx_cutoff",
    "histogram_bins",
    "cbpe_threshold",
    "seed",
    "truth",
    "out",
}

DATASET_KEYS = {"path", "schema", "time_format"}


def _check_keys(cfg: dict, allowed: set[str], where: str) -> None:
    unknown = set(cfg) - allowed
    if unknown:
        raise UsageError(f"unknown {where} key: {sorted(unknown)[0]}")


def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg or cfg[key] is None:
        raise UsageError(f"missing {where} key: {key}")
    return cfg[key]


def _jsonsafe(x: float):
    x = float(x)
    return x if math.isfinite(x) else None


def load_dataset_config(ds_cfg: dict):
    """Load and return (dataset, schema, time_format) from a config block."""
    if not isinstance(ds_cfg, dict):
        raise UsageError("dataset config must be an object")
    _check_keys(ds_cfg, DATASET_KEYS, "dataset")
    path = _require(ds_cfg, "path", "dataset")
    schema = _require(ds_cfg, "schema", "dataset")
    time_format = ds_cfg.get("time_format", ds_mod.DEFAULT_TIME_FORMAT)
    return ds_mod.load_csv(path, schema, time_format), schema, time_format


def parse_chunk_spec(raw) -> ChunkSpec | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        kind, _, arg = raw.partition(":")
        if kind == "count":
            return ChunkSpec.by_count(int(arg or 10))
        if kind == "size":
            return ChunkSpec.by_size(int(arg))
        if kind == "time":
            return ChunkSpec.by_period(arg)
        raise UsageError(f"unknown chunk spec: {raw!r}")
    _check_keys(raw, {"kind", "period", "size", "count"}, "chunks")
    kind = _require(raw, "kind", "chunks")
    if kind == "count":
        return ChunkSpec.by_count(int(raw.get("count", 10)))
    if kind == "size":
        return ChunkSpec.by_size(int(_require(raw, "size", "chunks")))
    if kind == "time_period":
        return ChunkSpec.by_period(_require(raw, "period", "chunks"))
    raise UsageError(f"unknown chunk kind: {kind!r}")


def parse_threshold(raw: dict) -> ThresholdSpec:
    _check_keys(raw, {"kind", "alpha", "upper", "lower_bound", "upper_bound", "factor"}, "threshold")
    kind = _require(raw, "kind", "threshold")
    if kind == "p_left":
        return ThresholdSpec.p_left(float(raw.get("alpha", 0.05)))
    if kind == "distance_right":
        return ThresholdSpec.distance_right(float(raw.get("upper", 0.1)))
    if kind == "constant_band":
        return ThresholdSpec.constant_band(raw.get("lower_bound"), raw.get("upper_bound"))
    if kind == "sigma_band":
        return ThresholdSpec.sigma_band(float(raw.get("factor", 3.0)))
    raise UsageError(f"unknown threshold kind: {kind!r}")


def resolve_methods(raw) -> list[str]:
    if raw in (None, "all"):
        return list(TABLE_METHODS)
    if isinstance(raw, str):
        raw = [m.strip() for m in raw.split(",") if m.strip()]
    methods = list(raw)
    for m in methods:
        if m not in METHOD_SPECS:
            raise UsageError(f"unknown method: {m}")
    return methods


def thresholds_for(methods: list[str], overrides: dict | None, chunked: bool) -> dict[str, ThresholdSpec]:
    """Default thresholds per method, honoring config overrides.

    Unchunked runs use the value-kind defaults (p < 0.05 left-tailed,
    distance > 0.1 right-tailed). Chunked runs default to the sigma-band
    rule on the statistic, fitted from reference chunks.
    """
    overrides = overrides or {}
    for name in overrides:
        if name not in METHOD_SPECS:
            raise UsageError(f"threshold override for unknown method: {name}")
    out: dict[str, ThresholdSpec] = {}
    for m in methods:
        if m in overrides:
            out[m] = parse_threshold(overrides[m])
        elif chunked and not METHOD_SPECS[m].dataset_level:
            out[m] = ThresholdSpec.sigma_band()
        else:
            out[m] = default_threshold(METHOD_SPECS[m].value_kind)
    return out


def _method_entry(method: str, out, threshold: ThresholdSpec, drift: bool, scope: str = "variable") -> dict:
    entry = {
        "method": method,
        "statistic": _jsonsafe(out.statistic),
        "drift_value": _jsonsafe(out.drift_value),
        "value_kind": out.value_kind,
        "threshold": threshold_to_dict(threshold),
        "drift": bool(drift),
        "scope": scope,
    }
    if out.degenerate:
        entry["degenerate"] = True
    return entry


def threshold_to_dict(spec: ThresholdSpec) -> dict:
    if spec.kind == "p_left":
        return {"kind": spec.kind, "alpha": spec.alpha}
    if spec.kind == "distance_right":
        return {"kind": spec.kind, "upper": spec.upper}
    if spec.kind == "constant_band":
        return {"kind": spec.kind, "lower_bound": spec.lower_bound, "upper_bound": spec.upper_bound}
    return {"kind": spec.kind, "factor": spec.factor}


def run_detection(
    split: ReferenceCurrentSplit,
    methods: list[str],
    thresholds: dict[str, ThresholdSpec],
    *,
    chunk_spec: ChunkSpec | None = None,
    seed: int = 0,
    ks_approx_cutoff: int | None = 10000,
    histogram_bins: int | None = None,
    cbpe_threshold: float = 0.97,
    weights: dict | None = None,
    share_threshold: float = 0.5,
    share_method: str = "ks",
    truth: GroundTruthDriftSpec | None = None,
    dataset_label: dict | None = None,
) -> dict:
    """Evaluate every requested method on every analysed variable.

    Variables with role input or target get per-variable methods; the
    classifier test runs once on the whole frame and its verdict is
    copied to each variable with dataset scope. A prediction column, if
    present, is summarised with the confidence-based accuracy estimate.
    """
    analysed = [c for c in split.reference.columns if c.role in ("input", "target")]
    if not analysed:
        raise DataError("no input or target columns to analyse")
    prediction = next(
        (c for c in split.reference.columns if c.role == "prediction"), None
    )
    ref_rows = split.reference.row_count

    per_method_flags: dict[str, dict[str, bool]] = {}
    variables: list[dict] = []
    method_errors: dict[str, dict[str, str]] = {}

    std_entry = None
    if "spot_the_difference" in methods:
        frame_cols = [c.name for c in analysed]
        ref_frame = np.column_stack([split.reference.column(n).values for n in frame_cols])
        cur_frame = np.column_stack([split.current.column(n).values for n in frame_cols])
        thr = thresholds["spot_the_difference"]
        if thr.kind == "sigma_band":
            thr = default_threshold(P_VALUE)
        try:
            out = spot_the_difference(ref_frame, cur_frame, seed=seed)
            std_entry = _method_entry(
                "spot_the_difference", out, thr, apply_threshold(out, thr), scope="dataset"
            )
        except MethodError as exc:
            std_entry = {"method": "spot_the_difference", "error": str(exc), "scope": "dataset"}

    for col in analysed:
        ref_vals = split.reference.column(col.name).values
        cur_vals = split.current.column(col.name).values
        results: list[dict] = []
        var_chunk_ratio = None
        for method in methods:
            mspec = METHOD_SPECS[method]
            if mspec.dataset_level:
                continue
            effective = method
            if (
                method == "ks"
                and ks_approx_cutoff is not None
                and ref_rows > ks_approx_cutoff
            ):
                effective = "ks_approx"
            threshold = thresholds.get(effective)
            if threshold is None:
                threshold = (
                    ThresholdSpec.sigma_band()
                    if chunk_spec is not None
                    else default_threshold(METHOD_SPECS[effective].value_kind)
                )
            try:
                if chunk_spec is not None:
                    chunk_results = chunked_detect(
                        split, col.name, effective, chunk_spec, threshold, seed
                    )
                    ratio = chunk_drift_ratio(chunk_results)
                    drift = chunk_verdict(ratio)
                    out = evaluate(
                        effective, ref_vals, cur_vals,
                        seed=seed, n_bins=histogram_bins, dtype=col.dtype,
                    )
                    entry = _method_entry(effective, out, threshold, drift)
                    entry["chunk_ratio"] = ratio
                    entry["chunks"] = [
                        {
                            "key": r.chunk.key,
                            "start_time": r.chunk.start_time,
                            "end_time": r.chunk.end_time,
                            "statistic": _jsonsafe(r.output.statistic) if r.output else None,
                            "drift": r.drift_flag,
                            "evaluable": r.evaluable,
                        }
                        for r in chunk_results
                    ]
                    if method == share_method or effective == share_method:
                        var_chunk_ratio = ratio
                else:
                    out = evaluate(
                        effective, ref_vals, cur_vals,
                        seed=seed, n_bins=histogram_bins, dtype=col.dtype,
                    )
                    drift = apply_threshold(out, threshold)
                    entry = _method_entry(effective, out, threshold, drift)
                results.append(entry)
                per_method_flags.setdefault(method, {})[col.name] = bool(drift)
            except (MethodError, DataError) as exc:
                results.append({"method": effective, "error": str(exc)})
                method_errors.setdefault(method, {})[col.name] = str(exc)
        if std_entry is not None:
            results.append(dict(std_entry))
        var_entry = {
            "name": col.name,
            "role": col.role,
            "results": results,
        }
        if var_chunk_ratio is not None:
            var_entry["chunk_ratio"] = var_chunk_ratio
        variables.append(var_entry)

    share_flags = per_method_flags.get(share_method)
    if not share_flags or len(share_flags) < len(analysed):
        missing = [c.name for c in analysed if c.name not in (share_flags or {})]
        raise DataError(
            f"share method {share_method!r} produced no verdict for: {', '.join(missing)}"
        )
    weights = weights or {}
    share, alarm = dataset_alarm(share_flags, weights, share_threshold)

    report: dict = {
        "dataset": dataset_label or {"name": split.reference.name},
        "split_timestamp": int(split.split_timestamp),
        "variables": variables,
        "share": share,
        "alarm": alarm,
        "seed": seed,
    }

    if prediction is not None:
        probs = split.current.column(prediction.name).values
        estimate, cbpe_alarm = cbpe_accuracy(probs, cbpe_threshold)
        cbpe_entry: dict = {
            "estimate": estimate,
            "alarm": cbpe_alarm,
            "threshold": cbpe_threshold,
        }
        if chunk_spec is not None:
            from .chunking import make_chunks

            chunk_rows = []
            for chunk in make_chunks(split.current, chunk_spec):
                est, al = cbpe_accuracy(probs[chunk.begin : chunk.end], cbpe_threshold)
                chunk_rows.append(
                    {
                        "key": chunk.key,
                        "start_time": chunk.start_time,
                        "end_time": chunk.end_time,
                        "estimate": est,
                        "alarm": al,
                    }
                )
            cbpe_entry["chunks"] = chunk_rows
        variables.append(
            {"name": prediction.name, "role": "prediction", "results": [], "cbpe": cbpe_entry}
        )

    if truth is not None:
        groups: dict[str, object] = {}
        for method in methods:
            if METHOD_SPECS[method].dataset_level:
                groups[method] = "NA"
                continue
            flags = per_method_flags.get(method, {})
            needed = truth.input_variables() + (
                [truth.target_variable()] if truth.target_variable() else []
            )
            if any(v not in flags for v in needed):
                groups[method] = "NA"  # method failed on some variable
            else:
                groups[method] = classify_group(flags, truth)
        report["groups"] = groups
    return report


def load_truth(path: str | Path) -> GroundTruthDriftSpec:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    _check_keys(raw, {"flags", "roles", "shift_kind"}, "truth")
    return GroundTruthDriftSpec(
        flags=_require(raw, "flags", "truth"),
        roles=_require(raw, "roles", "truth"),
        shift_kind=_require(raw, "shift_kind", "truth"),
    )


def truth_to_dict(truth: GroundTruthDriftSpec) -> dict:
    return {
        "flags": {k: bool(v) for k, v in truth.flags.items()},
        "roles": dict(truth.roles),
        "shift_kind": truth.shift_kind,
    }


def run_detect_config(cfg: dict) -> dict:
    """Run the full detect pipeline from a JSON config dict."""
    _check_keys(cfg, DETECT_KEYS, "config")
    ds_cfg = _require(cfg, "dataset")
    loaded, schema, time_format = load_dataset_config(ds_cfg)

    clean_cfg = cfg.get("clean") or {}
    _check_keys(clean_cfg, {"policy", "order"}, "clean")
    cleaned = ds_mod.clean(
        loaded,
        clean_cfg.get("policy", "drop_missing"),
        int(clean_cfg.get("order", 2)),
    )

    split_raw = _require(cfg, "split_at")
    split_ts = (
        int(split_raw)
        if isinstance(split_raw, (int, float))
        else ds_mod.parse_timestamp(str(split_raw), time_format)
    )
    split = ds_mod.split(cleaned, split_ts)

    methods = resolve_methods(cfg.get("methods"))
    chunk_spec = parse_chunk_spec(cfg.get("chunks"))
    thresholds = thresholds_for(methods, cfg.get("thresholds"), chunk_spec is not None)
    truth = load_truth(cfg["truth"]) if cfg.get("truth") else None

    cutoff = cfg.get("ks_approx_cutoff", 10000)
    report = run_detection(
        split,
        methods,
        thresholds,
        chunk_spec=chunk_spec,
        seed=int(cfg.get("seed", 0)),
        ks_approx_cutoff=None if cutoff in (None, False) else int(cutoff),
        histogram_bins=cfg.get("histogram_bins"),
        cbpe_threshold=float(cfg.get("cbpe_threshold", 0.97)),
        weights=cfg.get("weights"),
        share_threshold=float(cfg.get("share_threshold", 0.5)),
        share_method=cfg.get("share_method", "ks"),
        truth=truth,
        dataset_label={
            "name": cleaned.name,
            "path": str(ds_cfg["path"]),
            "schema": schema,
            "time_format": time_format,
        },
    )
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
