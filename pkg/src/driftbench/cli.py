"""Command line surface: generate, detect, benchmark, report.

Every subcommand is driven by a single JSON config document (unknown
keys are rejected) with a few convenience flag overrides. Exit codes:
0 no dataset alarm, 3 dataset alarm, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from . import dataset as ds_mod
from . import pipeline, report as report_mod, synth
from .errors import DataError, UsageError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ALARM = 3

GENERATE_KEYS = {
    "scenario",
    "seed",
    "rows",
    "sample_interval_s",
    "params",
    "injections",
    "out_csv",
    "out_truth",
    "time_format",
}
BENCH_KEYS = {
    "dataset",
    "synth",
    "methods",
    "repetitions",
    "include_report",
    "seed",
    "out_csv",
    "append",
    "run_id",
}
REPORT_KEYS = {"report", "out", "histogram_bins"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="driftbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("detect", "generate", "benchmark", "report"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to a JSON config")
        cmd.add_argument("--out", default=None, help="output path override")
        cmd.add_argument("--seed", type=int, default=None, help="seed override")
        cmd.add_argument("--methods", default=None, help="comma-separated method ids")
        cmd.add_argument(
            "--chunks", default=None, help="chunk spec, e.g. count:10, size:500, time:week"
        )
    return parser


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    try:
        with open(p, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a single JSON object")
    return cfg


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_detect(cfg: dict, args) -> int:
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.methods is not None:
        cfg["methods"] = args.methods
    if args.chunks is not None:
        cfg["chunks"] = args.chunks
    if args.out is not None:
        cfg["out"] = args.out
    report = pipeline.run_detect_config(cfg)
    _write_or_print(pipeline.report_to_json(report), cfg.get("out"))
    return EXIT_ALARM if report["alarm"] else EXIT_OK


def _parse_injections(raw) -> tuple[synth.DriftInjection, ...]:
    injections = []
    for entry in raw or ():
        pipeline._check_keys(
            entry,
            {"kind", "variable", "magnitude", "onset", "period_s", "ramp_s"},
            "injection",
        )
        injections.append(
            synth.DriftInjection(
                kind=pipeline._require(entry, "kind", "injection"),
                variable=pipeline._require(entry, "variable", "injection"),
                magnitude=float(entry.get("magnitude", 0.0)),
                onset=float(entry.get("onset", 0.0)),
                period_s=entry.get("period_s"),
                ramp_s=entry.get("ramp_s"),
            )
        )
    return tuple(injections)


def _cmd_generate(cfg: dict, args) -> int:
    pipeline._check_keys(cfg, GENERATE_KEYS, "config")
    if args.seed is not None:
        cfg["seed"] = args.seed
    scenario = cfg.get("scenario", "uc1_concept")
    sc = synth.SynthConfig(
        scenario=scenario,
        seed=int(cfg.get("seed", 0)),
        rows=cfg.get("rows"),
        sample_interval_s=cfg.get("sample_interval_s"),
        injections=_parse_injections(cfg.get("injections")),
        params=cfg.get("params") or {},
    )
    split, truth = synth.generate(sc)
    time_format = cfg.get("time_format", ds_mod.DEFAULT_TIME_FORMAT)
    out_csv = args.out or cfg.get("out_csv") or f"{scenario}.csv"
    out_truth = cfg.get("out_truth") or str(Path(out_csv).with_suffix(".truth.json"))

    full = _concat_split(split)
    ds_mod.write_csv(full, out_csv, time_format)
    truth_doc = pipeline.truth_to_dict(truth)
    truth_doc["split_timestamp"] = int(split.split_timestamp)
    Path(out_truth).write_text(
        json.dumps(truth_doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    sys.stdout.write(f"wrote {out_csv} and {out_truth}\n")
    return EXIT_OK


def _concat_split(split: ds_mod.ReferenceCurrentSplit) -> ds_mod.TimeSeriesDataset:
    import numpy as np

    cols = tuple(
        ds_mod.VariableColumn(
            rc.name,
            rc.role,
            rc.dtype,
            np.concatenate([rc.values, split.current.column(rc.name).values]),
        )
        for rc in split.reference.columns
    )
    time = np.concatenate([split.reference.time, split.current.time])
    return ds_mod.TimeSeriesDataset(split.reference.name, time, cols)


def _cmd_benchmark(cfg: dict, args) -> int:
    pipeline._check_keys(cfg, BENCH_KEYS, "config")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.methods is not None:
        cfg["methods"] = args.methods
    if ("dataset" in cfg) == ("synth" in cfg):
        raise UsageError("benchmark config needs exactly one of: dataset, synth")
    if "dataset" in cfg:
        ds_cfg = cfg["dataset"]
        loaded, _, time_format = pipeline.load_dataset_config(ds_cfg)
        cleaned = ds_mod.clean(loaded)
        split_at = pipeline._require(ds_cfg if "split_at" in ds_cfg else cfg, "split_at")
        split = ds_mod.split(
            cleaned, ds_mod.parse_timestamp(str(split_at), time_format)
        )
    else:
        sy = cfg["synth"]
        pipeline._check_keys(
            sy, {"scenario", "seed", "rows", "sample_interval_s", "params", "injections"}, "synth"
        )
        sc = synth.SynthConfig(
            scenario=sy.get("scenario", "custom"),
            seed=int(sy.get("seed", cfg.get("seed", 0))),
            rows=sy.get("rows"),
            sample_interval_s=sy.get("sample_interval_s"),
            injections=_parse_injections(sy.get("injections")),
            params=sy.get("params") or {},
        )
        split, _ = synth.generate(sc)

    methods = pipeline.resolve_methods(cfg.get("methods"))
    include_report = cfg.get("include_report", False)
    modes = [False, True] if include_report == "both" else [bool(include_report)]
    records = []
    warnings: list[str] = []
    for mode in modes:
        plan = bench_mod.BenchmarkPlan(
            split=split,
            methods=methods,
            repetitions=int(cfg.get("repetitions", 5)),
            include_report=mode,
            seed=int(cfg.get("seed", 0)),
            run_id=cfg.get("run_id", "bench"),
        )
        recs, warns = bench_mod.run_benchmark(plan)
        records.extend(recs)
        warnings.extend(warns)
    out_csv = args.out or cfg.get("out_csv")
    if out_csv:
        bench_mod.write_results_csv(records, out_csv, bool(cfg.get("append", False)))
    for warning in warnings:
        sys.stderr.write(f"warning: {warning}\n")
    sys.stdout.write(bench_mod.format_summary(bench_mod.aggregate(records)) + "\n")
    return EXIT_OK


def _cmd_report(cfg: dict, args) -> int:
    pipeline._check_keys(cfg, REPORT_KEYS, "config")
    report_path = pipeline._require(cfg, "report")
    if not Path(report_path).is_file():
        raise DataError(f"report file not found: {report_path}")
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    bundle = report_mod.build_plot_bundle(report, cfg.get("histogram_bins"))
    text = json.dumps(bundle, sort_keys=True, indent=2) + "\n"
    _write_or_print(text, args.out or cfg.get("out"))
    return EXIT_OK


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    try:
        cfg = _load_config(args.config)
        if args.command == "detect":
            return _cmd_detect(cfg, args)
        if args.command == "generate":
            return _cmd_generate(cfg, args)
        if args.command == "benchmark":
            return _cmd_benchmark(cfg, args)
        return _cmd_report(cfg, args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except DataError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA


def run() -> None:
    sys.exit(main())
