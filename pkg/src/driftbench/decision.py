"""Threshold semantics, dataset alarms, group classification and CBPE.

Three threshold paradigms are supported: left-tailed p-value thresholds,
right-tailed distance thresholds, and acceptance bands (constant bounds
or mean +/- factor * sigma fitted on reference chunk statistics). Band
thresholds act on the raw statistic, the other two on the drift value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DataError, UsageError
from .methods import DISTANCE, P_VALUE, MethodOutput

THRESHOLD_KINDS = ("p_left", "distance_right", "constant_band", "sigma_band")


@dataclass(frozen=True)
class ThresholdSpec:
    """One threshold rule; only the fields of the active kind are used."""

    kind: str
    alpha: float = 0.05
    upper: float = 0.1
    lower_bound: float | None = None
    upper_bound: float | None = None
    factor: float = 3.0

    def __post_init__(self) -> None:
        if self.kind not in THRESHOLD_KINDS:
            raise UsageError(f"unknown threshold kind: {self.kind!r}")
        if self.kind == "p_left" and not 0.0 < self.alpha < 1.0:
            raise UsageError("alpha must lie in (0, 1)")
        if self.kind == "distance_right" and self.upper <= 0.0:
            raise UsageError("distance threshold must be > 0")
        if self.kind == "constant_band" and (
            self.lower_bound is None and self.upper_bound is None
        ):
            raise UsageError("constant_band needs at least one bound")
        if self.kind == "sigma_band" and self.factor <= 0.0:
            raise UsageError("sigma_band factor must be > 0")

    @staticmethod
    def p_left(alpha: float = 0.05) -> "ThresholdSpec":
        return ThresholdSpec("p_left", alpha=alpha)

    @staticmethod
    def distance_right(upper: float = 0.1) -> "ThresholdSpec":
        return ThresholdSpec("distance_right", upper=upper)

    @staticmethod
    def constant_band(lower=None, upper=None) -> "ThresholdSpec":
        return ThresholdSpec("constant_band", lower_bound=lower, upper_bound=upper)

    @staticmethod
    def sigma_band(factor: float = 3.0) -> "ThresholdSpec":
        return ThresholdSpec("sigma_band", factor=factor)


@dataclass(frozen=True)
class SigmaBand:
    """Acceptance band mean +/- factor * sigma, fitted on reference statistics."""

    mean: float
    sigma: float
    lower: float
    upper: float


def fit_sigma_band(reference_chunk_stats, factor: float = 3.0) -> SigmaBand:
    """Fit a band from per-reference-chunk statistics (population sigma)."""
    stats = np.asarray(reference_chunk_stats, dtype=np.float64)
    if stats.size < 2:
        raise DataError("need at least 2 reference chunk statistics to fit a band")
    if factor <= 0.0:
        raise UsageError("sigma_band factor must be > 0")
    mean = float(stats.mean())
    sigma = float(stats.std())
    return SigmaBand(mean, sigma, mean - factor * sigma, mean + factor * sigma)


def default_threshold(value_kind: str) -> ThresholdSpec:
    """Paper-default rule for a method's output kind."""
    if value_kind == P_VALUE:
        return ThresholdSpec.p_left()
    return ThresholdSpec.distance_right()


def apply_threshold(
    out: MethodOutput,
    spec: ThresholdSpec,
    band: SigmaBand | None = None,
) -> bool:
    """Convert a method output into a drift flag.

    p_left flags p-values below alpha; distance_right flags distances
    above the upper threshold; the band kinds flag statistics falling
    outside the acceptance interval.
    """
    if spec.kind == "p_left":
        if out.value_kind != P_VALUE:
            raise UsageError(
                f"p_left threshold incompatible with {out.value_kind} output"
            )
        return bool(out.drift_value < spec.alpha)
    if spec.kind == "distance_right":
        if out.value_kind != DISTANCE:
            raise UsageError(
                f"distance_right threshold incompatible with {out.value_kind} output"
            )
        return bool(out.drift_value > spec.upper)
    if spec.kind == "constant_band":
        value = out.statistic
        low = spec.lower_bound
        high = spec.upper_bound
        return bool(
            (low is not None and value < low) or (high is not None and value > high)
        )
    # sigma_band
    if band is None:
        raise UsageError("sigma_band threshold requires a fitted band")
    return bool(out.statistic < band.lower or out.statistic > band.upper)


def dataset_alarm(
    flags: Mapping[str, bool],
    weights: Mapping[str, float] | None = None,
    share_threshold: float = 0.5,
) -> tuple[float, bool]:
    """Weighted share of drifted variables and the dataset-level alarm.

    The alarm fires when the share strictly exceeds the threshold.
    """
    if not flags:
        raise DataError("dataset_alarm needs at least one variable flag")
    weights = weights or {}
    total = 0.0
    drifted = 0.0
    for name, flag in flags.items():
        w = float(weights.get(name, 1.0))
        if w <= 0.0:
            raise DataError(f"non-positive weight for variable {name!r}")
        total += w
        if flag:
            drifted += w
    share = drifted / total
    return share, bool(share > share_threshold)


SHIFT_KINDS = ("covariate", "prior_probability", "concept", "dataset")


@dataclass(frozen=True)
class GroundTruthDriftSpec:
    """Per-variable drift ground truth with variable roles and the shift kind."""

    flags: Mapping[str, bool]
    roles: Mapping[str, str]
    shift_kind: str

    def __post_init__(self) -> None:
        if self.shift_kind not in SHIFT_KINDS:
            raise DataError(f"unknown shift kind: {self.shift_kind!r}")
        inputs = [v for v, r in self.roles.items() if r == "input"]
        targets = [v for v, r in self.roles.items() if r == "target"]
        if self.shift_kind == "concept":
            if any(self.flags.get(t, False) for t in targets):
                raise DataError("concept shift requires an undrifted target")
            if not any(self.flags.get(v, False) for v in inputs):
                raise DataError("concept shift requires a drifted input")
        if self.shift_kind == "dataset":
            if targets and not all(self.flags.get(t, False) for t in targets):
                raise DataError("dataset shift requires a drifted target")
            if inputs and not any(self.flags.get(v, False) for v in inputs):
                raise DataError("dataset shift requires a drifted input")

    def input_variables(self) -> list[str]:
        return [v for v, r in self.roles.items() if r == "input"]

    def target_variable(self) -> str | None:
        for v, r in self.roles.items():
            if r == "target":
                return v
        return None


def classify_group(
    flags: Mapping[str, bool], truth: GroundTruthDriftSpec
) -> int:
    """Place a method's verdicts into correctness groups 1 to 4.

    Group 1: inputs and target both judged correctly; 2: inputs only;
    3: target only; 4: neither. Dataset-level methods without
    per-variable verdicts are outside this scale (callers report NA).
    """
    inputs = truth.input_variables()
    target = truth.target_variable()
    for v in inputs + ([target] if target else []):
        if v not in flags:
            raise DataError(f"variable missing from method flags: {v}")
    correct_inputs = all(bool(flags[v]) == bool(truth.flags[v]) for v in inputs)
    correct_target = (
        bool(flags[target]) == bool(truth.flags[target]) if target else True
    )
    if correct_inputs and correct_target:
        return 1
    if correct_inputs:
        return 2
    if correct_target:
        return 3
    return 4


def cbpe_accuracy(
    probs, alarm_threshold: float = 0.97
) -> tuple[float, bool]:
    """Confidence-based accuracy estimate for a binary classifier.

    The estimate is the mean of max(p, 1 - p) over the predicted
    positive-class probabilities; the alarm fires when it drops below
    the threshold.
    """
    p = np.asarray(probs, dtype=np.float64).ravel()
    if p.size == 0:
        raise DataError("cbpe_accuracy needs at least one probability")
    if np.any(p < 0.0) or np.any(p > 1.0) or not np.all(np.isfinite(p)):
        raise DataError("probabilities must lie in [0, 1]")
    estimate = float(np.mean(np.maximum(p, 1.0 - p)))
    return estimate, bool(estimate < alarm_threshold)
