"""Univariate data drift detection with chunked monitoring and benchmarking."""

from .chunking import Chunk, ChunkResult, ChunkSpec, chunk_drift_ratio, chunk_verdict, chunked_detect, make_chunks
from .dataset import (
    MovingAverageConfig,
    ReferenceCurrentSplit,
    TimeSeriesDataset,
    VariableColumn,
    clean,
    growth_rate,
    kalman_smooth,
    load_csv,
    moving_average,
    polynomial_interpolate,
    split,
    write_csv,
)
from .decision import (
    GroundTruthDriftSpec,
    SigmaBand,
    ThresholdSpec,
    apply_threshold,
    cbpe_accuracy,
    classify_group,
    dataset_alarm,
    fit_sigma_band,
)
from .errors import DataError, DriftBenchError, MethodError, UsageError
from .methods import (
    METHOD_SPECS,
    TABLE_METHODS,
    MethodOutput,
    SharedHistogram,
    anderson_darling_2samp,
    cvm_two_sample,
    energy_distance,
    epps_singleton,
    evaluate,
    hellinger_distance,
    jensen_shannon_distance,
    kl_divergence,
    ks_approximate,
    ks_two_sample,
    mann_whitney_u,
    psi,
    psi_categorical,
    shared_histogram,
    spot_the_difference,
    t_test,
    wasserstein_1d,
)
from .synth import DriftInjection, SynthConfig, generate, inject

__version__ = "0.1.0"
