"""Two-layer stochastic modeling of a vehicle's lateral position within
its lane: a smoothed discrete-state chain for the coarse drift plus
spectrally shaped noise for the fine jitter.

Calibrate from recorded tours (or synthetic ground truth), generate
artificial offset profiles, and evaluate them against real data with the
paired snippet-metric protocol.
"""

from .core import (
    DriveLog,
    DriveLogSample,
    ModelParams,
    OffsetSeries,
    relative_offset,
)
from .evaluation import (
    METRIC_NAMES,
    EvalMode,
    EvaluationReport,
    MetricVector,
    compute_metrics,
    ks_critical_value,
    ks_distance,
    run_mode,
    split_snippets,
    summarize,
)
from .generator import (
    TwoLevelModel,
    generate_profile,
    load_model,
    save_model,
)
from .markov import (
    CoarseModel,
    SmoothingKernel,
    discretize,
    estimate_transitions,
    gaussian_kernel,
    sample_chain,
    smooth,
    state_centers,
    states_to_offsets,
)
from .noise import (
    FineModel,
    SpectrumFit,
    cap,
    extract_fine,
    fit_kernel,
    generate_noise,
    measured_coarse,
)
from .preprocessing import Segment, extract_segments, resample
from .synthetic import SyntheticSpec, make_model, simulate_drive_log

__version__ = "0.1.0"

__all__ = [
    "CoarseModel",
    "DriveLog",
    "DriveLogSample",
    "EvalMode",
    "EvaluationReport",
    "FineModel",
    "METRIC_NAMES",
    "MetricVector",
    "ModelParams",
    "OffsetSeries",
    "Segment",
    "SmoothingKernel",
    "SpectrumFit",
    "SyntheticSpec",
    "TwoLevelModel",
    "cap",
    "compute_metrics",
    "discretize",
    "estimate_transitions",
    "extract_fine",
    "extract_segments",
    "fit_kernel",
    "gaussian_kernel",
    "generate_noise",
    "generate_profile",
    "ks_critical_value",
    "ks_distance",
    "load_model",
    "make_model",
    "measured_coarse",
    "relative_offset",
    "resample",
    "run_mode",
    "sample_chain",
    "save_model",
    "simulate_drive_log",
    "smooth",
    "split_snippets",
    "state_centers",
    "states_to_offsets",
    "summarize",
    "__version__",
]
