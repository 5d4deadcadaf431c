"""Validation protocol: snippet extraction, the ten per-snippet metrics,
four paired real-vs-artificial evaluation modes, and distribution
comparison via the two-sample Kolmogorov-Smirnov distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .core import OffsetSeries, seed_children
from .errors import EvaluationError, MetricError, NotCalibratedError
from .generator import TwoLevelModel, coarse_profile, generate_profile
from .markov import discretize
from .noise import generate_noise, measured_coarse

METRIC_NAMES = (
    "x_max",
    "x_min",
    "mean",
    "std",
    "median",
    "q25",
    "q75",
    "range",
    "mean_diff_10",
    "std_diff_10",
)

QUANTILE_LADDER = tuple(round(0.05 * k, 2) for k in range(1, 20))

SHIFT_SECONDS = 5.0


class EvalMode(str, Enum):
    SHIFT_TEST = "shift"
    COARSE_ONLY = "coarse"
    FINE_ONLY = "fine"
    FULL = "full"

    @classmethod
    def parse(cls, name: str) -> "EvalMode":
        key = str(name).strip().lower()
        for mode in cls:
            if key in (mode.value, mode.name.lower()):
                return mode
        valid = ", ".join(mode.value for mode in cls)
        raise ValueError(f"unknown evaluation mode {name!r}; valid modes: {valid}")


@dataclass(frozen=True)
class MetricVector:
    """The ten per-snippet statistics."""

    x_max: float
    x_min: float
    mean: float
    std: float
    median: float
    q25: float
    q75: float
    range: float
    mean_diff_10: float
    std_diff_10: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in METRIC_NAMES], dtype=np.float64)


def compute_metrics(snippet) -> MetricVector:
    """Evaluate the ten statistics on one snippet.

    Quantiles interpolate linearly between order statistics, standard
    deviations use population normalization, and the diff metrics are the
    mean and standard deviation of consecutive differences scaled by 10.
    """
    values = snippet.values if isinstance(snippet, OffsetSeries) else np.asarray(snippet, dtype=np.float64)
    if values.size < 2:
        raise MetricError(f"snippet needs at least 2 samples, got {values.size}")
    diffs = np.diff(values)
    q25, median, q75 = np.quantile(values, [0.25, 0.5, 0.75])
    x_max = float(values.max())
    x_min = float(values.min())
    return MetricVector(
        x_max=x_max,
        x_min=x_min,
        mean=float(values.mean()),
        std=float(values.std()),
        median=float(median),
        q25=float(q25),
        q75=float(q75),
        range=x_max - x_min,
        mean_diff_10=float(diffs.mean() * 10.0),
        std_diff_10=float(diffs.std() * 10.0),
    )


def _window_steps(duration: float, dt: float) -> int:
    steps = duration / dt
    w = int(round(steps))
    if w < 1 or abs(steps - w) > 1e-6:
        raise ValueError(f"duration {duration} is not a positive multiple of dt {dt}")
    return w


def split_snippets(segments: Sequence, duration: float) -> list[OffsetSeries]:
    """Consecutive non-overlapping windows per segment; the trailing
    remainder shorter than the window is dropped."""
    snippets = []
    for seg in segments:
        series = seg.series if hasattr(seg, "series") else seg
        w = _window_steps(duration, series.dt)
        for start in range(0, len(series) - w + 1, w):
            snippets.append(OffsetSeries(series.dt, series.values[start : start + w]))
    return snippets


def ks_distance(sample_a, sample_b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a = np.sort(np.asarray(sample_a, dtype=np.float64))
    b = np.sort(np.asarray(sample_b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("cannot compare empty samples")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def ks_critical_value(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample rejection threshold at significance alpha."""
    if n < 1 or m < 1:
        raise ValueError("sample sizes must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    c = math.sqrt(-math.log(alpha / 2.0) / 2.0)
    return c * math.sqrt((n + m) / (n * m))


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """Paired metric populations for one mode, with per-metric KS distances.

    real and artificial are (snippet_count, 10) arrays in METRIC_NAMES
    column order; row i of both sides belongs to the same real snippet.
    """

    mode: EvalMode
    metric_names: tuple[str, ...]
    real: np.ndarray
    artificial: np.ndarray
    ks: dict[str, float]
    snippet_count: int
    seed: int | None

    def to_dict(self) -> dict:
        metrics = {}
        for j, name in enumerate(self.metric_names):
            real = self.real[:, j]
            art = self.artificial[:, j]
            metrics[name] = {
                "ks_distance": self.ks[name],
                "real_summary": _population_summary(real),
                "artificial_summary": _population_summary(art),
                "real": real.tolist(),
                "artificial": art.tolist(),
            }
        return {
            "mode": self.mode.value,
            "snippet_count": self.snippet_count,
            "seed": self.seed,
            "metrics": metrics,
        }


def _population_summary(values: np.ndarray) -> dict:
    out = {
        "count": int(values.size),
        "min": float(values.min()),
        "mean": float(values.mean()),
        "max": float(values.max()),
    }
    for level, q in zip(QUANTILE_LADDER, np.quantile(values, QUANTILE_LADDER)):
        out[f"q{int(round(level * 100)):02d}"] = float(q)
    return out


def run_mode(
    mode,
    real_segments: Sequence,
    model: TwoLevelModel,
    rng_seed: int | None = 0,
    *,
    snippet_duration: float | None = None,
) -> EvaluationReport:
    """Build the paired artificial population for one mode and compare.

    Every real snippet gets an artificial counterpart of the same length
    and initial offset. Modes that sample derive one child stream per
    snippet from rng_seed, so reports repeat exactly under the same seed.
    """
    mode = mode if isinstance(mode, EvalMode) else EvalMode.parse(mode)
    params = model.params
    duration = params.snippet_duration if snippet_duration is None else snippet_duration
    w = _window_steps(duration, params.dt)
    if mode in (EvalMode.FINE_ONLY, EvalMode.FULL) and model.fine is None:
        raise NotCalibratedError(f"{mode.value} evaluation needs a fitted fine model")

    prepared = []
    for seg in real_segments:
        series = seg.series if hasattr(seg, "series") else seg
        if abs(series.dt - params.dt) > 1e-12:
            raise ValueError("segment dt does not match the model dt")
        x = series.values
        drift = measured_coarse(x, params).values
        capped = np.clip(x - drift, -params.cap_threshold, params.cap_threshold)
        prepared.append((x, drift, capped))

    windows = [
        (si, start)
        for si, (x, _, _) in enumerate(prepared)
        for start in range(0, x.size - w + 1, w)
    ]
    if not windows:
        raise EvaluationError("no snippets: every segment is shorter than the snippet window")

    children = seed_children(rng_seed, len(windows))
    if mode is EvalMode.SHIFT_TEST:
        shift_steps = int(round(SHIFT_SECONDS / params.dt))
        shifted = [drift + np.roll(capped, shift_steps) for (_, drift, capped) in prepared]

    real_rows = np.empty((len(windows), len(METRIC_NAMES)))
    art_rows = np.empty_like(real_rows)
    for row, ((si, start), child) in enumerate(zip(windows, children)):
        x, drift, capped = prepared[si]
        real = x[start : start + w]
        if mode is EvalMode.SHIFT_TEST:
            art = shifted[si][start : start + w]
        elif mode is EvalMode.COARSE_ONLY:
            initial = discretize(float(real[0]), params.n_c)
            art = coarse_profile(model, initial, w, np.random.default_rng(child))
            art = art + capped[start : start + w]
        elif mode is EvalMode.FINE_ONLY:
            art = drift[start : start + w] + generate_noise(model.fine, w, np.random.default_rng(child)).values
        else:
            x0 = float(min(0.5, max(-0.5, real[0])))
            art = generate_profile(model, x0, duration, child).values
        real_rows[row] = compute_metrics(real).as_array()
        art_rows[row] = compute_metrics(art).as_array()

    ks = {
        name: ks_distance(real_rows[:, j], art_rows[:, j])
        for j, name in enumerate(METRIC_NAMES)
    }
    return EvaluationReport(
        mode=mode,
        metric_names=METRIC_NAMES,
        real=real_rows,
        artificial=art_rows,
        ks=ks,
        snippet_count=len(windows),
        seed=None if rng_seed is None else int(rng_seed),
    )


def summarize(report: EvaluationReport) -> str:
    """Plot-ready CSV: one row per (metric, population) with min, mean,
    max, and the q05..q95 quantile ladder."""
    if report.snippet_count == 0:
        raise EvaluationError("report holds no snippets")
    ladder_names = [f"q{int(round(level * 100)):02d}" for level in QUANTILE_LADDER]
    header = ["metric", "population", "count", "min", "mean", "max", *ladder_names]
    lines = [",".join(header)]
    for j, name in enumerate(report.metric_names):
        for population, rows in (("real", report.real), ("artificial", report.artificial)):
            summary = _population_summary(rows[:, j])
            cells = [name, population, str(summary["count"])]
            cells += [repr(summary[key]) for key in ("min", "mean", "max", *ladder_names)]
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
