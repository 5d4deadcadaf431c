"""Coarse lateral drift: position discretization, transition-matrix
calibration, seeded chain sampling, and Gaussian smoothing of the
stepwise state track."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from . import _kernels
from .core import OffsetSeries, SeedLike, as_generator
from .errors import CalibrationError

ROW_SUM_TOL = 1e-9


def state_centers(n_c: int) -> np.ndarray:
    """Centers of the n_c equal-width position bins covering [-0.5, 0.5]."""
    return -0.5 + 1.0 / (2 * n_c) + np.arange(n_c) / n_c


def discretize(x, n_c: int):
    """Map positions to bin indices.

    Bins are half-open on the right with the last one closed; values
    outside [-0.5, 0.5] clamp to the boundary bins.
    """
    idx = np.floor((np.asarray(x, dtype=np.float64) + 0.5) * n_c)
    idx = np.clip(idx, 0, n_c - 1).astype(np.int64)
    if idx.ndim == 0:
        return int(idx)
    return idx


@dataclass(frozen=True, eq=False)
class SmoothingKernel:
    """Odd-length, symmetric, nonnegative taps summing to one."""

    taps: np.ndarray
    dt: float

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size % 2 == 0:
            raise ValueError("kernel taps must be a 1-D odd-length array")
        if np.any(taps < 0):
            raise ValueError("kernel taps must be nonnegative")
        if abs(taps.sum() - 1.0) > 1e-12:
            raise ValueError(f"kernel taps must sum to 1, got {taps.sum()!r}")
        if not np.allclose(taps, taps[::-1], rtol=0.0, atol=1e-12):
            raise ValueError("kernel taps must be symmetric about the center")
        object.__setattr__(self, "taps", taps)

    @property
    def half_width(self) -> int:
        return self.taps.size // 2


def gaussian_kernel(sigma: float, support: float, dt: float) -> SmoothingKernel:
    """Zero-mean Gaussian sampled at step offsets, cut at +-support, normalized."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if support < dt:
        raise ValueError("support must cover at least one step")
    m = int(round(support / dt))
    offsets = np.arange(-m, m + 1) * dt
    taps = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return SmoothingKernel(taps / taps.sum(), dt)


def smooth_values(values: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Convolve with symmetric taps; near the edges the kernel is truncated
    to the in-range taps and renormalized, so constants map to themselves."""
    values = np.asarray(values, dtype=np.float64)
    taps = np.asarray(taps, dtype=np.float64)
    if values.size == 0:
        return values.copy()
    half = taps.size // 2
    num = np.convolve(values, taps, mode="full")[half : half + values.size]
    den = np.convolve(np.ones(values.size), taps, mode="full")[half : half + values.size]
    return num / den


def smooth(series: OffsetSeries, kernel: SmoothingKernel) -> OffsetSeries:
    return OffsetSeries(series.dt, smooth_values(series.values, kernel.taps))


def count_transitions(state_segments: Iterable[np.ndarray], n_c: int) -> np.ndarray:
    """Count a->b steps within each segment; segment boundaries contribute nothing."""
    counts = np.zeros((n_c, n_c), dtype=np.int64)
    for seg in state_segments:
        seg = np.asarray(seg, dtype=np.int64)
        if seg.size < 2:
            continue
        if np.any((seg < 0) | (seg >= n_c)):
            raise ValueError("state index out of range")
        np.add.at(counts, (seg[:-1], seg[1:]), 1)
    return counts


def transitions_from_counts(counts: np.ndarray) -> np.ndarray:
    """Maximum-likelihood row normalization; unobserved rows fall back to a
    self-transition so every row stays a probability distribution."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=1)
    if totals.sum() == 0:
        raise CalibrationError("no state transitions in the calibration data")
    transition = np.eye(counts.shape[0], dtype=np.float64)
    seen = totals > 0
    transition[seen] = counts[seen] / totals[seen, None]
    return transition


def estimate_transitions(state_segments: Iterable[np.ndarray], n_c: int) -> np.ndarray:
    return transitions_from_counts(count_transitions(state_segments, n_c))


@dataclass(frozen=True, eq=False)
class CoarseModel:
    """Calibrated drift model: bin transition matrix plus smoothing setup."""

    n_c: int
    dt: float
    transition: np.ndarray
    smoothing_sigma: float
    smoothing_support: float

    def __post_init__(self):
        transition = np.asarray(self.transition, dtype=np.float64)
        if transition.shape != (self.n_c, self.n_c):
            raise ValueError(
                f"transition matrix must be {self.n_c}x{self.n_c}, got {transition.shape}"
            )
        if np.any(transition < -1e-12) or np.any(transition > 1.0 + 1e-12):
            raise ValueError("transition probabilities must lie in [0, 1]")
        sums = transition.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            raise ValueError(
                f"transition row {int(bad[0])} sums to {sums[bad[0]]!r}, expected 1"
            )
        object.__setattr__(self, "transition", transition)

    @cached_property
    def state_centers(self) -> np.ndarray:
        return state_centers(self.n_c)

    @cached_property
    def smoothing_taps(self) -> np.ndarray:
        return gaussian_kernel(self.smoothing_sigma, self.smoothing_support, self.dt).taps

    @cached_property
    def _cumulative_rows(self) -> np.ndarray:
        return np.cumsum(self.transition, axis=1)

    def kernel(self) -> SmoothingKernel:
        return SmoothingKernel(self.smoothing_taps, self.dt)


def sample_chain(model: CoarseModel, initial_state: int, n_steps: int, rng: SeedLike) -> np.ndarray:
    """Sample a state-index path of n_steps starting at initial_state.

    Uniform draws come vectorized from the generator and are consumed by
    the compiled walk, so results do not depend on the active backend and
    repeat bit for bit under the same seed.
    """
    if not 0 <= initial_state < model.n_c:
        raise ValueError(f"initial state {initial_state} outside [0, {model.n_c})")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    uniforms = as_generator(rng).random(n_steps - 1)
    return _kernels.chain_path(model._cumulative_rows, int(initial_state), uniforms)


def states_to_offsets(states: np.ndarray, model: CoarseModel) -> OffsetSeries:
    """Stepwise offset track holding each state's bin-center position."""
    states = np.asarray(states, dtype=np.int64)
    if states.size and (states.min() < 0 or states.max() >= model.n_c):
        raise ValueError("state index out of range")
    return OffsetSeries(model.dt, model.state_centers[states])
