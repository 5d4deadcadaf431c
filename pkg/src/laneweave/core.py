"""Shared domain types and the lane-geometry offset conversion.

The relative lateral position is dimensionless: 0 is the lane center,
-0.5 puts the vehicle center over the left lane marking, +0.5 over the
right one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .errors import InvalidSampleError

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

_LOG_COLUMNS = ("t", "dist_left", "dist_right", "v_lon", "lane_id")


@dataclass(frozen=True)
class ModelParams:
    """Parameter set shared by calibration, generation, and evaluation."""

    n_c: int = 20
    dt: float = 0.2
    smoothing_sigma: float = 0.6
    smoothing_support: float = 1.0
    cap_threshold: float = 0.03
    v_min: float = 40.0
    sample_rate: float = 5.0
    snippet_duration: float = 10.0

    def __post_init__(self):
        if self.n_c < 2:
            raise ValueError(f"n_c must be >= 2, got {self.n_c}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.smoothing_support < self.smoothing_sigma:
            raise ValueError("smoothing_support must be >= smoothing_sigma")
        if self.cap_threshold <= 0:
            raise ValueError("cap_threshold must be positive")
        if abs(self.sample_rate * self.dt - 1.0) > 1e-9:
            raise ValueError(
                f"sample_rate ({self.sample_rate} Hz) and dt ({self.dt} s) disagree"
            )


@dataclass(frozen=True, eq=False)
class OffsetSeries:
    """Uniformly sampled relative lateral positions, one value per step."""

    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("series values must be one-dimensional")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def duration(self) -> float:
        return self.values.size * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt


@dataclass(frozen=True)
class DriveLogSample:
    """One raw recorder sample: marking distances in meters, velocity in km/h."""

    t: float
    dist_left: float
    dist_right: float
    v_lon: float
    lane_id: int | None = None


@dataclass(frozen=True, eq=False)
class DriveLog:
    """Columnar drive log of one recorded tour. lane_id is NaN where unknown."""

    t: np.ndarray
    dist_left: np.ndarray
    dist_right: np.ndarray
    v_lon: np.ndarray
    lane_id: np.ndarray = field(default=None)
    tour_id: str = ""

    def __post_init__(self):
        if self.lane_id is None:
            object.__setattr__(self, "lane_id", np.full(np.asarray(self.t).size, np.nan))
        for name in _LOG_COLUMNS:
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n = self.t.size
        if any(getattr(self, name).size != n for name in _LOG_COLUMNS):
            raise ValueError("drive-log columns differ in length")
        if n >= 2 and not np.all(np.diff(self.t) > 0):
            raise ValueError("drive-log timestamps must be strictly increasing")

    def __len__(self) -> int:
        return self.t.size

    @classmethod
    def from_samples(cls, samples: Iterable[DriveLogSample], tour_id: str = "") -> "DriveLog":
        samples = list(samples)
        lane = [np.nan if s.lane_id is None else float(s.lane_id) for s in samples]
        return cls(
            t=[s.t for s in samples],
            dist_left=[s.dist_left for s in samples],
            dist_right=[s.dist_right for s in samples],
            v_lon=[s.v_lon for s in samples],
            lane_id=lane,
            tour_id=tour_id,
        )

    def valid_mask(self) -> np.ndarray:
        """True where the sample yields a usable lane position."""
        with np.errstate(invalid="ignore"):
            ok = (
                np.isfinite(self.t)
                & np.isfinite(self.dist_left)
                & np.isfinite(self.dist_right)
                & np.isfinite(self.v_lon)
            )
            ok &= (self.dist_left >= 0.0) & (self.dist_right >= 0.0)
            ok &= (self.dist_left + self.dist_right) > 0.0
        return ok


def relative_offset(dist_left, dist_right):
    """Relative lateral position from the two marking distances.

    The mapping is (dist_left - dist_right) / (2 * (dist_left + dist_right)):
    antisymmetric under swapping the arguments, invariant under scaling
    both, and always within [-0.5, 0.5] for nonnegative inputs.
    """
    dl = np.asarray(dist_left, dtype=np.float64)
    dr = np.asarray(dist_right, dtype=np.float64)
    width = dl + dr
    with np.errstate(invalid="ignore"):
        bad = ~np.isfinite(dl) | ~np.isfinite(dr) | (dl < 0) | (dr < 0) | (width <= 0)
    if np.any(bad):
        flat = int(np.argmax(np.atleast_1d(bad)))
        raise InvalidSampleError(
            float(np.atleast_1d(dl)[flat]), float(np.atleast_1d(dr)[flat])
        )
    out = (dl - dr) / (2.0 * width)
    if out.ndim == 0:
        return float(out)
    return out


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Normalize an int, SeedSequence, Generator, or None to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def seed_children(seed, n: int) -> list[np.random.SeedSequence]:
    """Derive n independent child seeds from a master seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(n)
