"""Compose the drift and jitter models into full offset profiles and
persist calibrated models as versioned JSON documents."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ModelParams, OffsetSeries, SeedLike, seed_children
from .errors import ModelFormatError, NotCalibratedError
from .markov import CoarseModel, discretize, sample_chain, smooth_values, state_centers
from .noise import FineModel, generate_noise

FORMAT_VERSION = 1

_PARAM_FILE_FIELDS = (
    "n_c",
    "dt",
    "smoothing_sigma",
    "smoothing_support",
    "cap_threshold",
    "v_min",
    "sample_rate",
)


@dataclass(frozen=True, eq=False)
class TwoLevelModel:
    """Calibrated pair of drift and jitter models plus provenance metadata.

    fine may be None while only the coarse side has been calibrated;
    operations that need the jitter model raise NotCalibratedError then.
    """

    params: ModelParams
    coarse: CoarseModel
    fine: FineModel | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.coarse.n_c != self.params.n_c:
            raise ValueError("coarse model and params disagree on n_c")
        if abs(self.coarse.dt - self.params.dt) > 1e-12:
            raise ValueError("coarse model and params disagree on dt")
        if self.fine is not None and abs(self.fine.dt - self.params.dt) > 1e-12:
            raise ValueError("fine model and params disagree on dt")


def derive_streams(seed: SeedLike) -> tuple[np.random.Generator, np.random.Generator]:
    """Split a master seed into independent (coarse, fine) streams.

    The split never consumes coarse draws, so regenerating with the same
    seed but a different transition matrix leaves the jitter unchanged,
    and the jitter may be drawn offline ahead of time.
    """
    coarse_seed, fine_seed = seed_children(seed, 2)
    return np.random.default_rng(coarse_seed), np.random.default_rng(fine_seed)


def coarse_profile(model: TwoLevelModel, initial_state: int, n_steps: int, rng: SeedLike) -> np.ndarray:
    """Smoothed drift track from a fresh chain sample."""
    states = sample_chain(model.coarse, initial_state, n_steps, rng)
    return smooth_values(model.coarse.state_centers[states], model.coarse.smoothing_taps)


def generate_profile(
    model: TwoLevelModel, initial_offset: float, duration: float, seed: SeedLike
) -> OffsetSeries:
    """Full artificial offset profile: drift plus independent jitter.

    The step count is duration rounded to whole steps (at least one); the
    output is a pure function of (model, initial_offset, duration, seed).
    """
    params = model.params
    if not -0.5 <= initial_offset <= 0.5:
        raise ValueError(f"initial offset {initial_offset!r} outside [-0.5, 0.5]")
    if duration < params.dt:
        raise ValueError("duration must cover at least one step")
    if model.fine is None:
        raise NotCalibratedError("fine model not fitted; cannot generate a full profile")
    n_steps = max(1, int(round(duration / params.dt)))
    rng_coarse, rng_fine = derive_streams(seed)
    drift = coarse_profile(model, discretize(initial_offset, params.n_c), n_steps, rng_coarse)
    jitter = generate_noise(model.fine, n_steps, rng_fine).values
    return OffsetSeries(params.dt, drift + jitter)


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory plus rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def model_to_dict(model: TwoLevelModel) -> dict:
    if model.fine is None:
        raise NotCalibratedError("fine model not fitted; model file requires both levels")
    params = model.params
    return {
        "version": FORMAT_VERSION,
        "params": {name: getattr(params, name) for name in _PARAM_FILE_FIELDS},
        "coarse": {
            "transition": model.coarse.transition.reshape(-1).tolist(),
            "state_centers": model.coarse.state_centers.tolist(),
        },
        "fine": {
            "kernel_taps": model.fine.kernel_taps.tolist(),
            "noise_halfwidth": model.fine.noise_halfwidth,
        },
        "metadata": dict(model.metadata),
    }


def _require(doc: dict, key: str, context: str = "model file"):
    if not isinstance(doc, dict) or key not in doc:
        raise ModelFormatError(f"{context} is missing field {key!r}")
    return doc[key]


def model_from_dict(doc: dict) -> TwoLevelModel:
    version = _require(doc, "version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version!r}")
    raw_params = _require(doc, "params")
    try:
        params = ModelParams(**{name: raw_params[name] for name in _PARAM_FILE_FIELDS})
    except KeyError as exc:
        raise ModelFormatError(f"params section is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid params: {exc}") from None

    raw_coarse = _require(doc, "coarse")
    flat = np.asarray(_require(raw_coarse, "transition", "coarse section"), dtype=np.float64)
    if flat.size != params.n_c * params.n_c:
        raise ModelFormatError(
            f"coarse.transition has {flat.size} entries, expected {params.n_c * params.n_c}"
        )
    try:
        coarse = CoarseModel(
            n_c=params.n_c,
            dt=params.dt,
            transition=flat.reshape(params.n_c, params.n_c),
            smoothing_sigma=params.smoothing_sigma,
            smoothing_support=params.smoothing_support,
        )
    except ValueError as exc:
        raise ModelFormatError(f"invalid coarse model: {exc}") from None
    centers = np.asarray(_require(raw_coarse, "state_centers", "coarse section"), dtype=np.float64)
    if centers.size != params.n_c or not np.allclose(
        centers, state_centers(params.n_c), rtol=0.0, atol=1e-12
    ):
        raise ModelFormatError("coarse.state_centers do not match the n_c bin grid")

    raw_fine = _require(doc, "fine")
    try:
        fine = FineModel(
            kernel_taps=np.asarray(_require(raw_fine, "kernel_taps", "fine section"), dtype=np.float64),
            dt=params.dt,
            noise_halfwidth=float(_require(raw_fine, "noise_halfwidth", "fine section")),
            cap_threshold=params.cap_threshold,
        )
    except ValueError as exc:
        raise ModelFormatError(f"invalid fine model: {exc}") from None

    metadata = doc.get("metadata") or {}
    if not isinstance(metadata, dict):
        raise ModelFormatError("metadata must be a JSON object")
    return TwoLevelModel(params=params, coarse=coarse, fine=fine, metadata=metadata)


def save_model(model: TwoLevelModel, destination) -> None:
    """Serialize to JSON with full float precision, written atomically."""
    atomic_write_text(destination, json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(source) -> TwoLevelModel:
    path = Path(source)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ModelFormatError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
    return model_from_dict(doc)
