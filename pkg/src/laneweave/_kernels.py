"""Hot inner loops, JIT-compiled when numba is available.

Set LANEWEAVE_NO_NUMBA=1 to force the pure-numpy fallback. Both backends
consume identical pre-drawn uniforms, so chain paths are bit-identical
regardless of which one runs.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

_DISABLED = os.environ.get("LANEWEAVE_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled via LANEWEAVE_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    njit = None
    HAS_NUMBA = False


def chain_path_numpy(cum_rows: np.ndarray, initial_state: int, uniforms: np.ndarray) -> np.ndarray:
    """Walk a discrete chain given cumulative row distributions and uniforms."""
    n_c = cum_rows.shape[0]
    out = np.empty(uniforms.size + 1, dtype=np.int64)
    out[0] = initial_state
    state = initial_state
    for i in range(uniforms.size):
        j = int(np.searchsorted(cum_rows[state], uniforms[i], side="right"))
        if j >= n_c:
            j = n_c - 1
        state = j
        out[i + 1] = state
    return out


def _chain_path_loop(cum_rows, initial_state, uniforms):
    n_c = cum_rows.shape[0]
    out = np.empty(uniforms.size + 1, dtype=np.int64)
    out[0] = initial_state
    state = initial_state
    for i in range(uniforms.size):
        j = np.searchsorted(cum_rows[state], uniforms[i], side="right")
        if j >= n_c:
            j = n_c - 1
        state = j
        out[i + 1] = state
    return out


chain_path_numba = njit(cache=True)(_chain_path_loop) if HAS_NUMBA else None

_forced: str | None = None


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if HAS_NUMBA else ("numpy",)


def active_backend() -> str:
    if _forced is not None:
        return _forced
    return "numba" if HAS_NUMBA else "numpy"


@contextmanager
def forced_backend(name: str):
    """Pin the chain backend within a block, e.g. for benchmarking."""
    global _forced
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available; choose from {available_backends()}")
    previous = _forced
    _forced = name
    try:
        yield
    finally:
        _forced = previous


def chain_path(cum_rows: np.ndarray, initial_state: int, uniforms: np.ndarray) -> np.ndarray:
    if active_backend() == "numba":
        return chain_path_numba(cum_rows, initial_state, uniforms)
    return chain_path_numpy(cum_rows, initial_state, uniforms)


def warmup() -> None:
    """Trigger JIT compilation so first timed use is not skewed."""
    cum = np.array([[1.0]])
    u = np.zeros(1)
    if chain_path_numba is not None:
        chain_path_numba(cum, 0, u)
    chain_path_numpy(cum, 0, u)
