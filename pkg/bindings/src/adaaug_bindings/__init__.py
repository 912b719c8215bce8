"""In-process bindings for wiring the augmentation pipeline into training loops.

The host framework calls `py_augment` on the way into the discriminator and
`py_vjp` with the returned records handle inside its backward hook; the
controller handle ingests discriminator outputs and republishes the strength.
Buffers pass through without copies where layout permits, and numeric results
are bit-identical to the core package.
"""

from __future__ import annotations

import numpy as np

from adaaug.controller import ControllerState, OverfitStats, update
from adaaug.pipeline import (AugmentRecord, PipelineConfig, augment,
                             augment_replay, augment_vjp)

__all__ = [
    "RecordsHandle", "ControllerHandle", "py_augment", "py_augment_replay",
    "py_vjp", "py_controller_update",
]


def _check_buffer(batch, name="batch") -> np.ndarray:
    arr = np.asarray(batch)
    if arr.dtype not in (np.float32, np.float64):
        raise TypeError(f"{name} must be float32 or float64, got {arr.dtype}")
    if arr.ndim != 4:
        raise ValueError(f"{name} must be 4-D (batch, channel, height, width), "
                         f"got {arr.ndim} axes")
    if arr.shape[1] != 3:
        raise ValueError(f"{name} axis 1 (channel) must have size 3, "
                         f"got {arr.shape[1]}")
    if not arr.flags["C_CONTIGUOUS"]:
        raise ValueError(f"{name} must be C-contiguous")
    return arr


def _config(config: dict | PipelineConfig) -> PipelineConfig:
    if isinstance(config, PipelineConfig):
        return config
    import json
    return PipelineConfig.from_json(json.dumps(config))


class RecordsHandle:
    """Opaque replay token tying sampled parameters to their configuration."""

    def __init__(self, records: list[AugmentRecord], cfg: PipelineConfig,
                 shape: tuple):
        self._records = records
        self._cfg = cfg
        self._shape = shape

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[AugmentRecord]:
        return self._records


def py_augment(batch, config, index_base: int = 0):
    """Augment a float image buffer; returns (augmented, records handle)."""
    arr = _check_buffer(batch)
    cfg = _config(config)
    out, records = augment(arr, cfg, image_index_base=index_base)
    return out, RecordsHandle(records, cfg, arr.shape)


def py_augment_replay(batch, handle: RecordsHandle):
    """Forward pass with the handle's fixed parameters (second-pass forward)."""
    arr = _check_buffer(batch)
    if arr.shape != handle._shape:
        raise ValueError(f"batch shape {arr.shape} does not match the handle's "
                         f"recorded shape {handle._shape}")
    return augment_replay(arr, handle._records, handle._cfg)


def py_vjp(batch, handle: RecordsHandle, upstream):
    """Gradient w.r.t. the input buffer for the handle's augmentation."""
    arr = _check_buffer(batch)
    grad = _check_buffer(upstream, name="upstream")
    if arr.shape != handle._shape:
        raise ValueError(f"batch shape {arr.shape} does not match the handle's "
                         f"recorded shape {handle._shape}")
    return augment_vjp(arr, handle._records, handle._cfg, grad)


class ControllerHandle:
    """Single-writer wrapper around the strength controller state."""

    def __init__(self, **kwargs):
        self._state = ControllerState(**kwargs)

    @property
    def p(self) -> float:
        return self._state.p

    @property
    def state(self) -> ControllerState:
        return self._state


def py_controller_update(handle: ControllerHandle, d_train, d_gen,
                         batch_size: int, d_val=None) -> float:
    """Fold one minibatch of discriminator outputs in; returns the new p."""
    stats = OverfitStats(d_train=list(d_train), d_generated=list(d_gen),
                         d_validation=None if d_val is None else list(d_val))
    handle._state = update(handle._state, stats, batch_size)
    return handle._state.p
