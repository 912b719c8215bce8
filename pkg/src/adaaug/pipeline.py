"""The fixed-order augmentation pipeline and its reverse-mode gradient.

Order per image: pixel blitting and general geometry (one combined warp),
color transform, frequency-band filtering, additive noise, cutout.  Every
image in a batch is augmented independently; parameters come from per-image
counter-based streams, so results are invariant to batch splitting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ContractError, PaddingError
from .geometry import GeometryPlan
from .params import (ColorMatrix, CorruptionParams, FilterGain, GeomParams,
                     sample_color, sample_corruption, sample_filter,
                     sample_geom, validate_strength)
from .photometric import (apply_color, apply_color_adjoint, apply_corruption,
                          apply_corruption_adjoint, apply_filter,
                          apply_filter_adjoint, build_amplification_filter)
from .rng import ImageRng
from .wavelets import WaveletFilter, wavelet

CATEGORIES = ("blit", "geom", "color", "filter", "noise", "cutout")

# Independent gates per enabled category; the rotation pair acts as one gate.
GATES_PER_CATEGORY = {"blit": 3, "geom": 4, "color": 5, "filter": 4,
                      "noise": 1, "cutout": 1}


@dataclass
class PipelineConfig:
    """Which categories run, at what shared strength, under which seed."""

    p: float = 0.0
    blit: bool = True
    geom: bool = True
    color: bool = True
    filter: bool = False
    noise: bool = False
    cutout: bool = False
    seed: int = 0
    geometry_wavelet: str = "sym6"
    filter_wavelet: str = "sym2"

    def __post_init__(self):
        validate_strength(self.p)

    def enabled(self) -> dict[str, bool]:
        return {name: bool(getattr(self, name)) for name in CATEGORIES}

    def gate_count(self) -> int:
        return sum(GATES_PER_CATEGORY[c] for c, on in self.enabled().items() if on)

    def to_json(self) -> str:
        return json.dumps({"p": self.p, "categories": self.enabled(),
                           "seed": self.seed})

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        doc = json.loads(text)
        cats = doc.get("categories", {})
        unknown = set(cats) - set(CATEGORIES)
        if unknown:
            raise ValueError(f"unknown categories in config: {sorted(unknown)}")
        return cls(p=doc["p"], seed=doc.get("seed", 0),
                   **{name: cats.get(name, False) for name in CATEGORIES})


@dataclass
class AugmentRecord:
    """Everything needed to replay one image's augmentation exactly."""

    image_index: int
    geom: GeomParams = field(default_factory=GeomParams)
    color: ColorMatrix = field(default_factory=ColorMatrix)
    filter_gain: FilterGain = field(default_factory=FilterGain)
    corruption: CorruptionParams = field(default_factory=CorruptionParams)
    geom_salt: int = 0
    margins_clamped: bool = False
    seed: int = 0

    def fired_count(self) -> int:
        return (self.geom.fired_count() + self.color.fired_count()
                + self.filter_gain.fired_count() + self.corruption.fired_count())

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["geom"]["matrix"] = self.geom.matrix.tolist()
        doc["color"]["matrix"] = self.color.matrix.tolist()
        doc["filter_gain"]["gains"] = self.filter_gain.gains.tolist()
        doc["filter_gain"]["lam"] = self.filter_gain.lam.tolist()
        return doc


def _check_batch(batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 4:
        raise ValueError(f"expected a 4-D (batch, channel, height, width) array, "
                         f"got {batch.ndim}-D")
    if batch.shape[1] != 3:
        raise ValueError(f"pipeline requires 3 channels, got {batch.shape[1]}")
    if not np.all(np.isfinite(batch)):
        raise ValueError("batch contains non-finite values")
    return batch


def sample_record(cfg: PipelineConfig, image_index: int,
                  height: int, width: int) -> AugmentRecord:
    """Draw one image's parameters for every enabled category."""
    rng = ImageRng(cfg.seed, image_index)
    rec = AugmentRecord(image_index=image_index, seed=cfg.seed)
    if cfg.blit or cfg.geom:
        rec.geom = sample_geom(cfg.p, width, height, rng,
                               enable_blit=cfg.blit, enable_geom=cfg.geom)
    if cfg.color:
        rec.color = sample_color(cfg.p, rng)
    if cfg.filter:
        rec.filter_gain = sample_filter(cfg.p, rng)
    if cfg.noise or cfg.cutout:
        corr = sample_corruption(cfg.p, rng)
        if not cfg.noise:
            corr.noise_sigma = 0.0
        if not cfg.cutout:
            corr.cutout_center = None
        rec.corruption = corr
    return rec


def _geometry_plan(rec: AugmentRecord, cfg: PipelineConfig, h: int, w: int,
                   filt: WaveletFilter) -> GeometryPlan | None:
    if rec.geom.fired_count() == 0:
        return None
    return GeometryPlan.from_params(rec.geom, h, w, filt,
                                    clamp_margins=rec.margins_clamped)


def _apply_one(img: np.ndarray, rec: AugmentRecord, cfg: PipelineConfig,
               geom_filt: WaveletFilter, band_filt: WaveletFilter) -> np.ndarray:
    plan = _geometry_plan(rec, cfg, img.shape[-2], img.shape[-1], geom_filt)
    out = plan.forward(img) if plan is not None else img
    if not rec.color.is_identity():
        out = apply_color(out, rec.color.matrix)
    if not rec.filter_gain.is_identity():
        taps = build_amplification_filter(rec.filter_gain, band_filt)
        out = apply_filter(out, taps)
    if rec.corruption.fired_count() > 0:
        out = apply_corruption(out, rec.corruption,
                               ImageRng(cfg.seed, rec.image_index))
    return out


def augment(batch: np.ndarray, cfg: PipelineConfig,
            image_index_base: int = 0) -> tuple[np.ndarray, list[AugmentRecord]]:
    """Augment each image independently; returns the batch and replay records."""
    batch = _check_batch(batch)
    geom_filt = wavelet(cfg.geometry_wavelet)
    band_filt = wavelet(cfg.filter_wavelet)
    n, _, h, w = batch.shape
    out = np.empty_like(batch)
    records = []
    for i in range(n):
        rec = sample_record(cfg, image_index_base + i, h, w)
        if rec.geom.fired_count() > 0 and not rec.geom.is_blit_only():
            rec = _refit_margins(rec, cfg, h, w, geom_filt)
        out[i] = _apply_one(batch[i], rec, cfg, geom_filt, band_filt)
        records.append(rec)
    return out, records


def _refit_margins(rec: AugmentRecord, cfg: PipelineConfig, h: int, w: int,
                   filt: WaveletFilter) -> AugmentRecord:
    """Re-draw once if the sampled transform cannot be padded, then clamp."""
    from .geometry import calculate_padding
    rng = ImageRng(cfg.seed, rec.image_index)
    try:
        calculate_padding(rec.geom.matrix, w, h, filt)
        return rec
    except PaddingError:
        pass
    redraw = sample_geom(cfg.p, w, h, rng, enable_blit=cfg.blit,
                         enable_geom=cfg.geom, salt=1)
    rec.geom = redraw
    rec.geom_salt = 1
    try:
        if redraw.fired_count() > 0 and not redraw.is_blit_only():
            calculate_padding(redraw.matrix, w, h, filt)
        return rec
    except PaddingError:
        rec.margins_clamped = True
        return rec


def _check_records(batch: np.ndarray, records: list[AugmentRecord],
                   cfg: PipelineConfig):
    if len(records) != batch.shape[0]:
        raise ContractError(
            f"record count {len(records)} does not match batch size {batch.shape[0]}")
    for rec in records:
        if rec.seed != cfg.seed:
            raise ContractError(
                f"record for image {rec.image_index} was sampled under seed "
                f"{rec.seed}, not the config's seed {cfg.seed}")


def augment_replay(batch: np.ndarray, records: list[AugmentRecord],
                   cfg: PipelineConfig) -> np.ndarray:
    """Forward pass with fixed, previously sampled parameters."""
    batch = _check_batch(batch)
    _check_records(batch, records, cfg)
    geom_filt = wavelet(cfg.geometry_wavelet)
    band_filt = wavelet(cfg.filter_wavelet)
    out = np.empty_like(batch)
    for i, rec in enumerate(records):
        out[i] = _apply_one(batch[i], rec, cfg, geom_filt, band_filt)
    return out


def augment_vjp(batch: np.ndarray, records: list[AugmentRecord],
                cfg: PipelineConfig, upstream_grad: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product w.r.t. the input images.

    Sampled parameters and noise realizations are constants; the map from
    image to augmented image is affine, so the VJP is the transpose of its
    linear part applied stage by stage in reverse.
    """
    batch = _check_batch(batch)
    _check_records(batch, records, cfg)
    upstream_grad = np.asarray(upstream_grad, dtype=np.float64)
    if upstream_grad.shape != batch.shape:
        raise ContractError(
            f"upstream gradient shape {upstream_grad.shape} does not match "
            f"batch shape {batch.shape}")
    geom_filt = wavelet(cfg.geometry_wavelet)
    band_filt = wavelet(cfg.filter_wavelet)
    n, _, h, w = batch.shape
    grad = np.empty_like(batch)
    for i, rec in enumerate(records):
        g = upstream_grad[i]
        g = apply_corruption_adjoint(g, rec.corruption)
        if not rec.filter_gain.is_identity():
            taps = build_amplification_filter(rec.filter_gain, band_filt)
            g = apply_filter_adjoint(g, taps)
        if not rec.color.is_identity():
            g = apply_color_adjoint(g, rec.color.matrix)
        plan = _geometry_plan(rec, cfg, h, w, geom_filt)
        if plan is not None:
            g = plan.adjoint(g)
        grad[i] = g
    return grad
