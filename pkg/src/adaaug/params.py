"""Per-image sampling of augmentation parameters.

Each sub-transform fires independently with the shared strength p (the two
arbitrary rotations with 1 - sqrt(1 - p) each, so that at least one of them
fires with probability p) and accumulates an elementary matrix into the
combined transform.  Gate draws always precede value draws within a slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .rng import ImageRng

LUMA_AXIS = np.array([1.0, 1.0, 1.0, 0.0]) / np.sqrt(3.0)

# Expected power spectrum weights (1/f) for the four frequency bands.
BAND_LAMBDA = np.array([10.0, 1.0, 1.0, 1.0]) / 13.0


def validate_strength(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"augmentation strength p must be in [0, 1], got {p}")
    return p


def rotation_gate_probability(p: float) -> float:
    """Per-rotation gate probability such that P(pre or post) = p."""
    return 1.0 - math.sqrt(1.0 - validate_strength(p))


def round_half_away(v):
    """round() with a fixed tie rule: halves go away from zero."""
    v = np.asarray(v, dtype=np.float64)
    return np.copysign(np.floor(np.abs(v) + 0.5), v)


# ---------------------------------------------------------------------------
# Elementary homogeneous matrices.

def scale2d(sx: float, sy: float) -> np.ndarray:
    return np.array([[sx, 0.0, 0.0], [0.0, sy, 0.0], [0.0, 0.0, 1.0]])


def translate2d(tx: float, ty: float) -> np.ndarray:
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])


def rotate2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# Exact entries for quarter-turn multiples keep pixel blitting lossless.
_QUARTER_TURNS = {
    0: np.eye(3),
    1: np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    2: np.array([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]),
    3: np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
}


def rotate2d_quarter(i: int) -> np.ndarray:
    """Rotate2D(-pi/2 * i) with exact 0/±1 entries."""
    return _QUARTER_TURNS[i % 4].copy()


def translate3d(tx: float, ty: float, tz: float) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = (tx, ty, tz)
    return m


def scale3d(sx: float, sy: float, sz: float) -> np.ndarray:
    return np.diag([sx, sy, sz, 1.0])


def rotate3d(axis: np.ndarray, theta: float) -> np.ndarray:
    """Homogeneous rotation about a unit 3-vector (first three components of axis)."""
    vx, vy, vz = np.asarray(axis, dtype=np.float64)[:3]
    s, c = math.sin(theta), math.cos(theta)
    cc = 1.0 - c
    return np.array([
        [vx * vx * cc + c,      vx * vy * cc - vz * s, vx * vz * cc + vy * s, 0.0],
        [vy * vx * cc + vz * s, vy * vy * cc + c,      vy * vz * cc - vx * s, 0.0],
        [vz * vx * cc - vy * s, vz * vy * cc + vx * s, vz * vz * cc + c,      0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _log2normal(gen: np.random.Generator, sigma_log2: float) -> float:
    # Log-normal via s = 2 ** (sigma * z): ln s ~ N(0, (sigma * ln 2)^2).
    return float(2.0 ** (sigma_log2 * gen.standard_normal()))


# ---------------------------------------------------------------------------
# Sampled parameter records.

@dataclass
class GeomParams:
    """Combined geometric transform and the sub-transform draws behind it.

    `matrix` maps input pixel to output pixel in homogeneous coordinates with
    the origin at the image center and unit pixel spacing.  Entries of `fired`
    are None for sub-transforms whose gate stayed closed.
    """

    matrix: np.ndarray = field(default_factory=lambda: np.eye(3))
    xflip: int | None = None
    rot90: int | None = None
    xint: tuple[float, float] | None = None
    scale: float | None = None
    prerot: float | None = None
    aniso: float | None = None
    postrot: float | None = None
    xfrac: tuple[float, float] | None = None

    def fired_count(self) -> int:
        return sum(v is not None for v in (
            self.xflip, self.rot90, self.xint, self.scale,
            self.prerot, self.aniso, self.postrot, self.xfrac))

    def is_blit_only(self) -> bool:
        return all(v is None for v in (self.scale, self.prerot, self.aniso,
                                       self.postrot, self.xfrac))


@dataclass
class ColorMatrix:
    """Homogeneous 4x4 color transform plus the draws that produced it."""

    matrix: np.ndarray = field(default_factory=lambda: np.eye(4))
    brightness: float | None = None
    contrast: float | None = None
    lumaflip: int | None = None
    hue: float | None = None
    saturation: float | None = None

    def fired_count(self) -> int:
        return sum(v is not None for v in (
            self.brightness, self.contrast, self.lumaflip, self.hue, self.saturation))

    def is_identity(self) -> bool:
        return self.fired_count() == 0


@dataclass
class FilterGain:
    """Per-band amplification gains; lam is the assumed power spectrum."""

    gains: np.ndarray = field(default_factory=lambda: np.ones(4))
    lam: np.ndarray = field(default_factory=lambda: BAND_LAMBDA.copy())
    band_draws: tuple = (None, None, None, None)

    def fired_count(self) -> int:
        return sum(v is not None for v in self.band_draws)

    def is_identity(self) -> bool:
        return self.fired_count() == 0


@dataclass
class CorruptionParams:
    noise_sigma: float = 0.0
    cutout_center: tuple[float, float] | None = None

    def fired_count(self) -> int:
        return int(self.noise_sigma > 0.0) + int(self.cutout_center is not None)


# ---------------------------------------------------------------------------
# Samplers.  `rng` is an ImageRng (or anything exposing .stream(slot, salt)).

def sample_geom(p: float, width: int, height: int, rng: ImageRng,
                enable_blit: bool = True, enable_geom: bool = True,
                salt: int = 0) -> GeomParams:
    """Draw the seven geometric sub-transforms and accumulate their matrices."""
    p = validate_strength(p)
    if width < 1 or height < 1:
        raise ValueError(f"image dimensions must be >= 1, got {width}x{height}")
    params = GeomParams()
    G = np.eye(3)

    if enable_blit:
        gen = rng.stream(rngmod.SLOT_XFLIP, salt)
        if gen.random() < p:
            i = int(gen.integers(0, 2))
            params.xflip = i
            G = scale2d(1.0 - 2.0 * i, 1.0) @ G

        gen = rng.stream(rngmod.SLOT_ROT90, salt)
        if gen.random() < p:
            i = int(gen.integers(0, 4))
            params.rot90 = i
            G = rotate2d_quarter(i) @ G

        gen = rng.stream(rngmod.SLOT_XINT, salt)
        if gen.random() < p:
            t = gen.uniform(-0.125, 0.125, size=2)
            tx = float(round_half_away(t[0] * width))
            ty = float(round_half_away(t[1] * height))
            params.xint = (tx, ty)
            G = translate2d(tx, ty) @ G

    if enable_geom:
        gen = rng.stream(rngmod.SLOT_SCALE, salt)
        if gen.random() < p:
            s = _log2normal(gen, 0.2)
            params.scale = s
            G = scale2d(s, s) @ G

        p_rot = rotation_gate_probability(p)

        gen = rng.stream(rngmod.SLOT_PREROT, salt)
        if gen.random() < p_rot:
            theta = float(gen.uniform(-math.pi, math.pi))
            params.prerot = theta
            G = rotate2d(-theta) @ G  # before anisotropic scaling

        gen = rng.stream(rngmod.SLOT_ANISO, salt)
        if gen.random() < p:
            s = _log2normal(gen, 0.2)
            params.aniso = s
            G = scale2d(s, 1.0 / s) @ G

        gen = rng.stream(rngmod.SLOT_POSTROT, salt)
        if gen.random() < p_rot:
            theta = float(gen.uniform(-math.pi, math.pi))
            params.postrot = theta
            G = rotate2d(-theta) @ G  # after anisotropic scaling

        gen = rng.stream(rngmod.SLOT_XFRAC, salt)
        if gen.random() < p:
            t = gen.standard_normal(2) * 0.125
            params.xfrac = (float(t[0] * width), float(t[1] * height))
            G = translate2d(*params.xfrac) @ G

    params.matrix = G
    return params


def sample_color(p: float, rng: ImageRng) -> ColorMatrix:
    """Draw brightness, contrast, luma flip, hue rotation, and saturation."""
    p = validate_strength(p)
    params = ColorMatrix()
    C = np.eye(4)

    gen = rng.stream(rngmod.SLOT_BRIGHTNESS)
    if gen.random() < p:
        b = float(gen.standard_normal() * 0.2)
        params.brightness = b
        C = translate3d(b, b, b) @ C

    gen = rng.stream(rngmod.SLOT_CONTRAST)
    if gen.random() < p:
        c = _log2normal(gen, 0.5)
        params.contrast = c
        C = scale3d(c, c, c) @ C

    v = LUMA_AXIS
    vv = np.outer(v, v)

    gen = rng.stream(rngmod.SLOT_LUMAFLIP)
    if gen.random() < p:
        i = int(gen.integers(0, 2))
        params.lumaflip = i
        C = (np.eye(4) - 2.0 * vv * i) @ C  # Householder reflection

    gen = rng.stream(rngmod.SLOT_HUE)
    if gen.random() < p:
        theta = float(gen.uniform(-math.pi, math.pi))
        params.hue = theta
        C = rotate3d(v, theta) @ C

    gen = rng.stream(rngmod.SLOT_SATURATION)
    if gen.random() < p:
        s = _log2normal(gen, 1.0)
        params.saturation = s
        sat = vv + (np.eye(4) - vv) * s
        # The homogeneous row never reaches the pixel output; keeping it at
        # [0, 0, 0, 1] preserves the matrix contract without changing colors.
        sat[3, 3] = 1.0
        C = sat @ C

    params.matrix = C
    return params


def sample_filter(p: float, rng: ImageRng) -> FilterGain:
    """Draw per-band amplifications, renormalizing total power after each."""
    p = validate_strength(p)
    g = np.ones(4)
    draws = [None, None, None, None]
    for i in range(4):
        gen = rng.stream(rngmod.SLOT_BAND_BASE + i)
        if gen.random() < p:
            t_i = _log2normal(gen, 1.0)
            draws[i] = t_i
            t = np.ones(4)
            t[i] = t_i
            t = t / np.sqrt(np.sum(BAND_LAMBDA * t * t))
            g = g * t
    return FilterGain(gains=g, band_draws=tuple(draws))


def sample_corruption(p: float, rng: ImageRng) -> CorruptionParams:
    """Draw the additive-noise magnitude and the cutout center."""
    p = validate_strength(p)
    params = CorruptionParams()

    gen = rng.stream(rngmod.SLOT_NOISE)
    if gen.random() < p:
        params.noise_sigma = float(abs(gen.standard_normal() * 0.1))

    gen = rng.stream(rngmod.SLOT_CUTOUT)
    if gen.random() < p:
        c = gen.random(2)
        params.cutout_center = (float(c[0]), float(c[1]))
    return params
