"""Color transforms, frequency-band filtering, additive noise, and cutout."""

from __future__ import annotations

import numpy as np

from . import rng as rngmod
from .params import CorruptionParams, FilterGain, round_half_away
from .rng import ImageRng
from .wavelets import WaveletFilter


def apply_color(img: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Map each pixel [r, g, b] to the first three rows of C @ [r, g, b, 1]."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim < 3 or img.shape[-3] != 3:
        raise ValueError(f"apply_color expects 3 channels on axis -3, got shape {img.shape}")
    C = np.asarray(C, dtype=np.float64)
    A = C[:3, :3]
    b = C[:3, 3]
    out = np.einsum("ij,...jhw->...ihw", A, img)
    return out + b[:, None, None]


def apply_color_adjoint(grad: np.ndarray, C: np.ndarray) -> np.ndarray:
    A = np.asarray(C, dtype=np.float64)[:3, :3]
    return np.einsum("ji,...jhw->...ihw", A, np.asarray(grad, dtype=np.float64))


# ---------------------------------------------------------------------------
# Band amplification filter.  The four bandpasses are expanded once from the
# sym2 scaling filter into zero-phase tap arrays on a common grid; with unit
# gains they sum to a discrete delta, so the whole stage is skippable when no
# band fired.

_band_cache: dict = {}


def _zero_interleave(f: np.ndarray) -> np.ndarray:
    out = np.zeros(2 * len(f) - 1)
    out[::2] = f
    return out


def bandpass_bank(bank: WaveletFilter) -> np.ndarray:
    """(4, taps) zero-phase bandpass filters on a shared symmetric grid."""
    got = _band_cache.get(bank.name)
    if got is not None:
        return got
    h = bank.taps
    # lo2 = H(z) H(z^-1) / 2 and hi2 = H(-z) H(-z^-1) / 2; substituting
    # z -> z^2 is zero interleaving.  Bands: lowest octaves down to [0, pi/8].
    lo2 = np.convolve(h, h[::-1]) / 2.0
    hn = h * ((-1.0) ** np.arange(len(h)))
    hi2 = np.convolve(hn, hn[::-1]) / 2.0
    b4 = hi2
    b3 = np.convolve(lo2, _zero_interleave(hi2))
    b2 = np.convolve(np.convolve(lo2, _zero_interleave(lo2)),
                     _zero_interleave(_zero_interleave(hi2)))
    b1 = np.convolve(np.convolve(lo2, _zero_interleave(lo2)),
                     _zero_interleave(_zero_interleave(lo2)))
    width = len(b1)
    bands = np.zeros((4, width))
    for i, b in enumerate((b1, b2, b3, b4)):
        s = (width - len(b)) // 2
        bands[i, s:s + len(b)] = b
    _band_cache[bank.name] = bands
    return bands


def build_amplification_filter(gain: FilterGain | np.ndarray,
                               bank: WaveletFilter) -> np.ndarray:
    """Combined zero-phase taps sum_i g_i * Bandpass(H(z), b_i)."""
    g = gain.gains if isinstance(gain, FilterGain) else np.asarray(gain, dtype=np.float64)
    if g.shape != (4,):
        raise ValueError(f"expected 4 band gains, got shape {g.shape}")
    return g @ bandpass_bank(bank)


_conv_cache: dict = {}


def _conv_same_reflect_matrix(length: int, taps: np.ndarray) -> np.ndarray:
    """Dense operator: reflect-pad by the half support, convolve, crop."""
    key = (length, taps.tobytes())
    mat = _conv_cache.get(key)
    if mat is None:
        m = (len(taps) - 1) // 2
        idx = np.arange(-m, length + m)
        if length == 1:
            src = np.zeros_like(idx)
        else:
            period = 2 * length - 2
            j = np.mod(idx, period)
            src = np.where(j >= length, period - j, j)
        pad = np.zeros((length + 2 * m, length))
        pad[np.arange(length + 2 * m), src] = 1.0
        conv = np.zeros((length, length + 2 * m))
        rev = taps[::-1]
        for i in range(length):
            conv[i, i:i + len(taps)] = rev
        mat = conv @ pad
        _conv_cache[key] = mat
    return mat


def apply_filter(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable row/column convolution with reflect padding, shape preserved."""
    taps = np.asarray(taps, dtype=np.float64)
    if taps.ndim != 1 or len(taps) % 2 == 0:
        raise ValueError("filter taps must be a 1-D odd-length (zero-phase) array")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[-2:]
    rows = _conv_same_reflect_matrix(h, taps)
    cols = _conv_same_reflect_matrix(w, taps)
    out = np.tensordot(img, rows, axes=([-2], [1]))
    out = np.tensordot(out, cols, axes=([-2], [1]))
    return np.ascontiguousarray(out)


def apply_filter_adjoint(grad: np.ndarray, taps: np.ndarray) -> np.ndarray:
    taps = np.asarray(taps, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    h, w = grad.shape[-2:]
    rows = _conv_same_reflect_matrix(h, taps).T
    cols = _conv_same_reflect_matrix(w, taps).T
    out = np.tensordot(grad, rows, axes=([-2], [1]))
    out = np.tensordot(out, cols, axes=([-2], [1]))
    return np.ascontiguousarray(out)


# ---------------------------------------------------------------------------
# Corruptions.

def noise_field(shape, sigma: float, rng: ImageRng) -> np.ndarray:
    """The additive noise realization for one image, reproducible from rng."""
    gen = rng.stream(rngmod.SLOT_NOISE_FIELD)
    return gen.standard_normal(shape) * sigma


def cutout_mask(h: int, w: int, center: tuple[float, float]) -> np.ndarray:
    """Boolean (h, w) mask that is True inside the zeroed w/2 x h/2 rectangle.

    Bounds are round((c +- 1/4) * dim) with half-away rounding, end-exclusive,
    intersected with the image.
    """
    cx, cy = center
    x_lo = int(round_half_away((cx - 0.25) * w))
    x_hi = int(round_half_away((cx + 0.25) * w))
    y_lo = int(round_half_away((cy - 0.25) * h))
    y_hi = int(round_half_away((cy + 0.25) * h))
    mask = np.zeros((h, w), dtype=bool)
    mask[max(y_lo, 0):max(y_hi, 0), max(x_lo, 0):max(x_hi, 0)] = True
    return mask


def apply_corruption(img: np.ndarray, params: CorruptionParams,
                     rng: ImageRng) -> np.ndarray:
    """Additive per-pixel Gaussian noise, then the cutout rectangle to zero."""
    img = np.asarray(img, dtype=np.float64)
    out = img
    if params.noise_sigma > 0.0:
        out = out + noise_field(out.shape, params.noise_sigma, rng)
    if params.cutout_center is not None:
        h, w = out.shape[-2:]
        mask = cutout_mask(h, w, params.cutout_center)
        out = np.where(mask, 0.0, out)
    return out


def apply_corruption_adjoint(grad: np.ndarray, params: CorruptionParams) -> np.ndarray:
    grad = np.asarray(grad, dtype=np.float64)
    if params.cutout_center is not None:
        h, w = grad.shape[-2:]
        mask = cutout_mask(h, w, params.cutout_center)
        grad = np.where(mask, 0.0, grad)
    return grad
