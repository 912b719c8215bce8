"""Orthogonal wavelet scaling filters and the 2x resampling pair built on them.

The resamplers are realized as cached 1-D operator matrices so that the exact
adjoint of every step is available by transposition.  Boundary handling inside
the resamplers is periodic, which is what makes the pair a perfect
reconstruction pair at every pixel (see `downsample2x2` docstring); callers
that need reflection semantics pad the image first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Scaling (lowpass) filter coefficients, decomposition convention, sum = sqrt(2).
_COEFFS = {
    "sym2": [
        -0.12940952255092145, 0.22414386804185735,
        0.836516303737469, 0.48296291314469025,
    ],
    "sym6": [
        0.015404109327027373, 0.0034907120842174702, -0.11799011114819057,
        -0.048311742585633, 0.4910559419267466, 0.787641141030194,
        0.3379294217276218, -0.07263752278646252, -0.021060292512300564,
        0.04472490177066578, 0.0017677118642428036, -0.007800708325034148,
    ],
}


@dataclass(frozen=True)
class WaveletFilter:
    name: str
    taps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "taps", np.asarray(self.taps, dtype=np.float64))

    @property
    def support_margin(self) -> int:
        """Spatial margin (in output pixels) that one resampling pass can touch."""
        return int(np.ceil((len(self.taps) - 1) / 2))


def wavelet(name: str) -> WaveletFilter:
    if name not in _COEFFS:
        raise ValueError(f"unknown wavelet {name!r}; available: {sorted(_COEFFS)}")
    return WaveletFilter(name, np.array(_COEFFS[name], dtype=np.float64))


def orthogonality_defect(filt: WaveletFilter) -> float:
    """Max deviation of sum_n h[n] h[n+2k] from delta(k)."""
    h = filt.taps
    worst = 0.0
    for k in range(len(h) // 2):
        ac = float(np.dot(h[: len(h) - 2 * k], h[2 * k:]))
        worst = max(worst, abs(ac - (1.0 if k == 0 else 0.0)))
    return worst


# ---------------------------------------------------------------------------
# 1-D resampling operators.
#
# With h the scaling filter of even length T, A = T // 2 and B = T - 1 - A:
#
#   up:   y[n] = sum_k x[k] * (sqrt(2) * h_rev)[n - 2k + A]      (k periodic)
#   down: z[m] = sum_j (h / sqrt(2))[j] * y[2m + B - j]          (y periodic)
#
# Up is zero-stuffing followed by convolution with the time-reversed filter,
# down is convolution with the filter followed by decimation.  The offsets
# satisfy A + B = T - 1, which together with the orthogonality of h makes
# down(up(x)) == x exactly, for all positions including boundaries.  The gains
# sqrt(2) and 1/sqrt(2) make both operators preserve constants.

_matrix_cache: dict = {}


def _up_matrix(length: int, filt: WaveletFilter) -> np.ndarray:
    key = ("up", length, filt.name)
    mat = _matrix_cache.get(key)
    if mat is None:
        h = filt.taps
        T = len(h)
        A = T // 2
        hu = np.sqrt(2.0) * h[::-1]
        mat = np.zeros((2 * length, length))
        for n in range(2 * length):
            # n - 2k + A in [0, T)  =>  k in [(n + A - T + 1) / 2, (n + A) / 2]
            k_lo = -(-(n + A - T + 1) // 2)
            k_hi = (n + A) // 2
            for k in range(k_lo, k_hi + 1):
                j = n - 2 * k + A
                if 0 <= j < T:
                    mat[n, k % length] += hu[j]
        _matrix_cache[key] = mat
    return mat


def _down_matrix(length2: int, filt: WaveletFilter) -> np.ndarray:
    key = ("down", length2, filt.name)
    mat = _matrix_cache.get(key)
    if mat is None:
        h = filt.taps
        T = len(h)
        B = T - 1 - T // 2
        hd = h / np.sqrt(2.0)
        mat = np.zeros((length2 // 2, length2))
        for m in range(length2 // 2):
            for j in range(T):
                mat[m, (2 * m + B - j) % length2] += hd[j]
        _matrix_cache[key] = mat
    return mat


def _apply_separable(img: np.ndarray, row_op: np.ndarray, col_op: np.ndarray) -> np.ndarray:
    # Operates on the trailing two axes of an arbitrarily batched array.
    out = np.tensordot(img, row_op, axes=([-2], [1]))  # (..., W, H')
    out = np.tensordot(out, col_op, axes=([-2], [1]))  # (..., H', W')
    return np.ascontiguousarray(out)


def upsample2x2(img: np.ndarray, filt: WaveletFilter) -> np.ndarray:
    """Double both trailing dimensions; input sample k lands at output 2k."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim < 2:
        raise ValueError("expected an array with at least 2 dimensions")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    h, w = img.shape[-2:]
    return _apply_separable(img, _up_matrix(h, filt), _up_matrix(w, filt))


def downsample2x2(img: np.ndarray, filt: WaveletFilter) -> np.ndarray:
    """Halve both trailing dimensions; exact inverse of `upsample2x2`."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim < 2:
        raise ValueError("expected an array with at least 2 dimensions")
    h, w = img.shape[-2:]
    if h % 2 or w % 2:
        raise ValueError(f"downsample2x2 needs even dimensions, got {h}x{w}")
    return _apply_separable(img, _down_matrix(h, filt), _down_matrix(w, filt))


def upsample2x2_adjoint(grad: np.ndarray, filt: WaveletFilter) -> np.ndarray:
    grad = np.asarray(grad, dtype=np.float64)
    h, w = grad.shape[-2:]
    return _apply_separable(grad, _up_matrix(h // 2, filt).T, _up_matrix(w // 2, filt).T)


def downsample2x2_adjoint(grad: np.ndarray, filt: WaveletFilter) -> np.ndarray:
    grad = np.asarray(grad, dtype=np.float64)
    h, w = grad.shape[-2:]
    return _apply_separable(grad, _down_matrix(2 * h, filt).T, _down_matrix(2 * w, filt).T)
