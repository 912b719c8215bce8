"""Execution of the combined geometric transform.

The general path follows the anti-aliasing scheme: reflect-pad by a
transform-dependent margin, upsample 2x with an orthogonal wavelet, apply a
single bilinear warp at the doubled resolution, downsample, and crop the
margin back off.  When only pixel blits fired (flips, quarter turns, integer
translations) the transform is a pure index permutation and is executed as
one, which keeps those augmentations lossless.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, PaddingError
from .params import GeomParams, scale2d, translate2d
from .wavelets import (WaveletFilter, downsample2x2, downsample2x2_adjoint,
                       upsample2x2, upsample2x2_adjoint)


def _margin_shortfalls(G, width, height, m_lo, m_hi, taps_len):
    """Per-side slack violations (in original-resolution pixels).

    The cropped output is clean when, tracing data dependencies backwards,
    the downsampling windows of the kept rows/columns read warped pixels
    whose bilinear sources lie in the zone where the upsampler saw only real
    (non-wrapped) padded content.  All pieces are affine, so checking the
    pulled-back corners of the crop-feeding region is exact.
    """
    T = taps_len
    A = T // 2
    B = T - 1 - A
    wp = width + m_lo[0] + m_hi[0]
    hp = height + m_lo[1] + m_hi[1]
    # Region feeding the crop, in upsampled index coordinates.
    x0, x1 = 2 * m_lo[0] - (T - 1 - B), 2 * (m_lo[0] + width - 1) + B
    y0, y1 = 2 * m_lo[1] - (T - 1 - B), 2 * (m_lo[1] + height - 1) + B
    S = scale2d(2.0, 2.0)
    G_up = S @ G @ np.linalg.inv(S)
    ox = 2.0 * (width / 2.0 - 0.5 + m_lo[0])
    oy = 2.0 * (height / 2.0 - 0.5 + m_lo[1])
    M = translate2d(ox, oy) @ G_up @ np.linalg.inv(translate2d(ox, oy))
    corners = np.array([[x0, y0, 1.0], [x1, y0, 1.0],
                        [x1, y1, 1.0], [x0, y1, 1.0]]).T
    src = (np.linalg.inv(M) @ corners)[:2]
    # Upsampler output n is wrap-free for n in [T - 1 - A, 2 * Lp - 2 - A].
    lo_bound = T - 1 - A
    hi_bound = np.array([2 * wp, 2 * hp]) - 2 - A
    lo_short = lo_bound - np.floor(src.min(axis=1))
    hi_short = np.ceil(src.max(axis=1)) - hi_bound

    def to_orig(v):
        # Two upsampled pixels per original padding pixel.
        return np.ceil(np.maximum(v, 0.0) / 2.0).astype(int)

    return to_orig(lo_short), to_orig(hi_short)


def calculate_padding(G: np.ndarray, width: int, height: int,
                      filt: WaveletFilter, clamp: bool = False):
    """Margins ((lo_x, lo_y), (hi_x, hi_y)) needed before resampling.

    Starts from the bounding box of the output corners pulled back through G
    (clamped at zero per side) plus the filter support margin, then grows the
    margins until every bilinear source footprint of the crop-feeding region,
    grown by the resampling filter support, lies inside the padded image.
    Reflection can supply at most dimension - 1 pixels per side; beyond that
    a PaddingError is raised unless `clamp` is set.
    """
    G = np.asarray(G, dtype=np.float64)
    if abs(np.linalg.det(G)) <= 1e-12:
        raise ValueError("geometric transform is not invertible")
    fm = filt.support_margin
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    corners = np.array([[-cx, -cy, 1.0], [cx, -cy, 1.0],
                        [cx, cy, 1.0], [-cx, cy, 1.0]]).T
    pulled = (np.linalg.inv(G) @ corners)[:2]
    lo = (np.maximum(np.ceil(np.max(-pulled, axis=1) - [cx, cy]), 0.0) + fm).astype(int)
    hi = (np.maximum(np.ceil(np.max(pulled, axis=1) - [cx, cy]), 0.0) + fm).astype(int)
    limit = np.array([width - 1, height - 1])
    taps_len = len(filt.taps)
    feasible = False
    for _ in range(64):
        lo_short, hi_short = _margin_shortfalls(G, width, height, lo, hi, taps_len)
        if not lo_short.any() and not hi_short.any():
            feasible = True
            break
        lo = lo + lo_short
        hi = hi + hi_short
    if not feasible or np.any(lo > limit) or np.any(hi > limit):
        if not clamp:
            raise PaddingError(
                f"transform needs margins lo={tuple(int(v) for v in lo)} "
                f"hi={tuple(int(v) for v in hi)} but reflection of a "
                f"{width}x{height} image supplies at most {tuple(limit)} per side")
        lo = np.minimum(lo, limit)
        hi = np.minimum(hi, limit)
    return (int(lo[0]), int(lo[1])), (int(hi[0]), int(hi[1]))


# ---------------------------------------------------------------------------
# Reflect padding as an explicit index map (adjoint = fold-back accumulation).

def _reflect_index(idx: np.ndarray, length: int) -> np.ndarray:
    if length == 1:
        return np.zeros_like(idx)
    period = 2 * length - 2
    j = np.mod(idx, period)
    return np.where(j >= length, period - j, j)


def reflect_pad(img: np.ndarray, lo_xy, hi_xy) -> np.ndarray:
    """Pad the trailing two axes by ((lo_x, lo_y), (hi_x, hi_y)), reflecting."""
    h, w = img.shape[-2:]
    rows = _reflect_index(np.arange(-lo_xy[1], h + hi_xy[1]), h)
    cols = _reflect_index(np.arange(-lo_xy[0], w + hi_xy[0]), w)
    return img[..., rows[:, None], cols[None, :]]


def reflect_pad_adjoint(grad: np.ndarray, lo_xy, hi_xy, h: int, w: int) -> np.ndarray:
    rows = _reflect_index(np.arange(-lo_xy[1], h + hi_xy[1]), h)
    cols = _reflect_index(np.arange(-lo_xy[0], w + hi_xy[0]), w)
    flat = (rows[:, None] * w + cols[None, :]).ravel()
    lead = grad.shape[:-2]
    g2 = grad.reshape(-1, flat.size)
    out = np.stack([np.bincount(flat, weights=g, minlength=h * w) for g in g2])
    return out.reshape(*lead, h, w)


# ---------------------------------------------------------------------------
# Bilinear warp in array-index coordinates.

class _WarpMap:
    """Precomputed gather indices and weights for one (G, shape) pair."""

    def __init__(self, G: np.ndarray, h: int, w: int, origin=None,
                 oob: str = "clamp", check_region=None):
        if origin is None:
            origin = ((w - 1) / 2.0, (h - 1) / 2.0)
        T = translate2d(origin[0], origin[1])
        M = T @ np.asarray(G, dtype=np.float64) @ np.linalg.inv(T)
        Mi = np.linalg.inv(M)
        cc, rr = np.meshgrid(np.arange(w, dtype=np.float64),
                             np.arange(h, dtype=np.float64))
        sx = Mi[0, 0] * cc + Mi[0, 1] * rr + Mi[0, 2]
        sy = Mi[1, 0] * cc + Mi[1, 1] * rr + Mi[1, 2]
        if oob == "error":
            # Only pixels that survive the caller's crop carry the contract.
            if check_region is None:
                rx = sx
                ry = sy
            else:
                ylo, yhi, xlo, xhi = check_region
                sl = (slice(max(ylo, 0), min(yhi, h)), slice(max(xlo, 0), min(xhi, w)))
                rx = sx[sl]
                ry = sy[sl]
            eps = 1e-9
            if (rx.min() < -eps or rx.max() > w - 1 + eps
                    or ry.min() < -eps or ry.max() > h - 1 + eps):
                raise ContractError(
                    "warp source coordinates leave the padded extent; the "
                    "padding calculation should have prevented this")
        x0f = np.floor(sx)
        y0f = np.floor(sy)
        self.wx = sx - x0f
        self.wy = sy - y0f
        x0 = np.clip(x0f.astype(np.int64), 0, w - 1)
        y0 = np.clip(y0f.astype(np.int64), 0, h - 1)
        x1 = np.clip(x0 + 1, 0, w - 1)
        y1 = np.clip(y0 + 1, 0, h - 1)
        self.h, self.w = h, w
        self.corners = ((y0, x0), (y0, x1), (y1, x0), (y1, x1))

    def weights(self):
        wx, wy = self.wx, self.wy
        return ((1 - wy) * (1 - wx), (1 - wy) * wx, wy * (1 - wx), wy * wx)

    def forward(self, img: np.ndarray) -> np.ndarray:
        out = 0.0
        for (ry, cx), wgt in zip(self.corners, self.weights()):
            out = out + wgt * img[..., ry, cx]
        return out

    def adjoint(self, grad: np.ndarray) -> np.ndarray:
        lead = grad.shape[:-2]
        g2 = grad.reshape(-1, self.h * self.w)
        acc = np.zeros((g2.shape[0], self.h * self.w))
        for (ry, cx), wgt in zip(self.corners, self.weights()):
            flat = (ry * self.w + cx).ravel()
            contrib = g2 * wgt.ravel()
            for b in range(g2.shape[0]):
                acc[b] += np.bincount(flat, weights=contrib[b],
                                      minlength=self.h * self.w)
        return acc.reshape(*lead, self.h, self.w)


def warp_affine(img: np.ndarray, G: np.ndarray, origin=None,
                oob: str = "clamp") -> np.ndarray:
    """Warp so that input pixel x_i lands at x_o = G x_i (origin at center).

    Source coordinates are G^-1 [x_o, y_o, 1]; lookups are bilinear, and a
    lookup at exactly integer coordinates resolves to that pixel with no
    neighbor blend.  `origin` overrides the rotation/scaling center (array
    x, y); `oob="error"` enforces the caller's claim that every source
    coordinate stays inside the image.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[-2:]
    return _WarpMap(G, h, w, origin=origin, oob=oob).forward(img)


# ---------------------------------------------------------------------------
# Blit fast path: signed-permutation transforms as index gathers.

def _blit_indices(G: np.ndarray, h: int, w: int):
    """Gather indices realizing G as an exact pixel copy, or None."""
    lin = np.asarray(G, dtype=np.float64)[:2, :2]
    if not np.all(np.isin(lin, (-1.0, 0.0, 1.0))):
        return None
    if np.any(np.sum(lin != 0.0, axis=0) != 1) or np.any(np.sum(lin != 0.0, axis=1) != 1):
        return None
    Gi = np.linalg.inv(np.asarray(G, dtype=np.float64))
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    cc, rr = np.meshgrid(np.arange(w, dtype=np.float64) - cx,
                         np.arange(h, dtype=np.float64) - cy)
    sx = Gi[0, 0] * cc + Gi[0, 1] * rr + Gi[0, 2] + cx
    sy = Gi[1, 0] * cc + Gi[1, 1] * rr + Gi[1, 2] + cy
    sxr = np.rint(sx)
    syr = np.rint(sy)
    if np.abs(sx - sxr).max() > 1e-9 or np.abs(sy - syr).max() > 1e-9:
        return None
    rows = _reflect_index(syr.astype(np.int64), h)
    cols = _reflect_index(sxr.astype(np.int64), w)
    return rows, cols


# ---------------------------------------------------------------------------
# The full geometric stage, packaged with its adjoint.

class GeometryPlan:
    """Forward/adjoint pair for one sampled geometric transform."""

    def __init__(self, G: np.ndarray, h: int, w: int, filt: WaveletFilter,
                 blit_only: bool = False, force_resample: bool = False,
                 clamp_margins: bool = False):
        self.h, self.w = h, w
        self.filt = filt
        self.kind = "resample"
        self.margins_clamped = clamp_margins
        if blit_only and not force_resample:
            idx = _blit_indices(G, h, w)
            if idx is not None:
                self.kind = "blit"
                self.rows, self.cols = idx
                return
        self.m_lo, self.m_hi = calculate_padding(G, w, h, filt, clamp=clamp_margins)
        hp = h + self.m_lo[1] + self.m_hi[1]
        wp = w + self.m_lo[0] + self.m_hi[0]
        S = scale2d(2.0, 2.0)
        G_up = S @ np.asarray(G, dtype=np.float64) @ np.linalg.inv(S)
        origin = (2.0 * (w / 2.0 - 0.5 + self.m_lo[0]),
                  2.0 * (h / 2.0 - 0.5 + self.m_lo[1]))
        T = len(filt.taps)
        B = T - 1 - T // 2
        region = (2 * self.m_lo[1] - (T - 1 - B), 2 * (self.m_lo[1] + h - 1) + B + 1,
                  2 * self.m_lo[0] - (T - 1 - B), 2 * (self.m_lo[0] + w - 1) + B + 1)
        self.warp = _WarpMap(G_up, 2 * hp, 2 * wp, origin=origin,
                             oob="clamp" if clamp_margins else "error",
                             check_region=region)

    @classmethod
    def from_params(cls, params: GeomParams, h: int, w: int, filt: WaveletFilter,
                    force_resample: bool = False,
                    clamp_margins: bool = False) -> "GeometryPlan":
        return cls(params.matrix, h, w, filt,
                   blit_only=params.is_blit_only(), force_resample=force_resample,
                   clamp_margins=clamp_margins)

    def forward(self, img: np.ndarray) -> np.ndarray:
        img = np.asarray(img, dtype=np.float64)
        if self.kind == "blit":
            return img[..., self.rows, self.cols]
        y = reflect_pad(img, self.m_lo, self.m_hi)
        y = upsample2x2(y, self.filt)
        y = self.warp.forward(y)
        y = downsample2x2(y, self.filt)
        return np.ascontiguousarray(
            y[..., self.m_lo[1]:self.m_lo[1] + self.h,
              self.m_lo[0]:self.m_lo[0] + self.w])

    def adjoint(self, grad: np.ndarray) -> np.ndarray:
        grad = np.asarray(grad, dtype=np.float64)
        if self.kind == "blit":
            lead = grad.shape[:-2]
            g2 = grad.reshape(-1, self.h * self.w)
            flat = (self.rows * self.w + self.cols).ravel()
            out = np.stack([np.bincount(flat, weights=g, minlength=self.h * self.w)
                            for g in g2])
            return out.reshape(*lead, self.h, self.w)
        hp = self.h + self.m_lo[1] + self.m_hi[1]
        wp = self.w + self.m_lo[0] + self.m_hi[0]
        g = np.zeros(grad.shape[:-2] + (hp, wp))
        g[..., self.m_lo[1]:self.m_lo[1] + self.h,
          self.m_lo[0]:self.m_lo[0] + self.w] = grad
        g = downsample2x2_adjoint(g, self.filt)
        g = self.warp.adjoint(g)
        g = upsample2x2_adjoint(g, self.filt)
        return reflect_pad_adjoint(g, self.m_lo, self.m_hi, self.h, self.w)


def execute_geometry(img: np.ndarray, params: GeomParams, filt: WaveletFilter,
                     force_resample: bool = False) -> np.ndarray:
    """Apply the combined geometric transform; output shape equals input shape."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[-2:]
    plan = GeometryPlan.from_params(params, h, w, filt, force_resample=force_resample)
    return plan.forward(img)
