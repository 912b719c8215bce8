"""Counter-based random streams for reproducible per-image parameter sampling.

Every (seed, image_index, slot) triple owns an independent Philox stream, so
sampled parameters do not depend on batch size, batch order, or which other
augmentation categories are enabled.
"""

from __future__ import annotations

import numpy as np

# Stream slots, one per stochastic decision in the pipeline.  The gate draw and
# the value draws of a sub-transform share a slot; distinct sub-transforms never
# share one, so stubbing or skipping one cannot shift another's draws.
SLOT_XFLIP = 0
SLOT_ROT90 = 1
SLOT_XINT = 2
SLOT_SCALE = 3
SLOT_PREROT = 4
SLOT_ANISO = 5
SLOT_POSTROT = 6
SLOT_XFRAC = 7
SLOT_BRIGHTNESS = 8
SLOT_CONTRAST = 9
SLOT_LUMAFLIP = 10
SLOT_HUE = 11
SLOT_SATURATION = 12
SLOT_BAND_BASE = 13  # slots 13..16 are the four frequency bands
SLOT_NOISE = 17
SLOT_CUTOUT = 18
SLOT_NOISE_FIELD = 19

_MASK64 = (1 << 64) - 1


class ImageRng:
    """Per-image bundle of independent counter-based streams."""

    def __init__(self, seed: int, image_index: int):
        self.seed = int(seed) & _MASK64
        self.image_index = int(image_index) & _MASK64

    def stream(self, slot: int, salt: int = 0) -> np.random.Generator:
        """Fresh generator for a slot; `salt` distinguishes re-draw attempts."""
        counter = [0, 0, int(salt) & _MASK64, int(slot) & _MASK64]
        bg = np.random.Philox(counter=counter, key=[self.seed, self.image_index])
        return np.random.Generator(bg)
