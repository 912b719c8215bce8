import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def noise_image(rng):
    return rng.uniform(-1.0, 1.0, size=(64, 64))


def make_smooth(rng, h=64, w=64, cutoff=6):
    """Band-limited test image: a few low-frequency modes, range within [-1, 1]."""
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    img = np.zeros((h, w))
    for _ in range(5):
        fx, fy = rng.uniform(-cutoff, cutoff, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        img += rng.uniform(0.1, 0.3) * np.cos(2 * np.pi * (fx * xx + fy * yy) + phase)
    return np.clip(img, -1.0, 1.0)


@pytest.fixture
def smooth_image(rng):
    return make_smooth(rng)
