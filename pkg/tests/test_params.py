import math

import numpy as np
import pytest

from adaaug.params import (BAND_LAMBDA, LUMA_AXIS, GeomParams,
                           rotate2d, rotate2d_quarter, rotation_gate_probability,
                           round_half_away, sample_color, sample_corruption,
                           sample_filter, sample_geom, scale2d, translate2d,
                           validate_strength)
from adaaug.rng import ImageRng


class ScriptedGen:
    """Stands in for a numpy Generator, returning pre-scripted draws."""

    def __init__(self, values):
        self.values = list(values)

    def _pop(self):
        return self.values.pop(0)

    def random(self, size=None):
        if size is None:
            return self._pop()
        return np.array([self._pop() for _ in range(size)])

    def integers(self, lo, hi):
        return int(self._pop())

    def uniform(self, lo, hi, size=None):
        if size is None:
            return self._pop()
        return np.array([self._pop() for _ in range(size)])

    def standard_normal(self, size=None):
        if size is None:
            return self._pop()
        return np.array([self._pop() for _ in range(size)])


class ScriptedRng:
    """Per-slot scripted streams; unspecified slots never fire (gate u = 1)."""

    def __init__(self, slots):
        self.slots = slots

    def stream(self, slot, salt=0):
        return ScriptedGen(self.slots.get(slot, [1.0]))


def test_strength_domain():
    with pytest.raises(ValueError):
        validate_strength(-0.1)
    with pytest.raises(ValueError):
        validate_strength(1.1)
    with pytest.raises(ValueError):
        sample_geom(2.0, 8, 8, ImageRng(0, 0))
    with pytest.raises(ValueError):
        sample_color(-1.0, ImageRng(0, 0))


def test_p_zero_everything_identity():
    r = ImageRng(7, 3)
    geom = sample_geom(0.0, 64, 48, r)
    assert np.array_equal(geom.matrix, np.eye(3))
    assert geom.fired_count() == 0
    color = sample_color(0.0, r)
    assert np.array_equal(color.matrix, np.eye(4))
    filt = sample_filter(0.0, r)
    assert np.array_equal(filt.gains, np.ones(4))
    corr = sample_corruption(0.0, r)
    assert corr.noise_sigma == 0.0 and corr.cutout_center is None


def test_rotation_gate_probability_value():
    # 1 - sqrt(1 - p) at p = 0.5
    assert rotation_gate_probability(0.5) == pytest.approx(1 - math.sqrt(0.5), abs=1e-12)
    assert abs(rotation_gate_probability(0.5) - 0.29289) < 1e-5


def test_forced_xflip_only():
    # p = 1 but every other gate is stubbed shut; x-flip draws i = 1.
    rng = ScriptedRng({0: [0.0, 1]})
    geom = sample_geom(1.0, 32, 32, rng)
    assert np.array_equal(geom.matrix, np.diag([-1.0, 1.0, 1.0]))
    assert geom.xflip == 1 and geom.fired_count() == 1


def test_round_half_away():
    assert round_half_away(0.5) == 1.0
    assert round_half_away(-0.5) == -1.0
    assert round_half_away(1.5) == 2.0
    assert round_half_away(2.5) == 3.0
    assert round_half_away(-2.5) == -3.0
    assert round_half_away(0.49) == 0.0


def test_determinism_bit_exact():
    a = sample_geom(0.7, 64, 64, ImageRng(5, 11))
    b = sample_geom(0.7, 64, 64, ImageRng(5, 11))
    assert np.array_equal(a.matrix, b.matrix)
    for name in ("xflip", "rot90", "xint", "scale", "prerot", "aniso",
                 "postrot", "xfrac"):
        assert getattr(a, name) == getattr(b, name)
    c = sample_geom(0.7, 64, 64, ImageRng(5, 12))
    assert not np.array_equal(a.matrix, c.matrix)


def _oracle_geom_matrix(params: GeomParams, w: int, h: int) -> np.ndarray:
    """Step-by-step left-multiplication of elementary matrices, test-local."""
    G = np.eye(3)
    if params.xflip is not None:
        G = scale2d(1 - 2 * params.xflip, 1.0) @ G
    if params.rot90 is not None:
        G = rotate2d_quarter(params.rot90) @ G
    if params.xint is not None:
        G = translate2d(*params.xint) @ G
    if params.scale is not None:
        G = scale2d(params.scale, params.scale) @ G
    if params.prerot is not None:
        G = rotate2d(-params.prerot) @ G
    if params.aniso is not None:
        G = scale2d(params.aniso, 1.0 / params.aniso) @ G
    if params.postrot is not None:
        G = rotate2d(-params.postrot) @ G
    if params.xfrac is not None:
        G = translate2d(*params.xfrac) @ G
    return G


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_composition_matches_elementary_product(seed):
    for idx in range(50):
        params = sample_geom(0.8, 48, 32, ImageRng(seed, idx))
        oracle = _oracle_geom_matrix(params, 48, 32)
        assert np.allclose(params.matrix, oracle, atol=1e-12)
        assert np.array_equal(params.matrix[2], [0.0, 0.0, 1.0])
        assert abs(np.linalg.det(params.matrix)) > 1e-12


def test_gate_frequencies():
    p = 0.35
    n = 100_000
    counts = {"xflip": 0, "rot90": 0, "xint": 0, "scale": 0, "aniso": 0,
              "xfrac": 0, "prerot": 0, "postrot": 0, "either_rot": 0}
    for i in range(n):
        g = sample_geom(p, 32, 32, ImageRng(42, i))
        for name in ("xflip", "rot90", "xint", "scale", "aniso", "xfrac",
                     "prerot", "postrot"):
            counts[name] += getattr(g, name) is not None
        counts["either_rot"] += (g.prerot is not None) or (g.postrot is not None)
    p_rot = rotation_gate_probability(p)

    def check(name, target):
        se = math.sqrt(target * (1 - target) / n)
        assert abs(counts[name] / n - target) <= 3 * se, \
            f"{name}: {counts[name] / n} vs {target}"

    for name in ("xflip", "rot90", "xint", "scale", "aniso", "xfrac"):
        check(name, p)
    check("prerot", p_rot)
    check("postrot", p_rot)
    # P(pre or post) = p by construction of the rotation gate.
    check("either_rot", p)


def test_color_accumulation_order():
    # Scripted: brightness b=0.1, contrast c=2 (z=2 -> 2^(0.5*2)), skip flip,
    # skip hue, saturation s=2 (z=1).
    rng = ScriptedRng({8: [0.0, 0.5], 9: [0.0, 2.0], 12: [0.0, 1.0]})
    color = sample_color(1.0, rng)
    b = 0.5 * 0.2
    v = LUMA_AXIS
    vv = np.outer(v, v)
    expected = np.eye(4)
    expected = np.array([[1, 0, 0, b], [0, 1, 0, b], [0, 0, 1, b], [0, 0, 0, 1.0]]) @ expected
    expected = np.diag([2.0, 2.0, 2.0, 1.0]) @ expected
    sat = vv + (np.eye(4) - vv) * 2.0
    sat[3, 3] = 1.0
    expected = sat @ expected
    assert np.allclose(color.matrix, expected, atol=1e-12)
    assert color.matrix[3].tolist() == [0.0, 0.0, 0.0, 1.0]


def test_filter_gain_normalization_frozen():
    # Band 4 fires with raw draw t4 = 2: t = [1,1,1,2] / sqrt(16/13).
    rng = ScriptedRng({16: [0.0, 1.0]})  # z = 1 -> 2^(1*1) = 2
    gain = sample_filter(1.0, rng)
    expected = np.array([1.0, 1.0, 1.0, 2.0]) / math.sqrt(16.0 / 13.0)
    assert np.allclose(gain.gains, expected, atol=1e-12)
    # lambda-weighted power of the normalized temporary vector is 1.
    assert abs(np.sum(BAND_LAMBDA * expected ** 2) - 1.0) < 1e-12
    assert np.all(gain.gains > 0)


def test_filter_every_firing_normalizes_power():
    for i in range(200):
        gain = sample_filter(1.0, ImageRng(9, i))
        assert np.all(gain.gains > 0)


def test_corruption_half_normal_mean():
    n = 100_000
    total = 0.0
    for i in range(n):
        c = sample_corruption(1.0, ImageRng(3, i))
        total += c.noise_sigma
    mean = total / n
    target = 0.1 * math.sqrt(2.0 / math.pi)
    sd = 0.1 * math.sqrt(1.0 - 2.0 / math.pi)
    assert abs(mean - target) <= 3 * sd / math.sqrt(n)


def test_corruption_cutout_center_uniform():
    centers = [sample_corruption(1.0, ImageRng(4, i)).cutout_center
               for i in range(2000)]
    arr = np.array(centers)
    assert arr.min() >= 0.0 and arr.max() <= 1.0
    assert abs(arr.mean() - 0.5) < 0.02
