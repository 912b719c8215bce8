"""Feedback control of the augmentation strength from overfitting heuristics.

Discriminator outputs are accumulated over a window of N minibatches; at the
end of each window the chosen heuristic is compared against its target and p
is nudged up or down by step_per_image * (images in the window), then clamped
to [0, 1].  The per-image step makes the 0-to-1 ramp time (default 500k
images) independent of minibatch size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_WINDOW = 4
DEFAULT_TARGET = 0.6
DEFAULT_RAMP_IMAGES = 500_000

# |E[D_train] - E[D_generated]| below this is treated as transient degeneracy
# and the adjustment is skipped rather than erroring the training loop.
RV_DENOMINATOR_FLOOR = 1e-9


class DegenerateWindow(ArithmeticError):
    """The rv denominator is numerically zero for this window."""


@dataclass
class OverfitStats:
    """Per-sample discriminator outputs for one minibatch."""

    d_train: list[float] = field(default_factory=list)
    d_generated: list[float] = field(default_factory=list)
    d_validation: list[float] | None = None


def heuristic_rt(stats: OverfitStats) -> float:
    """Mean sign of the training-set outputs; sign(0) counts as 0."""
    if not len(stats.d_train):
        raise ValueError("rt heuristic needs at least one training output")
    return float(np.mean(np.sign(np.asarray(stats.d_train, dtype=np.float64))))


def heuristic_rv(stats: OverfitStats) -> float:
    """(E[D_train] - E[D_validation]) / (E[D_train] - E[D_generated])."""
    if stats.d_validation is None or not len(stats.d_validation):
        raise ValueError("rv heuristic needs validation outputs; configure a "
                         "validation split or use rt")
    if not len(stats.d_train) or not len(stats.d_generated):
        raise ValueError("rv heuristic needs training and generated outputs")
    e_train = float(np.mean(stats.d_train))
    e_val = float(np.mean(stats.d_validation))
    e_gen = float(np.mean(stats.d_generated))
    denom = e_train - e_gen
    if abs(denom) <= RV_DENOMINATOR_FLOOR:
        raise DegenerateWindow()
    return (e_train - e_val) / denom


@dataclass
class _WindowAccumulator:
    sign_sum: float = 0.0
    train_sum: float = 0.0
    val_sum: float = 0.0
    gen_sum: float = 0.0
    train_n: int = 0
    val_n: int = 0
    gen_n: int = 0
    minibatches: int = 0
    images: int = 0


@dataclass
class ControllerState:
    """Current strength plus the running window statistics.

    `last_adjustment` reports the heuristic value of the most recent window
    whose end this state represents, or None if the last update call did not
    close a window; it is transient and not serialized.
    """

    p: float = 0.0
    heuristic: str = "rt"
    target: float = DEFAULT_TARGET
    window: int = DEFAULT_WINDOW
    step_per_image: float = 1.0 / DEFAULT_RAMP_IMAGES
    images_seen: int = 0
    acc: _WindowAccumulator = field(default_factory=_WindowAccumulator)
    last_adjustment: float | None = None

    def __post_init__(self):
        if self.heuristic not in ("rt", "rv"):
            raise ValueError(f"heuristic must be 'rt' or 'rv', got {self.heuristic!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    def running_heuristic(self) -> float | None:
        """Heuristic over the partial window accumulated so far, if defined."""
        try:
            return _window_heuristic(self, self.acc)
        except (ValueError, DegenerateWindow):
            return None

    def to_json(self) -> str:
        return json.dumps({
            "p": self.p, "images_seen": self.images_seen,
            "heuristic": self.heuristic, "target": self.target,
            "window": self.window, "step_per_image": self.step_per_image,
        })

    @classmethod
    def from_json(cls, text: str) -> "ControllerState":
        doc = json.loads(text)
        return cls(p=doc["p"], images_seen=doc.get("images_seen", 0),
                   heuristic=doc.get("heuristic", "rt"),
                   target=doc.get("target", DEFAULT_TARGET),
                   window=doc.get("window", DEFAULT_WINDOW),
                   step_per_image=doc.get("step_per_image", 1.0 / DEFAULT_RAMP_IMAGES))


def _accumulate(acc: _WindowAccumulator, stats: OverfitStats,
                minibatch_size: int) -> _WindowAccumulator:
    train = np.asarray(stats.d_train, dtype=np.float64)
    out = replace(acc)
    out.sign_sum += float(np.sum(np.sign(train)))
    out.train_sum += float(np.sum(train))
    out.train_n += train.size
    if stats.d_generated:
        out.gen_sum += float(np.sum(np.asarray(stats.d_generated, dtype=np.float64)))
        out.gen_n += len(stats.d_generated)
    if stats.d_validation:
        out.val_sum += float(np.sum(np.asarray(stats.d_validation, dtype=np.float64)))
        out.val_n += len(stats.d_validation)
    out.minibatches += 1
    out.images += int(minibatch_size)
    return out


def _window_heuristic(state: ControllerState, acc: _WindowAccumulator) -> float:
    if state.heuristic == "rt":
        if acc.train_n == 0:
            raise ValueError("rt heuristic needs at least one training output")
        return acc.sign_sum / acc.train_n
    if acc.val_n == 0:
        raise ValueError("rv heuristic needs validation outputs; configure a "
                         "validation split or use rt")
    if acc.train_n == 0 or acc.gen_n == 0:
        raise ValueError("rv heuristic needs training and generated outputs")
    denom = acc.train_sum / acc.train_n - acc.gen_sum / acc.gen_n
    if abs(denom) <= RV_DENOMINATOR_FLOOR:
        raise DegenerateWindow()
    return (acc.train_sum / acc.train_n - acc.val_sum / acc.val_n) / denom


def update(state: ControllerState, minibatch_stats: OverfitStats,
           minibatch_size: int) -> ControllerState:
    """Fold one minibatch in; every window-th call adjusts p.

    Exactly one adjustment happens per `window` minibatches regardless of
    minibatch size.  A degenerate rv window skips the adjustment but still
    resets the window.
    """
    if minibatch_size < 1:
        raise ValueError("minibatch_size must be >= 1")
    acc = _accumulate(state.acc, minibatch_stats, minibatch_size)
    new = replace(state, acc=acc, last_adjustment=None,
                  images_seen=state.images_seen + int(minibatch_size))
    if acc.minibatches < state.window:
        return new
    try:
        value = _window_heuristic(state, acc)
    except DegenerateWindow:
        new.acc = _WindowAccumulator()
        return new
    delta = state.step_per_image * acc.images
    p = new.p + delta if value > state.target else new.p - delta
    new.p = min(max(p, 0.0), 1.0)
    new.acc = _WindowAccumulator()
    new.last_adjustment = value
    return new


def simulate(state: ControllerState, d_model, steps: int,
             minibatch_size: int = 64):
    """Closed-loop run against a synthetic discriminator model.

    `d_model(p, minibatch_index)` returns the OverfitStats for one minibatch.
    Returns the final state and one (minibatch_index, p, heuristic_value) row
    per adjustment.
    """
    trajectory = []
    for step in range(steps):
        stats = d_model(state.p, step)
        state = update(state, stats, minibatch_size)
        if state.last_adjustment is not None:
            trajectory.append((step, state.p, state.last_adjustment))
    return state, trajectory
