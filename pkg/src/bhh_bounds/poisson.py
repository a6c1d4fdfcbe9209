"""Homogeneous Poisson point processes on padded square windows.

Statistics are measured only for points in the centered core square; the
surrounding pad supplies neighbors so that core measurements behave like a
process on the whole plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Window:
    core_side: float
    pad: float = 0.0

    def __post_init__(self):
        if not (self.core_side > 0 and math.isfinite(self.core_side)):
            raise ValueError("core side must be positive")
        if not (self.pad >= 0 and math.isfinite(self.pad)):
            raise ValueError("pad must be nonnegative")

    @property
    def side(self) -> float:
        return self.core_side + 2.0 * self.pad

    @property
    def area(self) -> float:
        return self.side**2

    @property
    def core_area(self) -> float:
        return self.core_side**2

    @property
    def core_bounds(self) -> tuple[float, float]:
        return self.pad, self.pad + self.core_side


def default_pad(intensity: float) -> float:
    """Pad width ``5 / sqrt(intensity)``; third-neighbor distances are ~1/sqrt(intensity)."""
    return 5.0 / math.sqrt(intensity)


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, trial)``.

    Streams for different trials are independent of one another and of the
    order in which trials are run.
    """
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(trial)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class PointSample:
    points: np.ndarray = field(repr=False)
    intensity: float
    seed: int
    window: Window
    trial: int = 0

    def __len__(self) -> int:
        return len(self.points)


def sample_poisson(intensity: float, window: Window, seed: int, trial: int = 0) -> PointSample:
    """Draw a Poisson process of the given intensity on the full (padded) window.

    The count is drawn first, then the positions, both from the
    ``(seed, trial)`` stream.
    """
    if not (intensity > 0 and math.isfinite(intensity)):
        raise ValueError("intensity must be positive")
    rng = trial_rng(seed, trial)
    count = int(rng.poisson(intensity * window.area))
    pts = rng.uniform(0.0, window.side, size=(count, 2))
    pts.setflags(write=False)
    return PointSample(points=pts, intensity=float(intensity), seed=int(seed), window=window, trial=int(trial))


def core_points(sample: PointSample) -> np.ndarray:
    """Indices of points inside the closed core square."""
    lo, hi = sample.window.core_bounds
    p = sample.points
    if len(p) == 0:
        return np.empty(0, dtype=np.intp)
    inside = (p[:, 0] >= lo) & (p[:, 0] <= hi) & (p[:, 1] >= lo) & (p[:, 1] <= hi)
    return np.flatnonzero(inside)


def from_points(points, intensity: float, window: Window, seed: int = 0) -> PointSample:
    """Wrap explicit coordinates (full-window frame) as a sample; used for constructed configurations."""
    pts = np.array(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    pts.setflags(write=False)
    return PointSample(points=pts, intensity=float(intensity), seed=int(seed), window=window)
