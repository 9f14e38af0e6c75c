"""Euler-Maruyama simulation of the price system with multiplicative noise.

``dp_i = a_i(p) dt + sigma_i p_i dW_i`` where ``a`` is the deterministic
field.  Gaussian increments come from numpy's Philox counter-based generator
(53-bit uniforms from the raw 64-bit stream) passed through Box-Muller, so a
seed fixes the path independently of numpy's own normal sampler.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .continuous import field_at, stationary_set, time_grid
from .errors import NonFinite
from .model import ModelParams, PriceState

UPPER = 1e6


class ShockMode(enum.Enum):
    symmetric = "symmetric"
    positive_only = "positive_only"
    negative_only = "negative_only"


@dataclass(frozen=True)
class NoiseSpec:
    sigma1: float
    sigma2: float
    seed: int = 0
    shock_mode: ShockMode = ShockMode.symmetric

    def __post_init__(self):
        if not (self.sigma1 >= 0 and self.sigma2 >= 0):
            raise ValueError("volatilities must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not isinstance(self.shock_mode, ShockMode):
            object.__setattr__(self, "shock_mode", ShockMode(self.shock_mode))


class GaussianStream:
    """Standard normals from Philox via Box-Muller, two per draw."""

    def __init__(self, seed: int):
        self._bits = np.random.Philox(key=seed)

    def pairs(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(2 * n).reshape(n, 2)
        u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
        u1 = 1.0 - u[:, 0]  # in (0, 1]
        r = np.sqrt(-2.0 * np.log(u1))
        th = 2.0 * np.pi * u[:, 1]
        return np.column_stack((r * np.cos(th), r * np.sin(th)))


@dataclass
class SamplePath:
    t: np.ndarray
    p: np.ndarray  # shape (n, 2)
    reflections: int = 0

    @property
    def final_prices(self) -> PriceState:
        return PriceState(float(self.p[-1, 0]), float(self.p[-1, 1]))

    def max_distance_from(self, ref: PriceState) -> float:
        return float(np.hypot(self.p[:, 0] - ref.p1, self.p[:, 1] - ref.p2).max())

    def fraction_within(self, ref: PriceState, radius: float) -> float:
        d = np.hypot(self.p[:, 0] - ref.p1, self.p[:, 1] - ref.p2)
        return float(np.mean(d <= radius))


def euler_maruyama(prices0: PriceState, params: ModelParams, noise: NoiseSpec,
                   dt: float = 1e-3, horizon: float = 10.0) -> SamplePath:
    """Simulate one path.

    Noise increments have variance ``dt``.  One-sided modes replace each
    increment by its absolute value (or minus it).  A step landing below
    zero is reflected; leaving ``[0, 1e6]^2`` raises :class:`NonFinite`.
    """
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    ts = time_grid(dt, horizon)
    n = len(ts) - 1
    z = GaussianStream(noise.seed).pairs(n) * math.sqrt(dt)
    if noise.shock_mode is ShockMode.positive_only:
        z = np.abs(z)
    elif noise.shock_mode is ShockMode.negative_only:
        z = -np.abs(z)
    ps = np.empty((n + 1, 2))
    p1, p2 = prices0.p1, prices0.p2
    ps[0] = (p1, p2)
    s1, s2 = noise.sigma1, noise.sigma2
    reflections = 0
    for i in range(n):
        h = ts[i + 1] - ts[i]
        a1, a2 = field_at(PriceState(p1, p2), params)
        n1 = p1 + a1 * h + s1 * p1 * z[i, 0]
        n2 = p2 + a2 * h + s2 * p2 * z[i, 1]
        if n1 < 0 or n2 < 0:
            reflections += 1
            n1, n2 = abs(n1), abs(n2)
        if not (math.isfinite(n1) and math.isfinite(n2)) or n1 > UPPER or n2 > UPPER:
            raise NonFinite(f"path left the admissible box at t={ts[i + 1]:g}: ({n1}, {n2})")
        p1, p2 = n1, n2
        ps[i + 1] = (p1, p2)
    return SamplePath(ts, ps, reflections)


class StationaryLocus:
    """The curve ``h3 u h4`` through E~, parametrised by signed arc length.

    Arc length is zero at E~, positive along the ``h4`` branch and negative
    along ``h3``.
    """

    def __init__(self, params: ModelParams, resolution: int = 4000):
        ss = stationary_set(params, resolution)
        h3 = np.array([p.as_tuple() for p in ss.h3_points])
        h4 = np.array([p.as_tuple() for p in ss.h4_points])
        # h3 runs from E~ outwards; reverse so the polyline goes h3 end -> E~ -> h4 end
        pts = np.vstack((h3[::-1], h4[1:]))
        seg = np.hypot(*np.diff(pts, axis=0).T)
        s = np.concatenate(([0.0], np.cumsum(seg)))
        s -= s[len(h3) - 1]
        self.points, self.s = pts, s

    def project(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Arc coordinate of, and distance to, the nearest locus vertex for each row of ``p``."""
        d = np.hypot(p[:, None, 0] - self.points[None, :, 0], p[:, None, 1] - self.points[None, :, 1])
        idx = d.argmin(axis=1)
        return self.s[idx], d[np.arange(len(p)), idx]


@dataclass(frozen=True)
class DriftReport:
    start_arc: float
    end_arc: float
    locus_drift: float  # end_arc - start_arc
    toward_E: bool
    max_locus_distance: float


def one_sided_drift_experiment(prices0: PriceState, params: ModelParams, noise: NoiseSpec,
                               dt: float = 1e-2, horizon: float = 5.0,
                               locus: StationaryLocus | None = None) -> DriftReport:
    """Run one path and measure how far it moved along the stationary locus.

    ``toward_E`` holds when the path ends closer to E~ in arc length than it
    started (a zero-length move counts as not toward).
    """
    if noise.shock_mode is ShockMode.symmetric:
        raise ValueError("drift experiments need a one-sided shock mode")
    locus = locus or StationaryLocus(params)
    path = euler_maruyama(prices0, params, noise, dt, horizon)
    tail = path.p[-max(1, len(path.p) // 10):]
    s_start, _ = locus.project(np.array([prices0.as_tuple()]))
    s_tail, _ = locus.project(tail)
    _, dist = locus.project(path.p[:: max(1, len(path.p) // 500)])
    s0, s1 = float(s_start[0]), float(s_tail.mean())
    return DriftReport(s0, s1, s1 - s0, abs(s1) < abs(s0), float(dist.max()))
