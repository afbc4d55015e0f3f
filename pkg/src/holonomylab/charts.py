"""Coordinate charts and parametrized curves.

A chart is an open coordinate box; every field in the package evaluates on
points of some chart.  Curves are maps [0,1] -> chart with an explicit
velocity, piecewise smooth between listed breakpoints.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Chart:
    """An open box in R^dim with named coordinates."""

    coord_names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != (len(self.coord_names),) or hi.shape != lo.shape:
            raise ValueError("bounds must match the number of coordinates")
        if not np.all(lo < hi):
            raise ValueError("chart box must have positive extent in every coordinate")

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def index(self, name: str) -> int:
        return self.coord_names.index(name)

    def contains(self, p, slack: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(
            np.all(p >= self.lower - slack) and np.all(p <= self.upper + slack)
        )

    def require(self, p, slack: float = 0.0):
        if not self.contains(p, slack=slack):
            raise DomainError(f"point {np.asarray(p)} outside chart box")

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def sample(self, rng: np.random.Generator, n: int, shrink: float = 0.0) -> np.ndarray:
        """n uniform points; shrink>0 pulls the box inward by that fraction per side."""
        lo = self.lower + shrink * self.widths
        hi = self.upper - shrink * self.widths
        return rng.uniform(lo, hi, size=(n, self.dim))


def product_chart(*charts: Chart) -> Chart:
    names = tuple(n for c in charts for n in c.coord_names)
    lower = np.concatenate([c.lower for c in charts])
    upper = np.concatenate([c.upper for c in charts])
    return Chart(names, lower, upper)


def smooth_abs(x: float, width: float = 1e-6) -> float:
    """C^infinity stand-in for |x|, accurate to O(width) near 0."""
    return float(np.sqrt(x * x + width * width))


def smooth_abs_d1(x: float, width: float = 1e-6) -> float:
    return float(x / np.sqrt(x * x + width * width))


@dataclass(frozen=True)
class CurvePath:
    """Piecewise-smooth parametrized curve s in [0,1] -> chart.

    `mapping` and `velocity` are vectorized in nothing; they take a scalar s.
    `breakpoints` lists interior parameter values where the velocity may jump
    (ODE integrations are restarted there).
    """

    chart: Chart
    mapping: object  # s -> point
    velocity: object  # s -> tangent
    breakpoints: tuple[float, ...] = field(default_factory=tuple)

    def point(self, s: float) -> np.ndarray:
        return np.asarray(self.mapping(s), dtype=float)

    def tangent(self, s: float) -> np.ndarray:
        return np.asarray(self.velocity(s), dtype=float)

    def segments(self) -> list[tuple[float, float]]:
        knots = [0.0, *sorted(self.breakpoints), 1.0]
        return [(a, b) for a, b in zip(knots[:-1], knots[1:]) if b > a]

    def velocity_residual(self, n: int = 7, h: float = 1e-6) -> float:
        """Max mismatch between `velocity` and a finite difference of `mapping`."""
        worst = 0.0
        for a, b in self.segments():
            for s in np.linspace(a + 2 * h, b - 2 * h, n):
                fd = (self.point(s + h) - self.point(s - h)) / (2 * h)
                worst = max(worst, float(np.max(np.abs(fd - self.tangent(s)))))
        return worst


def line_path(chart: Chart, start, end) -> CurvePath:
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    delta = end - start
    return CurvePath(chart, lambda s: start + s * delta, lambda s: delta)


def coordinate_circle(chart: Chart, base, axes: tuple[int, int], radius: float) -> CurvePath:
    """Smooth loop based at `base`, a circle in the coordinate 2-plane `axes`.

    Starts and ends at `base`: the circle is centered at base + radius*e_mu so the
    basepoint sits on it.
    """
    base = np.asarray(base, dtype=float)
    mu, nu = axes

    def mapping(s):
        p = base.copy()
        ang = 2 * np.pi * s
        p[mu] += radius * (1.0 - np.cos(ang))
        p[nu] += radius * np.sin(ang)
        return p

    def velocity(s):
        v = np.zeros_like(base)
        ang = 2 * np.pi * s
        v[mu] = 2 * np.pi * radius * np.sin(ang)
        v[nu] = 2 * np.pi * radius * np.cos(ang)
        return v

    return CurvePath(chart, mapping, velocity)


def concat_paths(paths: list[CurvePath]) -> CurvePath:
    """Concatenate head-to-tail curves into one path on [0,1] (equal time per leg)."""
    if not paths:
        raise ValueError("need at least one path")
    chart = paths[0].chart
    k = len(paths)

    def locate(s):
        t = min(max(s, 0.0), 1.0) * k
        i = min(int(t), k - 1)
        return i, t - i

    def mapping(s):
        i, u = locate(s)
        return paths[i].point(u)

    def velocity(s):
        i, u = locate(s)
        return k * paths[i].tangent(u)

    breaks = []
    for i, p in enumerate(paths):
        breaks.extend((i + b) / k for b in p.breakpoints)
        if i > 0:
            breaks.append(i / k)
    return CurvePath(chart, mapping, velocity, tuple(sorted(set(breaks))))


def lasso_path(chart: Chart, base, center, axes: tuple[int, int], radius: float) -> CurvePath:
    """Out along a straight line, once around a small circle, and straight back."""
    circle = coordinate_circle(chart, center, axes, radius)
    return concat_paths([
        line_path(chart, base, center),
        circle,
        line_path(chart, center, base),
    ])
