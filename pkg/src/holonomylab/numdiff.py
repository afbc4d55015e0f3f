"""Finite differences with per-coordinate step sizes.

All derivative fallbacks in the package route through here: central
differences with a step proportional to the chart width in each coordinate,
plus one level of Richardson extrapolation where accuracy matters.
"""
from __future__ import annotations

import numpy as np

REL_STEP = 1e-4


def steps_for(chart) -> np.ndarray:
    return REL_STEP * chart.widths


def central_diff(f, p, k: int, h: float):
    """d/dx_k of array-valued f at p, plain second-order central difference."""
    p = np.asarray(p, dtype=float)
    ep = p.copy()
    em = p.copy()
    ep[k] += h
    em[k] -= h
    return (np.asarray(f(ep), dtype=float) - np.asarray(f(em), dtype=float)) / (2 * h)


def richardson_diff(f, p, k: int, h: float):
    """Fourth-order first derivative: Richardson on halved central differences."""
    d1 = central_diff(f, p, k, h)
    d2 = central_diff(f, p, k, h / 2)
    return (4.0 * d2 - d1) / 3.0


def gradient(f, p, h: np.ndarray, richardson: bool = True) -> np.ndarray:
    """All first partials of array-valued f, stacked along a new leading axis."""
    p = np.asarray(p, dtype=float)
    rule = richardson_diff if richardson else central_diff
    return np.stack([rule(f, p, k, h[k]) for k in range(p.size)])


def second_diff(f, p, j: int, k: int, hj: float, hk: float):
    """d^2/dx_j dx_k of array-valued f, central in both slots."""
    p = np.asarray(p, dtype=float)
    if j == k:
        fp = np.asarray(f(_shift(p, j, hj)), dtype=float)
        fm = np.asarray(f(_shift(p, j, -hj)), dtype=float)
        f0 = np.asarray(f(p), dtype=float)
        return (fp - 2 * f0 + fm) / (hj * hj)
    fpp = np.asarray(f(_shift(_shift(p, j, hj), k, hk)), dtype=float)
    fpm = np.asarray(f(_shift(_shift(p, j, hj), k, -hk)), dtype=float)
    fmp = np.asarray(f(_shift(_shift(p, j, -hj), k, hk)), dtype=float)
    fmm = np.asarray(f(_shift(_shift(p, j, -hj), k, -hk)), dtype=float)
    return (fpp - fpm - fmp + fmm) / (4 * hj * hk)


def hessian(f, p, h: np.ndarray) -> np.ndarray:
    """Symmetric matrix of second partials of scalar f."""
    p = np.asarray(p, dtype=float)
    n = p.size
    out = np.empty((n, n))
    for j in range(n):
        for k in range(j, n):
            val = float(second_diff(f, p, j, k, h[j], h[k]))
            out[j, k] = val
            out[k, j] = val
    return out


def _shift(p: np.ndarray, k: int, h: float) -> np.ndarray:
    q = p.copy()
    q[k] += h
    return q
