"""Smooth scalar functions with analytic gradient and Hessian.

The product-metric builder differentiates its scalar data twice inside
curvature formulas, so every ingredient here carries exact derivatives
rather than relying on nested finite differences.
"""
from __future__ import annotations

import numpy as np


class SmoothFn:
    """Scalar function of a full chart point with analytic derivatives."""

    dim: int

    def value(self, p) -> float:  # pragma: no cover - interface
        raise NotImplementedError

    def grad(self, p) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def hess(self, p) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def __add__(self, other):
        return Sum([self, as_smooth(other, self.dim)])

    def __radd__(self, other):
        return Sum([as_smooth(other, self.dim), self])

    def __mul__(self, other):
        return Product(self, as_smooth(other, self.dim))

    def __rmul__(self, other):
        return Product(as_smooth(other, self.dim), self)

    def __sub__(self, other):
        return Sum([self, Scale(as_smooth(other, self.dim), -1.0)])

    def __neg__(self):
        return Scale(self, -1.0)


def as_smooth(x, dim: int) -> "SmoothFn":
    if isinstance(x, SmoothFn):
        return x
    return Constant(dim, float(x))


class Constant(SmoothFn):
    def __init__(self, dim: int, c: float):
        self.dim = dim
        self.c = float(c)

    def value(self, p):
        return self.c

    def grad(self, p):
        return np.zeros(self.dim)

    def hess(self, p):
        return np.zeros((self.dim, self.dim))


class CoordLinear(SmoothFn):
    """c * x_k."""

    def __init__(self, dim: int, k: int, c: float = 1.0):
        self.dim, self.k, self.c = dim, k, float(c)

    def value(self, p):
        return self.c * float(p[self.k])

    def grad(self, p):
        g = np.zeros(self.dim)
        g[self.k] = self.c
        return g

    def hess(self, p):
        return np.zeros((self.dim, self.dim))


class PowerProfile(SmoothFn):
    """c * x_k ** n  (n may be negative; keep x_k away from 0 then)."""

    def __init__(self, dim: int, k: int, coeff: float, power: float):
        self.dim, self.k = dim, k
        self.coeff, self.power = float(coeff), float(power)

    def value(self, p):
        return self.coeff * float(p[self.k]) ** self.power

    def d1(self, x: float) -> float:
        return self.coeff * self.power * x ** (self.power - 1)

    def d2(self, x: float) -> float:
        return self.coeff * self.power * (self.power - 1) * x ** (self.power - 2)

    def grad(self, p):
        g = np.zeros(self.dim)
        g[self.k] = self.d1(float(p[self.k]))
        return g

    def hess(self, p):
        h = np.zeros((self.dim, self.dim))
        h[self.k, self.k] = self.d2(float(p[self.k]))
        return h


class TrigPoly(SmoothFn):
    """sum_j amp_j * cos(freqs_j . p + phase_j)."""

    def __init__(self, dim: int, amps, freqs, phases):
        self.dim = dim
        self.amps = np.asarray(amps, dtype=float)
        self.freqs = np.asarray(freqs, dtype=float)  # (nterms, dim)
        self.phases = np.asarray(phases, dtype=float)
        if self.freqs.shape != (self.amps.size, dim):
            raise ValueError("freqs must be (n_terms, dim)")

    @classmethod
    def random(cls, dim: int, coords, rng: np.random.Generator, n_terms: int = 4,
               base_freqs=None, amp: float = 1.0, max_mult: int = 2) -> "TrigPoly":
        """Random trig polynomial in the listed coordinates only.

        base_freqs[i] sets the frequency quantum of coord i (e.g. 2 for a
        pi-periodic coordinate); frequencies are integer multiples up to
        max_mult, never all zero.
        """
        coords = list(coords)
        base = np.ones(dim) if base_freqs is None else np.asarray(base_freqs, dtype=float)
        freqs = np.zeros((n_terms, dim))
        for j in range(n_terms):
            while True:
                mult = rng.integers(-max_mult, max_mult + 1, size=len(coords))
                if np.any(mult != 0):
                    break
            for i, k in enumerate(coords):
                freqs[j, k] = mult[i] * base[k]
        amps = amp * rng.uniform(0.3, 1.0, size=n_terms) * rng.choice([-1, 1], size=n_terms)
        phases = rng.uniform(0, 2 * np.pi, size=n_terms)
        return cls(dim, amps, freqs, phases)

    def _angles(self, p):
        return self.freqs @ np.asarray(p, dtype=float) + self.phases

    def value(self, p):
        return float(self.amps @ np.cos(self._angles(p)))

    def grad(self, p):
        s = self.amps * np.sin(self._angles(p))
        return -self.freqs.T @ s

    def hess(self, p):
        c = self.amps * np.cos(self._angles(p))
        return -np.einsum("j,ja,jb->ab", c, self.freqs, self.freqs)


class Bump1D(SmoothFn):
    """Standard flat-topped-nothing bump in coordinate k on support (a, b).

    value exp(1 - 1/(1-s^2)) on the rescaled interval s in (-1, 1); identically
    zero outside, C-infinity everywhere, and equal to 1 at the midpoint.
    """

    def __init__(self, dim: int, k: int, a: float, b: float):
        if not b > a:
            raise ValueError("need b > a")
        self.dim, self.k, self.a, self.b = dim, k, float(a), float(b)

    def _s(self, x):
        return (2 * x - (self.a + self.b)) / (self.b - self.a)

    def value(self, p):
        s = self._s(float(p[self.k]))
        if abs(s) >= 1.0:
            return 0.0
        return float(np.exp(1.0 - 1.0 / (1.0 - s * s)))

    def _derivs(self, x):
        """(f, f', f'') with respect to x."""
        s = self._s(x)
        if abs(s) >= 1.0:
            return 0.0, 0.0, 0.0
        u = 1.0 - s * s
        f = np.exp(1.0 - 1.0 / u)
        df_ds = f * (-2.0 * s / u**2)
        d2f_ds2 = f * ((2.0 * s / u**2) ** 2 - 2.0 / u**2 - 8.0 * s * s / u**3)
        scale = 2.0 / (self.b - self.a)
        return f, df_ds * scale, d2f_ds2 * scale * scale

    def grad(self, p):
        g = np.zeros(self.dim)
        _, d1, _ = self._derivs(float(p[self.k]))
        g[self.k] = d1
        return g

    def hess(self, p):
        h = np.zeros((self.dim, self.dim))
        _, _, d2 = self._derivs(float(p[self.k]))
        h[self.k, self.k] = d2
        return h


class Sum(SmoothFn):
    def __init__(self, parts):
        self.parts = list(parts)
        self.dim = self.parts[0].dim

    def value(self, p):
        return sum(f.value(p) for f in self.parts)

    def grad(self, p):
        return sum(f.grad(p) for f in self.parts)

    def hess(self, p):
        return sum(f.hess(p) for f in self.parts)


class Scale(SmoothFn):
    def __init__(self, f: SmoothFn, c: float):
        self.f, self.c, self.dim = f, float(c), f.dim

    def value(self, p):
        return self.c * self.f.value(p)

    def grad(self, p):
        return self.c * self.f.grad(p)

    def hess(self, p):
        return self.c * self.f.hess(p)


class Product(SmoothFn):
    def __init__(self, f: SmoothFn, g: SmoothFn):
        self.f, self.g, self.dim = f, g, f.dim

    def value(self, p):
        return self.f.value(p) * self.g.value(p)

    def grad(self, p):
        return self.f.value(p) * self.g.grad(p) + self.g.value(p) * self.f.grad(p)

    def hess(self, p):
        fg, gg = self.f.grad(p), self.g.grad(p)
        cross = np.outer(fg, gg)
        return (self.f.value(p) * self.g.hess(p) + self.g.value(p) * self.f.hess(p)
                + cross + cross.T)


def embed(fn: SmoothFn, dim: int, offset: int) -> "Embedded":
    """View a function of a sub-block of coordinates as one of the full chart."""
    return Embedded(fn, dim, offset)


class Embedded(SmoothFn):
    def __init__(self, fn: SmoothFn, dim: int, offset: int):
        self.fn, self.dim, self.offset = fn, dim, offset
        if offset + fn.dim > dim:
            raise ValueError("embedded block exceeds chart dimension")

    def _sub(self, p):
        return np.asarray(p, dtype=float)[self.offset:self.offset + self.fn.dim]

    def value(self, p):
        return self.fn.value(self._sub(p))

    def grad(self, p):
        g = np.zeros(self.dim)
        g[self.offset:self.offset + self.fn.dim] = self.fn.grad(self._sub(p))
        return g

    def hess(self, p):
        h = np.zeros((self.dim, self.dim))
        sl = slice(self.offset, self.offset + self.fn.dim)
        h[sl, sl] = self.fn.hess(self._sub(p))
        return h
