"""Pointwise tensor fields on a chart: metrics, forms, frames.

Index conventions used throughout the package:
  metric.dmatrix(p)[s, i, j]        = d_s g_{ij}
  metric.d2matrix(p)[s, t, i, j]    = d_s d_t g_{ij}
  form.jacobian(p)[s, ...]          = d_s (components)
  frame.matrix(p)[a, i]             = a-th coframe covector, i-th component
"""
from __future__ import annotations

import numpy as np

from . import numdiff
from .charts import Chart, product_chart
from .errors import DegenerateMetricError, SignatureError


class MetricField:
    """Pseudo-Riemannian metric given by its coordinate matrix g_{ij}(p)."""

    def __init__(self, chart: Chart, matrix, signature=None, dmatrix=None, d2matrix=None):
        self.chart = chart
        self._matrix = matrix
        self.signature = signature  # (plus, minus) or None = don't care
        self._dmatrix = dmatrix
        self._d2matrix = d2matrix
        self._steps = numdiff.steps_for(chart)

    # --- values -----------------------------------------------------------
    def matrix(self, p) -> np.ndarray:
        return np.asarray(self._matrix(np.asarray(p, dtype=float)), dtype=float)

    def inverse(self, p) -> np.ndarray:
        g = self.matrix(p)
        try:
            return np.linalg.inv(g)
        except np.linalg.LinAlgError as exc:
            raise DegenerateMetricError(f"metric not invertible at {p}") from exc

    def dmatrix(self, p) -> np.ndarray:
        if self._dmatrix is not None:
            return np.asarray(self._dmatrix(np.asarray(p, dtype=float)), dtype=float)
        return numdiff.gradient(self._matrix, p, self._steps)

    def d2matrix(self, p) -> np.ndarray:
        if self._d2matrix is not None:
            return np.asarray(self._d2matrix(np.asarray(p, dtype=float)), dtype=float)
        # differentiate dmatrix once more (Richardson on the analytic layer if
        # one was supplied, so mixed analytic/FD stays accurate)
        return numdiff.gradient(self.dmatrix, p, self._steps)

    # --- sanity -----------------------------------------------------------
    def check_point(self, p, tol: float = 1e-9) -> None:
        g = self.matrix(p)
        if not np.allclose(g, g.T, atol=1e-10 * (1 + np.max(np.abs(g)))):
            raise DegenerateMetricError(f"metric matrix not symmetric at {p}")
        w = np.linalg.eigvalsh(g)
        if np.min(np.abs(w)) < tol * max(1.0, np.max(np.abs(w))):
            raise DegenerateMetricError(f"metric nearly degenerate at {p}: eigs {w}")
        if self.signature is not None:
            sig = (int(np.sum(w > 0)), int(np.sum(w < 0)))
            if sig != tuple(self.signature):
                raise SignatureError(
                    f"signature {sig} at {p}, expected {tuple(self.signature)}"
                )


class FormField:
    """Array-valued field (e.g. 1-form components A_mu, 2-form F_{mu nu})."""

    def __init__(self, chart: Chart, components, jacobian=None):
        self.chart = chart
        self._components = components
        self._jacobian = jacobian
        self._steps = numdiff.steps_for(chart)

    def components(self, p) -> np.ndarray:
        return np.asarray(self._components(np.asarray(p, dtype=float)), dtype=float)

    def jacobian(self, p) -> np.ndarray:
        if self._jacobian is not None:
            return np.asarray(self._jacobian(np.asarray(p, dtype=float)), dtype=float)
        return numdiff.gradient(self._components, p, self._steps)


def zero_form(chart: Chart, shape=()) -> FormField:
    z = np.zeros(shape)
    dz = np.zeros((chart.dim, *shape))
    return FormField(chart, lambda p: z, jacobian=lambda p: dz)


class FrameField:
    """Coframe field: matrix(p) rows are covectors e^a, with target Gram matrix.

    Defining property:  matrix(p).T @ gram @ matrix(p) == metric matrix at p.
    `vectors(p)` returns the dual frame e_a as columns of the inverse matrix.
    """

    def __init__(self, chart: Chart, matrix, gram: np.ndarray, dmatrix=None):
        self.chart = chart
        self._matrix = matrix
        self.gram = np.asarray(gram, dtype=float)
        self._dmatrix = dmatrix
        self._steps = numdiff.steps_for(chart)

    def matrix(self, p) -> np.ndarray:
        return np.asarray(self._matrix(np.asarray(p, dtype=float)), dtype=float)

    def vectors(self, p) -> np.ndarray:
        return np.linalg.inv(self.matrix(p))

    def dmatrix(self, p) -> np.ndarray:
        """[s, a, i] = d_s of coframe row a, component i."""
        if self._dmatrix is not None:
            return np.asarray(self._dmatrix(np.asarray(p, dtype=float)), dtype=float)
        return numdiff.gradient(self._matrix, p, self._steps)

    def gram_residual(self, p, metric: MetricField) -> float:
        e = self.matrix(p)
        return float(np.max(np.abs(e.T @ self.gram @ e - metric.matrix(p))))


def constant_metric(chart: Chart, g: np.ndarray, signature=None) -> MetricField:
    g = np.asarray(g, dtype=float)
    d = chart.dim
    dz = np.zeros((d, d, d))
    d2z = np.zeros((d, d, d, d))
    return MetricField(chart, lambda p: g, signature=signature,
                       dmatrix=lambda p: dz, d2matrix=lambda p: d2z)


def product_metric(m1: MetricField, m2: MetricField) -> MetricField:
    """Block-diagonal metric on the product chart (each block keeps its own coords)."""
    chart = product_chart(m1.chart, m2.chart)
    d1, d2 = m1.chart.dim, m2.chart.dim
    d = d1 + d2

    def matrix(p):
        g = np.zeros((d, d))
        g[:d1, :d1] = m1.matrix(p[:d1])
        g[d1:, d1:] = m2.matrix(p[d1:])
        return g

    def dmatrix(p):
        out = np.zeros((d, d, d))
        out[:d1, :d1, :d1] = m1.dmatrix(p[:d1])
        out[d1:, d1:, d1:] = m2.dmatrix(p[d1:])
        return out

    def d2matrix(p):
        out = np.zeros((d, d, d, d))
        out[:d1, :d1, :d1, :d1] = m1.d2matrix(p[:d1])
        out[d1:, d1:, d1:, d1:] = m2.d2matrix(p[d1:])
        return out

    sig = None
    if m1.signature is not None and m2.signature is not None:
        sig = (m1.signature[0] + m2.signature[0], m1.signature[1] + m2.signature[1])
    return MetricField(chart, matrix, signature=sig, dmatrix=dmatrix, d2matrix=d2matrix)
