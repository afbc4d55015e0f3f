"""Parallel transport of tangent vectors along curves."""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from . import calculus
from .charts import CurvePath
from .errors import IntegrationError
from .fields import FrameField, MetricField

RTOL = 1e-9
ATOL = 1e-12


def transport_vectors(metric: MetricField, path: CurvePath, vecs0: np.ndarray,
                      rtol: float = RTOL, atol: float = ATOL) -> np.ndarray:
    """Parallel-transport columns of vecs0 from path.point(0) to path.point(1).

    Integrates  dV^k/ds = -Gamma^k_{ij}(gamma) gamma'^i V^j  per smooth segment.
    """
    vecs = np.atleast_2d(np.asarray(vecs0, dtype=float))
    if vecs.shape[0] != path.chart.dim:
        raise ValueError("vectors must be columns of length chart.dim")
    shape = vecs.shape

    def rhs(s, y):
        v = y.reshape(shape)
        pt = path.point(s)
        gam = calculus.christoffel(metric, pt)
        dv = -np.einsum("kij,i,jc->kc", gam, path.tangent(s), v)
        return dv.ravel()

    y = vecs.ravel()
    for a, b in path.segments():
        sol = solve_ivp(rhs, (a, b), y, method="RK45", rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(f"transport failed on segment ({a}, {b}): {sol.message}")
        y = sol.y[:, -1]
    return y.reshape(shape)


def loop_holonomy_frame(metric: MetricField, frame: FrameField, loop: CurvePath,
                        rtol: float = RTOL, atol: float = ATOL) -> np.ndarray:
    """Holonomy matrix of a loop in frame components.

    Columns of the result are the frame components, at the end point, of the
    parallel-transported frame vectors from the start point.  For a metric
    connection W satisfies  W^T J W = J  (up to integration error), and for a
    contractible loop log(W) lies in the holonomy algebra in the same index
    convention as the curvature operators of `frames.curvature_forms`.
    """
    v0 = np.linalg.inv(frame.matrix(loop.point(0.0)))
    moved = transport_vectors(metric, loop, v0, rtol=rtol, atol=atol)
    return frame.matrix(loop.point(1.0)) @ moved


def orthogonality_residual(w: np.ndarray, gram: np.ndarray) -> float:
    return float(np.max(np.abs(w.T @ gram @ w - gram)))
