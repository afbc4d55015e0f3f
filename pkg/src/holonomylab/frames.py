"""Connection and curvature forms of a coframe field, by structure equations.

Given a coframe e^a with constant Gram matrix J (so g = e^T J e), the
torsion-free metric connection is solved pointwise from

    de^a(e_b, e_c) = c^a_{bc},   omega_{abc} = (c_{abc} + c_{bca} - c_{cab}) / 2

with the first index lowered by J, and the curvature from the second
structure equation  Omega = d omega + omega ^ omega.

This route only ever differentiates the coframe matrix itself (plus one
numerical derivative of the solved omega field), so it is independent of the
coordinate Christoffel machinery in `calculus` — the two are cross-checked in
the tests and used as mutual verification for the product-metric builder.
"""
from __future__ import annotations

import numpy as np

from . import numdiff
from .fields import FrameField


def structure_coefficients(frame: FrameField, p) -> np.ndarray:
    """c[a, b, c] = de^a(e_b, e_c)."""
    e = frame.matrix(p)
    v = np.linalg.inv(e)  # columns are the dual frame vectors
    de = frame.dmatrix(p)  # [s, a, m] = d_s e^a_m
    # coordinate components of de^a: (de^a)_{s m} = d_s e^a_m - d_m e^a_s
    de2 = de - np.einsum("mas->sam", de)
    return np.einsum("sam,sb,mc->abc", de2, v, v)


def connection_forms(frame: FrameField, p) -> np.ndarray:
    """omega[a, b, c] = omega^a_b evaluated on frame vector e_c."""
    c_up = structure_coefficients(frame, p)
    j = frame.gram
    c_low = np.einsum("ad,dbc->abc", j, c_up)
    om_low = 0.5 * (c_low + np.einsum("bca->abc", c_low) - np.einsum("cab->abc", c_low))
    return np.einsum("ad,dbc->abc", j, om_low)


def connection_coordinate(frame: FrameField, p) -> np.ndarray:
    """om[a, b, m] = coordinate components of the 1-form omega^a_b."""
    om = connection_forms(frame, p)
    e = frame.matrix(p)
    return np.einsum("abc,cm->abm", om, e)


def curvature_forms(frame: FrameField, p) -> np.ndarray:
    """O[a, b, c, d] = Omega^a_b(e_c, e_d), via FD of the solved omega field."""
    p = np.asarray(p, dtype=float)
    steps = numdiff.steps_for(frame.chart)
    dom = numdiff.gradient(lambda q: connection_coordinate(frame, q), p, steps)
    # coordinate 2-form components of d(omega^a_b): [a,b,s,m]
    d_om = np.einsum("sabm->absm", dom) - np.einsum("mabs->absm", dom)
    v = np.linalg.inv(frame.matrix(p))
    curv = np.einsum("absm,sc,md->abcd", d_om, v, v)
    om = connection_forms(frame, p)
    curv += np.einsum("aec,ebd->abcd", om, om) - np.einsum("aed,ebc->abcd", om, om)
    return curv


def so_residual(mat: np.ndarray, gram: np.ndarray) -> float:
    """How far a matrix (frame indices) is from the J-skew algebra so(J)."""
    low = gram @ mat
    return float(np.max(np.abs(low + low.T)))


def project_so(mat: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """J-skew part of a matrix: nearest element of so(J) in the J-pairing."""
    return 0.5 * (mat - gram @ mat.T @ gram)


def vector_to_frame(e: np.ndarray, v_coord: np.ndarray) -> np.ndarray:
    """Frame components of a coordinate tangent vector (e = coframe matrix)."""
    return e @ v_coord


def two_form_to_frame(v: np.ndarray, f_coord: np.ndarray) -> np.ndarray:
    """Frame components F(e_a, e_b) of a coordinate 2-form (v = inverse coframe)."""
    return v.T @ f_coord @ v


def endomorphism_to_frame(e: np.ndarray, m_coord: np.ndarray) -> np.ndarray:
    """Frame components of a (1,1)-tensor / endomorphism of the tangent space."""
    return e @ m_coord @ np.linalg.inv(e)
