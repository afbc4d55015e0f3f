"""Coordinate tensor calculus: Christoffel symbols, curvature, exterior calculus.

Sign conventions:
  Gamma^k_{ij} = 1/2 g^{kl} (d_i g_{lj} + d_j g_{li} - d_l g_{ij})
  R^a_{bcd}    = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
               + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}
  Ric_{bd}     = R^a_{bad}
With these, the round unit sphere has K = +1.
"""
from __future__ import annotations

import numpy as np

from .fields import FormField, MetricField


def christoffel(metric: MetricField, p) -> np.ndarray:
    """Gamma[k, i, j] = Gamma^k_{ij} at p."""
    ginv = metric.inverse(p)
    dg = metric.dmatrix(p)  # [s, i, j]
    # bracket[l, i, j] = d_i g_{lj} + d_j g_{li} - d_l g_{ij}
    bracket = np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, bracket)


def dchristoffel(metric: MetricField, p) -> np.ndarray:
    """dGamma[s, k, i, j] = d_s Gamma^k_{ij}, assembled from metric derivatives."""
    ginv = metric.inverse(p)
    dg = metric.dmatrix(p)
    d2g = metric.d2matrix(p)  # [s, t, i, j]
    bracket = np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
    # d_s bracket[l, i, j]
    dbracket = (np.einsum("silj->slij", d2g)
                + np.einsum("sjli->slij", d2g)
                - d2g)
    dginv = -np.einsum("ka,sab,bl->skl", ginv, dg, ginv)
    return (0.5 * np.einsum("skl,lij->skij", dginv, bracket)
            + 0.5 * np.einsum("kl,slij->skij", ginv, dbracket))


def riemann(metric: MetricField, p) -> np.ndarray:
    """R[a, b, c, d] = R^a_{bcd} at p."""
    gam = christoffel(metric, p)
    dgam = dchristoffel(metric, p)
    r = np.einsum("cadb->abcd", dgam) - np.einsum("dacb->abcd", dgam)
    r += np.einsum("ace,edb->abcd", gam, gam) - np.einsum("ade,ecb->abcd", gam, gam)
    return r


def riemann_lowered(metric: MetricField, p) -> np.ndarray:
    return np.einsum("ae,ebcd->abcd", metric.matrix(p), riemann(metric, p))


def ricci(metric: MetricField, p) -> np.ndarray:
    return np.einsum("abad->bd", riemann(metric, p))


def scalar_curvature(metric: MetricField, p) -> float:
    return float(np.einsum("bd,bd->", metric.inverse(p), ricci(metric, p)))


def gauss_curvature(metric: MetricField, p) -> float:
    """Sectional curvature of a 2d metric."""
    if metric.chart.dim != 2:
        raise ValueError("gauss_curvature needs a 2d chart")
    rl = riemann_lowered(metric, p)
    g = metric.matrix(p)
    return float(rl[0, 1, 0, 1] / np.linalg.det(g))


def exterior_derivative(form: FormField, p, degree: int) -> np.ndarray:
    """d of a 0-, 1- or 2-form given by totally antisymmetric components."""
    jac = form.jacobian(p)  # [s, ...indices]
    if degree == 0:
        return jac
    if degree == 1:
        return jac - jac.T
    if degree == 2:
        # (dF)_{sij} = d_s F_{ij} - d_i F_{sj} + d_j F_{si}
        return jac - np.einsum("isj->sij", jac) + np.einsum("jsi->sij", jac)
    raise ValueError(f"unsupported form degree {degree}")


def covariant_derivative(metric: MetricField, form: FormField, p, degree: int) -> np.ndarray:
    """nabla_s T_{i...} for a (0,degree) tensor; returns [s, i, ...]."""
    gam = christoffel(metric, p)
    jac = form.jacobian(p)
    t = form.components(p)
    out = jac.copy()
    for slot in range(degree):
        # contract Gamma^l_{s i_slot} into that slot: move it to the front,
        # contract, move it back
        t_moved = np.moveaxis(t, slot, 0)
        term = np.einsum("lsi,l...->si...", gam, t_moved)
        out -= np.moveaxis(term, 1, slot + 1)
    return out


def metric_compatibility_residual(metric: MetricField, p) -> float:
    """Max |nabla g| — zero for the Levi-Civita connection."""
    gam = christoffel(metric, p)
    dg = metric.dmatrix(p)
    g = metric.matrix(p)
    grad = dg - np.einsum("lsi,lj->sij", gam, g) - np.einsum("lsj,il->sij", gam, g)
    return float(np.max(np.abs(grad)))
