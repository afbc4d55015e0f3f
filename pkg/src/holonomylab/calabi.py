"""A family of Ricci-flat Kaehler metrics on complex line bundles over CP^{m-1}.

Real dimension 2m, coordinates (rho, tau, x_1, y_1, ..., x_{m-1}, y_{m-1})
with z_a = x_a + i y_a an affine chart on the projective base.  The metric is

    g = V^{-1} drho^2 + rho^2 V (dtau - 2A)^2 + rho^2 g_B,
    V(rho) = 1 - rho^{-2m},

where g_B is the Fubini-Study metric of the base (scaled so CP^1 is a round
sphere of radius 1/2) and A is the standard connection 1-form whose curvature
is the base Kaehler form.  At m = 2 this is the classical gravitational
instanton on T*CP^1; for every m it is Ricci-flat with holonomy u(m)
(verified numerically in the tests rather than assumed).

rho = 1 is a coordinate (bolt) locus where V vanishes; charts must stay away
from it, and `CalabiSpace` refuses points with rho <= 1 + margin.
"""
from __future__ import annotations

import numpy as np

from .charts import Chart
from .errors import SingularLocusError
from .fields import FormField, FrameField, MetricField

# Overall scale of the Fubini-Study base: fixed once by requiring the total
# space to be Ricci-flat (see calibrate_fs_scale and the tests that pin it).
FS_SCALE = 0.5


# --- Fubini-Study ingredients on the affine chart -------------------------

def _complex_jacobian(mb: int) -> np.ndarray:
    """J[a, mu] = d z_a / d u_mu for interleaved real coords (x_a, y_a)."""
    j = np.zeros((mb, 2 * mb), dtype=complex)
    for a in range(mb):
        j[a, 2 * a] = 1.0
        j[a, 2 * a + 1] = 1.0j
    return j


def fs_hermitian(u: np.ndarray) -> np.ndarray:
    """h_{a b-bar} = ((1+S) delta_ab - zbar_a z_b) / (1+S)^2."""
    u = np.asarray(u, dtype=float)
    mb = u.size // 2
    z = u[0::2] + 1j * u[1::2]
    s = float(np.sum(u * u))
    n = (1 + s) * np.eye(mb) - np.outer(np.conj(z), z)
    return n / (1 + s) ** 2


def fs_hermitian_d(u: np.ndarray) -> np.ndarray:
    """dh[mu, a, b] = d_mu h_{a b-bar}, analytic."""
    u = np.asarray(u, dtype=float)
    mb = u.size // 2
    z = u[0::2] + 1j * u[1::2]
    s = float(np.sum(u * u))
    jac = _complex_jacobian(mb)
    n = (1 + s) * np.eye(mb) - np.outer(np.conj(z), z)
    out = np.empty((2 * mb, mb, mb), dtype=complex)
    for mu in range(2 * mb):
        ds = 2 * u[mu]
        dn = (ds * np.eye(mb)
              - np.outer(np.conj(jac[:, mu]), z)
              - np.outer(np.conj(z), jac[:, mu]))
        out[mu] = dn / (1 + s) ** 2 - 2 * ds * n / (1 + s) ** 3
    return out


def fs_metric(u: np.ndarray, c: float = FS_SCALE) -> np.ndarray:
    """Real Fubini-Study metric on the affine chart, interleaved coords."""
    mb = np.asarray(u).size // 2
    jac = _complex_jacobian(mb)
    h = fs_hermitian(u)
    k = jac.T @ h @ np.conj(jac)
    return 2 * c * np.real(k)


def fs_metric_d(u: np.ndarray, c: float = FS_SCALE) -> np.ndarray:
    mb = np.asarray(u).size // 2
    jac = _complex_jacobian(mb)
    dh = fs_hermitian_d(u)
    out = np.empty((2 * mb, 2 * mb, 2 * mb))
    for mu in range(2 * mb):
        out[mu] = 2 * c * np.real(jac.T @ dh[mu] @ np.conj(jac))
    return out


def fs_connection(u: np.ndarray, c: float = FS_SCALE) -> np.ndarray:
    """A_mu = c Im(zbar_a dz_a)_mu / (1+S):  the monopole-type potential."""
    u = np.asarray(u, dtype=float)
    mb = u.size // 2
    z = u[0::2] + 1j * u[1::2]
    s = float(np.sum(u * u))
    jac = _complex_jacobian(mb)
    return c * np.imag(np.conj(z) @ jac) / (1 + s)


def fs_connection_d(u: np.ndarray, c: float = FS_SCALE) -> np.ndarray:
    """dA[nu, mu] = d_nu A_mu, analytic."""
    u = np.asarray(u, dtype=float)
    mb = u.size // 2
    z = u[0::2] + 1j * u[1::2]
    s = float(np.sum(u * u))
    jac = _complex_jacobian(mb)
    raw = np.imag(np.conj(z) @ jac)  # (2mb,)
    out = np.empty((2 * mb, 2 * mb))
    for nu in range(2 * mb):
        draw = np.imag(np.conj(jac[:, nu]) @ jac)
        out[nu] = c * (draw / (1 + s) - raw * 2 * u[nu] / (1 + s) ** 2)
    return out


def fs_frame_complex(u: np.ndarray) -> np.ndarray:
    """U with U^H U = conj(h): complex coframe rows theta^c = U_{cb} dz_b."""
    low = np.linalg.cholesky(np.conj(fs_hermitian(u)))
    return low.conj().T


def fs_frame_rows(u: np.ndarray, c: float = FS_SCALE) -> np.ndarray:
    """Real orthonormal coframe rows of fs_metric, interleaved Re/Im pairs."""
    mb = np.asarray(u).size // 2
    upper = fs_frame_complex(u)
    jac = _complex_jacobian(mb)
    theta = upper @ jac  # complex rows over real coords
    rows = np.empty((2 * mb, 2 * mb))
    rows[0::2] = np.sqrt(2 * c) * np.real(theta)
    rows[1::2] = np.sqrt(2 * c) * np.imag(theta)
    return rows


# --- the total space -------------------------------------------------------

class CalabiSpace:
    """The Ricci-flat fibered space described in the module docstring."""

    def __init__(self, m: int, chart: Chart | None = None, margin: float = 1e-2,
                 fs_scale: float = FS_SCALE):
        if m < 2:
            raise ValueError("need complex dimension m >= 2")
        self.m = m
        self.n = 2 * m
        self.margin = float(margin)
        self.fs_scale = float(fs_scale)
        if chart is None:
            names = ["rho", "tau"]
            for a in range(1, m):
                names += [f"x{a}", f"y{a}"]
            lower = np.concatenate([[1.3, 0.0], -0.8 * np.ones(2 * (m - 1))])
            upper = np.concatenate([[2.6, 2 * np.pi / m], 0.8 * np.ones(2 * (m - 1))])
            chart = Chart(tuple(names), lower, upper)
        if chart.lower[0] <= 1.0 + self.margin:
            raise SingularLocusError(
                f"chart reaches rho <= {1 + self.margin}: bolt locus at rho = 1")
        self.chart = chart
        self.metric = MetricField(chart, self._metric_matrix, signature=(self.n, 0),
                                  dmatrix=self._metric_dmatrix)
        self.frame = FrameField(chart, self._frame_matrix, np.eye(self.n))
        self.fiber_potential = FormField(chart, self._potential_components,
                                         jacobian=self._potential_jacobian)

    @property
    def period(self) -> float:
        """Period of the fiber coordinate tau."""
        return 2 * np.pi / self.m

    # -- profile -----------------------------------------------------------
    def vprofile(self, rho: float) -> tuple[float, float]:
        """(V, V') with V = 1 - rho^{-2m}."""
        self._guard(rho)
        return 1.0 - rho ** (-2 * self.m), 2 * self.m * rho ** (-2 * self.m - 1)

    def _guard(self, rho: float) -> None:
        if rho <= 1.0 + self.margin:
            raise SingularLocusError(f"rho = {rho} too close to the bolt at rho = 1")

    # -- metric ------------------------------------------------------------
    def _metric_matrix(self, p) -> np.ndarray:
        rho, u = float(p[0]), np.asarray(p[2:], dtype=float)
        v, _ = self.vprofile(rho)
        a = fs_connection(u, self.fs_scale)
        gb = fs_metric(u, self.fs_scale)
        g = np.zeros((self.n, self.n))
        g[0, 0] = 1.0 / v
        g[1, 1] = rho * rho * v
        g[1, 2:] = g[2:, 1] = -2 * rho * rho * v * a
        g[2:, 2:] = rho * rho * (4 * v * np.outer(a, a) + gb)
        return g

    def _metric_dmatrix(self, p) -> np.ndarray:
        rho, u = float(p[0]), np.asarray(p[2:], dtype=float)
        v, dv = self.vprofile(rho)
        a = fs_connection(u, self.fs_scale)
        da = fs_connection_d(u, self.fs_scale)
        gb = fs_metric(u, self.fs_scale)
        dgb = fs_metric_d(u, self.fs_scale)
        out = np.zeros((self.n, self.n, self.n))
        r2 = rho * rho
        # d/drho
        d = out[0]
        d[0, 0] = -dv / (v * v)
        d[1, 1] = 2 * rho * v + r2 * dv
        d[1, 2:] = d[2:, 1] = -2 * (2 * rho * v + r2 * dv) * a
        d[2:, 2:] = 2 * rho * (4 * v * np.outer(a, a) + gb) + r2 * 4 * dv * np.outer(a, a)
        # d/dtau = 0; d/du_sigma:
        for sig in range(self.n - 2):
            d = out[2 + sig]
            d[1, 2:] = d[2:, 1] = -2 * r2 * v * da[sig]
            cross = np.outer(da[sig], a)
            d[2:, 2:] = r2 * (4 * v * (cross + cross.T) + dgb[sig])
        return out

    # -- adapted orthonormal coframe ----------------------------------------
    def _frame_matrix(self, p) -> np.ndarray:
        rho, u = float(p[0]), np.asarray(p[2:], dtype=float)
        v, _ = self.vprofile(rho)
        sq = np.sqrt(v)
        a = fs_connection(u, self.fs_scale)
        e = np.zeros((self.n, self.n))
        e[0, 0] = 1.0 / sq
        e[1, 1] = rho * sq
        e[1, 2:] = -2 * rho * sq * a
        e[2:, 2:] = rho * fs_frame_rows(u, self.fs_scale)
        return e

    # -- fiber potential and its curvature ----------------------------------
    def _potential_components(self, p) -> np.ndarray:
        """B = (rho^2 / 2)(dtau - 2A); dB is the Kaehler form."""
        rho, u = float(p[0]), np.asarray(p[2:], dtype=float)
        b = np.zeros(self.n)
        b[1] = 0.5 * rho * rho
        b[2:] = -rho * rho * fs_connection(u, self.fs_scale)
        return b

    def _potential_jacobian(self, p) -> np.ndarray:
        rho, u = float(p[0]), np.asarray(p[2:], dtype=float)
        out = np.zeros((self.n, self.n))
        out[0, 1] = rho
        out[0, 2:] = -2 * rho * fs_connection(u, self.fs_scale)
        da = fs_connection_d(u, self.fs_scale)
        out[2:, 2:] = -rho * rho * da
        return out

    def kahler_form(self, p) -> np.ndarray:
        """Coordinate components of the parallel 2-form (= d of fiber_potential)."""
        jac = self._potential_jacobian(p)
        return jac - jac.T

    def kahler_frame_matrix(self) -> np.ndarray:
        """Frame components of the Kaehler form: constant, squares to -I."""
        k = np.zeros((self.n, self.n))
        k[0, 1], k[1, 0] = 1.0, -1.0
        for a in range(self.m - 1):
            i = 2 + 2 * a
            k[i, i + 1], k[i + 1, i] = -1.0, 1.0
        return k


def calibrate_fs_scale(m: int = 2, candidates=None, n_points: int = 3,
                       seed: int = 0) -> float:
    """Return the base scale minimizing the Ricci norm of the total space.

    Development-time calibration for FS_SCALE; the tests pin its outcome.
    """
    from . import calculus

    if candidates is None:
        candidates = np.linspace(0.25, 1.0, 16)
    rng = np.random.default_rng(seed)
    best, best_norm = None, np.inf
    for c in candidates:
        space = CalabiSpace(m, fs_scale=float(c))
        pts = space.chart.sample(rng, n_points, shrink=0.15)
        norm = max(float(np.max(np.abs(calculus.ricci(space.metric, p)))) for p in pts)
        if norm < best_norm:
            best, best_norm = float(c), norm
    return best
