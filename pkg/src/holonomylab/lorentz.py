"""Lorentzian metrics fibered by two null directions over a Riemannian factor.

Given a Riemannian factor (M^n, g) with orthonormal coframe e^i, a 1-form
potential A on M, a scalar wave profile f on the product N = R x M x R with
coordinates (xi, x, eta), and a coupling strength eps > 0, this module builds

    gt = 2 deta (dxi + eps f deta + 2 eps A) + g ,

a signature-(n+1, 1) metric whose adapted coframe

    et^0 = dxi + eps f deta + 2 eps A,   et^i = e^i,   et^{n+1} = deta

has the constant light-cone Gram matrix J of `soalgebra.iso_gram`.  In this
frame the Levi-Civita connection takes values in the stabilizer of the
isotropic direction d/dxi, and both the connection and the curvature admit
closed-form expressions in terms of

    f0    = df/dxi,
    f_i   = frame derivative of f along et_i,
    F_ij  = dA in frame components,

their frame derivatives, and the intrinsic connection/curvature of the
factor.  `connection_closed` / `curvature_closed` assemble those expressions
from analytic ingredient derivatives; the generic structure-equation solver
in `frames` provides an independent cross-check (see tests).

Index layout everywhere: frame/coordinate index 0 is xi-like, 1..n are the
factor directions, n+1 is eta-like.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import calculus, frames
from .charts import Chart, product_chart
from .errors import DerivativeError, ScenarioSpecError
from .fields import FormField, FrameField, MetricField
from .smoothfn import SmoothFn
from .soalgebra import BlockSplit, iso_gram


@dataclass(frozen=True)
class RiemannianFactor:
    """A Riemannian factor: chart, metric, and an orthonormal coframe."""

    name: str
    chart: Chart
    metric: MetricField
    frame: FrameField


@dataclass
class ScenarioRecipe:
    """Complete recipe for one null-fibered scenario.

    `wave_profile` is a scalar function of the full (n+2)-dimensional product
    point (xi, x, eta); `twist_potential` is a 1-form on the factor chart.
    `split` declares the block structure of the factor frame directions used
    later by the holonomy classifier, and `type_tag`/`expected_dim` record the
    desk prediction for this recipe.  `phi`/`psi` are the center-coupling
    coefficients the construction encodes into `wave_profile` (types 3/4).
    """

    name: str
    factor: RiemannianFactor
    wave_profile: SmoothFn
    twist_potential: FormField
    epsilon: float
    split: BlockSplit
    type_tag: int
    expected_dim: int
    phi: np.ndarray | None = None
    psi: np.ndarray | None = None
    null_lower: float = -2.0
    null_upper: float = 2.0
    seed_used: int | None = None

    @property
    def n(self) -> int:
        return self.factor.chart.dim

    def full_chart(self) -> Chart:
        xi = Chart(("xi",), np.array([self.null_lower]), np.array([self.null_upper]))
        eta = Chart(("eta",), np.array([self.null_lower]), np.array([self.null_upper]))
        return product_chart(xi, self.factor.chart, eta)

    def validate(self) -> None:
        """Check every admissibility clause; raise ScenarioSpecError naming
        the first violated one."""
        n = self.n

        def fail(clause: str):
            raise ScenarioSpecError(f"scenario '{self.name}': {clause}")

        if self.type_tag not in (1, 2, 3, 4):
            fail("type tag must be 1, 2, 3 or 4")
        if not self.null_lower < self.null_upper:
            fail("null coordinate range must have positive extent")
        if "xi" in self.factor.chart.coord_names or "eta" in self.factor.chart.coord_names:
            fail("factor coordinates must not be named 'xi' or 'eta'")
        if self.epsilon < 0:
            fail("coupling strength epsilon must be nonnegative")
        if self.split.n != n:
            fail("declared block split must cover the factor dimension")
        if getattr(self.wave_profile, "dim", None) != n + 2:
            fail("wave profile must be a function of the full product chart "
                 f"(expected dimension {n + 2})")
        a0 = self.twist_potential.components(self.factor.chart.center())
        if a0.shape != (n,):
            fail("twist potential must be a 1-form on the factor chart")

        if self.type_tag in (2, 4):
            worst = self._null_derivative_bound()
            if worst > 1e-10:
                fail(f"a type-{self.type_tag} wave profile must be independent "
                     f"of the null coordinates (max derivative {worst:.2e})")
        if self.type_tag == 3:
            if self.phi is None or np.linalg.norm(self.phi) == 0:
                fail("a type-3 recipe must declare a nonzero center coupling")
            if self.split.r == 0:
                fail("a type-3 recipe needs at least one curved center block")
        if self.type_tag == 4:
            if self.split.flat is None:
                fail("a type-4 recipe must declare a flat translation block")
            off, size = self.split.flat
            if not 0 < size < n:
                fail("the flat block must be a proper nonempty subblock")
            if self.psi is None:
                fail("a type-4 recipe must declare a center coupling matrix")
            psi = np.atleast_2d(np.asarray(self.psi, dtype=float))
            if np.linalg.matrix_rank(psi) < size:
                fail("the type-4 coupling matrix must have maximal rank")

    def _null_derivative_bound(self, samples: int = 24) -> float:
        chart = self.full_chart()
        rng = np.random.default_rng(0)
        worst = 0.0
        for p in chart.sample(rng, samples, shrink=0.05):
            grad = self.wave_profile.grad(p)
            worst = max(worst, abs(float(grad[0])), abs(float(grad[-1])))
        return worst


class LorentzianSpace:
    """A built scenario: product chart, metric, adapted frame, closed forms."""

    def __init__(self, recipe: ScenarioRecipe):
        # Probe the derivative surface before validation: a profile of the
        # right dimension but without working grad/hess must fail with a
        # derivative-unavailable error, not a raw NotImplementedError from
        # somewhere inside the validation sampling.
        wp = recipe.wave_profile
        if getattr(wp, "dim", None) == recipe.n + 2:
            center = recipe.full_chart().center()
            try:
                wp.grad(center)
                wp.hess(center)
            except (AttributeError, NotImplementedError) as exc:
                raise DerivativeError(
                    "wave profile does not expose analytic first/second "
                    "derivatives") from exc
        recipe.validate()
        self.recipe = recipe
        self.n = recipe.n
        self.epsilon = float(recipe.epsilon)
        self.chart = recipe.full_chart()
        self.gram = iso_gram(self.n)
        self.metric = MetricField(self.chart, self._metric_matrix,
                                  signature=(self.n + 1, 1),
                                  dmatrix=self._metric_dmatrix)
        self.frame = FrameField(self.chart, self._frame_matrix, self.gram,
                                dmatrix=self._frame_dmatrix)
        pot = recipe.twist_potential
        self._flux_form = FormField(
            recipe.factor.chart,
            lambda x: calculus.exterior_derivative(pot, x, 1))

    # --- point bookkeeping --------------------------------------------------
    def factor_point(self, p) -> np.ndarray:
        return np.asarray(p, dtype=float)[1:self.n + 1]

    # --- metric and frame fields ---------------------------------------------
    def _metric_matrix(self, p) -> np.ndarray:
        n, eps = self.n, self.epsilon
        x = self.factor_point(p)
        g = np.zeros((n + 2, n + 2))
        g[0, n + 1] = g[n + 1, 0] = 1.0
        g[n + 1, n + 1] = 2 * eps * self.recipe.wave_profile.value(p)
        a = self.recipe.twist_potential.components(x)
        g[1:n + 1, n + 1] = g[n + 1, 1:n + 1] = 2 * eps * a
        g[1:n + 1, 1:n + 1] = self.recipe.factor.metric.matrix(x)
        return g

    def _metric_dmatrix(self, p) -> np.ndarray:
        n, eps = self.n, self.epsilon
        x = self.factor_point(p)
        out = np.zeros((n + 2, n + 2, n + 2))
        grad = self.recipe.wave_profile.grad(p)
        out[:, n + 1, n + 1] = 2 * eps * grad
        da = self.recipe.twist_potential.jacobian(x)  # [s, mu]
        out[1:n + 1, 1:n + 1, n + 1] = 2 * eps * da
        out[1:n + 1, n + 1, 1:n + 1] = 2 * eps * da
        out[1:n + 1, 1:n + 1, 1:n + 1] = self.recipe.factor.metric.dmatrix(x)
        return out

    def _frame_matrix(self, p) -> np.ndarray:
        n, eps = self.n, self.epsilon
        x = self.factor_point(p)
        e = np.zeros((n + 2, n + 2))
        e[0, 0] = 1.0
        e[0, 1:n + 1] = 2 * eps * self.recipe.twist_potential.components(x)
        e[0, n + 1] = eps * self.recipe.wave_profile.value(p)
        e[1:n + 1, 1:n + 1] = self.recipe.factor.frame.matrix(x)
        e[n + 1, n + 1] = 1.0
        return e

    def _frame_dmatrix(self, p) -> np.ndarray:
        n, eps = self.n, self.epsilon
        x = self.factor_point(p)
        out = np.zeros((n + 2, n + 2, n + 2))
        grad = self.recipe.wave_profile.grad(p)
        out[:, 0, n + 1] = eps * grad
        da = self.recipe.twist_potential.jacobian(x)
        out[1:n + 1, 0, 1:n + 1] = 2 * eps * da
        out[1:n + 1, 1:n + 1, 1:n + 1] = self.recipe.factor.frame.dmatrix(x)
        return out

    def product_metric_matrix(self, p) -> np.ndarray:
        """The eps -> 0 limit 2 deta dxi + g at p (exact block assembly)."""
        n = self.n
        g = np.zeros((n + 2, n + 2))
        g[0, n + 1] = g[n + 1, 0] = 1.0
        g[1:n + 1, 1:n + 1] = self.recipe.factor.metric.matrix(self.factor_point(p))
        return g

    # --- pointwise ingredients -----------------------------------------------
    def _ingredients(self, p):
        n, eps = self.n, self.epsilon
        p = np.asarray(p, dtype=float)
        x = self.factor_point(p)
        fac = self.recipe.factor
        e = fac.frame.matrix(x)
        v = np.linalg.inv(e)                      # v[mu, a]: dual frame columns
        de = fac.frame.dmatrix(x)                 # [s, a, mu]
        dv = -np.einsum("mb,sbn,na->sma", v, de, v)
        a_co = self.recipe.twist_potential.components(x)
        da = self.recipe.twist_potential.jacobian(x)
        a_fr = v.T @ a_co                         # A(et_i)
        fa_co = da - da.T                         # (dA)_{s mu} = d_s A_mu - d_mu A_s
        flux = v.T @ fa_co @ v                    # F_ij frame components
        grad = self.recipe.wave_profile.grad(p)
        hess = self.recipe.wave_profile.hess(p)
        f0 = float(grad[0])
        f_fr = grad[1:n + 1] @ v - 2 * eps * a_fr * f0
        return dict(x=x, e=e, v=v, de=de, dv=dv, a_co=a_co, da=da, a_fr=a_fr,
                    flux=flux, grad=grad, hess=hess, f0=f0, f_fr=f_fr)

    def _factor_connection(self, ing) -> np.ndarray:
        """om[i, j, k] = factor connection coefficients in its own frame."""
        x, e, v, dv = ing["x"], ing["e"], ing["v"], ing["dv"]
        gamma = calculus.christoffel(self.recipe.factor.metric, x)
        t1 = np.einsum("sk,smj->mjk", v, dv)
        t2 = np.einsum("mns,nk,sj->mjk", gamma, v, v)
        return np.einsum("im,mjk->ijk", e, t1 + t2)

    # --- closed-form connection and curvature ---------------------------------
    def connection_closed(self, p) -> np.ndarray:
        """W[a, b, c] = adapted-frame connection form omt^a_b(et_c)."""
        n, eps = self.n, self.epsilon
        ing = self._ingredients(p)
        w = np.zeros((n + 2, n + 2, n + 2))
        w[0, 0, n + 1] = eps * ing["f0"]
        w[n + 1, n + 1, n + 1] = -eps * ing["f0"]
        w[0, 1:n + 1, n + 1] = eps * ing["f_fr"]
        w[0, 1:n + 1, 1:n + 1] = eps * ing["flux"]
        w[1:n + 1, 1:n + 1, 1:n + 1] = self._factor_connection(ing)
        w[1:n + 1, 1:n + 1, n + 1] = -eps * ing["flux"]
        w[1:n + 1, n + 1, :] = -w[0, 1:n + 1, :]
        return w

    def curvature_closed(self, p) -> np.ndarray:
        """O[a, b, c, d] = adapted-frame curvature form Omt^a_b(et_c, et_d)."""
        n, eps = self.n, self.epsilon
        ing = self._ingredients(p)
        v, dv, hess = ing["v"], ing["dv"], ing["hess"]
        a_fr, f0, f_fr, flux = ing["a_fr"], ing["f0"], ing["f_fr"], ing["flux"]
        om_m = self._factor_connection(ing)

        # factor curvature pushed to its frame
        r_co = calculus.riemann(self.recipe.factor.metric, ing["x"])
        rm = np.einsum("im,mnst,nj,sk,tl->ijkl", ing["e"], r_co, v, v, v)

        # covariant derivative of the flux 2-form, all indices to the frame
        nf_co = calculus.covariant_derivative(
            self.recipe.factor.metric, self._flux_form, ing["x"], 2)
        nf = np.einsum("smn,sk,mi,nj->kij", nf_co, v, v, v)

        # frame second derivatives of the wave profile
        f0_0 = hess[0, 0]
        q = hess[1:n + 1, 0] @ v - 2 * eps * a_fr * f0_0   # et_i(f0) = d_xi(f_i)
        dfm = ing["grad"][1:n + 1]
        da_fr = np.einsum("sm,mi->si", ing["da"], v) + np.einsum("m,smi->si",
                                                                 ing["a_co"], dv)
        dfi_m = (np.einsum("smi,m->si", dv, dfm)
                 + np.einsum("mi,sm->si", v, hess[1:n + 1, 1:n + 1])
                 - 2 * eps * (da_fr * f0
                              + np.einsum("i,s->si", a_fr, hess[1:n + 1, 0])))
        f_ik = np.einsum("sk,si->ik", v, dfi_m) - 2 * eps * np.outer(q, a_fr)
        s_full = (eps * (f_ik + np.einsum("ijk,j->ik", om_m, f_fr)
                         - eps * f0 * flux)
                  + eps ** 2 * (flux @ flux))

        t = np.zeros((n + 2, n + 2, n + 2, n + 2))
        t[0, 0, 0, n + 1] = eps * f0_0
        t[0, 0, 1:n + 1, n + 1] = eps * q
        t[0, 1:n + 1, 0, n + 1] = eps * q
        t[0, 1:n + 1, 1:n + 1, n + 1] = s_full
        t[0, 1:n + 1, 1:n + 1, 1:n + 1] = eps * np.einsum("kij->ikj", nf)
        t[1:n + 1, 1:n + 1, 1:n + 1, n + 1] = -eps * np.einsum("kij->ijk", nf)
        o = t - np.einsum("abcd->abdc", t)
        o[1:n + 1, 1:n + 1, 1:n + 1, 1:n + 1] += rm
        o[1:n + 1, n + 1, :, :] = -o[0, 1:n + 1, :, :]
        o[n + 1, n + 1, :, :] = -o[0, 0, :, :]
        return o

    # --- independent solver route ---------------------------------------------
    def connection_solver(self, p) -> np.ndarray:
        return frames.connection_forms(self.frame, p)

    def curvature_solver(self, p) -> np.ndarray:
        return frames.curvature_forms(self.frame, p)

    # --- flux diagnostics ------------------------------------------------------
    def flux_frame(self, p) -> np.ndarray:
        """F = dA in factor-frame components at p."""
        return self._ingredients(p)["flux"]

    def flux_block_residual(self, p) -> float:
        """How far F = dA strays outside the curved center blocks.

        Zero (to tolerance) for type-3/4 recipes: the flux must live in the
        direct sum of the per-block complex-structure commutants, with no
        components in the flat block or across blocks.
        """
        flux = self.flux_frame(p)
        split = self.recipe.split
        stray = flux.copy()
        worst = 0.0
        for off, k in split.kahler_blocks:
            size = k.shape[0]
            sub = flux[off:off + size, off:off + size]
            worst = max(worst, float(np.max(np.abs(sub @ k - k @ sub))))
            stray[off:off + size, off:off + size] = 0.0
        worst = max(worst, float(np.max(np.abs(stray))))
        return worst


def build_scenario(recipe: ScenarioRecipe) -> LorentzianSpace:
    """Validate a recipe and assemble the Lorentzian space it describes."""
    return LorentzianSpace(recipe)


def with_epsilon(recipe: ScenarioRecipe, epsilon: float) -> ScenarioRecipe:
    """The same recipe at a different coupling strength."""
    return replace(recipe, epsilon=epsilon)


def product_gap(space: LorentzianSpace, points) -> float:
    """sup-norm distance between the built metric and its product limit."""
    worst = 0.0
    for p in points:
        worst = max(worst, float(np.max(np.abs(
            space.metric.matrix(p) - space.product_metric_matrix(p)))))
    return worst
