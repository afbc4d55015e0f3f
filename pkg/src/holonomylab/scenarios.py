"""Desk catalogue of null-fibered scenario families, one per holonomy type.

Each family builds a `ScenarioRecipe` from a seed:

  flat-torus-wave    type 1  flat T^2 factor, compactly supported wave bump
                             times a seeded trig polynomial in all coordinates
  curved-torus-static type 2 trig-perturbed T^2 metric, wave profile a seeded
                             trig polynomial of the factor coordinates only
  calabi-center-boost type 3 Calabi factor (m=2); the wave profile couples the
                             first null coordinate to the fiber center with
                             strength phi, and the twist potential carries
                             flux through the complex structure
  calabi-flat-line   type 4  line x Calabi factor (m=2); the flat coordinate
                             couples to the fiber center with strength psi

The seed only enters the "sufficiently general" trig part of the wave
profile; all structural couplings are fixed numbers so classification results
are reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .calabi import CalabiSpace
from .charts import Chart, product_chart
from .errors import ScenarioSpecError
from .fields import FormField, FrameField, MetricField, constant_metric, product_metric
from .lorentz import RiemannianFactor, ScenarioRecipe
from .smoothfn import Bump1D, CoordLinear, PowerProfile, SmoothFn, TrigPoly, embed
from .soalgebra import BlockSplit

TWO_PI = 2 * np.pi


# --- Riemannian factors -------------------------------------------------------

def flat_torus_factor() -> RiemannianFactor:
    chart = Chart(("x", "y"), np.zeros(2), np.full(2, TWO_PI))
    metric = constant_metric(chart, np.eye(2), signature=(2, 0))
    eye = np.eye(2)
    dz = np.zeros((2, 2, 2))
    frame = FrameField(chart, lambda p: eye, np.eye(2), dmatrix=lambda p: dz)
    return RiemannianFactor("flat-torus", chart, metric, frame)


def trig_torus_factor(rng: np.random.Generator) -> RiemannianFactor:
    """T^2 with a seeded, 2pi-periodic, uniformly positive trig metric."""
    chart = Chart(("x", "y"), np.zeros(2), np.full(2, TWO_PI))
    wiggle = [TrigPoly.random(2, (0, 1), rng, n_terms=3, amp=0.08) for _ in range(3)]
    base = np.array([[1.3, 0.0], [0.0, 1.1]])

    def entries(p):
        w = [f.value(p) for f in wiggle]
        return np.array([[base[0, 0] + w[0], w[2]], [w[2], base[1, 1] + w[1]]])

    def dentries(p):
        g = [f.grad(p) for f in wiggle]
        out = np.zeros((2, 2, 2))
        out[:, 0, 0] = g[0]
        out[:, 1, 1] = g[1]
        out[:, 0, 1] = out[:, 1, 0] = g[2]
        return out

    def d2entries(p):
        h = [f.hess(p) for f in wiggle]
        out = np.zeros((2, 2, 2, 2))
        out[:, :, 0, 0] = h[0]
        out[:, :, 1, 1] = h[1]
        out[:, :, 0, 1] = out[:, :, 1, 0] = h[2]
        return out

    metric = MetricField(chart, entries, signature=(2, 0),
                         dmatrix=dentries, d2matrix=d2entries)

    # upper-triangular coframe (transposed Cholesky factor) with its closed-form
    # derivative, so nothing downstream has to fall back to finite differences
    def frame_matrix(p):
        g = entries(p)
        a = np.sqrt(g[0, 0])
        return np.array([[a, g[0, 1] / a],
                         [0.0, np.sqrt(g[1, 1] - g[0, 1] ** 2 / g[0, 0])]])

    def frame_dmatrix(p):
        g = entries(p)
        dg = dentries(p)
        g00, g01, g11 = g[0, 0], g[0, 1], g[1, 1]
        d00, d01, d11 = dg[:, 0, 0], dg[:, 0, 1], dg[:, 1, 1]
        a = np.sqrt(g00)
        s = g11 - g01 ** 2 / g00
        out = np.zeros((2, 2, 2))
        out[:, 0, 0] = d00 / (2 * a)
        out[:, 0, 1] = d01 / a - g01 * d00 / (2 * g00 * a)
        out[:, 1, 1] = (d11 - 2 * g01 * d01 / g00
                        + g01 ** 2 * d00 / g00 ** 2) / (2 * np.sqrt(s))
        return out

    frame = FrameField(chart, frame_matrix, np.eye(2), dmatrix=frame_dmatrix)
    return RiemannianFactor("trig-torus", chart, metric, frame)


def calabi_factor(m: int = 2) -> tuple[RiemannianFactor, CalabiSpace]:
    cs = CalabiSpace(m)
    return RiemannianFactor(f"calabi-m{m}", cs.chart, cs.metric, cs.frame), cs


def line_calabi_factor(m: int = 2, half_width: float = 1.2
                       ) -> tuple[RiemannianFactor, CalabiSpace]:
    """R x Calabi product factor; the flat line coordinate comes first."""
    cs = CalabiSpace(m)
    line = Chart(("t",), np.array([-half_width]), np.array([half_width]))
    metric = product_metric(constant_metric(line, np.eye(1), signature=(1, 0)),
                            cs.metric)
    n = 1 + cs.n

    def frame_matrix(p):
        e = np.zeros((n, n))
        e[0, 0] = 1.0
        e[1:, 1:] = cs.frame.matrix(p[1:])
        return e

    def frame_dmatrix(p):
        out = np.zeros((n, n, n))
        out[1:, 1:, 1:] = cs.frame.dmatrix(p[1:])
        return out

    chart = product_chart(line, cs.chart)
    frame = FrameField(chart, frame_matrix, np.eye(n), dmatrix=frame_dmatrix)
    return RiemannianFactor(f"line-calabi-m{m}", chart, metric, frame), cs


# --- flux potential and center coupling profile -------------------------------

def fiber_flux_potential(cs: CalabiSpace, coeff: float = 0.25, power: float = 2.0,
                         offset: int = 0, chart: Chart | None = None) -> FormField:
    """A = profile(rho) * B on the Calabi factor, optionally block-embedded.

    B is the fiber potential of the Calabi space (dB = its parallel Kahler
    form), and profile(rho) = coeff * rho**power.  The curvature dA then
    splits into a rho-tau rotation plus a multiple of the complex structure,
    all inside the u(m) block — the flux stays within the factor's rotation
    algebra.  `chart` is the (possibly larger product) chart the form lives
    on, with the Calabi coordinates starting at `offset`.
    """
    chart = cs.chart if chart is None else chart
    dim = chart.dim

    def profile(rho):
        return coeff * rho ** power, coeff * power * rho ** (power - 1)

    def components(p):
        x = p[offset:offset + cs.n]
        g1, _ = profile(float(x[0]))
        out = np.zeros(dim)
        out[offset:offset + cs.n] = g1 * cs.fiber_potential.components(x)
        return out

    def jacobian(p):
        x = p[offset:offset + cs.n]
        g1, dg1 = profile(float(x[0]))
        out = np.zeros((dim, dim))
        block = g1 * cs.fiber_potential.jacobian(x)
        block[0] += dg1 * cs.fiber_potential.components(x)
        out[offset:offset + cs.n, offset:offset + cs.n] = block
        return out

    return FormField(chart, components, jacobian=jacobian)


def center_coupling_profile(cs: CalabiSpace, dim: int, rho_index: int,
                            coeff: float = 0.25, power: float = 2.0) -> SmoothFn:
    """The radial profile multiplying the center coupling in the wave profile.

    For flux potential profile g1 = coeff * rho**power this is
    g1 + rho g1' / (2m) = coeff (1 + power/(2m)) rho**power.
    """
    return PowerProfile(dim, rho_index, coeff * (1.0 + power / (2 * cs.m)), power)


# --- the four families ---------------------------------------------------------

def _zero_potential(factor: RiemannianFactor) -> FormField:
    n = factor.chart.dim
    z = np.zeros(n)
    dz = np.zeros((n, n))
    return FormField(factor.chart, lambda p: z, jacobian=lambda p: dz)


def _build_type1(seed: int, epsilon: float) -> ScenarioRecipe:
    factor = flat_torus_factor()
    dim = 4
    rng = np.random.default_rng(seed)
    trig = TrigPoly.random(dim, (0, 1, 2, 3), rng, n_terms=5,
                           base_freqs=(0.8, 1.0, 1.0, 0.8), amp=0.5)
    wave = Bump1D(dim, 0, -1.8, 1.8) * Bump1D(dim, 3, -1.8, 1.8) * trig
    return ScenarioRecipe(
        name="flat-torus-wave", factor=factor, wave_profile=wave,
        twist_potential=_zero_potential(factor), epsilon=epsilon,
        split=BlockSplit(2), type_tag=1, expected_dim=3, seed_used=seed)


def _build_type2(seed: int, epsilon: float) -> ScenarioRecipe:
    rng = np.random.default_rng(seed)
    factor = trig_torus_factor(rng)
    dim = 4
    wave = embed(TrigPoly.random(2, (0, 1), rng, n_terms=4, amp=0.6), dim, 1)
    return ScenarioRecipe(
        name="curved-torus-static", factor=factor, wave_profile=wave,
        twist_potential=_zero_potential(factor), epsilon=epsilon,
        split=BlockSplit(2), type_tag=2, expected_dim=3, seed_used=seed)


PHI_DEFAULT = 1.25
PSI_DEFAULT = 1.5


def _build_type3(seed: int, epsilon: float) -> ScenarioRecipe:
    factor, cs = calabi_factor(m=2)
    dim = cs.n + 2
    rng = np.random.default_rng(seed)
    widths = cs.chart.widths
    base = (TWO_PI / widths[0] / 4, 2.0, 1.0, 1.0)
    h_fn = embed(TrigPoly.random(cs.n, (0, 1, 2, 3), rng, n_terms=5,
                                 base_freqs=base, amp=0.35), dim, 1)
    profile = center_coupling_profile(cs, dim, rho_index=1)
    wave = h_fn - PHI_DEFAULT * (CoordLinear(dim, 0) * profile)
    return ScenarioRecipe(
        name="calabi-center-boost", factor=factor, wave_profile=wave,
        twist_potential=fiber_flux_potential(cs), epsilon=epsilon,
        split=BlockSplit(4, kahler_blocks=((0, cs.kahler_frame_matrix()),)),
        type_tag=3, expected_dim=8, phi=np.array([PHI_DEFAULT]), seed_used=seed)


def _build_type4(seed: int, epsilon: float) -> ScenarioRecipe:
    factor, cs = line_calabi_factor(m=2)
    n = factor.chart.dim               # 5
    dim = n + 2
    rng = np.random.default_rng(seed)
    base = (TWO_PI / cs.chart.widths[0] / 4, 2.0, 1.0, 1.0)
    h_fn = embed(TrigPoly.random(cs.n, (0, 1, 2, 3), rng, n_terms=5,
                                 base_freqs=base, amp=0.35), dim, 2)
    profile = center_coupling_profile(cs, dim, rho_index=2)
    wave = h_fn - PSI_DEFAULT * (CoordLinear(dim, 1) * profile)
    return ScenarioRecipe(
        name="calabi-flat-line", factor=factor, wave_profile=wave,
        twist_potential=fiber_flux_potential(cs, offset=1, chart=factor.chart),
        epsilon=epsilon,
        split=BlockSplit(5, kahler_blocks=((1, cs.kahler_frame_matrix()),),
                         flat=(0, 1)),
        type_tag=4, expected_dim=8, psi=np.array([[PSI_DEFAULT]]), seed_used=seed)


@dataclass(frozen=True)
class Family:
    name: str
    type_tag: int
    expected_dim: int
    builder: object
    summary: str


FAMILIES = {
    "flat-torus-wave": Family(
        "flat-torus-wave", 1, 3, _build_type1,
        "flat torus factor, compact wave bump, free boost"),
    "curved-torus-static": Family(
        "curved-torus-static", 2, 3, _build_type2,
        "curved torus factor, null-independent wave, no boost"),
    "calabi-center-boost": Family(
        "calabi-center-boost", 3, 8, _build_type3,
        "Calabi factor, boost tied to the fiber center"),
    "calabi-flat-line": Family(
        "calabi-flat-line", 4, 8, _build_type4,
        "line x Calabi factor, flat translation tied to the fiber center"),
}

DEFAULT_EPSILON = 0.1
_OVERRIDE_FIELDS = {"epsilon", "null_lower", "null_upper", "name"}


def make_scenario(family: str, seed: int = 0, epsilon: float | None = None,
                  overrides: dict | None = None) -> ScenarioRecipe:
    """Build one desk recipe; unknown family or override names are errors."""
    if family not in FAMILIES:
        known = ", ".join(sorted(FAMILIES))
        raise ScenarioSpecError(f"unknown scenario family '{family}' (known: {known})")
    eps = DEFAULT_EPSILON if epsilon is None else float(epsilon)
    if eps <= 0:
        raise ScenarioSpecError(
            "desk scenario families require a positive coupling strength epsilon")
    recipe = FAMILIES[family].builder(int(seed), eps)
    if overrides:
        bad = set(overrides) - _OVERRIDE_FIELDS
        if bad:
            raise ScenarioSpecError(
                f"unknown scenario override(s): {', '.join(sorted(bad))}")
        recipe = replace(recipe, **overrides)
    recipe.validate()
    return recipe
