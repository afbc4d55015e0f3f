"""Causal-structure checks for the null-fibered scenarios.

Cone-containment order between metrics, coupling-strength bounds that
certify it, global time functions, causal-diamond bounding boxes, scans for
closing causal curves, and growth exponents of light rays in the widening
backgrounds.

Everything here certifies in the falsifiable direction only: the routines
search for counterexamples (cone violations, non-monotone time values,
curves escaping the analytic box, curves closing up) and pass when none is
found at the configured sample sizes.  Inequalities involving |xi| use the
exact piecewise formulas; the smoothed absolute value enters only where a
background profile feeds an ODE integrator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .charts import Chart, smooth_abs
from .errors import (CausalityViolationError, DomainError, IntegrationError,
                     ScenarioSpecError, SignatureError, WindowError)
from .fields import MetricField
from .lorentz import LorentzianSpace, ScenarioRecipe, build_scenario, product_gap
from . import scenarios


# --- charts and background metrics ------------------------------------------------

def null_plane_chart(extent: float = 4.0, flat: int = 0) -> Chart:
    """Box chart (xi, eta, t1..t_flat), all coordinates in [-extent, extent]."""
    names = ("xi", "eta") + tuple(f"t{k + 1}" for k in range(flat))
    ones = np.ones(2 + flat)
    return Chart(names, -extent * ones, extent * ones)


def _drift(chart: Chart, p) -> float:
    """|sum of the t-coordinates| on a null-plane chart (0 if there are none)."""
    return abs(float(np.sum(np.asarray(p, dtype=float)[2:chart.dim])))


def ramp_background(chart: Chart) -> MetricField:
    """2 deta (dxi - (1+|xi|) deta): cones widen linearly with |xi|."""
    d = chart.dim

    def matrix(p):
        g = np.zeros((d, d))
        g[0, 1] = g[1, 0] = 1.0
        g[1, 1] = -2.0 * (1.0 + abs(float(p[0])))
        for k in range(2, d):
            g[k, k] = 1.0
        return g

    return MetricField(chart, matrix, signature=(d - 1, 1))


def flat_drift_background(chart: Chart) -> MetricField:
    """2 deta (dxi - (1+F) deta) + sum dt_k^2 with F = |sum t_k|."""
    d = chart.dim

    def matrix(p):
        g = np.zeros((d, d))
        g[0, 1] = g[1, 0] = 1.0
        g[1, 1] = -2.0 * (1.0 + _drift(chart, p))
        for k in range(2, d):
            g[k, k] = 1.0
        return g

    mf = MetricField(chart, matrix, signature=(d - 1, 1))
    mf.drift = lambda p: _drift(chart, p)
    return mf


def tilt_delta(drift):
    """Canonical tilt delta = 1/(4(1+F)): keeps 2(1+F)delta at one half.

    Total for any drift F >= 0; the returned callable satisfies
    0 < delta <= 1/4 < 1 everywhere.
    """

    def delta(p):
        f = float(drift(p))
        if f < 0:
            raise DomainError(f"drift must be nonnegative, got {f} at {p}")
        return 1.0 / (4.0 * (1.0 + f))

    return delta


def tilted_background(chart: Chart, drift=None) -> MetricField:
    """The strictly wider comparison metric built from the canonical tilt.

    2 (deta - delta dxi)(dxi - (1+F+(1+F)^2 delta) deta) + (1-delta) sum dt_k^2
    with F the drift (default |sum t_k|) and delta = 1/(4(1+F)).
    """
    d = chart.dim
    if drift is None:
        drift = lambda p: _drift(chart, p)
    delta = tilt_delta(drift)

    def matrix(p):
        f = float(drift(p))
        dl = delta(p)
        b = 1.0 + f + (1.0 + f) ** 2 * dl
        g = np.zeros((d, d))
        g[0, 0] = -2.0 * dl
        g[0, 1] = g[1, 0] = 1.0 + dl * b
        g[1, 1] = -2.0 * b
        for k in range(2, d):
            g[k, k] = 1.0 - dl
        return g

    mf = MetricField(chart, matrix, signature=(d - 1, 1))
    mf.drift = drift
    mf.delta = delta
    return mf


def containing_background(space: LorentzianSpace) -> MetricField:
    """The wide-cone product background on the scenario's own chart.

    Type 3: 2 deta (dxi - (1+|xi|) deta) + g/2.
    Type 4: 2 deta (dxi - (1+|sum t_k|) deta) + (flat block kept) + g'/2.
    Types 1/2 carry no containment claim here (their background is the exact
    product limit), so they are rejected.
    """
    rec = space.recipe
    if rec.type_tag not in (3, 4):
        raise ScenarioSpecError(
            "wide-cone background applies to the center-coupled scenario "
            "families (types 3 and 4)")
    n = rec.n
    bound = cone_bound_field(rec)

    def matrix(p):
        p = np.asarray(p, dtype=float)
        g = np.zeros((n + 2, n + 2))
        g[0, n + 1] = g[n + 1, 0] = 1.0
        g[n + 1, n + 1] = -2.0 * bound(p)
        fm = rec.factor.metric.matrix(p[1:n + 1]).copy()
        scale = np.ones(n)
        scale[rec.split.curved_indices()] = np.sqrt(0.5)
        fm = fm * np.outer(scale, scale)
        g[1:n + 1, 1:n + 1] = fm
        return g

    return MetricField(space.chart, matrix, signature=(n + 1, 1))


def cone_bound_field(rec: ScenarioRecipe):
    """The growth bound 1+|xi| (type 3) or 1+|sum t_k| (type 4) on the full chart."""
    if rec.type_tag == 3:
        return lambda p: 1.0 + abs(float(p[0]))
    if rec.type_tag == 4:
        off, size = rec.split.flat
        lo, hi = 1 + off, 1 + off + size
        return lambda p: 1.0 + abs(float(np.sum(np.asarray(p)[lo:hi])))
    raise ScenarioSpecError(
        "cone growth bound applies to the center-coupled scenario families "
        "(types 3 and 4)")


# --- causal vector sampling --------------------------------------------------------

def _cone_basis(gmat: np.ndarray, where=""):
    """Orthonormalized (timelike unit, spacelike units) basis for a metric value."""
    w, q = np.linalg.eigh(np.asarray(gmat, dtype=float))
    neg = np.flatnonzero(w < 0)
    pos = np.flatnonzero(w > 0)
    if len(neg) != 1 or len(pos) != gmat.shape[0] - 1:
        raise SignatureError(
            f"metric is not Lorentzian{where}: eigenvalues {np.sort(w)}")
    u0 = q[:, neg[0]] / math.sqrt(-w[neg[0]])
    us = q[:, pos] / np.sqrt(w[pos])
    return u0, us


def causal_sample(gmat: np.ndarray, rng: np.random.Generator, count: int,
                  boundary_fraction: float = 0.5, orient=None) -> np.ndarray:
    """`count` causal vectors for the metric value, boundary-biased.

    A `boundary_fraction` share of the draws lies exactly on the null cone,
    the rest strictly inside.  With `orient` (a timelike vector) the samples
    are flipped into its cone half.
    """
    u0, us = _cone_basis(gmat)
    d = gmat.shape[0]
    b = rng.normal(size=(count, d - 1))
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    r = np.ones(count)
    interior = rng.random(count) >= boundary_fraction
    r[interior] = rng.random(int(np.sum(interior)))
    vs = u0[None, :] + (r[:, None] * b) @ us.T
    if orient is not None:
        sign = vs @ (gmat @ np.asarray(orient, dtype=float))
        vs[sign > 0] *= -1.0
    return vs


# --- cone containment --------------------------------------------------------------

@dataclass
class ConeComparison:
    """Ask whether every causal cone of metric_lo sits inside metric_hi's."""

    metric_lo: MetricField
    metric_hi: MetricField
    samples: int = 10_000
    strict: bool = False

    def __post_init__(self):
        lo, hi = self.metric_lo.chart, self.metric_hi.chart
        if lo.coord_names != hi.coord_names or not (
                np.array_equal(lo.lower, hi.lower)
                and np.array_equal(lo.upper, hi.upper)):
            raise DomainError("cone comparison needs both metrics on a common chart")


@dataclass
class ConeVerdict:
    passed: bool
    samples: int
    strict: bool
    margin: float                 # min over samples of -g_hi(X, X)
    violations: list = field(default_factory=list)


def cone_contained(cmp: ConeComparison, seed: int = 0, shrink: float = 0.05,
                   tol: float = 1e-12, direction=None,
                   max_recorded: int = 20) -> ConeVerdict:
    """Sample g_lo-causal vectors and test them against g_hi.

    Half the vectors lie exactly on the g_lo null cone (the binding ones).
    A violation records the point, the vector and both quadratic values.
    With `direction`, the field must in addition be strictly timelike for
    both metrics at every sampled point.
    """
    if cmp.samples < 1000:
        raise DomainError("cone comparison needs at least 1000 samples")
    rng = np.random.default_rng(seed)
    pts = cmp.metric_lo.chart.sample(rng, cmp.samples, shrink=shrink)
    margin = math.inf
    violations = []

    def record(point, vector, vlo, vhi):
        if len(violations) < max_recorded:
            violations.append({"point": np.asarray(point).tolist(),
                               "vector": np.asarray(vector).tolist(),
                               "value_lo": float(vlo), "value_hi": float(vhi)})

    n_viol = 0
    for p in pts:
        glo = cmp.metric_lo.matrix(p)
        ghi = cmp.metric_hi.matrix(p)
        x = causal_sample(glo, rng, 1)[0]
        vlo = float(x @ glo @ x)
        vhi = float(x @ ghi @ x)
        scale = max(1.0, float(np.max(np.abs(ghi))))
        margin = min(margin, -vhi)
        bad = vhi >= 0.0 if cmp.strict else vhi > tol * scale
        if bad:
            n_viol += 1
            record(p, x, vlo, vhi)
        if direction is not None:
            dvec = np.asarray(direction(p), dtype=float)
            for tag, g in (("lo", glo), ("hi", ghi)):
                norm = float(dvec @ g @ dvec)
                if norm >= 0.0:
                    n_viol += 1
                    record(p, dvec, norm, norm)
    return ConeVerdict(passed=n_viol == 0, samples=cmp.samples,
                       strict=cmp.strict, margin=margin, violations=violations)


# --- coupling-strength bound -------------------------------------------------------

@dataclass
class CouplingBound:
    epsilon_max: float
    c_estimate: float
    ratio_cap: float
    grid_steps: int
    samples: int
    wave_samples: int


def grid_epsilon_search(c: float, ratio_cap: float, grid_steps: int = 20,
                        wave_gap=None, bound=None) -> float:
    """Largest grid epsilon with 1 - 2 c eps >= 1/2 and |eps wave_gap| <= bound.

    The grid runs downward from the analytic cap min(1/(4c), ratio_cap); the
    two inequalities are re-verified directly for each candidate (on the
    sampled arrays when given), so the result is certified at the samples
    rather than inferred from the cap alone.
    """
    caps = []
    if c > 0:
        caps.append(1.0 / (4.0 * c))
    if np.isfinite(ratio_cap):
        caps.append(float(ratio_cap))
    if not caps:
        return math.inf
    cap = min(caps)
    for k in range(grid_steps, 0, -1):
        eps = cap * k / grid_steps
        if 1.0 - 2.0 * c * eps < 0.5:
            continue
        if wave_gap is not None and np.any(np.abs(eps * wave_gap) > bound):
            continue
        return float(eps)
    return 0.0


def epsilon_bound(recipe: ScenarioRecipe, samples: int = 4000,
                  wave_samples: int = 10_000, grid_steps: int = 20,
                  margin: float = 0.05, seed: int = 7,
                  divergence_ratio: float = 10.0) -> CouplingBound:
    """Largest grid epsilon certifying the wide-cone containment inequalities.

    The twist-potential constant C is the exact per-point maximum of the
    Rayleigh quotient (A V)^2 / g(V,V), i.e. A g^{-1} A, maximized over
    sampled factor points at `margin` and again at `margin/2`; a blow-up
    between the two margins means the quotient diverges toward the chart
    boundary and is reported as such.  The wave inequality
    |eps (f-1)| <= bound is verified directly at full-chart samples.
    """
    if recipe.type_tag not in (3, 4):
        raise ScenarioSpecError(
            "coupling bound applies to the center-coupled scenario families "
            "(types 3 and 4)")
    fac = recipe.factor
    rng = np.random.default_rng(seed)

    def c_over(points):
        worst = 0.0
        for x in points:
            a = recipe.twist_potential.components(x)
            g = fac.metric.matrix(x)
            worst = max(worst, float(a @ np.linalg.solve(g, a)))
        return worst

    c_outer = c_over(fac.chart.sample(rng, samples, shrink=margin))
    c_inner = c_over(fac.chart.sample(rng, samples, shrink=margin / 2))
    if c_inner > divergence_ratio * max(c_outer, 1e-12):
        raise DomainError(
            "twist-potential Rayleigh quotient grows from "
            f"{c_outer:.3g} to {c_inner:.3g} between margins {margin:.3g} "
            f"and {margin / 2:.3g}; increase the boundary margin")
    c = max(c_outer, c_inner)

    bound = cone_bound_field(recipe)
    full = recipe.full_chart()
    rng_w = np.random.default_rng(seed + 2)
    fpts = full.sample(rng_w, wave_samples, shrink=margin)
    fvals = np.array([recipe.wave_profile.value(p) for p in fpts])
    bounds = np.array([bound(p) for p in fpts])
    gap = fvals - 1.0
    with np.errstate(divide="ignore"):
        ratio_cap = float(np.min(np.where(np.abs(gap) > 0,
                                          bounds / np.maximum(np.abs(gap), 1e-300),
                                          np.inf)))
    eps = grid_epsilon_search(c, ratio_cap, grid_steps,
                              wave_gap=gap, bound=bounds)
    return CouplingBound(epsilon_max=eps, c_estimate=c, ratio_cap=ratio_cap,
                         grid_steps=grid_steps, samples=samples,
                         wave_samples=wave_samples)


# --- time functions ----------------------------------------------------------------

@dataclass
class TimeFunctionSpec:
    """A candidate global time function with its orienting field.

    `value(p)` is the function itself, `rate(p, v)` its exact derivative
    along a velocity (optional; finite differences of `value` otherwise),
    and `direction(p)` the timelike field fixing the future.
    """

    value: object
    direction: object
    rate: object = None


def default_time_function(chart: Chart) -> TimeFunctionSpec:
    """eta - sgn(xi) ln(1 + |xi|/2) - ln 2, oriented by the eta axis.

    This is the signed antiderivative of 1/(|xi|+2), shifted so that it
    coincides with eta - ln(|xi|+2) for xi >= 0 (value -ln 2 at the origin);
    its rate along a velocity is exactly eta' - xi'/(|xi|+2), which keeps it
    increasing along future causal curves on both sides of xi = 0.
    """
    i_xi = chart.index("xi")
    i_eta = chart.index("eta")

    def value(p):
        xi = float(p[i_xi])
        return float(p[i_eta]) - math.copysign(
            math.log1p(abs(xi) / 2.0), xi) - math.log(2.0)

    def rate(p, v):
        return float(v[i_eta]) - float(v[i_xi]) / (abs(float(p[i_xi])) + 2.0)

    def direction(p):
        e = np.zeros(chart.dim)
        e[i_eta] = 1.0
        return e

    return TimeFunctionSpec(value=value, direction=direction, rate=rate)


def orienting_direction(space: LorentzianSpace):
    """A timelike field for a built scenario metric and its wide background.

    eta-translation alone has squared norm 2 eps f under the built metric, so
    it turns spacelike wherever the wave profile is positive.  Tilting by
    -(1 + eps max(0, f)) xi-translation makes the norm at most -2 pointwise
    under the built metric and keeps it negative under the product and
    wide-cone backgrounds; at eps -> 0 it becomes the diagonal eta - xi
    direction of the exact product.
    """
    rec = space.recipe
    n = rec.n

    def direction(p):
        lam = 1.0 + rec.epsilon * max(0.0, float(rec.wave_profile.value(p)))
        e = np.zeros(n + 2)
        e[n + 1] = 1.0
        e[0] = -lam
        return e

    return direction


def product_time_direction(chart: Chart):
    """The timelike diagonal eta - xi direction of the exact product limit."""
    i_xi = chart.index("xi")
    i_eta = chart.index("eta")

    def direction(p):
        e = np.zeros(chart.dim)
        e[i_eta] = 1.0
        e[i_xi] = -1.0
        return e

    return direction


def integrate_causal_curve(metric: MetricField, start, rng: np.random.Generator,
                           direction, steps: int = 60, step: float = 0.05,
                           boundary_fraction: float = 0.3):
    """Random future-directed causal polygonal curve from `start`.

    Each leg picks a fresh causal vector (boundary-biased) at the current
    point, oriented into the future cone of `direction`, normalizes it and
    advances by `step`.  Stops at the chart boundary.  Returns (points,
    velocities) with one velocity per leg.
    """
    chart = metric.chart
    p = np.asarray(start, dtype=float).copy()
    pts = [p.copy()]
    vels = []
    for _ in range(steps):
        g = metric.matrix(p)
        dvec = np.asarray(direction(p), dtype=float)
        norm = float(dvec @ g @ dvec)
        if norm >= 0.0:
            raise CausalityViolationError(
                "time-orienting field is not timelike", point=p.copy(),
                value=norm)
        x = causal_sample(g, rng, 1, boundary_fraction=boundary_fraction,
                          orient=dvec)[0]
        x = x / np.linalg.norm(x)
        nxt = p + step * x
        if not chart.contains(nxt):
            break
        vels.append(x)
        pts.append(nxt.copy())
        p = nxt
    return np.array(pts), np.array(vels)


@dataclass
class TimeMonotonicityReport:
    passed: bool
    curves: int
    accepted_steps: int
    min_rate: float
    counterexample: dict | None = None


def verify_time_function(metric: MetricField, tf: TimeFunctionSpec,
                         curves: int = 100, steps: int = 60,
                         step: float = 0.05, seed: int = 0,
                         shrink: float = 0.1) -> TimeMonotonicityReport:
    """Check that tf increases along random future-directed causal curves.

    Every accepted integration step must strictly increase the value, and
    the exact rate (when available) must stay positive; the minimum observed
    rate over all curves is reported.  The first failing curve is returned
    in full as the counterexample.
    """
    rng = np.random.default_rng(seed)
    starts = metric.chart.sample(rng, curves, shrink=shrink)
    min_rate = math.inf
    total = 0
    for start in starts:
        pts, vels = integrate_causal_curve(metric, start, rng, tf.direction,
                                           steps=steps, step=step)
        values = np.array([tf.value(p) for p in pts])
        total += len(vels)
        for k, v in enumerate(vels):
            if tf.rate is not None:
                r = tf.rate(pts[k], v)
            else:
                ds = float(np.linalg.norm(pts[k + 1] - pts[k]))
                r = (values[k + 1] - values[k]) / ds
            min_rate = min(min_rate, r)
            if r <= 0.0 or values[k + 1] <= values[k]:
                return TimeMonotonicityReport(
                    passed=False, curves=curves, accepted_steps=total,
                    min_rate=min_rate,
                    counterexample={"points": pts.tolist(),
                                    "values": values.tolist(), "step": k})
    return TimeMonotonicityReport(passed=True, curves=curves,
                                  accepted_steps=total, min_rate=min_rate)


# --- causal diamonds ---------------------------------------------------------------

def cone_chart_map(xi):
    """sgn(xi) ln(1+|xi|): straightens the widening cones to slope one."""
    xi = float(xi)
    return math.copysign(math.log1p(abs(xi)), xi)


def cone_chart_unmap(y):
    """Inverse of cone_chart_map: sgn(y) (e^{|y|} - 1)."""
    y = float(y)
    return math.copysign(math.expm1(abs(y)), y)


@dataclass
class DiamondBox:
    empty: bool
    eta: tuple | None = None
    xi: tuple | None = None
    t: list | None = None
    drift_cap: float | None = None


@dataclass
class DiamondReport:
    box: DiamondBox
    curves: int
    escapes: int
    max_overshoot: float
    endpoint_gap: float
    sample_curves: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.box.empty or self.escapes == 0


def _monotone_schedule(rng: np.random.Generator, knots: int) -> np.ndarray:
    """Nondecreasing 0 -> 1 with random (possibly near-flat) increments."""
    inc = rng.exponential(size=knots) * rng.random(knots)
    total = float(np.sum(inc))
    if total == 0.0:
        inc[:] = 1.0
        total = float(knots)
    return np.concatenate([[0.0], np.cumsum(inc) / total])


def _diamond_plane(p1, p2, curves, steps, seed, inflate):
    """Analytic box + connecting-curve check for the widening-cone plane."""
    xi1, eta1 = float(p1[0]), float(p1[1])
    xi2, eta2 = float(p2[0]), float(p2[1])
    c1 = eta1 - cone_chart_map(xi1)
    c2 = eta2 - cone_chart_map(xi2)
    if eta2 < eta1 or c2 < c1:
        return DiamondReport(DiamondBox(empty=True), 0, 0, 0.0, 0.0)
    xi_lo = cone_chart_unmap(eta1 - c2)
    xi_hi = cone_chart_unmap(eta2 - c1)
    box = DiamondBox(empty=False, eta=(eta1, eta2), xi=(xi_lo, xi_hi))
    if eta2 == eta1:
        # degenerate diamond: a single leftward null segment (or one point)
        seg = np.array([[xi1, eta1], [xi2, eta2]])
        return DiamondReport(box, 0, 0, 0.0, 0.0, sample_curves=[seg])

    rng = np.random.default_rng(seed)
    pad = inflate * max(1.0, xi_hi - xi_lo)
    etas = np.linspace(eta1, eta2, steps + 1)
    h = (eta2 - eta1) / steps
    escapes = 0
    overshoot = 0.0
    endpoint_gap = 0.0
    dumps = []
    for c in range(curves):
        w = _monotone_schedule(rng, steps)
        v = c1 + (c2 - c1) * w
        vdot = np.diff(v) / h
        # cone ODE: xi' = (1 - v'(eta)) (1 + |xi|), integrated with RK4;
        # the smoothed |xi| feeds the integrator, the box check stays exact
        xi = np.empty(steps + 1)
        xi[0] = xi1
        for k in range(steps):
            rate = 1.0 - vdot[k]

            def f(x):
                return rate * (1.0 + smooth_abs(x))

            k1 = f(xi[k])
            k2 = f(xi[k] + 0.5 * h * k1)
            k3 = f(xi[k] + 0.5 * h * k2)
            k4 = f(xi[k] + h * k3)
            xi[k + 1] = xi[k] + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        endpoint_gap = max(endpoint_gap, abs(xi[-1] - xi2))
        lo_bad = (xi_lo - pad) - xi
        hi_bad = xi - (xi_hi + pad)
        worst = float(max(lo_bad.max(), hi_bad.max()))
        if worst > 0:
            escapes += 1
            overshoot = max(overshoot, worst)
        if c < 12:
            dumps.append(np.column_stack([xi, etas]))
    return DiamondReport(box, curves, escapes, overshoot, endpoint_gap,
                         sample_curves=dumps)


def _diamond_drift(p1, p2, curves, steps, seed, inflate):
    """Analytic box + connecting-curve check for the drift-coupled model.

    Coordinates (xi, eta, t_1..t_q) with F = |sum t_k|.  The box follows the
    budget inequalities: d sqrt(1+F)/d eta <= sqrt(2) q, the xi'-bound
    xi' <= 1+F, and the leftward-drop/energy budgets they imply.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    q = len(p1) - 2
    if q < 1:
        raise DomainError("drift-coupled diamond needs at least one t coordinate")
    xi1, eta1, t1 = p1[0], p1[1], p1[2:]
    xi2, eta2, t2 = p2[0], p2[1], p2[2:]
    if eta2 < eta1:
        return DiamondReport(DiamondBox(empty=True), 0, 0, 0.0, 0.0)
    deta = eta2 - eta1
    f1 = abs(float(np.sum(t1)))
    root = math.sqrt(1.0 + f1) + math.sqrt(2.0) * q * deta
    f_cap = root ** 2 - 1.0
    sq = math.sqrt(2.0) * q
    xi_hi = xi1 + (root ** 3 - (1.0 + f1) ** 1.5) / (3.0 * sq) if deta > 0 else xi1
    root_c = math.sqrt(1.0 + f_cap) + sq * deta
    drop = (root_c ** 3 - (1.0 + f_cap) ** 1.5) / (3.0 * sq)
    xi_lo = xi1 - drop
    energy = 2.0 * ((xi_hi - xi1) + drop)
    t_pad = math.sqrt(max(deta * energy, 0.0))
    box = DiamondBox(empty=False, eta=(float(eta1), float(eta2)),
                     xi=(float(xi_lo), float(xi_hi)),
                     t=[(float(t1[k] - t_pad), float(t1[k] + t_pad))
                        for k in range(q)],
                     drift_cap=float(f_cap))
    if deta == 0.0:
        seg = np.vstack([p1, p2]) if np.any(p1 != p2) else p1[None, :]
        return DiamondReport(box, 0, 0, 0.0, 0.0, sample_curves=[seg])

    rng = np.random.default_rng(seed)
    h = deta / steps
    etas = np.linspace(eta1, eta2, steps + 1)
    pad_xi = inflate * max(1.0, xi_hi - xi_lo)
    pad_t = inflate * max(1.0, 2.0 * t_pad)
    escapes = 0
    overshoot = 0.0
    dumps = []
    made = 0
    attempts = 0
    while made < curves and attempts < 20 * curves:
        attempts += 1
        # random t-path from t1 to t2: straight line plus a smooth bump
        bump = rng.normal(size=q)
        amp = rng.random()
        shape = np.sin(np.pi * (etas - eta1) / deta)
        tpath = (t1[None, :] + (etas - eta1)[:, None] / deta * (t2 - t1)[None, :]
                 + amp * shape[:, None] * bump[None, :])
        tdot = np.diff(tpath, axis=0) / h
        kinetic = np.sum(tdot ** 2, axis=1)
        fmid = np.abs(np.sum(0.5 * (tpath[1:] + tpath[:-1]), axis=1))
        room = (1.0 + fmid) - 0.5 * kinetic
        budget = float(np.sum(room) * h) - float(xi2 - xi1)
        if budget < 0.0:
            continue  # this t-path spends too much causal room; redraw
        made += 1
        slack = rng.random(steps)
        slack *= budget / (float(np.sum(slack)) * h)
        xidot = room - slack
        xi = np.concatenate([[xi1], xi1 + np.cumsum(xidot) * h])
        pts = np.column_stack([xi, etas, tpath])
        worst = max(
            float(np.max(xi - (xi_hi + pad_xi))),
            float(np.max((xi_lo - pad_xi) - xi)),
            float(np.max(np.abs(tpath - t1[None, :]) - (t_pad + pad_t))),
        )
        if worst > 0:
            escapes += 1
            overshoot = max(overshoot, worst)
        if made <= 12:
            dumps.append(pts)
    if made < curves:
        raise IntegrationError(
            f"could only realize {made} of {curves} connecting curves; the "
            "endpoints leave almost no causal room")
    return DiamondReport(box, curves, escapes, overshoot,
                         endpoint_gap=0.0, sample_curves=dumps)


def causal_diamond(p1, p2, metric_tag: str = "type3_background",
                   curves: int = 500, steps: int = 80, seed: int = 0,
                   inflate: float = 0.05) -> DiamondReport:
    """Analytic bounding box of the causal diamond plus an escape test.

    The box comes from the cone-straightening inequalities of the widening
    background; the empirical part generates `curves` random causal curves
    from p1 to p2 (schedules in the straightened coordinates, re-integrated
    through the cone ODE) and verifies that no sampled point leaves the box
    inflated by `inflate`.
    """
    if metric_tag == "type3_background":
        return _diamond_plane(p1, p2, curves, steps, seed, inflate)
    if metric_tag == "type4_background":
        return _diamond_drift(p1, p2, curves, steps, seed, inflate)
    raise DomainError(f"unknown background tag {metric_tag!r}")


def drift_growth_exponent(q: int = 1, eta_max: float = 100.0,
                          curves: int = 24, seed: int = 0,
                          fit_samples: int = 160) -> tuple:
    """Fitted growth exponent of the drift F along extremal causal curves.

    Integrates an ensemble of causal curves for the drift-coupled background
    that ride the cone boundary (xi' = -mu (1+F), all t_k aligned), takes the
    max-F envelope on an eta grid and fits log F against log eta over the
    last decade.  The budget inequalities cap the growth at quadratic order.
    """
    rng = np.random.default_rng(seed)
    eta0 = 0.1
    grid = np.linspace(eta_max / 10.0, eta_max, fit_samples)
    env = np.zeros_like(grid)
    for _ in range(curves):
        lam = 0.5 + 0.5 * rng.random()
        mu = rng.random()

        def rhs(eta, y):
            f = abs(q * y[0])
            tdot = lam * math.sqrt(2.0 * (1.0 + f) * (1.0 + mu) / q)
            return [tdot]

        sol = solve_ivp(rhs, (eta0, eta_max), [0.0], t_eval=grid,
                        rtol=1e-8, atol=1e-10)
        if not sol.success:
            raise IntegrationError(f"drift ensemble integration failed: {sol.message}")
        env = np.maximum(env, np.abs(q * sol.y[0]))
    slope = float(np.polyfit(np.log(grid), np.log(env), 1)[0])
    return slope, grid, env


# --- closed-curve scan -------------------------------------------------------------

@dataclass
class ClosedCurveScan:
    passed: bool
    trials: int
    segments: int
    min_tilt_margin: float
    min_return: float


def closed_causal_scan(metric: MetricField, trials: int = 25,
                       steps: int = 40, step: float = 0.05,
                       seed: int = 0) -> ClosedCurveScan:
    """Hunt for closing causal curves in a tilted background.

    Integrates random future-directed causal curves; every accepted leg must
    satisfy the tilt inequality eta' - delta xi' >= 0 (the metric carries its
    `delta`), and no curve may re-approach its start once it has left a small
    ball around it.  Each leg counts as one checked segment.
    """
    if not hasattr(metric, "delta"):
        raise DomainError("closed-curve scan needs a tilted background "
                          "with its delta field attached")
    chart = metric.chart
    i_eta = chart.index("eta")
    i_xi = chart.index("xi")

    def direction(p):
        e = np.zeros(chart.dim)
        e[i_eta] = 1.0
        return e

    rng = np.random.default_rng(seed)
    starts = chart.sample(rng, trials, shrink=0.15)
    r0 = 0.1 * float(np.min(chart.widths))
    min_margin = math.inf
    min_return = math.inf
    segments = 0
    passed = True
    for start in starts:
        pts, vels = integrate_causal_curve(metric, start, rng, direction,
                                           steps=steps, step=step)
        segments += len(vels)
        for k, v in enumerate(vels):
            margin = float(v[i_eta]) - metric.delta(pts[k]) * float(v[i_xi])
            min_margin = min(min_margin, margin)
        dist = np.linalg.norm(pts - pts[0], axis=1)
        left = np.flatnonzero(dist > r0)
        if len(left):
            back = float(np.min(dist[left[0]:]))
            min_return = min(min_return, back)
            if back < 0.5 * r0:
                passed = False
    if min_margin < -1e-9:
        passed = False
    return ClosedCurveScan(passed=passed, trials=trials, segments=segments,
                           min_tilt_margin=min_margin, min_return=min_return)


# --- light-ray growth --------------------------------------------------------------

@dataclass
class RayFit:
    exponent: float
    residual: float
    eta: np.ndarray
    xi: np.ndarray


def lightray_exponent(profile, eta_max: float = 100.0, eta_start: float = 0.0,
                      xi_start: float = 0.0, fit_samples: int = 200,
                      rtol: float = 1e-10) -> RayFit:
    """Growth exponent of the non-horizontal light rays dxi/deta = profile.

    Integrates the ray, samples the last decade [eta_max/10, eta_max]
    uniformly in eta and fits log xi against log eta by least squares.  A ray
    whose xi stays constant (vanishing profile) is straight; its extent grows
    linearly with eta and the exponent is reported as 1 with zero residual.
    """
    if eta_max <= 0 or eta_max <= eta_start:
        raise WindowError("integration window must extend past eta_start")
    decade_lo = eta_max / 10.0
    if decade_lo < eta_start:
        raise WindowError(
            f"window [{eta_start}, {eta_max}] is shorter than one decade of "
            "growth; extend eta_max to at least 10x the start")
    grid = np.linspace(decade_lo, eta_max, fit_samples)
    sol = solve_ivp(lambda e, y: [float(profile(e))], (eta_start, eta_max),
                    [float(xi_start)], t_eval=grid, rtol=rtol, atol=1e-12)
    if not sol.success:
        raise IntegrationError(f"light-ray integration failed: {sol.message}")
    xi = sol.y[0]
    if float(np.max(np.abs(xi - xi[0]))) <= 1e-12 * (1.0 + abs(float(xi_start))):
        return RayFit(exponent=1.0, residual=0.0, eta=grid, xi=xi)
    if np.any(xi <= 0.0):
        raise DomainError("ray fit needs positive xi over the fit window; "
                          "start the ray at a nonnegative xi")
    slope, intercept = np.polyfit(np.log(grid), np.log(xi), 1)
    resid = np.log(xi) - (slope * np.log(grid) + intercept)
    return RayFit(exponent=float(slope),
                  residual=float(np.sqrt(np.mean(resid ** 2))),
                  eta=grid, xi=xi)


def epsilon_convergence_slope(family: str, eps=(1e-1, 1e-2, 1e-3),
                              samples: int = 40, seed: int = 0) -> tuple:
    """Slope of log(product gap) against log(epsilon) for a scenario family.

    The gap is the sup-norm distance between the built metric and its exact
    product limit over a fixed sample of chart points; the fine limit is
    first order, so the slope sits at 1.
    """
    gaps = []
    pts = None
    for e in eps:
        rec = scenarios.make_scenario(family, seed=seed, epsilon=float(e))
        space = build_scenario(rec)
        if pts is None:
            rng = np.random.default_rng(seed + 1)
            pts = space.chart.sample(rng, samples, shrink=0.05)
        gaps.append(product_gap(space, pts))
    slope = float(np.polyfit(np.log(np.asarray(eps)), np.log(np.asarray(gaps)), 1)[0])
    return slope, list(map(float, gaps))
