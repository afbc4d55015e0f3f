"""Causal-structure checks: cone containment and its coupling bound, the
global time function, diamond bounding boxes, closed-curve scans, and the
light-ray growth fits.  Derived numbers are frozen in golden/desk_values.json
(computed once from the independent closed-form integrals / direction-sampled
Rayleigh quotients noted there)."""
import json
import math
import pathlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holonomylab import causality as ca
from holonomylab import lorentz, scenarios
from holonomylab.errors import (CausalityViolationError, DomainError,
                                ScenarioSpecError, SignatureError, WindowError)
from holonomylab.fields import FormField, constant_metric

GOLDEN = json.loads(
    (pathlib.Path(__file__).parent / "golden" / "desk_values.json").read_text())

_CACHE: dict = {}


def desk(family):
    if family not in _CACHE:
        _CACHE[family] = scenarios.make_scenario(family, seed=0)
    return _CACHE[family]


def plane_metrics():
    ch = ca.null_plane_chart()
    mink = constant_metric(ch, np.array([[0.0, 1.0], [1.0, 0.0]]),
                           signature=(1, 1))
    wider = constant_metric(ch, np.array([[0.0, 1.0], [1.0, -2.0]]),
                            signature=(1, 1))
    return ch, mink, wider


# --- cone containment ----------------------------------------------------------


def test_minkowski_inside_shifted_cone():
    _, mink, wider = plane_metrics()
    v = ca.cone_contained(ca.ConeComparison(mink, wider, samples=1000), seed=0)
    assert v.passed
    assert v.violations == []


def test_cone_containment_is_reflexive_nonstrict():
    _, mink, _ = plane_metrics()
    v = ca.cone_contained(ca.ConeComparison(mink, mink, samples=1000), seed=1)
    assert v.passed
    # ... and fails in strict mode: every null sample sits on the shared cone
    vs = ca.cone_contained(ca.ConeComparison(mink, mink, samples=1000,
                                             strict=True), seed=1)
    assert not vs.passed


def test_reversed_containment_reports_violations():
    _, mink, wider = plane_metrics()
    v = ca.cone_contained(ca.ConeComparison(wider, mink, samples=1000), seed=2)
    assert not v.passed
    assert v.violations
    bad = v.violations[0]
    assert bad["value_lo"] <= 1e-9 and bad["value_hi"] > 0


def test_cone_comparison_rejects_non_lorentzian():
    ch = ca.null_plane_chart()
    riem = constant_metric(ch, np.eye(2))
    mink = constant_metric(ch, np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(SignatureError):
        ca.cone_contained(ca.ConeComparison(riem, mink, samples=1000))


def test_cone_comparison_needs_enough_samples():
    _, mink, wider = plane_metrics()
    with pytest.raises(DomainError):
        ca.cone_contained(ca.ConeComparison(mink, wider, samples=64))


def test_cone_comparison_needs_common_chart():
    ch_a = ca.null_plane_chart(extent=4.0)
    ch_b = ca.null_plane_chart(extent=2.0)
    g = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(DomainError):
        ca.ConeComparison(constant_metric(ch_a, g), constant_metric(ch_b, g))


def test_containment_is_transitive_on_nested_cones():
    """2 deta (dxi - k deta) for k = 0, 1, 2: each step and the composite hold."""
    ch = ca.null_plane_chart()
    gs = [constant_metric(ch, np.array([[0.0, 1.0], [1.0, -2.0 * k]]),
                          signature=(1, 1)) for k in range(3)]
    for lo, hi in [(0, 1), (1, 2), (0, 2)]:
        v = ca.cone_contained(ca.ConeComparison(gs[lo], gs[hi], samples=1000),
                              seed=3)
        assert v.passed, (lo, hi)


def test_desk_type3_fits_inside_wide_cone_background():
    """The built center-boost metric at eps <= epsilon_max against its
    widening product background, 10^4 boundary-biased samples."""
    rec = desk("calabi-center-boost")
    bound = ca.epsilon_bound(rec)
    rec_safe = lorentz.with_epsilon(rec, min(rec.epsilon, bound.epsilon_max))
    space = lorentz.build_scenario(rec_safe)
    g0 = ca.containing_background(space)
    v = ca.cone_contained(ca.ConeComparison(space.metric, g0, samples=10_000),
                          seed=11, direction=ca.orienting_direction(space))
    assert v.passed
    assert v.margin > 0.0


def test_verdict_is_deterministic_for_fixed_seed():
    rec = desk("calabi-center-boost")
    space = lorentz.build_scenario(lorentz.with_epsilon(rec, 0.05))
    g0 = ca.containing_background(space)
    runs = [ca.cone_contained(ca.ConeComparison(space.metric, g0, samples=1000),
                              seed=4) for _ in range(2)]
    assert runs[0].passed == runs[1].passed
    assert runs[0].margin == runs[1].margin


def test_wide_cone_background_rejects_fine_limit_families():
    space = lorentz.build_scenario(desk("flat-torus-wave"))
    with pytest.raises(ScenarioSpecError):
        ca.containing_background(space)


# --- coupling-strength bound ----------------------------------------------------


def test_grid_search_quarter_for_unit_constant():
    # C = 1 with no wave constraint: 1 - 2 eps >= 1/2 exactly at eps = 1/4,
    # and the top grid candidate is the cap itself.
    assert ca.grid_epsilon_search(1.0, math.inf, 20) == 0.25


def test_zero_twist_potential_makes_cone_term_vacuous():
    rec = desk("calabi-center-boost")
    zero = FormField(rec.factor.chart, lambda x: np.zeros(rec.n),
                     jacobian=lambda x: np.zeros((rec.n, rec.n)))
    import dataclasses
    bound = ca.epsilon_bound(dataclasses.replace(rec, twist_potential=zero),
                             samples=400, wave_samples=600)
    assert bound.c_estimate == 0.0
    # the wave inequality alone sets the bound
    assert bound.epsilon_max > 0.0
    assert bound.epsilon_max <= bound.ratio_cap


@pytest.mark.parametrize("family", ["calabi-center-boost", "calabi-flat-line"])
def test_desk_epsilon_bounds_match_frozen_values(family):
    bound = ca.epsilon_bound(desk(family))
    frozen = GOLDEN[family]
    assert bound.epsilon_max == pytest.approx(frozen["epsilon_max"], rel=1e-12)
    assert bound.c_estimate == pytest.approx(frozen["c_estimate"], rel=1e-12)
    assert bound.ratio_cap == pytest.approx(frozen["ratio_cap"], rel=1e-12)
    assert bound.epsilon_max > 0.0  # found within the 20-step grid


def test_desk_c_estimate_dominates_direction_sampled_rayleigh():
    """Independent lower bound on C: |A(V)|^2 / g(V,V) over random directions
    never exceeds the closed-form per-point maximum A g^{-1} A."""
    rec = desk("calabi-center-boost")
    bound = ca.epsilon_bound(rec)
    rng = np.random.default_rng(8)
    pts = rec.factor.chart.sample(rng, 300, shrink=0.05)
    worst = 0.0
    for x in pts:
        a = rec.twist_potential.components(x)
        g = rec.factor.metric.matrix(x)
        vs = rng.normal(size=(16, rec.n))
        num = (vs @ a) ** 2
        den = np.einsum("ki,ij,kj->k", vs, g, vs)
        worst = max(worst, float(np.max(num / den)))
    assert 0.5 * bound.c_estimate < worst <= bound.c_estimate + 1e-12


def test_epsilon_bound_rejects_fine_limit_families():
    with pytest.raises(ScenarioSpecError):
        ca.epsilon_bound(desk("flat-torus-wave"))


def test_divergent_rayleigh_quotient_reports_margin():
    """A twist potential with a pole just outside the sampling margin blows
    up between margin and margin/2; the error must point at the margin."""
    rec = desk("calabi-center-boost")
    chart = rec.factor.chart
    denom_at = chart.lower[0] + 0.04 * chart.widths[0]

    def comps(x):
        a = np.zeros(rec.n)
        a[0] = 1.0 / (x[0] - denom_at)
        return a

    import dataclasses
    bad = dataclasses.replace(rec, twist_potential=FormField(chart, comps))
    with pytest.raises(DomainError, match="margin"):
        ca.epsilon_bound(bad, samples=400, wave_samples=400)


# --- time function --------------------------------------------------------------


def test_time_function_value_at_origin_is_minus_log_two():
    tf = ca.default_time_function(ca.null_plane_chart())
    assert tf.value([0.0, 0.0]) == pytest.approx(-math.log(2.0), abs=1e-15)
    # matches eta - ln(|xi|+2) on the xi >= 0 side
    assert tf.value([1.5, 0.7]) == pytest.approx(0.7 - math.log(3.5), abs=1e-12)


def test_vertical_curves_advance_time_at_unit_rate():
    ch = ca.null_plane_chart()
    tf = ca.default_time_function(ch)
    v = np.array([0.0, 1.0])
    for xi in (-2.0, 0.0, 1.7):
        assert tf.rate([xi, 0.0], v) == pytest.approx(1.0)


def test_leftgoing_null_rays_still_gain_time():
    """The piecewise-signed form is what keeps eta' = 0, xi' < 0 rays
    future-increasing on the xi < 0 side."""
    tf = ca.default_time_function(ca.null_plane_chart())
    v = np.array([-1.0, 0.0])
    assert tf.rate([-1.0, 0.0], v) > 0
    eps = 1e-3
    assert tf.value([-1.0 - eps, 0.0]) > tf.value([-1.0, 0.0])


def test_time_function_increases_along_random_causal_curves():
    ch = ca.null_plane_chart()
    rep = ca.verify_time_function(ca.ramp_background(ch),
                                  ca.default_time_function(ch),
                                  curves=100, steps=60, step=0.05, seed=5)
    assert rep.passed
    assert rep.min_rate > 0.0
    assert rep.counterexample is None


def test_backwards_time_function_is_caught_with_curve_dump():
    ch = ca.null_plane_chart()
    tf = ca.default_time_function(ch)
    bad = ca.TimeFunctionSpec(value=lambda p: -tf.value(p),
                              direction=tf.direction,
                              rate=lambda p, v: -tf.rate(p, v))
    rep = ca.verify_time_function(ca.ramp_background(ch), bad, curves=5,
                                  steps=30, seed=5)
    assert not rep.passed
    assert rep.counterexample is not None
    assert len(rep.counterexample["points"]) >= 2
    assert len(rep.counterexample["values"]) == len(rep.counterexample["points"])


def test_spacelike_orienting_field_raises():
    ch, mink, _ = plane_metrics()
    tf = ca.default_time_function(ch)
    spacelike = ca.TimeFunctionSpec(value=tf.value,
                                    direction=lambda p: np.array([1.0, 1.0]),
                                    rate=tf.rate)
    with pytest.raises(CausalityViolationError):
        ca.verify_time_function(mink, spacelike, curves=2, steps=5, seed=0)


def test_product_time_direction_is_timelike_for_built_fine_limit():
    space = lorentz.build_scenario(desk("flat-torus-wave"))
    d = ca.product_time_direction(space.chart)
    rng = np.random.default_rng(0)
    for p in space.chart.sample(rng, 25, shrink=0.05):
        v = d(p)
        assert v @ space.metric.matrix(p) @ v < 0


# --- causal diamonds -------------------------------------------------------------


def test_diamond_box_matches_straightened_rectangle():
    rep = ca.causal_diamond((0.0, 0.0), (0.0, 2.0), curves=10, steps=40, seed=0)
    half = GOLDEN["diamond_halfwidth_origin_two"]
    assert not rep.box.empty
    assert rep.box.eta == (0.0, 2.0)
    assert rep.box.xi[0] == pytest.approx(-half, rel=1e-12)
    assert rep.box.xi[1] == pytest.approx(half, rel=1e-12)


def test_diamond_500_connecting_curves_stay_inside():
    rep = ca.causal_diamond((0.0, 0.0), (0.0, 2.0), curves=500, steps=80, seed=1)
    assert rep.passed
    assert rep.escapes == 0
    assert rep.curves == 500
    assert rep.endpoint_gap < 0.05
    assert rep.sample_curves  # dumps kept for plotting


def test_diamond_of_a_single_point():
    rep = ca.causal_diamond((0.3, -1.0), (0.3, -1.0), curves=100, steps=40)
    assert not rep.box.empty
    assert rep.box.eta == (-1.0, -1.0)
    assert rep.box.xi[0] == rep.box.xi[1] == pytest.approx(0.3)


def test_diamond_empty_when_endpoints_reversed():
    rep = ca.causal_diamond((0.0, 1.0), (0.0, 0.0), curves=100)
    assert rep.box.empty
    assert rep.passed  # empty region is a verdict, not an error


def test_diamond_empty_when_target_outruns_rightmost_ray():
    # eta_2 > eta_1, but xi_2 lies beyond the rightmost null ray from p_1
    # (rightward speed is capped at 1 + |xi|; leftward motion is not capped,
    # so only the right edge can empty the diamond this way)
    rep = ca.causal_diamond((0.0, 0.0), (3.0, 1.0), curves=100)
    assert math.expm1(1.0) < 3.0  # the rightmost ray reaches only e - 1
    assert rep.box.empty


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.05, 2.0))
def test_diamond_box_grows_monotonically_with_upper_eta(deta, extra):
    small = ca.causal_diamond((0.2, 0.0), (0.2, deta), curves=0, steps=10)
    big = ca.causal_diamond((0.2, 0.0), (0.2, deta + extra), curves=0, steps=10)
    assert big.box.xi[0] <= small.box.xi[0]
    assert big.box.xi[1] >= small.box.xi[1]
    assert big.box.eta[1] >= small.box.eta[1]


def test_drift_diamond_contains_its_500_curves():
    rep = ca.causal_diamond((0.0, 0.0, 0.3, -0.2), (0.5, 1.5, 0.4, 0.1),
                            metric_tag="type4_background",
                            curves=500, steps=80, seed=7)
    assert rep.passed
    assert rep.escapes == 0
    assert rep.box.drift_cap > 0
    assert len(rep.box.t) == 2


def test_drift_diamond_box_is_monotone_in_upper_eta():
    p1 = (0.0, 0.0, 0.1)
    boxes = [ca.causal_diamond(p1, (0.0, h, 0.1),
                               metric_tag="type4_background",
                               curves=0).box for h in (0.5, 1.0, 2.0)]
    for a, b in zip(boxes, boxes[1:]):
        assert b.xi[0] <= a.xi[0] and b.xi[1] >= a.xi[1]
        assert b.t[0][1] >= a.t[0][1]


def test_diamond_rejects_unknown_background_tag():
    with pytest.raises(DomainError):
        ca.causal_diamond((0.0, 0.0), (0.0, 1.0), metric_tag="cones")


def test_drift_growth_exponent_is_quadratic():
    slope, grid, env = ca.drift_growth_exponent(q=1, eta_max=100.0,
                                                curves=24, seed=8)
    assert slope == pytest.approx(2.0, abs=0.2)
    assert np.all(np.diff(env) >= 0)


# --- tilt and closed-curve scan ---------------------------------------------------


def test_tilt_delta_trivial_values():
    delta = ca.tilt_delta(lambda p: 0.0)
    assert delta([0.0, 0.0]) == 0.25
    delta3 = ca.tilt_delta(lambda p: 3.0)
    assert delta3([0.0, 0.0]) == pytest.approx(1.0 / 16.0)


def test_tilt_delta_rejects_negative_drift():
    with pytest.raises(DomainError):
        ca.tilt_delta(lambda p: -1.0)([0.0, 0.0])


def test_tilted_background_strictly_widens_the_cones():
    ch = ca.null_plane_chart(flat=2)
    cmp = ca.ConeComparison(ca.flat_drift_background(ch),
                            ca.tilted_background(ch),
                            samples=10_000, strict=True)
    v = ca.cone_contained(cmp, seed=3)
    assert v.passed
    assert v.margin > 0.1  # strict containment with a real gap


def test_closed_curve_scan_thousand_segments():
    ch = ca.null_plane_chart(flat=2)
    scan = ca.closed_causal_scan(ca.tilted_background(ch), trials=25,
                                 steps=40, step=0.05, seed=6)
    assert scan.passed
    assert scan.segments >= 1000
    assert scan.min_tilt_margin >= -1e-9
    assert scan.min_return > 0.05


def test_closed_curve_scan_needs_tilted_metric():
    _, mink, _ = plane_metrics()
    with pytest.raises(DomainError):
        ca.closed_causal_scan(mink)


# --- light rays -------------------------------------------------------------------


def test_quadratic_profile_rays_grow_cubically():
    fit = ca.lightray_exponent(lambda e: e * e)
    assert fit.exponent == pytest.approx(
        GOLDEN["ray_exponent_quadratic"], abs=1e-9)
    assert fit.exponent == pytest.approx(3.0, abs=0.01)
    assert fit.residual < 1e-12
    # the integrated ray is the exact cubic eta^3 / 3
    assert np.allclose(fit.xi, fit.eta ** 3 / 3.0, rtol=1e-6)


def test_subleading_linear_term_stays_in_envelope():
    fit = ca.lightray_exponent(lambda e: e * e + e)
    assert fit.exponent == pytest.approx(
        GOLDEN["ray_exponent_quadratic_plus_linear"], abs=1e-9)
    assert fit.exponent == pytest.approx(3.0, abs=0.05)


def test_vanishing_profile_means_straight_rays():
    fit = ca.lightray_exponent(lambda e: 0.0)
    assert fit.exponent == 1.0
    assert fit.residual == 0.0


def test_short_window_raises():
    with pytest.raises(WindowError):
        ca.lightray_exponent(lambda e: e * e, eta_max=50.0, eta_start=20.0)


def test_epsilon_convergence_slope_is_first_order():
    for family in ("flat-torus-wave", "curved-torus-static"):
        slope, gaps = ca.epsilon_convergence_slope(family)
        assert slope == pytest.approx(1.0, abs=0.05)
        assert gaps == sorted(gaps, reverse=True)
