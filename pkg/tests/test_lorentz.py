"""Builder tests: closed connection/curvature forms against the generic
structure-equation solver, metric block structure, recipe validation, and
the small/zero coupling limits."""
import numpy as np
import pytest

from holonomylab import lorentz, scenarios, soalgebra
from holonomylab.charts import Chart
from holonomylab.errors import DerivativeError, ScenarioSpecError
from holonomylab.fields import FormField, FrameField, constant_metric
from holonomylab.smoothfn import Constant, SmoothFn
from holonomylab.soalgebra import BlockSplit

from oracles import fd_partial_rich, fd_second_partial

FAMILIES = list(scenarios.FAMILIES)

_SPACES: dict = {}


def get_space(family):
    if family not in _SPACES:
        _SPACES[family] = lorentz.build_scenario(
            scenarios.make_scenario(family, seed=0))
    return _SPACES[family]


def sample_points(space, count, seed=1):
    rng = np.random.default_rng(seed)
    return space.chart.sample(rng, count, shrink=0.05)


# --- frozen finite-difference oracle ------------------------------------------
# Probe for the flat-torus-wave family at seed 0.  The frozen number is the
# independent central-difference second xi-derivative of the wave profile's
# *value* (tests/oracles.py, h=1e-4), computed once and pinned here.

ORACLE_POINT = np.array([0.3, 1.1, 2.4, -0.7])
ORACLE_F00 = -1.2788262671037387


def test_fd_oracle_value_is_stable():
    rec = scenarios.make_scenario("flat-torus-wave", seed=0)
    live = fd_second_partial(rec.wave_profile.value, ORACLE_POINT, 0, 0, h=1e-4)
    assert abs(live - ORACLE_F00) < 1e-9


def test_boost_curvature_component_matches_fd_oracle():
    # The et^0 ^ et^{n+1} coefficient of the boost curvature form must equal
    # eps * d^2 f / dxi^2, with the right-hand side taken from value-only
    # finite differences rather than the profile's own analytic Hessian.
    rec = scenarios.make_scenario("flat-torus-wave", seed=0)
    space = lorentz.build_scenario(rec)
    n = rec.n
    got = space.curvature_closed(ORACLE_POINT)[0, 0, 0, n + 1]
    assert abs(got - rec.epsilon * ORACLE_F00) < 1e-6


# --- closed forms vs the structure-equation solver ------------------------------

@pytest.mark.parametrize("family", FAMILIES)
def test_closed_forms_match_structure_solver(family):
    """The core gate: every displayed form family agrees with the generic
    solver to 1e-6 at 100 random points."""
    space = get_space(family)
    n = space.n
    mid = slice(1, n + 1)
    worst: dict = {}

    def track(key, *vals):
        worst[key] = max(worst.get(key, 0.0), *map(float, vals))

    for p in sample_points(space, 100, seed=7):
        dw = np.abs(space.connection_closed(p) - space.connection_solver(p))
        do = np.abs(space.curvature_closed(p) - space.curvature_solver(p))
        track("conn boost", dw[0, 0].max(), dw[n + 1, n + 1].max())
        track("conn mixed", dw[0, mid].max(), dw[mid, n + 1].max())
        track("conn rotation", dw[mid, mid].max())
        track("conn rest", dw[mid, 0].max(), dw[n + 1, 0].max(),
              dw[0, n + 1].max(), dw[n + 1, mid].max())
        track("curv boost", do[0, 0].max(), do[n + 1, n + 1].max())
        track("curv mixed", do[0, mid].max(), do[mid, n + 1].max())
        track("curv rotation", do[mid, mid].max())
        track("curv rest", do[mid, 0].max(), do[n + 1, 0].max(),
              do[0, n + 1].max(), do[n + 1, mid].max())
    bad = {k: v for k, v in worst.items() if v >= 1e-6}
    assert not bad, f"{family}: residuals over gate: {bad}"


@pytest.mark.parametrize("family", FAMILIES)
def test_forms_take_values_in_isotropy_stabilizer(family):
    space = get_space(family)
    n = space.n
    for p in sample_points(space, 10, seed=11):
        w = space.connection_closed(p)
        o = space.curvature_closed(p)
        for c in range(n + 2):
            assert soalgebra.so_residual(w[:, :, c], n) < 1e-10
            assert soalgebra.stabilizer_residual(w[:, :, c], n) == 0.0
            for d in range(n + 2):
                assert soalgebra.so_residual(o[:, :, c, d], n) < 1e-10
                assert soalgebra.stabilizer_residual(o[:, :, c, d], n) == 0.0


@pytest.mark.parametrize("family", FAMILIES)
def test_forbidden_curvature_rows_vanish(family):
    # The curvature never maps out of the isotropic line's stabilizer: the
    # O^i_0 block and the O^0_{n+1} corner are identically zero, and the
    # independent solver agrees to its own accuracy.
    space = get_space(family)
    n = space.n
    for p in sample_points(space, 10, seed=13):
        oc = space.curvature_closed(p)
        assert np.all(oc[1:n + 1, 0] == 0.0)
        assert np.all(oc[0, n + 1] == 0.0)
        osv = space.curvature_solver(p)
        assert np.max(np.abs(osv[1:n + 1, 0])) < 1e-6
        assert np.max(np.abs(osv[0, n + 1])) < 1e-6


@pytest.mark.parametrize("family", ["curved-torus-static", "calabi-flat-line"])
def test_static_wave_kills_boost_connection(family):
    # f independent of xi => the boost part of the connection vanishes.
    space = get_space(family)
    n = space.n
    for p in sample_points(space, 10, seed=17):
        wc = space.connection_closed(p)
        assert np.all(wc[0, 0] == 0.0)
        assert np.all(wc[n + 1, n + 1] == 0.0)
        ws = space.connection_solver(p)
        assert np.max(np.abs(ws[0, 0])) < 1e-8
        assert np.max(np.abs(ws[n + 1, n + 1])) < 1e-8


# --- metric and frame block structure -------------------------------------------

@pytest.mark.parametrize("family", FAMILIES)
def test_coframe_gram_is_lightcone_matrix(family):
    space = get_space(family)
    n = space.n
    assert np.array_equal(space.gram, soalgebra.iso_gram(n))
    for p in sample_points(space, 10, seed=19):
        e = space.frame.matrix(p)
        recon = e.T @ space.gram @ e
        assert np.max(np.abs(recon - space.metric.matrix(p))) < 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_metric_signature_is_lorentzian(family):
    space = get_space(family)
    for p in sample_points(space, 10, seed=23):
        eig = np.linalg.eigvalsh(space.metric.matrix(p))
        assert np.sum(eig < 0) == 1
        assert np.sum(eig > 0) == space.n + 1


def test_null_pairing_values_for_trivial_wave():
    # Type 2 with f = 0 and A = 0 over the flat torus: the two null
    # coordinate fields pair to 1 and are themselves null.
    factor = scenarios.flat_torus_factor()
    rec = lorentz.ScenarioRecipe(
        name="trivial-wave", factor=factor, wave_profile=Constant(4, 0.0),
        twist_potential=scenarios._zero_potential(factor), epsilon=0.1,
        split=BlockSplit(2), type_tag=2, expected_dim=2)
    space = lorentz.build_scenario(rec)
    for p in sample_points(space, 5, seed=29):
        g = space.metric.matrix(p)
        assert g[0, 3] == 1.0
        assert g[0, 0] == 0.0
        assert g[3, 3] == 0.0


def test_zero_coupling_is_exact_product():
    for family in FAMILIES:
        rec = lorentz.with_epsilon(scenarios.make_scenario(family, seed=0), 0.0)
        space = lorentz.build_scenario(rec)
        pts = sample_points(space, 5, seed=31)
        assert lorentz.product_gap(space, pts) == 0.0


@pytest.mark.parametrize("family", FAMILIES)
def test_product_gap_shrinks_linearly(family):
    base = scenarios.make_scenario(family, seed=0)
    probe = sample_points(get_space(family), 25, seed=37)
    eps_grid = np.array([1e-1, 1e-2, 1e-3])
    gaps = np.array([
        lorentz.product_gap(lorentz.build_scenario(
            lorentz.with_epsilon(base, e)), probe)
        for e in eps_grid
    ])
    assert np.all(gaps > 0)
    slope = np.polyfit(np.log(eps_grid), np.log(gaps), 1)[0]
    assert abs(slope - 1.0) < 0.05


# --- twist flux -----------------------------------------------------------------

@pytest.mark.parametrize("family", ["calabi-center-boost", "calabi-flat-line"])
def test_flux_confined_to_center_blocks(family):
    space = get_space(family)
    for p in sample_points(space, 20, seed=41):
        assert space.flux_block_residual(p) < 1e-8


@pytest.mark.parametrize("family", ["flat-torus-wave", "curved-torus-static"])
def test_torus_families_carry_no_flux(family):
    space = get_space(family)
    for p in sample_points(space, 5, seed=43):
        assert np.all(space.flux_frame(p) == 0.0)


def test_unit_fiber_profile_gives_linear_center_coupling():
    # With a constant radial profile g1 = 1 the coupling profile is exactly 1,
    # so the wave profile reduces to h - phi_1 * xi.
    _, cs = scenarios.calabi_factor(m=2)
    prof = scenarios.center_coupling_profile(cs, 6, rho_index=1,
                                             coeff=1.0, power=0.0)
    rng = np.random.default_rng(47)
    rec = scenarios.make_scenario("calabi-center-boost", seed=0)
    space = get_space("calabi-center-boost")
    h_rng_pts = space.chart.sample(rng, 10, shrink=0.05)
    from holonomylab.smoothfn import CoordLinear, TrigPoly, embed
    h_fn = embed(TrigPoly.random(4, (0, 1, 2, 3), np.random.default_rng(5),
                                 n_terms=4, amp=0.3), 6, 1)
    phi1 = 0.75
    wave = h_fn - phi1 * (CoordLinear(6, 0) * prof)
    for p in h_rng_pts:
        assert prof.value(p) == 1.0
        assert abs(wave.value(p) - (h_fn.value(p) - phi1 * p[0])) < 1e-14
    assert rec.phi is not None and float(rec.phi[0]) == scenarios.PHI_DEFAULT


# --- analytic derivative layers vs finite differences ----------------------------

def test_metric_and_frame_derivatives_match_fd():
    space = get_space("calabi-center-boost")
    dim = space.n + 2
    for p in sample_points(space, 3, seed=53):
        dg = np.stack([fd_partial_rich(space.metric.matrix, p, s, 1e-4)
                       for s in range(dim)])
        assert np.max(np.abs(dg - space.metric.dmatrix(p))) < 1e-7
        de = np.stack([fd_partial_rich(space.frame.matrix, p, s, 1e-4)
                       for s in range(dim)])
        assert np.max(np.abs(de - space.frame.dmatrix(p))) < 1e-7


# --- recipe validation ------------------------------------------------------------

def good_recipe(family="flat-torus-wave"):
    return scenarios.make_scenario(family, seed=0)


def expect_clause(recipe, fragment):
    with pytest.raises(ScenarioSpecError) as err:
        recipe.validate()
    assert fragment in str(err.value)


def test_validate_rejects_bad_type_tag():
    from dataclasses import replace
    expect_clause(replace(good_recipe(), type_tag=5),
                  "type tag must be 1, 2, 3 or 4")


def test_validate_rejects_empty_null_range():
    from dataclasses import replace
    expect_clause(replace(good_recipe(), null_lower=2.0, null_upper=-2.0),
                  "positive extent")


def test_validate_rejects_reserved_factor_names():
    from dataclasses import replace
    chart = Chart(("xi", "y"), np.zeros(2), np.ones(2))
    metric = constant_metric(chart, np.eye(2), signature=(2, 0))
    eye = np.eye(2)
    frame = FrameField(chart, lambda p: eye, np.eye(2),
                       dmatrix=lambda p: np.zeros((2, 2, 2)))
    bad = lorentz.RiemannianFactor("bad", chart, metric, frame)
    rec = replace(good_recipe(), factor=bad,
                  twist_potential=scenarios._zero_potential(bad))
    expect_clause(rec, "must not be named 'xi' or 'eta'")


def test_validate_rejects_negative_epsilon():
    from dataclasses import replace
    expect_clause(replace(good_recipe(), epsilon=-0.1),
                  "epsilon must be nonnegative")


def test_validate_rejects_wrong_split_size():
    from dataclasses import replace
    expect_clause(replace(good_recipe(), split=BlockSplit(3)),
                  "must cover the factor dimension")


def test_validate_rejects_wrong_wave_dimension():
    from dataclasses import replace
    expect_clause(replace(good_recipe(), wave_profile=Constant(3, 1.0)),
                  "expected dimension 4")


def test_validate_rejects_null_dependent_static_wave():
    from dataclasses import replace
    moving = good_recipe("flat-torus-wave").wave_profile
    rec = replace(good_recipe("curved-torus-static"), wave_profile=moving)
    expect_clause(rec, "independent of the null coordinates")


def test_validate_rejects_missing_center_coupling():
    from dataclasses import replace
    expect_clause(replace(good_recipe("calabi-center-boost"), phi=None),
                  "nonzero center coupling")
    expect_clause(replace(good_recipe("calabi-center-boost"), phi=np.zeros(1)),
                  "nonzero center coupling")


def test_validate_rejects_type3_without_center_block():
    from dataclasses import replace
    expect_clause(replace(good_recipe("calabi-center-boost"),
                          split=BlockSplit(4)),
                  "curved center block")


def test_validate_rejects_type4_flat_block_problems():
    from dataclasses import replace
    rec = good_recipe("calabi-flat-line")
    k = rec.split.kahler_blocks
    expect_clause(replace(rec, split=BlockSplit(5, kahler_blocks=k)),
                  "flat translation block")
    expect_clause(replace(rec, split=BlockSplit(5, flat=(0, 5))),
                  "proper nonempty subblock")
    expect_clause(replace(rec, psi=None), "center coupling matrix")
    expect_clause(replace(rec, psi=np.zeros((1, 1))), "maximal rank")


def test_builder_requires_analytic_wave_derivatives():
    from dataclasses import replace

    class ValueOnly(SmoothFn):
        dim = 4

        def value(self, p):
            return 0.0

    rec = replace(good_recipe("flat-torus-wave"), wave_profile=ValueOnly())
    with pytest.raises(DerivativeError):
        lorentz.build_scenario(rec)


def test_make_scenario_rejects_unknown_family_and_overrides():
    with pytest.raises(ScenarioSpecError, match="unknown scenario family"):
        scenarios.make_scenario("moebius-cloud")
    with pytest.raises(ScenarioSpecError, match="unknown scenario override"):
        scenarios.make_scenario("flat-torus-wave", overrides={"epislon": 0.2})
    with pytest.raises(ScenarioSpecError, match="positive coupling strength"):
        scenarios.make_scenario("flat-torus-wave", epsilon=0.0)


def test_make_scenario_records_seed_and_applies_overrides():
    rec = scenarios.make_scenario("flat-torus-wave", seed=11,
                                  overrides={"null_upper": 3.0})
    assert rec.seed_used == 11
    assert rec.null_upper == 3.0
    assert rec.type_tag == 1 and rec.expected_dim == 3


def test_with_epsilon_does_not_mutate_original():
    rec = scenarios.make_scenario("curved-torus-static", seed=0)
    other = lorentz.with_epsilon(rec, 0.02)
    assert other.epsilon == 0.02
    assert rec.epsilon == scenarios.DEFAULT_EPSILON
