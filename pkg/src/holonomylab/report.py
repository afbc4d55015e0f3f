"""Batch execution of the verification suites and machine-readable reports.

`run_config` executes the suites a config selects against its scenario and
returns (report, curves): the report is a plain JSON-serializable dict whose
field names are pinned by report_schema.json; curves holds the ray and
diamond polyline dumps used by the plot writer.  A crashing suite is
captured as an "error" verdict and the run continues.  Reports are written
atomically and are byte-identical across runs of the same config and seed,
up to the runtime_s timing fields.
"""
from __future__ import annotations

import importlib.resources
import json
import math
import os
import time

import numpy as np

from . import __version__, causality as ca, holonomy, lorentz, scenarios
from .calculus import covariant_derivative, exterior_derivative, ricci
from .config import ScenarioConfig
from .fields import FormField

_SCHEMA = None


def report_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        text = (importlib.resources.files("holonomylab")
                / "report_schema.json").read_text()
        _SCHEMA = json.loads(text)
    return _SCHEMA


def validate_report(report: dict):
    import jsonschema
    jsonschema.validate(report, report_schema())


# --- suites ------------------------------------------------------------------------
# Each suite returns (verdict, samples, tolerance, details, residuals, curves).


def _suite_lemma1(recipe, space, cfg):
    """Closed-form connection/curvature against the structure-equation solver."""
    n_pts = cfg.sample("points")
    tol = cfg.tolerance("agreement")
    rng = np.random.default_rng(cfg.seed + 11)
    pts = space.chart.sample(rng, n_pts, shrink=0.05)
    worst = 0.0
    worst_point = None
    total = 0.0
    for p in pts:
        dw = float(np.max(np.abs(space.connection_closed(p)
                                 - space.connection_solver(p))))
        do = float(np.max(np.abs(space.curvature_closed(p)
                                 - space.curvature_solver(p))))
        r = max(dw, do)
        total += r
        if r > worst:
            worst, worst_point = r, [float(v) for v in p]
    verdict = "pass" if worst < tol else "fail"
    residuals = {"max": worst, "mean": total / n_pts}
    details = {"worst_point": worst_point}
    return verdict, n_pts, tol, details, residuals, None


def _suite_cones(recipe, space, cfg):
    """Cone containment: built metric inside its wide background (types 3/4),
    plus the strictly tilted comparison model and the closed-curve scan."""
    n = cfg.sample("cone_samples")
    details: dict = {}
    residuals: dict = {}
    ok = True

    if recipe.type_tag in (3, 4):
        bound = ca.epsilon_bound(recipe)
        details["epsilon_max"] = bound.epsilon_max
        details["c_estimate"] = bound.c_estimate
        eps = min(recipe.epsilon, bound.epsilon_max)
        details["epsilon_used"] = eps
        safe = lorentz.build_scenario(lorentz.with_epsilon(recipe, eps))
        v = ca.cone_contained(
            ca.ConeComparison(safe.metric, ca.containing_background(safe),
                              samples=n),
            seed=cfg.seed + 21, direction=ca.orienting_direction(safe))
        ok &= v.passed
        residuals["containment_margin"] = v.margin
        details["containment_violations"] = len(v.violations)
    else:
        details["containment"] = "not applicable (fine-limit family)"

    # strictly tilted comparison on the reduced drift model
    q = max(1, recipe.split.flat[1]) if recipe.type_tag == 4 else 1
    chart = ca.null_plane_chart(flat=q)
    v2 = ca.cone_contained(
        ca.ConeComparison(ca.flat_drift_background(chart),
                          ca.tilted_background(chart), samples=n, strict=True),
        seed=cfg.seed + 22)
    ok &= v2.passed and v2.margin > 0
    residuals["tilt_strict_margin"] = v2.margin

    scan = ca.closed_causal_scan(ca.tilted_background(chart),
                                 trials=cfg.sample("scan_trials"),
                                 steps=40, step=0.05, seed=cfg.seed + 23)
    ok &= scan.passed
    details["scan_segments"] = scan.segments
    residuals["scan_tilt_margin"] = scan.min_tilt_margin
    return ("pass" if ok else "fail"), 2 * n, 1e-12, details, residuals, None


def _suite_timefn(recipe, space, cfg):
    """Monotone time function on the widening background; orientation check
    for the built metric's own timelike field."""
    curves = cfg.sample("curves")
    chart = ca.null_plane_chart()
    rep = ca.verify_time_function(ca.ramp_background(chart),
                                  ca.default_time_function(chart),
                                  curves=curves, steps=60, step=0.05,
                                  seed=cfg.seed + 31)
    tf = ca.default_time_function(chart)
    origin_ok = abs(tf.value([0.0, 0.0]) + math.log(2.0)) < 1e-12

    direction = ca.orienting_direction(space)
    rng = np.random.default_rng(cfg.seed + 32)
    worst = -math.inf
    for p in space.chart.sample(rng, 50, shrink=0.05):
        d = direction(p)
        worst = max(worst, float(d @ space.metric.matrix(p) @ d))
    ok = rep.passed and origin_ok and worst < 0
    details = {"curves": curves, "accepted_steps": rep.accepted_steps,
               "origin_value_pinned": origin_ok}
    residuals = {"min_rate": rep.min_rate, "max_direction_norm": worst}
    return ("pass" if ok else "fail"), rep.accepted_steps, 0.0, details, residuals, None


def _diamond_pairs(recipe):
    if recipe.type_tag == 4:
        q = max(1, recipe.split.flat[1])
        z = [0.0] * (q - 1)
        # xi gaps kept modest relative to the causal room (1+F) deta so the
        # schedule family can realize all 500 connecting curves per pair
        return "type4_background", [
            ((0.0, 0.0, 0.3, *z), (0.5, 1.5, 0.4, *z)),
            ((0.0, 0.0, 0.0, *z), (0.0, 2.0, 0.0, *z)),
            ((-1.0, 0.0, 0.2, *z), (0.3, 1.5, -0.2, *z)),
            ((0.0, -1.0, 0.0, *z), (-0.5, -0.25, 0.3, *z)),
            ((0.3, -1.0, 0.1, *z), (0.3, -1.0, 0.1, *z)),
        ]
    return "type3_background", [
        ((0.0, 0.0), (0.0, 2.0)),
        ((0.0, 0.0), (1.0, 2.0)),
        ((-1.0, 0.0), (0.5, 1.5)),
        ((0.0, -1.0), (0.0, 0.5)),
        ((0.3, -1.0), (0.3, -1.0)),
    ]


def _suite_diamond(recipe, space, cfg):
    """Causal-diamond bounding boxes with the connecting-curve escape test."""
    per_pair = cfg.sample("diamond_curves")
    tag, pairs = _diamond_pairs(recipe)
    ok = True
    escapes = []
    overshoot = 0.0
    curves_dump = None
    for k, (p1, p2) in enumerate(pairs):
        rep = ca.causal_diamond(p1, p2, metric_tag=tag, curves=per_pair,
                                steps=80, seed=cfg.seed + 41 + k)
        ok &= rep.passed
        escapes.append(rep.escapes)
        overshoot = max(overshoot, rep.max_overshoot)
        if k == 0 and not rep.box.empty:
            curves_dump = {
                "box": {"eta": list(rep.box.eta), "xi": list(rep.box.xi)},
                "curves": [c[:, :2].tolist() for c in rep.sample_curves],
            }
    details = {"pairs": len(pairs), "background": tag,
               "escapes_per_pair": escapes}
    residuals = {"max_overshoot": overshoot}
    return ("pass" if ok else "fail"), per_pair * len(pairs), 0.0, details, \
        residuals, {"diamond": curves_dump} if curves_dump else None


def _suite_rays(recipe, space, cfg):
    """Light-ray growth exponents; fine-limit slope for types 1/2."""
    tol = cfg.tolerance("exponent")
    fit = ca.lightray_exponent(lambda e: e * e)
    cubic_err = float(np.max(np.abs(fit.xi - fit.eta ** 3 / 3.0)
                             / np.maximum(np.abs(fit.eta ** 3 / 3.0), 1e-30)))
    fit2 = ca.lightray_exponent(lambda e: e * e + e)
    ok = (abs(fit.exponent - 3.0) <= tol and cubic_err < 1e-6
          and abs(fit2.exponent - 3.0) <= tol)
    details = {"fit_window": [float(fit.eta[0]), float(fit.eta[-1])]}
    residuals = {"exponent_quadratic": fit.exponent,
                 "exponent_quadratic_plus_linear": fit2.exponent,
                 "cubic_rel_error": cubic_err}
    if recipe.type_tag in (1, 2):
        slope, gaps = ca.epsilon_convergence_slope(recipe.name,
                                                   seed=cfg.scenario_seed)
        ok &= abs(slope - 1.0) <= tol
        residuals["epsilon_slope"] = slope
        details["epsilon_gaps"] = gaps
    curves = {"rays": {"eta": fit.eta.tolist(), "xi": fit.xi.tolist(),
                       "label": "quadratic cone profile"}}
    return ("pass" if ok else "fail"), len(fit.eta), tol, details, residuals, curves


def _suite_calabi(recipe, space, cfg):
    """Ricci-flatness, the potential equation, parallelism of the fiber
    2-form, and the loop-holonomy dimension of the curved center factor."""
    n_pts = cfg.sample("calabi_points")
    tol = cfg.tolerance("calabi")
    factor, cs = scenarios.calabi_factor(m=2)
    rng = np.random.default_rng(cfg.seed + 51)
    pts = cs.chart.sample(rng, n_pts, shrink=0.05)
    r_ricci = max(float(np.max(np.abs(ricci(cs.metric, p)))) for p in pts)
    r_db = 0.0
    r_par = 0.0
    kf = FormField(cs.chart, cs.kahler_form)
    for p in pts[:10]:
        db = exterior_derivative(cs.fiber_potential, p, 1)
        r_db = max(r_db, float(np.max(np.abs(db - cs.kahler_form(p)))))
        nabla = covariant_derivative(cs.metric, kf, p, 2)
        r_par = max(r_par, float(np.max(np.abs(nabla))))
    sub = holonomy.frame_loop_holonomy(factor.chart, factor.frame,
                                       fracs=(0.8,), include_lassos=False,
                                       rtol=1e-9)
    ok = r_ricci < tol and r_db < tol and r_par < tol and sub.dim == 3
    details = {"loop_dim": sub.dim}
    residuals = {"ricci_max": r_ricci, "potential_equation_max": r_db,
                 "parallelism_max": r_par}
    return ("pass" if ok else "fail"), n_pts, tol, details, residuals, None


def _suite_holonomy(recipe, space, cfg):
    """Harvest, closure, classification; records the fitted invariants."""
    tol_rel = cfg.tolerance("phi_rel")
    est = holonomy.classify_with_retry(recipe.name,
                                       samples=cfg.sample("hol_points"),
                                       epsilon=recipe.epsilon,
                                       base_seed=cfg.scenario_seed)
    ok = est.type_tag == recipe.type_tag and est.dim == recipe.expected_dim
    residuals = {}
    for name, fitted, expected in (("phi", est.phi, recipe.phi),
                                   ("psi", est.psi, recipe.psi)):
        if expected is None:
            continue
        got = np.ravel(np.asarray(fitted, dtype=float))
        want = np.ravel(np.asarray(expected, dtype=float))
        rel = float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-12)))
        residuals[f"{name}_rel_error"] = rel
        ok &= rel < tol_rel
    details = est.to_dict()
    return ("pass" if ok else "fail"), est.n_generators, tol_rel, details, \
        residuals, None


_SUITE_FNS = {
    "lemma1": _suite_lemma1,
    "cones": _suite_cones,
    "timefn": _suite_timefn,
    "diamond": _suite_diamond,
    "rays": _suite_rays,
    "calabi": _suite_calabi,
    "holonomy": _suite_holonomy,
}


# --- runner ------------------------------------------------------------------------


def run_config(cfg: ScenarioConfig) -> tuple:
    """Execute the selected suites; returns (report, curves)."""
    t_start = time.perf_counter()
    recipe = scenarios.make_scenario(cfg.family, seed=cfg.scenario_seed,
                                     epsilon=cfg.epsilon)
    space = lorentz.build_scenario(recipe)
    suites = []
    curves: dict = {}
    report = {
        "schema_version": 1,
        "tool_version": __version__,
        "family": cfg.family,
        "type_tag": recipe.type_tag,
        "seed": cfg.seed,
        "scenario_seed": cfg.scenario_seed,
        "epsilon": float(recipe.epsilon),
        "hol_dim": None, "hol_type": None, "phi": None, "psi": None,
        "seed_used": None,
    }
    for name in cfg.suites:
        t0 = time.perf_counter()
        entry = {"name": name, "verdict": "error", "samples": 0,
                 "tolerance": 0.0, "seed": cfg.seed, "details": {},
                 "residuals": {}, "error": None}
        try:
            verdict, samples, tol, details, residuals, dump = \
                _SUITE_FNS[name](recipe, space, cfg)
            entry.update(verdict=verdict, samples=int(samples),
                         tolerance=float(tol), details=details,
                         residuals=residuals)
            if dump:
                curves.update(dump)
            if name == "holonomy" and verdict == "pass":
                report["hol_dim"] = details["hol_dim"]
                report["hol_type"] = details["type_tag"]
                for key in ("phi", "psi"):
                    if details[key] is not None:
                        report[key] = np.ravel(details[key]).tolist()
                report["seed_used"] = details["seed_used"]
        except Exception as exc:  # captured: the run continues
            entry["error"] = f"{type(exc).__name__}: {exc}"
        entry["runtime_s"] = time.perf_counter() - t0
        suites.append(entry)
    report["suites"] = suites
    report["passed"] = all(s["verdict"] == "pass" for s in suites)
    report["runtime_s"] = time.perf_counter() - t_start
    validate_report(report)
    return report, curves


def write_report(report: dict, path: str):
    """Atomic write: serialize to a sibling temp file, then rename over."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = os.path.join(directory, f".{os.path.basename(path)}.tmp")
    with open(tmp, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def strip_timing(report: dict) -> dict:
    """Copy of a report with the runtime fields removed (for diffing)."""
    out = {k: v for k, v in report.items() if k != "runtime_s"}
    out["suites"] = [{k: v for k, v in s.items() if k != "runtime_s"}
                     for s in report["suites"]]
    return out
