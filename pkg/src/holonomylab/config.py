"""Run configuration: a single JSON document with an explicit schema version.

The exact syntax is documented in README.md; configs/ holds one golden
example per desk scenario family.  Parsing failures point at the offending
line, validation failures at the offending field.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigError
from . import scenarios

SCHEMA_VERSION = 1

SUITES = ("lemma1", "cones", "timefn", "diamond", "rays", "calabi", "holonomy")

# per-suite primary sample counts and their defaults
SAMPLE_KEYS = {
    "points": 100,         # lemma1 agreement points
    "hol_points": 20,      # holonomy harvest points
    "cone_samples": 10_000,
    "curves": 100,         # time-function curves
    "diamond_curves": 500,
    "scan_trials": 25,
    "calabi_points": 40,
}

TOLERANCE_KEYS = {
    "agreement": 1e-6,
    "calabi": 1e-5,
    "exponent": 0.05,
    "phi_rel": 1e-3,
}


@dataclass
class ScenarioConfig:
    seed: int
    family: str
    scenario_seed: int
    epsilon: float | None = None
    suites: tuple = SUITES
    samples: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    out: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def sample(self, key: str) -> int:
        return int(self.samples.get(key, SAMPLE_KEYS[key]))

    def tolerance(self, key: str) -> float:
        return float(self.tolerances.get(key, TOLERANCE_KEYS[key]))

    def report_path(self) -> str:
        return str(self.out.get("report", "report.json"))

    def plot_dir(self) -> str:
        return str(self.out.get("plots", "plots"))


def _require(cond: bool, field_name: str, message: str):
    if not cond:
        raise ConfigError(f"config field '{field_name}': {message}")


def from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {"schema_version", "seed", "scenario", "suites", "samples",
             "tolerances", "out"}
    for key in raw:
        _require(key in known, key, "unknown field")

    _require("schema_version" in raw, "schema_version", "missing")
    _require(raw["schema_version"] == SCHEMA_VERSION, "schema_version",
             f"unrecognized version {raw['schema_version']!r} "
             f"(this tool reads version {SCHEMA_VERSION})")
    _require("seed" in raw, "seed", "missing (a seed is mandatory)")
    _require(isinstance(raw["seed"], int) and not isinstance(raw["seed"], bool),
             "seed", "must be an integer")

    scen = raw.get("scenario")
    _require(isinstance(scen, dict), "scenario", "missing or not an object")
    for key in scen:
        _require(key in {"family", "seed", "epsilon"}, f"scenario.{key}",
                 "unknown field")
    family = scen.get("family")
    _require(isinstance(family, str), "scenario.family", "missing or not a string")
    _require(family in scenarios.FAMILIES, "scenario.family",
             f"unknown family {family!r}; known: {', '.join(scenarios.FAMILIES)}")
    scen_seed = scen.get("seed", raw["seed"])
    _require(isinstance(scen_seed, int) and not isinstance(scen_seed, bool),
             "scenario.seed", "must be an integer")
    epsilon = scen.get("epsilon")
    if epsilon is not None:
        _require(isinstance(epsilon, (int, float)) and epsilon > 0,
                 "scenario.epsilon", "must be a positive number")
        epsilon = float(epsilon)

    suites = raw.get("suites", list(SUITES))
    _require(isinstance(suites, list), "suites", "must be a list")
    for k, name in enumerate(suites):
        _require(name in SUITES, f"suites[{k}]",
                 f"unknown suite {name!r}; known: {', '.join(SUITES)}")

    samples = raw.get("samples", {})
    _require(isinstance(samples, dict), "samples", "must be an object")
    for key, val in samples.items():
        _require(key in SAMPLE_KEYS, f"samples.{key}", "unknown sample count")
        _require(isinstance(val, int) and not isinstance(val, bool) and val > 0,
                 f"samples.{key}", "must be a positive integer")

    tolerances = raw.get("tolerances", {})
    _require(isinstance(tolerances, dict), "tolerances", "must be an object")
    for key, val in tolerances.items():
        _require(key in TOLERANCE_KEYS, f"tolerances.{key}", "unknown tolerance")
        _require(isinstance(val, (int, float)) and val > 0,
                 f"tolerances.{key}", "must be a positive number")

    out = raw.get("out", {})
    _require(isinstance(out, dict), "out", "must be an object")
    for key, val in out.items():
        _require(key in {"report", "plots"}, f"out.{key}", "unknown output path")
        _require(isinstance(val, str), f"out.{key}", "must be a string path")

    return ScenarioConfig(seed=raw["seed"], family=family,
                          scenario_seed=scen_seed, epsilon=epsilon,
                          suites=tuple(suites), samples=dict(samples),
                          tolerances=dict(tolerances), out=dict(out))


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error in {path} at line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}")
    return from_dict(raw)


def default_config(family: str = "flat-torus-wave", seed: int = 0) -> ScenarioConfig:
    return from_dict({"schema_version": SCHEMA_VERSION, "seed": seed,
                      "scenario": {"family": family}})
