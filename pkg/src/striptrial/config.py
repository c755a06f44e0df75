"""Experiment configuration with the study defaults baked in.

An empty JSON object reproduces the full factor grid of the simulation
study: 93 x 20 grid, five nitrogen levels, randomised and systematic
designs, linear and quadratic responses, two correlation intensities,
three spatial covariances, three bandwidth policies, 100 replicates.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .grid_design import DESIGN_KINDS, FieldGrid, TreatmentLevels, build_grid
from .gwr import AICC_OPTIMAL, AICC_STANDARD, BANDWIDTH_POLICIES, FIXED5, FIXED9
from .simulate import RESPONSE_KINDS, ResponseSpec
from .spatial_cov import SPATIAL_KINDS, SpatialCovSpec, WithinGridCovSpec


class ConfigError(ValueError):
    """Raised for invalid configuration files."""


_DEFAULTS = {
    "n_rows": 93,
    "n_ranges": 20,
    "levels": [0.0, 35.0, 70.0, 105.0, 140.0],
    "designs": ["randomised", "systematic"],
    "responses": ["linear", "quadratic"],
    "etas": [1.0, 0.1],
    "spatials": ["ns", "ar1", "matern"],
    "rho_col": 0.15,
    "rho_row": 0.5,
    "matern_sigma2": 1.0,
    "matern_range": 1.0,
    "matern_nu": 1.5,
    "sigma_u": [5.0, 0.01, 0.0001],
    "sigma_e": 1.0,
    "b_linear": [65.0, 0.05],
    "b_quadratic": [65.0, 0.05, -0.0003],
    "bandwidth_policies": [FIXED5, FIXED9, AICC_OPTIMAL],
    "fixed_bandwidths": {FIXED5: 5.0, FIXED9: 9.0},
    "bandwidth_search": [1.0, 93.0],
    "aicc_formula": AICC_STANDARD,
    "replicates": 100,
    "seed": 20220901,
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated experiment configuration."""

    raw: dict

    def __post_init__(self):
        merged = dict(_DEFAULTS)
        unknown = set(self.raw) - set(_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update(self.raw)
        object.__setattr__(self, "raw", merged)
        self._validate()

    def _validate(self):
        c = self.raw
        if c["replicates"] < 1:
            raise ConfigError("replicates must be >= 1")
        for d in c["designs"]:
            if d not in DESIGN_KINDS:
                raise ConfigError(f"unknown design kind {d!r}")
        for r in c["responses"]:
            if r not in RESPONSE_KINDS:
                raise ConfigError(f"unknown response kind {r!r}")
        for s in c["spatials"]:
            if s not in SPATIAL_KINDS:
                raise ConfigError(f"unknown spatial covariance {s!r}")
        for p in c["bandwidth_policies"]:
            if p not in BANDWIDTH_POLICIES:
                raise ConfigError(f"unknown bandwidth policy {p!r}")
        if c["n_ranges"] % len(c["levels"]) != 0:
            raise ConfigError(
                f"n_ranges={c['n_ranges']} not divisible by {len(c['levels'])} levels"
            )
        # constructing these validates the numeric parameters
        self.treatment_levels()
        for i in range(len(c["spatials"])):
            self.spatial(i)
        for i in range(len(c["etas"])):
            self.within(i)
        for i in range(len(c["responses"])):
            self.response(i)

    # factor-level accessors -------------------------------------------------

    @property
    def designs(self):
        return list(self.raw["designs"])

    @property
    def responses(self):
        return list(self.raw["responses"])

    @property
    def etas(self):
        return [float(e) for e in self.raw["etas"]]

    @property
    def spatials(self):
        return list(self.raw["spatials"])

    @property
    def bandwidth_policies(self):
        return list(self.raw["bandwidth_policies"])

    @property
    def replicates(self) -> int:
        return int(self.raw["replicates"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def aicc_formula(self) -> str:
        return self.raw["aicc_formula"]

    @property
    def bandwidth_search(self):
        lo, hi = self.raw["bandwidth_search"]
        return float(lo), float(hi)

    def fixed_bandwidth(self, policy: str) -> float:
        return float(self.raw["fixed_bandwidths"][policy])

    def grid(self) -> FieldGrid:
        return build_grid(self.raw["n_rows"], self.raw["n_ranges"])

    def treatment_levels(self) -> TreatmentLevels:
        return TreatmentLevels(tuple(self.raw["levels"]))

    def response(self, idx: int) -> ResponseSpec:
        kind = self.raw["responses"][idx]
        b = self.raw["b_linear"] if kind == "linear" else self.raw["b_quadratic"]
        return ResponseSpec(kind=kind, b=tuple(b), sigma_e=float(self.raw["sigma_e"]))

    def within(self, idx: int) -> WithinGridCovSpec:
        return WithinGridCovSpec(
            sigma_u=tuple(self.raw["sigma_u"]), eta=float(self.raw["etas"][idx])
        )

    def spatial(self, idx: int) -> SpatialCovSpec:
        kind = self.raw["spatials"][idx]
        return SpatialCovSpec(
            kind=kind,
            rho_col=float(self.raw["rho_col"]),
            rho_row=float(self.raw["rho_row"]),
            sigma2=float(self.raw["matern_sigma2"]),
            range_scale=float(self.raw["matern_range"]),
            nu=float(self.raw["matern_nu"]),
        )

    # serialisation ----------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def load_config(path_or_dict) -> ScenarioConfig:
    """Load a config from a JSON file path or a plain dict."""
    if isinstance(path_or_dict, dict):
        return ScenarioConfig(raw=dict(path_or_dict))
    with open(path_or_dict) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path_or_dict}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(data).__name__}")
    return ScenarioConfig(raw=data)
