"""Experiment configuration: JSON schema, loading and set construction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from ..constructions import (
    ChunkSet,
    GrowthPolicy,
    build_cone_set,
    build_fattened_cone_set,
    build_intro_cone,
    build_strip_set,
)
from ..errors import ConfigError, InvalidParameter
from ..geometry import LineParams, TubeParams, VerticalTube, line_to_tube

_NUM = {"type": "number"}
_INT = {"type": "integer"}

TUBE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "u": _NUM,
        "v": _NUM,
        "vertical_x0": _NUM,
        "slope": _NUM,
        "x_intercept": _NUM,
        "angle": _NUM,
    },
    "oneOf": [
        {"required": ["u", "v"]},
        {"required": ["vertical_x0"]},
        {"required": ["slope", "x_intercept"]},
        {"required": ["angle", "v"]},
    ],
}

GROWTH_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["policy"],
    "properties": {
        "policy": {"enum": ["paper_exponential", "geometric", "power"]},
        "param": _NUM,
    },
}

_KIND_REQUIRED = {
    "cone": ["theta", "w", "n1", "h1", "levels", "growth"],
    "fattened": ["theta", "eps", "w", "n1", "h1", "levels", "growth"],
    "strip": ["k", "w", "n1", "h1", "levels", "growth"],
    "intro": ["theta", "k_lo", "k_hi"],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["construction"],
    "properties": {
        "construction": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": sorted(_KIND_REQUIRED)},
                "theta": _NUM,
                "eps": _NUM,
                "w": _INT,
                "k": _INT,
                "n1": _INT,
                "h1": _INT,
                "levels": _INT,
                "k_lo": _INT,
                "k_hi": _INT,
                "u0": {"type": ["number", "null"]},
                "growth": GROWTH_SCHEMA,
            },
            "allOf": [
                {"if": {"properties": {"kind": {"const": k}}}, "then": {"required": req}}
                for k, req in _KIND_REQUIRED.items()
            ],
        },
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "traces": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["name", "type"],
                        "properties": {
                            "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                            "type": {"enum": ["mass", "counting", "slice", "tube_mass"]},
                            "tube": TUBE_SCHEMA,
                            "scales": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0.5}},
                        },
                    },
                },
                "sweeps": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["name", "region", "grid"],
                        "properties": {
                            "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                            "region": {
                                "type": "array",
                                "minItems": 2,
                                "maxItems": 2,
                                "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                            },
                            "grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 2, "maxItems": 2},
                            "param_kind": {"enum": ["line", "angle", "tube"]},
                        },
                    },
                },
                "tail": {"type": "integer", "minimum": 1},
                "out_dir": {"type": "string"},
            },
        },
        "seed": _INT,
    },
}


@dataclass
class ExperimentConfig:
    construction: dict
    experiment: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, obj: dict) -> ExperimentConfig:
        validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
        exc = jsonschema.exceptions.best_match(validator.iter_errors(obj))
        if exc is not None:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{where}: {exc.message}") from None
        cfg = cls(obj["construction"], obj.get("experiment", {}), obj.get("seed", 0))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        """Check generator preconditions without building anything."""
        c = self.construction
        if "theta" in c and not (0 < c["theta"] < math.pi):
            raise InvalidParameter("theta must lie in (0, pi)")
        for key in ("w", "k", "n1", "h1", "levels", "k_lo", "k_hi"):
            if key in c and c[key] < 1:
                raise InvalidParameter(f"{key} must be a positive integer")
        if c["kind"] == "fattened" and not (0 < c["eps"] < c["w"]):
            raise InvalidParameter("eps must satisfy 0 < eps < w")
        if c["kind"] == "intro" and c["k_hi"] < c["k_lo"]:
            raise InvalidParameter("k_hi must be >= k_lo")
        if "growth" in c:
            GrowthPolicy.from_json(c["growth"])
        for tr in self.experiment.get("traces", []):
            if tr["type"] in ("slice", "tube_mass") and "tube" not in tr:
                raise ConfigError(f"trace {tr['name']!r} needs a tube")
            if tr["type"] == "tube_mass" and "scales" in tr:
                raise ConfigError(f"trace {tr['name']!r}: tube mass traces use level-end scales")
        names = [t["name"] for t in self.experiment.get("traces", [])]
        names += [s["name"] for s in self.experiment.get("sweeps", [])]
        if len(names) != len(set(names)):
            raise ConfigError("trace and sweep names must be unique")

    def to_dict(self) -> dict:
        return {"construction": self.construction, "experiment": self.experiment, "seed": self.seed}


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ExperimentConfig.from_dict(obj)


def build_set(c: dict) -> ChunkSet:
    """Construct the ChunkSet named by a construction record."""
    kind = c["kind"]
    if kind == "intro":
        return build_intro_cone(c["theta"], c["k_lo"], c["k_hi"])
    growth = GrowthPolicy.from_json(c["growth"])
    if kind == "cone":
        return build_cone_set(c["theta"], c["w"], c["n1"], c["h1"], c["levels"], growth)
    if kind == "fattened":
        return build_fattened_cone_set(c["theta"], c["eps"], c["w"], c["n1"], c["h1"], c["levels"], growth)
    if kind == "strip":
        return build_strip_set(c.get("u0"), c["k"], c["w"], c["n1"], c["h1"], c["levels"], growth)
    raise ConfigError(f"unknown construction kind {kind!r}")


def build_tube(t: dict):
    if "vertical_x0" in t:
        return VerticalTube(t["vertical_x0"])
    if "slope" in t:
        return line_to_tube(LineParams(t["slope"], t["x_intercept"], "x"))
    if "angle" in t:
        # direction angle from the y-axis; edge through (v, 0) on the x-axis
        if t["angle"] == 0:
            return VerticalTube(t["v"])
        return line_to_tube(LineParams(1 / math.tan(t["angle"]), t["v"], "x"))
    return TubeParams(t["u"], t["v"])
