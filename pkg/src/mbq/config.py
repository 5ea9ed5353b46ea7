"""Run configuration: defaults, JSON files and ``key=value`` overrides.

Keys are flat dotted names (``params.lambda0``, ``grid.phi.points``). A file
may use either the flat form or nested objects. A run manifest is accepted
as a config file too, which makes every run reproducible from its output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .experiments import DEFAULT_VARIANTS, DETUNING_PATTERNS, RunSettings
from .model import SystemParams
from .numerics import Tolerances

SCENARIOS = ("spectrum", "iv", "flux", "temperature", "transient", "dephasing", "correlation",
             "psd", "ng-map", "detuning", "liouvillian-spectrum")

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    pass


def _grid(start, stop, points):
    return {"start": float(start), "stop": float(stop), "points": int(points)}


def _defaults() -> dict:
    out = {}
    for name, value in SystemParams().to_dict().items():
        out[f"params.{name}"] = value
    grids = {
        "phi": _grid(0.0, TWO_PI, 201),
        "mu2": _grid(-0.04, 0.04, 201),
        "t": _grid(0.0, 2000.0, 201),
        "dephasing_t": _grid(0.0, 20000.0, 201),
        "omega": _grid(-0.1, 0.1, 201),
        "ng": _grid(0.0, 2.0, 81),
        "map_phi": _grid(0.0, TWO_PI, 81),
        "eps": _grid(-0.05, 0.05, 81),
    }
    for g, spec in grids.items():
        for k, v in spec.items():
            out[f"grid.{g}.{k}"] = v
    out.update({
        "scan.lambda0_list": [0.01, 0.02, 0.05, 0.1],
        "scan.T_list": [0.0, 0.01, 0.05, 0.1, 0.5],
        "scan.temperature_lambda0": 0.1,
        "scan.dephasing_lambda0_list": [0.0, 0.001, 0.1],
        "scan.variants": [list(v) for v in DEFAULT_VARIANTS],
        "scan.iv_width": 0.01,
        "scan.detuning_pattern": "independent",
        "scan.block": 0,
        "scan.analyse": True,
        "model.charge_mode": "auto",
        "model.window": "auto",
        "model.window_margin": 1.5,
        "model.gauge": "mirrored",
        "solver.steady_method": "solve",
        "run.jobs": 1,
    })
    for name, value in Tolerances().__dict__.items():
        out[f"tolerances.{name}"] = value
    return out


DEFAULTS = _defaults()

CHOICES = {
    "scan.detuning_pattern": DETUNING_PATTERNS,
    "scan.block": (0, 1),
    "model.charge_mode": ("auto", "three", "four", "five"),
    "model.window": ("auto", "fixed"),
    "model.gauge": ("bare", "mirrored"),
    "solver.steady_method": ("eig", "solve"),
}

COMPLEX_KEYS = {"params.lambda0", "params.lambda1", "params.lambda2"}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_type(key: str, value):
    default = DEFAULTS[key]
    ok = True
    if key in COMPLEX_KEYS:
        ok = _is_number(value) or (isinstance(value, list) and len(value) == 2
                                   and all(_is_number(x) for x in value))
        expected = "a number or [re, im]"
    elif isinstance(default, bool):
        ok, expected = isinstance(value, bool), "a boolean"
    elif isinstance(default, int):
        ok, expected = isinstance(value, int) and not isinstance(value, bool), "an integer"
    elif isinstance(default, float):
        ok, expected = _is_number(value), "a number"
    elif isinstance(default, str):
        ok, expected = isinstance(value, str), "a string"
    elif key == "scan.variants":
        ok = isinstance(value, list) and value and all(
            isinstance(v, list) and len(v) == 2 and all(_is_number(x) for x in v) for v in value)
        expected = "a non-empty list of [lambda0, Gamma] pairs"
    elif isinstance(default, list):
        ok = isinstance(value, list) and value and all(_is_number(x) for x in value)
        expected = "a non-empty list of numbers"
    else:  # pragma: no cover
        expected = type(default).__name__
    if not ok:
        raise ConfigError(f"{key}: expected {expected}, got {value!r}")
    if key in CHOICES and value not in CHOICES[key]:
        raise ConfigError(f"{key}: must be one of {list(CHOICES[key])}, got {value!r}")
    if key.endswith(".points") and value < 1:
        raise ConfigError(f"{key}: grids must be non-empty")
    if key == "run.jobs" and value < 1:
        raise ConfigError("run.jobs: must be at least 1")
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite")
    return float(value) if isinstance(default, float) and key not in COMPLEX_KEYS else value


def flatten(data: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _unknown(keys) -> ConfigError:
    return ConfigError(f"unknown config key(s) {sorted(keys)}; valid keys are:\n  "
                       + "\n  ".join(sorted(DEFAULTS)))


def resolve_key(key: str) -> str:
    """Bare parameter names (``lambda0``) are shorthand for ``params.lambda0``."""
    if key not in DEFAULTS and f"params.{key}" in DEFAULTS:
        return f"params.{key}"
    return key


def parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} must have the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


@dataclass
class RunConfig:
    scenario: str
    values: dict = field(default_factory=lambda: dict(DEFAULTS))
    provenance: dict = field(default_factory=lambda: {k: "default" for k in DEFAULTS})
    output_dir: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {list(SCENARIOS)}")

    def __getitem__(self, key):
        return self.values[key]

    def set(self, key: str, value, source: str):
        key = resolve_key(key)
        if key not in DEFAULTS:
            raise _unknown([key])
        self.values[key] = _check_type(key, value)
        self.provenance[key] = source

    def params(self) -> SystemParams:
        data = {k.split(".", 1)[1]: v for k, v in self.values.items() if k.startswith("params.")}
        try:
            return SystemParams.from_dict(data)
        except ValueError as exc:
            raise ConfigError(f"params: {exc}") from exc

    def grid(self, name: str) -> np.ndarray:
        return np.linspace(self[f"grid.{name}.start"], self[f"grid.{name}.stop"],
                           self[f"grid.{name}.points"])

    def settings(self) -> RunSettings:
        return RunSettings(charge_mode=self["model.charge_mode"], window=self["model.window"],
                           window_margin=self["model.window_margin"],
                           steady_method=self["solver.steady_method"],
                           gauge=self["model.gauge"], block=self["scan.block"],
                           n_jobs=self["run.jobs"])

    def tolerances(self) -> Tolerances:
        return Tolerances(**{k.split(".", 1)[1]: v for k, v in self.values.items()
                             if k.startswith("tolerances.")})


def read_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} does not exist") from exc
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    if "manifest_version" in data:
        data = data.get("config", {})
    return flatten(data)


def load_config(scenario: str, path=None, overrides=(), output_dir: str | None = None) -> RunConfig:
    """Resolve defaults, then the file, then ``key=value`` overrides."""
    cfg = RunConfig(scenario, output_dir=output_dir)
    if path is not None:
        data = read_config_file(path)
        data = {resolve_key(k): v for k, v in data.items()}
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise _unknown(unknown)
        for k, v in data.items():
            cfg.set(k, v, "file")
    for item in overrides:
        k, v = parse_override(item) if isinstance(item, str) else item
        cfg.set(k, v, "cli-override")
    cfg.params()
    return cfg
