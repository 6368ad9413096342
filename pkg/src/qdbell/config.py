"""Run configuration for the command-line tool.

A configuration is a nested mapping (YAML or JSON) with the sections
``emitter``, ``drive``, ``scan``, ``franson``, ``chsh``, ``scattering``,
``fit`` and ``output``. Frequencies are ordinary frequencies in GHz (rate
divided by 2pi), detector jitter is in ps and powers in uW. Unknown keys are
rejected with their full path.

Every CSV written by the tool records the resolved configuration on a
``# config:`` header line; :func:`load_config` accepts such a CSV in place
of a configuration file.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .calibration import PowerCalibration, n_from_power
from .errors import ParameterError
from .params import EmitterParams

CONFIG_PREFIX = "# config: "


class ConfigError(ParameterError):
    """Invalid configuration; the message names the offending key."""


EMITTER_PRESETS = {
    "filtered": {"gamma_GHz": 2.3, "beta": 0.96, "gamma_d_GHz": 0.01, "sigma_sd_GHz": 0.16, "sigma_irf_ps": 100.0},
    "unfiltered": {"gamma_GHz": 2.3, "beta": 0.92, "gamma_d_GHz": 0.01, "sigma_sd_GHz": 0.39, "sigma_irf_ps": 100.0},
    "transmission": {"gamma_GHz": 2.3, "beta": 0.92, "gamma_d_GHz": 0.01, "sigma_sd_GHz": 0.39, "sigma_irf_ps": 0.0},
    "ideal": {"gamma_GHz": 2.3, "beta": 1.0, "gamma_d_GHz": 0.0, "sigma_sd_GHz": 0.0, "sigma_irf_ps": 0.0},
}

# Section -> key -> default. ``None`` means "not set".
SCHEMA = {
    "emitter": {
        "preset": None,
        "gamma_GHz": 2.3,
        "beta": 0.96,
        "gamma_d_GHz": 0.01,
        "delta_GHz": 0.0,
        "sigma_sd_GHz": 0.16,
        "sigma_irf_ps": 100.0,
    },
    "drive": {"n": None, "power_uW": None, "eta": 0.0012, "nu_THz": 318.6702, "tau_qd_ns": 0.069},
    "scan": {
        "tau_ns": None,
        "n": None,
        "detuning_GHz": None,
        "omega_GHz": None,
        "phi_b": None,
        "t_ns": None,
        "t_prime_ns": None,
        "delta_a_GHz": None,
        "delta_b_GHz": None,
    },
    "franson": {"phi_a": 0.0, "phi_b": 0.0, "delay_ns": 3.6},
    "chsh": {"phi_a": 0.0, "phi_a_prime": math.pi / 2, "phi_b": math.pi / 4, "phi_b_prime": 7 * math.pi / 4},
    "scattering": {"laser_linewidth_kHz": 100.0, "coherence_time_ns": None},
    "fit": {"dataset": None, "g2_dataset": None, "preset": "transmission", "free": None, "max_evaluations": 2000},
    "output": {"path": None, "format": "csv", "figure": True},
}

GRID_KEYS = {"start", "stop", "num", "spacing"}


def grid_values(spec, key="grid"):
    """Expand a grid spec: a list of numbers or {start, stop, num, spacing}."""
    if isinstance(spec, dict):
        extra = set(spec) - GRID_KEYS
        if extra:
            raise ConfigError(f"{key}: unknown grid field(s) {sorted(extra)}")
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"{key}: grid needs start, stop and num (missing {exc})") from None
        spacing = spec.get("spacing", "linear")
        if num < 1:
            raise ConfigError(f"{key}: grid must have at least one point")
        if spacing == "linear":
            values = np.linspace(start, stop, num)
        elif spacing == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{key}: log grid needs positive bounds")
            values = np.geomspace(start, stop, num)
        else:
            raise ConfigError(f"{key}: spacing must be 'linear' or 'log', got {spacing!r}")
    elif isinstance(spec, (list, tuple)):
        values = np.asarray(spec, dtype=float)
    else:
        raise ConfigError(f"{key}: grid must be a list or a {{start, stop, num}} mapping")
    if values.size == 0:
        raise ConfigError(f"{key}: grid is empty")
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"{key}: grid values must be finite")
    return values


def parse_grid_override(text):
    """``NAME=START:STOP:NUM[:log]`` or ``NAME=v1,v2,...`` -> (name, spec)."""
    if "=" not in text:
        raise ConfigError(f"grid override {text!r} must look like NAME=START:STOP:NUM[:log]")
    name, rhs = text.split("=", 1)
    try:
        if ":" in rhs:
            parts = rhs.split(":")
            if len(parts) not in (3, 4):
                raise ValueError
            spec = {"start": float(parts[0]), "stop": float(parts[1]), "num": int(parts[2])}
            if len(parts) == 4:
                spec["spacing"] = parts[3]
        else:
            spec = [float(v) for v in rhs.split(",")]
    except ValueError:
        raise ConfigError(f"grid override {text!r} must look like NAME=START:STOP:NUM[:log]") from None
    return name.strip(), spec


@dataclass
class RunConfig:
    """Fully resolved configuration (every schema key present)."""

    data: dict

    @classmethod
    def from_dict(cls, raw):
        raw = raw or {}
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a mapping")
        data = copy.deepcopy(SCHEMA)
        for section, values in raw.items():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section {section!r}")
            if values is None:
                continue
            if not isinstance(values, dict):
                raise ConfigError(f"{section}: expected a mapping")
            for key, value in values.items():
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
            preset = values.get("preset") if section == "emitter" else None
            if preset is not None:
                if preset not in EMITTER_PRESETS:
                    raise ConfigError(f"emitter.preset: unknown preset {preset!r}")
                data["emitter"].update(EMITTER_PRESETS[preset])
            data[section].update(values)
        cfg = cls(data)
        cfg.validate()
        return cfg

    def validate(self):
        d = self.data["drive"]
        if (d["n"] is None) == (d["power_uW"] is None):
            raise ConfigError("drive: exactly one of drive.n and drive.power_uW must be given")
        for key in ("n", "power_uW"):
            if d[key] is not None and not (isinstance(d[key], (int, float)) and d[key] >= 0):
                raise ConfigError(f"drive.{key} must be a number >= 0")
        for key, spec in self.data["scan"].items():
            if spec is not None:
                grid_values(spec, f"scan.{key}")
        fmt = self.data["output"]["format"]
        if fmt not in ("csv", "json"):
            raise ConfigError(f"output.format must be 'csv' or 'json', got {fmt!r}")
        for key, value in self.data["emitter"].items():
            if key != "preset" and not isinstance(value, (int, float)):
                raise ConfigError(f"emitter.{key} must be a number")
        try:
            self.emitter_params()
            self.calibration()
        except ParameterError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"emitter/drive: {exc}") from None

    def __getitem__(self, section):
        return self.data[section]

    def set(self, dotted, value):
        section, _, key = dotted.partition(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {dotted}")
        if dotted == "emitter.preset" and value is not None:
            # a preset overwrites the emitter block; later overrides still apply
            if value not in EMITTER_PRESETS:
                raise ConfigError(f"emitter.preset: unknown preset {value!r}")
            self.data["emitter"].update(EMITTER_PRESETS[value])
        self.data[section][key] = value
        if section == "drive" and key in ("n", "power_uW") and value is not None:
            other = "power_uW" if key == "n" else "n"
            self.data["drive"][other] = None
        self.validate()

    def calibration(self):
        d = self.data["drive"]
        return PowerCalibration(float(d["eta"]), float(d["nu_THz"]), float(d["tau_qd_ns"]))

    def photon_number(self, power_uW=None):
        """n from drive.n, or from a power via the calibration."""
        e = self.data["emitter"]
        d = self.data["drive"]
        if power_uW is None and d["n"] is not None:
            return float(d["n"])
        P = d["power_uW"] if power_uW is None else power_uW
        gamma = 2 * math.pi * float(e["gamma_GHz"])
        return float(n_from_power(P, self.calibration(), float(e["beta"]), gamma))

    def emitter_params(self, n=None) -> EmitterParams:
        e = self.data["emitter"]
        return EmitterParams.from_ghz(
            float(e["gamma_GHz"]),
            float(e["beta"]),
            gamma_d_ghz=float(e["gamma_d_GHz"]),
            delta_ghz=float(e["delta_GHz"]),
            n=self.photon_number() if n is None else float(n),
            sigma_sd_ghz=float(e["sigma_sd_GHz"]),
            sigma_irf_ps=float(e["sigma_irf_ps"]),
        )

    def grid(self, name, default=None):
        """Expanded scan grid; a missing grid is filled in from ``default``."""
        spec = self.data["scan"][name]
        if spec is None:
            if default is None:
                raise ConfigError(f"scan.{name} is required for this command")
            self.data["scan"][name] = spec = default
        return grid_values(spec, f"scan.{name}")

    def to_json(self):
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))


def load_config(path) -> RunConfig:
    """Load YAML/JSON, or the ``# config:`` header of a previous CSV output."""
    text = Path(path).read_text()
    for line in text.splitlines():
        if line.startswith(CONFIG_PREFIX):
            return RunConfig.from_dict(json.loads(line[len(CONFIG_PREFIX):]))
        if line and not line.startswith("#"):
            break
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON ({exc})") from None
    return RunConfig.from_dict(raw)
