"""Experiment configuration: defaults, YAML round-trip, and overrides.

A configuration is a nested mapping with one section per pipeline
stage.  The shipped stable-regime file configs/stable_wave.yaml carries
the wave parameters this package's verification scenarios run against;
`llelab defaults` prints the full default tree.
"""

from __future__ import annotations

import copy
import importlib.resources
from pathlib import Path

import yaml

from .exceptions import ConfigurationError

DEFAULTS = {
    "params": {"alpha": 1.0, "beta": -1.0, "f_pump": 1.05},
    "wave": {
        # k = 1/period; the shipped regime bifurcates at angular
        # wavenumber 1, i.e. period 2*pi
        "k": 0.15915494309189535,
        "n_profile": 64,
        "seed_amplitude": 0.3,
        "newton_tol": 1e-12,
        "newton_max_iters": 50,
    },
    "spectrum": {
        "n_modes": 48,
        "n_xi": 128,
        "delta_gap": 1e-3,
        "fit_window_fraction": 0.1,
        "low_cut_fraction": 0.2,
    },
    "evolve": {
        "periods": 32,
        "points_per_period": 64,
        "dt": 1e-2,
        "t_final": 100.0,
        "save_every": 100,
        "perturbation": {
            "kind": "localized",
            "amplitude": 5e-3,
            "width": 4.7,
            "direction": "translation",
            "h0_step": 0.15,
            "h0_width": 10.0,
            "seed": 7,
        },
    },
    "damping": {
        "periods": 32,
        "points_per_period": 64,
        "dt": 1e-2,
        "t_final": 200.0,
        "save_every": 20,
        "amplitude_factor": 1e-3,
        "width": 4.7,
        "j_max": 3,
        "theta_min": 1e-3,
        "theta_max": 4.0,
        "n_theta": 25,
        "c_cap": 1e4,
    },
    "decay": {
        "periods": 64,
        "points_per_period": 64,
        "dt": 1e-2,
        "t_final": 1000.0,
        "save_every": 100,
        "localized_amplitude": 5e-3,
        "localized_width": 4.7,
        "h0_step": 0.15,
        "h0_width": 10.0,
        "double_domain": True,
    },
    "analysis": {
        "phase_method": "bloch-projection",
        "xi_cut_fraction": 0.2,
        "phase_threshold": 0.5,
        "eta": 0.1,
        "t_fit_min": 10.0,
        "exponent_tol": 0.15,
        "family_halfwidth_factor": 1.5,
        "family_waves": 21,
    },
    "equivalence": {
        "n_samples": 1000,
        "grid_points": 256,
        "domain_length": 12.566370614359172,
        "max_sup_gx": 0.5,
        "hk_order": 2,
        "hk_samples": 500,
        "hk_max_gx_h3": 0.1,
    },
    "seed": 12345,
    "output_root": None,
    "jobs": 1,
}


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigurationError(f"unknown configuration key: {here}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"{here} must be a mapping")
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = value
    return out


def load_config(path=None, overrides: list[str] | None = None) -> dict:
    """Defaults, overlaid with a YAML file and then with key=value
    override strings (dotted paths, YAML-parsed values)."""
    cfg = default_config()
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path} does not hold a mapping")
        cfg = _merge(cfg, data)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not key=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.strip().split(".")
        value = yaml.safe_load(raw)
        node = cfg
        for key in keys[:-1]:
            if key not in node or not isinstance(node[key], dict):
                raise ConfigurationError(f"unknown configuration section: {dotted}")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigurationError(f"unknown configuration key: {dotted}")
        node[keys[-1]] = value
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    p = cfg["params"]
    if p["f_pump"] <= 0:
        raise ConfigurationError("params.f_pump must be positive")
    if p["beta"] == 0:
        raise ConfigurationError("params.beta must be nonzero")
    if cfg["wave"]["k"] <= 0:
        raise ConfigurationError("wave.k must be positive")
    for section in ("evolve", "damping", "decay"):
        s = cfg[section]
        if s["dt"] <= 0 or s["t_final"] <= 0:
            raise ConfigurationError(f"{section}: dt and t_final must be positive")
        if s["save_every"] < 1:
            raise ConfigurationError(f"{section}.save_every must be >= 1")
        if s["periods"] < 4:
            raise ConfigurationError(f"{section}.periods must be >= 4")
    kind = cfg["evolve"]["perturbation"]["kind"]
    if kind not in ("localized", "nonlocalized-phase", "random-localized"):
        raise ConfigurationError(f"unknown perturbation kind {kind!r}")
    method = cfg["analysis"]["phase_method"]
    if method not in ("bloch-projection", "windowed-xcorr"):
        raise ConfigurationError(f"unknown phase method {method!r}")


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False)


def save_config(cfg: dict, path) -> None:
    Path(path).write_text(dump_config(cfg))


def shipped_config_path() -> Path:
    """Path of the checked-in stable-regime configuration."""
    return Path(importlib.resources.files("llelab") / "configs" / "stable_wave.yaml")


def load_shipped_config() -> dict:
    return load_config(shipped_config_path())
