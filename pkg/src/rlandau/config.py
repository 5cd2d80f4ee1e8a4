"""Run configuration: one canonical TOML format with a strict schema.

Every tunable of the toolkit lives in a section.key namespace; unknown
sections or keys are rejected so sweeps stay archivable and diffable.
``load_config`` returns a plain nested dict with defaults filled in, and
``config_hash`` gives the stable digest recorded in run manifests.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid configuration file or values."""


def _positive(x):
    return x > 0


def _nonnegative(x):
    return x >= 0


# section -> key -> (types, default, validator, description)
SCHEMA = {
    "momentum": {
        "radius": ((int, float), 6.0, _positive, "momentum box half-width"),
        "points_per_axis": (int, 12, lambda n: n >= 8 and n % 2 == 0, "nodes per axis"),
    },
    "space": {
        "cells": (int, 8, lambda n: n >= 4, "spatial cells"),
        "length": ((int, float), 64.0, _positive, "periodic domain length"),
    },
    "collision": {
        "eta_reg": (
            (int, float, type(None)),
            None,
            lambda x: x is None or x > 0,
            "kernel regularization (default 1e-3 * grid spacing)",
        ),
        "table_cache_path": (
            (str, type(None)),
            None,
            lambda x: True,
            "optional binary cache for the kernel table",
        ),
    },
    "linearized": {
        "cg_tol": ((int, float), 1e-8, _positive, "CG tolerance for L^-1"),
        "cg_max_iter": (int, 2000, _positive, "CG iteration cap"),
        "ortho_tol": ((int, float), 1e-6, _positive, "null-overlap guard"),
    },
    "weights": {
        "N0": (int, 3, lambda n: n >= 3, "polynomial weight order"),
        "T_margin": ((int, float), 1.05, lambda x: x >= 1.0, "T = margin * max T0"),
    },
    "euler": {
        "amplitude": ((int, float), 1e-4, _nonnegative, "wave amplitude"),
        "base_temperature": ((int, float), 0.4, _positive, "rest temperature"),
        "cfl": ((int, float), 0.45, _positive, "CFL number"),
        "dt": ((int, float), 0.01, _positive, "fluid time step"),
        "t_final": ((int, float), 0.5, _positive, "fluid horizon"),
        "eps4": ((int, float), 0.02, _nonnegative, "4th-difference dissipation"),
    },
    "hilbert": {
        "k": (int, 2, lambda n: n >= 2, "expansion order"),
        "decay_exponent": ((int, float), 0.9, lambda x: 0 < x < 1, "Maxwellian decay power"),
        "fd_tau": ((int, float), 1e-3, _positive, "time-derivative step"),
    },
    "solver": {
        "dt": ((int, float), 0.05, _positive, "IMEX time step"),
        "t_final": ((int, float), 0.5, _positive, "sweep horizon"),
        "imex_order": (int, 1, lambda n: n in (1, 2), "splitting order"),
        "cg_tol": ((int, float), 1e-10, _positive, "implicit-stage tolerance"),
        "init": (str, "positivity", lambda s: s in ("positivity", "zero"), "initial data"),
        "tau": ((int, float), 0.5, lambda x: 0 < x < 1, "Maxwellian power of the initial data"),
        "margin": ((int, float), 2.0, lambda x: x >= 1, "positivity safety factor"),
    },
    "sweep": {
        "epsilons": (
            list,
            [0.1, 0.05, 0.025],
            lambda v: len(v) >= 3
            and all(isinstance(e, (int, float)) and 0 < e <= 1 for e in v)
            and all(b < a for a, b in zip(v, v[1:])),
            "strictly decreasing Knudsen numbers",
        ),
    },
    "run": {
        "seed": (int, 0, _nonnegative, "property-test sampling seed"),
        "output_dir": (str, "out", lambda s: len(s) > 0, "artifact directory"),
    },
}


def default_config() -> dict:
    return {
        sec: {key: spec[1] for key, spec in keys.items()}
        for sec, keys in SCHEMA.items()
    }


def validate_config(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a table")
    cfg = default_config()
    for sec, keys in raw.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown config section [{sec}]")
        if not isinstance(keys, dict):
            raise ConfigError(f"section [{sec}] must be a table")
        for key, value in keys.items():
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown config key {sec}.{key}")
            types, _, check, desc = SCHEMA[sec][key]
            if isinstance(value, bool) or not isinstance(value, types):
                raise ConfigError(f"{sec}.{key} has the wrong type ({desc})")
            if not check(value):
                raise ConfigError(f"{sec}.{key} = {value!r} is out of range ({desc})")
            cfg[sec][key] = value
    return cfg


def load_config(path: str | Path | None) -> dict:
    """Parse and validate a TOML config file; None gives pure defaults."""
    if path is None:
        return default_config()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    return validate_config(raw)


def config_hash(cfg: dict) -> str:
    """Stable digest of the fully-resolved configuration."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
