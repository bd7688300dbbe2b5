"""Experiment configuration: strict schema validation, seed streams, hashing.

Configs are plain JSON dicts.  Validation is strict: unknown keys are
rejected with their dotted path, values are range-checked.  All
randomness flows from one root seed through counter-based Philox
streams; module-local streams are derived by stable labeled splits.
"""

from __future__ import annotations

import copy
import hashlib
import json
import zlib

import numpy as np

__all__ = [
    "ConfigError",
    "validate_config",
    "merge_config",
    "config_hash",
    "labeled_seed",
    "labeled_rng",
    "DEFAULT_CONFIG",
]


class ConfigError(ValueError):
    """Invalid experiment configuration; the message carries the key path."""


_LEAF = "__leaf__"  # marker key: cannot collide with config field names


def _num(lo=None, hi=None, integer=False):
    return {_LEAF: "num", "lo": lo, "hi": hi, "int": integer}


def _str(*allowed):
    return {_LEAF: "str", "allowed": allowed or None}


def _boolean():
    return {_LEAF: "bool"}


def _lst():
    return {_LEAF: "list"}


# schema tree: dict -> nested; leaf -> type spec
_SCHEMA = {
    "flux": {
        "name": _str(
            "burgers_xindep", "burgers_modulated", "linear_advection",
            "diagonal_multipath",
        ),
        "params": {
            "scale": _num(), "base": _num(), "amp": _num(), "freq": _num(),
            "phase": _num(), "c0": _num(), "c1": _num(),
            "dims": _num(1, 3, integer=True), "corrupt_a": _num(),
        },
    },
    "driver": {
        "kind": _str("brownian", "tent", "linear", "file"),
        "seed": _num(0, 2**63 - 1, integer=True),
        "dyadic_level": _num(0, 14, integer=True),
        "alpha": _num(1 / 3, 1.0),
        "dims": _num(1, 3, integer=True),
        "T": _num(0.0),
        "height": _num(),
        "rate": _num(),
        "path": _str(),
    },
    "grid": {
        "nx": _num(4, 100000, integer=True),
        "nxi": _num(4, 100000, integer=True),
        "box": _lst(),
        "xi_range": _lst(),
        "xi_margin_factor": _num(0.0),
    },
    "time": {
        "T": _num(0.0),
        "cfl": _num(0.0, 0.9),
        "steps_per_segment": _num(1, 4096, integer=True),
    },
    "initial": {
        "kind": _str("zero", "cosine_bump", "box"),
        "center": _lst(),
        "width": _num(0.0),
        "height": _num(),
        "lo": _lst(),
        "hi": _lst(),
        "second_kind": _str("zero", "cosine_bump", "box"),
        "second_center": _lst(),
        "second_width": _num(0.0),
        "second_height": _num(),
    },
    "mollifier": {"epsilon": _num(0.0)},
    "contraction": {"slack_factor": _num(0.0)},
    "bounds": {
        "levels": _lst(),
        "mhat_slope_tol": _num(),
        "entropy_slack": _num(0.0),
        "residual_gate": _num(0.0),
    },
    "cancellation": {
        "heights": _lst(),
        "resolutions": _lst(),
        "postshock_height": _num(0.0),
        "preshock_margin": _num(0.0),
    },
    "convergence": {"levels": _lst(), "native_level": _num(0, 14, integer=True)},
    "appendixB": {
        "radii": _lst(),
        "n_samples": _num(1, 4096, integer=True),
        "slope_margin": _num(0.0),
        "quad_dx": _num(0.0),
    },
    "flowstability": {
        "level_pairs": _lst(),
        "ratio_band": _num(1.0),
        "n_states": _num(1, 4096, integer=True),
    },
    "negative_controls": {
        "zero_ledger": _boolean(),
    },
    "output": {"dir": _str(), "formats": _lst()},
    "seed": _num(0, 2**63 - 1, integer=True),
    "threads": _num(1, 1024, integer=True),
}


def _check_leaf(spec, value, path):
    kind = spec[_LEAF]
    if kind == "num":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        if spec["int"] and int(value) != value:
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        if spec["lo"] is not None and value < spec["lo"]:
            raise ConfigError(f"{path}: {value} below minimum {spec['lo']}")
        if spec["hi"] is not None and value > spec["hi"]:
            raise ConfigError(f"{path}: {value} above maximum {spec['hi']}")
    elif kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        if spec["allowed"] and value not in spec["allowed"]:
            raise ConfigError(
                f"{path}: '{value}' not one of {sorted(spec['allowed'])}"
            )
    elif kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
    elif kind == "list":
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")


def validate_config(cfg: dict, schema=None, path="") -> None:
    """Strictly validate a config dict; unknown keys are errors."""
    if schema is None:
        schema = _SCHEMA
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object")
    for key, value in cfg.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown key '{where}'")
        spec = schema[key]
        if isinstance(spec, dict) and _LEAF not in spec:
            validate_config(value, spec, where)
        else:
            _check_leaf(spec, value, where)


def merge_config(base: dict, override: dict) -> dict:
    """Recursive merge, override wins.

    The result shares no mutable state with either input, so callers may
    edit it freely (the CLI's dotted overrides do).
    """
    out = {k: copy.deepcopy(v) for k, v in base.items()}
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge_config(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical JSON encoding."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def labeled_seed(root_seed: int, label: str) -> int:
    """Stable sub-seed for a named stream (crc32 of the label)."""
    return (int(root_seed) * 0x9E3779B1 + zlib.crc32(label.encode())) % 2**63


def labeled_rng(root_seed: int, label: str) -> np.random.Generator:
    """Counter-based generator for a named stream."""
    return np.random.Generator(
        np.random.Philox(key=np.array([root_seed % 2**64,
                                       zlib.crc32(label.encode())], dtype=np.uint64))
    )


DEFAULT_CONFIG = {
    "flux": {"name": "burgers_modulated", "params": {}},
    "driver": {"kind": "brownian", "seed": 42, "dyadic_level": 6,
               "alpha": 0.4, "dims": 1, "T": 1.0},
    "grid": {"nx": 400, "nxi": 80, "box": [-6.0, 6.0],
             "xi_range": [-1.6, 1.6], "xi_margin_factor": 1.5},
    "time": {"T": 1.0, "cfl": 0.8, "steps_per_segment": 16},
    "initial": {"kind": "cosine_bump", "center": [0.0], "width": 1.5,
                "height": 1.0},
    "mollifier": {"epsilon": 0.15},
    "seed": 42,
}
