"""Numerical defaults from config/defaults.yaml layered over built-in values."""

import copy
import logging
import os

import yaml

logger = logging.getLogger(__name__)

DEFAULTS_CONFIG_PATH = os.path.abspath(
    os.path.join(os.path.dirname(__file__), "..", "config", "defaults.yaml")
)

BUILTIN_DEFAULTS = {
    "solver": {"theta": 1.0},
    "inverse": {
        "tol": 1e-8,
        "max_iter": 50,
        "norm_p": 2,
        "window_policy": "adaptive",
        "max_halvings": 6,
        "det_floor_rel": 1e-8,
        "divergence_patience": 3,
        "smoothing_width": 1,
    },
    "validation": {"compat_tol": 1e-6, "boundary_compat_tol": 1e-3},
    "synth": {"oversample": 2, "noise": 0.0, "seed": 0},
    "study": {"levels": 3, "kind": "both", "noise_levels": [1e-4, 1e-3, 1e-2], "seeds": 5},
}


def _merge(base: dict, override: dict) -> dict:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        elif key in base:
            base[key] = value
        else:
            logger.warning(f"ignoring unknown defaults key {key!r}")
    return base


def load_defaults(config_path=None) -> dict:
    """
    Load defaults from YAML.

    Expected structure mirrors BUILTIN_DEFAULTS, e.g.
      inverse:
        tol: 1.0e-8
        window_policy: adaptive
    Missing or malformed files fall back to the built-in values.
    """
    defaults = copy.deepcopy(BUILTIN_DEFAULTS)
    path = config_path or DEFAULTS_CONFIG_PATH
    if not os.path.exists(path):
        return defaults
    try:
        with open(path, "r", encoding="utf-8") as f:
            payload = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as exc:
        logger.warning(f"could not read defaults from {path}: {exc}")
        return defaults
    if not isinstance(payload, dict):
        return defaults
    return _merge(defaults, payload)
