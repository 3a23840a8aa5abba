"""Run configuration: TOML files, key validation and named presets.

Unknown keys are rejected. A config is a table of sections; which sections a
subcommand reads is listed in ``SECTIONS``.
"""

from __future__ import annotations

import copy
import math
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cluster import ClusterConfig


class ConfigError(ValueError):
    """Invalid or unknown configuration keys/values."""


_NUMBER = (int, float)

SCHEMA: dict[str, dict[str, Any]] = {
    "cluster": {
        "m_bins": int,
        "delays": list,
        "squeeze_a_db": _NUMBER,
        "squeeze_b_db": _NUMBER,
        "r_in": list,
        "phase_mask": list,
        "loss_eta": (int, float, list),
        "clock_tau_ns": _NUMBER,
    },
    "condition": {
        "strategy": str,
        "plan_file": str,
        "n_out": int,
        "angles": list,
        "window": dict,
        "sweep": dict,
    },
    "decompose": {
        "roundtrip_check": bool,
    },
    "expressibility": {
        "sizes": list,
        "strategies": list,
        "r_in": list,
        "t": list,
        "n_pairs": int,
        "n_rtest": int,
        "n_batches": int,
        "pairing": str,
        "p_test": dict,
        "delays": list,
        "phase_mask": list,
        "knight_bins_per_output": int,
    },
    "haar_run": {
        "strategy": str,
        "n_bins": int,
        "trim_edges": int,
        "calibration_samples": int,
    },
}

SUBKEYS = {
    ("condition", "window"): {"start": int, "length": int},
    ("condition", "sweep"): {"index": int, "values": list, "steps": int, "low": _NUMBER, "high": _NUMBER},
    ("expressibility", "p_test"): {"kind": str, "low": _NUMBER, "high": _NUMBER},
}

TOP_LEVEL = {"seed": int, "preset": str}

SECTIONS = {
    "build-cluster": ("cluster",),
    "condition": ("cluster", "condition"),
    "decompose": ("decompose",),
    "expressibility": ("expressibility",),
    "haar-run": ("cluster", "haar_run"),
}

CLUSTER_PHASE = [0.0, math.pi / 2]

PRESETS: dict[str, dict] = {
    # ideal simulation of the experimental geometry
    "paper-geometry": {
        "cluster": {"m_bins": 24, "delays": [1, 8], "squeeze_a_db": 2.3, "squeeze_b_db": 3.0,
                    "phase_mask": [CLUSTER_PHASE, CLUSTER_PHASE]},
    },
    "paper-400": {
        "seed": 400,
        "cluster": {"m_bins": 400, "delays": [1, 8], "squeeze_a_db": 2.3, "squeeze_b_db": 3.0,
                    "phase_mask": [CLUSTER_PHASE, CLUSTER_PHASE]},
        "haar_run": {"strategy": "linear", "n_bins": 60, "trim_edges": 0, "calibration_samples": 8},
    },
    "six-mode-sweep": {
        "seed": 6,
        "cluster": {"m_bins": 24, "delays": [1, 8], "squeeze_a_db": 2.3, "squeeze_b_db": 3.0,
                    "phase_mask": [CLUSTER_PHASE, CLUSTER_PHASE]},
        "condition": {
            "strategy": "linear",
            "window": {"start": 12, "length": 6},
            "angles": [math.pi / 4, -math.pi / 4, 0.0, math.pi / 3, -math.pi / 3, math.pi / 6],
            "sweep": {"index": 2, "steps": 5, "low": -math.pi / 2, "high": math.pi / 2},
        },
    },
    "twelve-mode-linear": {
        "seed": 12,
        "cluster": {"m_bins": 24, "delays": [1, 8], "squeeze_a_db": 2.3, "squeeze_b_db": 3.0,
                    "phase_mask": [CLUSTER_PHASE, CLUSTER_PHASE]},
        "condition": {"strategy": "linear", "window": {"start": 12, "length": 6}},
    },
    "expressibility-trends": {
        "seed": 2,
        "expressibility": {
            "sizes": [2, 6],
            "strategies": ["linear", "knight"],
            "r_in": [0.0, 0.5, 1.0],
            "t": [1, 2],
            "n_pairs": 10000,
            "n_rtest": 20,
            "n_batches": 20,
            "pairing": "independent",
            "p_test": {"kind": "uniform", "low": -0.5, "high": 0.5},
            "delays": [1],
            "knight_bins_per_output": 2,
        },
    },
}


def _type_ok(value, expected) -> bool:
    if isinstance(value, bool) and expected is not bool and not (isinstance(expected, tuple) and bool in expected):
        return False
    return isinstance(value, expected)


def validate(data: dict, sections: Optional[tuple] = None) -> dict:
    """Check keys and value types; raise :class:`ConfigError` naming every offender."""
    problems = []
    allowed = set(TOP_LEVEL) | set(sections if sections is not None else SCHEMA)
    for key, value in data.items():
        if key in TOP_LEVEL:
            if not _type_ok(value, TOP_LEVEL[key]):
                problems.append(f"{key}: expected {TOP_LEVEL[key].__name__}")
            continue
        if key not in allowed:
            problems.append(f"unknown key '{key}'")
            continue
        if not isinstance(value, dict):
            problems.append(f"{key}: expected a table")
            continue
        spec = SCHEMA[key]
        for sub, subval in value.items():
            if sub not in spec:
                problems.append(f"unknown key '{key}.{sub}'")
            elif not _type_ok(subval, spec[sub]):
                problems.append(f"{key}.{sub}: wrong type {type(subval).__name__}")
            elif (key, sub) in SUBKEYS:
                for k2, v2 in subval.items():
                    inner = SUBKEYS[(key, sub)]
                    if k2 not in inner:
                        problems.append(f"unknown key '{key}.{sub}.{k2}'")
                    elif not _type_ok(v2, inner[k2]):
                        problems.append(f"{key}.{sub}.{k2}: wrong type {type(v2).__name__}")
    if problems:
        raise ConfigError("; ".join(problems))
    return data


def load(path: Optional[str] = None, preset: Optional[str] = None, sections: Optional[tuple] = None) -> dict:
    """Merge a preset (if any) with a TOML file (if any) and validate the result."""
    data: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset '{preset}' (available: {', '.join(sorted(PRESETS))})")
        data = copy.deepcopy(PRESETS[preset])
        data["preset"] = preset
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError:
            raise
        try:
            loaded = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        validate(loaded, sections)
        for key, value in loaded.items():
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key].update(value)
            else:
                data[key] = value
    return validate(data, sections)


def cluster_from_config(section: dict) -> ClusterConfig:
    if "m_bins" not in section:
        raise ConfigError("cluster.m_bins is required")
    kwargs = dict(section)
    for key in ("delays", "r_in"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "phase_mask" in kwargs:
        kwargs["phase_mask"] = tuple(
            tuple(np.asarray(stage, dtype=float).ravel().tolist()) if np.ndim(stage) else float(stage)
            for stage in kwargs["phase_mask"]
        )
    if isinstance(kwargs.get("loss_eta"), list):
        kwargs["loss_eta"] = tuple(kwargs["loss_eta"])
    try:
        return ClusterConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cluster: {exc}") from None
