"""Flat key-value CLI configuration with strict key and type checking.

A config file is a JSON object whose keys override the built-in defaults;
command-line flags override both.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields


@dataclass
class CliConfig:
    # matching tolerances
    onset_tol: float = 0.05
    offset_tol: float = 0.05
    pitch_tol: float = 0.5
    velocity_tol: float = 0.1
    # windowing
    length: float = 20.0
    hop: float = 10.0
    # selection
    p: int | None = None
    method: str = "A"
    medoid: bool = False
    metric: str = "euclidean"
    pca_variance: float = 0.92
    centroid_excludes: str = "self"
    # alignment
    radius: int = 10
    frame_rate: float = 20.0
    align_feature: str = "onset-count"
    # training
    grid_lambda: list = None
    grid_alpha: list = None
    enet_tol: float = 1e-6
    max_iter: int = 10_000
    prune_threshold: float = 0.1
    # analysis
    confidence: float = 0.95
    resamples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.grid_lambda is None:
            self.grid_lambda = [0.001, 0.01, 0.1, 1.0]
        if self.grid_alpha is None:
            self.grid_alpha = [0.1, 0.5, 0.9]


_TYPES = {
    "onset_tol": float,
    "offset_tol": float,
    "pitch_tol": float,
    "velocity_tol": float,
    "length": float,
    "hop": float,
    "p": int,
    "method": str,
    "medoid": bool,
    "metric": str,
    "pca_variance": float,
    "centroid_excludes": str,
    "radius": int,
    "frame_rate": float,
    "align_feature": str,
    "grid_lambda": list,
    "grid_alpha": list,
    "enet_tol": float,
    "max_iter": int,
    "prune_threshold": float,
    "confidence": float,
    "resamples": int,
    "seed": int,
}


def _check_type(key: str, value, expected: type):
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"config key {key!r}: expected a number, got {value!r}")
        return float(value)
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"config key {key!r}: expected an integer, got {value!r}")
        return value
    if expected is bool:
        if not isinstance(value, bool):
            raise ValueError(f"config key {key!r}: expected a boolean, got {value!r}")
        return value
    if expected is list:
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ValueError(f"config key {key!r}: expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if not isinstance(value, str):
        raise ValueError(f"config key {key!r}: expected a string, got {value!r}")
    return value


def load_config(path=None) -> CliConfig:
    """Defaults merged with an optional JSON config file."""
    cfg = CliConfig()
    if path is None:
        return cfg
    with open(path) as fh:
        content = fh.read().strip()
    doc = json.loads(content) if content else {}
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    for key, value in doc.items():
        if key not in _TYPES:
            raise ValueError(f"{path}: unknown key {key!r}")
        setattr(cfg, key, _check_type(key, value, _TYPES[key]))
    return cfg


def config_as_dict(cfg: CliConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
