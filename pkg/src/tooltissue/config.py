"""Pipeline configuration: one flat JSON file of dotted keys plus overrides.

Example config::

    {
      "cluster.mode": "labeled",
      "gmm.N": "10..30",
      "synth.noise": 1.0
    }

Unknown keys are rejected so typos fail loudly. Command-line flags override
file values, which override the defaults below.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ConfigError, NotFound
from .frames import ClusterSpec
from .mixture import TrainConfig
from .synth import SceneConfig

_DEFAULTS = {
    "cluster.mode": "labeled",
    "cluster.k": 4,
    "cluster.seed": 0,
    "reg.epsilon": 1e-6,
    "gmm.N": "10..30",
    "gmm.max_iters": 500,
    "gmm.tol": 1e-6,
    "gmm.floor": 1e-6,
    "gmm.seed": 0,
    "gmm.restarts": 5,
    "split.train": None,
    "split.test": None,
    "synth.frames": 156,
    "synth.clusters": 4,
    "synth.points_per_cluster": 8,
    "synth.drift": 40.0,
    "synth.rotation": 0.3,
    "synth.noise": 1.0,
    "synth.tool_path": "cut_stroke",
    "synth.seed": 0,
    "io.tracks": None,
    "io.model": None,
    "io.out": None,
}

_INT_KEYS = {
    "cluster.k", "cluster.seed", "gmm.max_iters", "gmm.seed", "gmm.restarts",
    "split.train", "split.test", "synth.frames", "synth.clusters",
    "synth.points_per_cluster", "synth.seed",
}
_FLOAT_KEYS = {"reg.epsilon", "gmm.tol", "gmm.floor", "synth.drift",
               "synth.rotation", "synth.noise"}
_STR_KEYS = {"cluster.mode", "synth.tool_path", "io.tracks", "io.model", "io.out"}


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in _INT_KEYS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _STR_KEYS:
            return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} has invalid value {value!r}") from None
    return value  # gmm.N: int or "lo..hi" string, parsed on demand


def parse_component_spec(value):
    """Parse gmm.N: an integer, or "lo..hi" for BIC selection."""
    if isinstance(value, int):
        n = value
    elif isinstance(value, str):
        if ".." in value:
            lo_s, _, hi_s = value.partition("..")
            try:
                lo, hi = int(lo_s), int(hi_s)
            except ValueError:
                raise ConfigError(f"bad component range {value!r}") from None
            if not (1 <= lo <= hi):
                raise ConfigError(f"bad component range {value!r}")
            return (lo, hi)
        try:
            n = int(value)
        except ValueError:
            raise ConfigError(f"bad component count {value!r}") from None
    else:
        raise ConfigError(f"bad component specification {value!r}")
    if n < 1:
        raise ConfigError(f"component count must be >= 1, got {n}")
    return n


def parse_split_spec(value: str):
    """Parse "TRAIN/TEST" into an integer pair."""
    train_s, sep, test_s = str(value).partition("/")
    try:
        if not sep:
            raise ValueError(value)
        return int(train_s), int(test_s)
    except ValueError:
        raise ConfigError(f"split must look like TRAIN/TEST, got {value!r}") from None


class PipelineConfig:
    """Resolved configuration with typed accessors for each stage."""

    def __init__(self, values: dict | None = None):
        self._values = dict(_DEFAULTS)
        if values:
            self.update(values)

    def update(self, values: dict) -> None:
        unknown = set(values) - set(_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in values.items():
            self._values[key] = _coerce(key, value)

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "PipelineConfig":
        cfg = cls()
        if path is not None:
            p = Path(path)
            if not p.exists():
                raise NotFound(f"config file {p} does not exist")
            try:
                values = json.loads(p.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise ConfigError(f"config file is not valid JSON: {e}") from None
            if not isinstance(values, dict):
                raise ConfigError("config file must hold a JSON object")
            cfg.update(values)
        if overrides:
            cfg.update({k: v for k, v in overrides.items() if v is not None})
        return cfg

    def get(self, key: str):
        if key not in self._values:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def set_seed_everywhere(self, seed: int) -> None:
        """--seed flag: one seed drives clustering, training, and synthesis."""
        for key in ("cluster.seed", "gmm.seed", "synth.seed"):
            self._values[key] = int(seed)

    # typed builders -------------------------------------------------------

    def cluster_spec(self) -> ClusterSpec:
        return ClusterSpec(mode=self.get("cluster.mode"),
                           k=self.get("cluster.k"),
                           seed=self.get("cluster.seed"))

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            N=parse_component_spec(self.get("gmm.N")),
            max_iters=self.get("gmm.max_iters"),
            loglik_tol=self.get("gmm.tol"),
            floor=self.get("gmm.floor"),
            seed=self.get("gmm.seed"),
            restarts=self.get("gmm.restarts"),
        )

    def scene_config(self) -> SceneConfig:
        return SceneConfig(
            frame_count=self.get("synth.frames"),
            cluster_count=self.get("synth.clusters"),
            points_per_cluster=self.get("synth.points_per_cluster"),
            drift_amplitude=self.get("synth.drift"),
            rotation_amplitude=self.get("synth.rotation"),
            noise_sigma=self.get("synth.noise"),
            tool_path=self.get("synth.tool_path"),
            seed=self.get("synth.seed"),
        )

    def split_counts(self, flag_value: str | None):
        """Split sizes from the --split flag or the split.* config keys."""
        if flag_value is not None:
            return parse_split_spec(flag_value)
        train, test = self.get("split.train"), self.get("split.test")
        if train is None and test is None:
            return None
        if train is None or test is None:
            raise ConfigError("split.train and split.test must be set together")
        return int(train), int(test)

    def as_dict(self) -> dict:
        return dict(self._values)
