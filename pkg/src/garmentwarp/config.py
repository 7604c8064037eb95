"""Run configuration: ``key = value`` files merged with command-line flags."""

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .exceptions import ConfigError
from .pipeline import DEFAULT_Z_ORDER, PART_NAMES
from .pose import COCO18_NAMES, DEFAULT_MIN_CONF, DEFAULT_TORSO_SUBSET


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _names(text):
    if isinstance(text, (list, tuple)):
        return tuple(text)
    return tuple(s.strip() for s in str(text).split(",") if s.strip())


@dataclass
class WarpSettings:
    """Pipeline parameters accepted in config files."""

    steepness_a: float = 12.0
    inner_mode: str = "hard"
    outer_mode: str = "smooth"
    tie_rule: str = "up"
    sampling: str = "bilinear"
    z_order: tuple = DEFAULT_Z_ORDER
    capsule_scale: float = 1.5
    close_radius: int = 2
    torso_landmarks: tuple = DEFAULT_TORSO_SUBSET
    torso_midpoints: bool = False
    tps_lambda: float = 0.0
    min_conf: float = DEFAULT_MIN_CONF
    inpaint_fill: bool = False
    n_jobs: int = None

    _PARSERS = {
        "steepness_a": float,
        "inner_mode": str,
        "outer_mode": str,
        "tie_rule": str,
        "sampling": str,
        "z_order": _names,
        "capsule_scale": float,
        "close_radius": int,
        "torso_landmarks": _names,
        "torso_midpoints": _bool,
        "tps_lambda": float,
        "min_conf": float,
        "inpaint_fill": _bool,
        "n_jobs": int,
    }

    def update(self, values):
        for key, raw in values.items():
            if raw is None:
                continue
            key = key.replace("-", "_")
            if key not in self._PARSERS:
                raise ConfigError(f"unknown setting '{key}'")
            try:
                setattr(self, key, self._PARSERS[key](raw))
            except ValueError as exc:
                raise ConfigError(f"bad value for '{key}': {exc}") from exc
        self.validate()
        return self

    def validate(self):
        if self.steepness_a <= 0:
            raise ConfigError("steepness_a must be > 0")
        for key in ("inner_mode", "outer_mode"):
            if getattr(self, key) not in ("hard", "smooth"):
                raise ConfigError(f"{key} must be 'hard' or 'smooth'")
        if self.tie_rule not in ("up", "down"):
            raise ConfigError("tie_rule must be 'up' or 'down'")
        if self.sampling not in ("bilinear", "nearest"):
            raise ConfigError("sampling must be 'bilinear' or 'nearest'")
        bad = [p for p in self.z_order if p not in PART_NAMES]
        if bad:
            raise ConfigError(f"unknown parts in z_order: {bad}")
        bad = [n for n in self.torso_landmarks if n not in COCO18_NAMES]
        if bad:
            raise ConfigError(f"unknown torso landmarks: {bad}")
        if self.capsule_scale <= 0:
            raise ConfigError("capsule_scale must be > 0")
        if self.close_radius < 0:
            raise ConfigError("close_radius must be >= 0")
        if self.tps_lambda < 0:
            raise ConfigError("tps_lambda must be >= 0")
        if not 0.0 <= self.min_conf <= 1.0:
            raise ConfigError("min_conf must lie in [0, 1]")
        if self.n_jobs is not None and self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")

    def estimator_params(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def read_config_file(path):
    """Parse a ``key = value`` file (``#`` comments, no sections needed)."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string("[run]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return dict(parser["run"])


@dataclass
class RunConfig:
    model_image: Path
    model_keypoints: Path
    model_parse: Path
    person_image: Path
    person_keypoints: Path
    person_parse: Path
    out_dir: Path
    target_mask: Path = None
    debug: bool = False
    settings: WarpSettings = field(default_factory=WarpSettings)

    def check_paths(self):
        for name in ("model_image", "model_keypoints", "model_parse", "person_image", "person_keypoints", "person_parse"):
            p = getattr(self, name)
            if p is None or not Path(p).is_file():
                raise ConfigError(f"input '{name}' not found: {p}")
        if self.target_mask is not None and not Path(self.target_mask).is_file():
            raise ConfigError(f"target mask not found: {self.target_mask}")
