#!/usr/bin/env python3
"""
Configuration Management Module

This module centralizes configuration loading and validation for the toolkit.

Values are resolved in this order, later sources winning:

1. defaults declared on the dataclasses below;
2. ``config/config.env`` in the project root, if it exists;
3. environment variables prefixed with ``SHAPEDEC_`` (e.g. ``SHAPEDEC_NK=30``);
4. an explicit config file (flat ``KEY = value`` text, YAML, or a JSON
   report/meta file whose ``config`` object is reused);
5. explicit overrides (CLI flags).
"""

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import yaml
from dotenv import dotenv_values

from src.exceptions import ConfigurationError

ENV_PREFIX = "SHAPEDEC_"

REGRESSION_METHODS = ("partition", "spline")
GUARD_MODES = ("strict", "residual_only")
UPDATE_MODES = ("simultaneous", "sequential")
DEFAULT_NBINS = 50
GRID_KINDS = ("uniform", "iid_uniform")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class WavePacketConfig:
    """Configuration for the wave packet transform and synchrosqueezing."""
    s_geom: float = 0.66
    rad: float = 1.0
    red: int = 8
    eps_sst: float = 1e-3
    freq_min: float = 1.0
    freq_max: float = 512.0
    workers: int = 1

    def __post_init__(self):
        if not 0.5 < self.s_geom < 1.0:
            raise ConfigurationError(f"s_geom must lie in (1/2, 1), got {self.s_geom}")
        if not 0.0 < self.rad <= 1.0:
            raise ConfigurationError(f"rad must lie in (0, 1], got {self.rad}")
        if self.red < 1:
            raise ConfigurationError(f"red must be >= 1, got {self.red}")
        if self.eps_sst <= 0:
            raise ConfigurationError(f"eps_sst must be positive, got {self.eps_sst}")
        if self.freq_min < 1.0:
            raise ConfigurationError(f"freq_min must be >= 1, got {self.freq_min}")
        if self.freq_max <= self.freq_min:
            raise ConfigurationError(
                f"freq_max ({self.freq_max}) must exceed freq_min ({self.freq_min})"
            )
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")

    @property
    def freq_range(self) -> Tuple[float, float]:
        """The scale range [a_min, a_max] covered by the transform."""
        return (self.freq_min, self.freq_max)


@dataclass
class RidgeConfig:
    """Configuration for ridge extraction, classification and profile estimation."""
    nbins: Optional[int] = None          # None: one bin per unit frequency up to freq_max
    max_ridges: int = 8
    penalty: Optional[float] = None      # None: 0.05 * nbins
    band_halfwidth: int = 3
    stop_ratio: float = 0.01
    max_jump: int = 8
    harmonic_tol: float = 0.05
    amp_smooth: Optional[int] = None     # None: one period of the fundamental

    def __post_init__(self):
        if self.nbins is not None and self.nbins < 2:
            raise ConfigurationError(f"TF nbins must be >= 2, got {self.nbins}")
        if self.max_ridges < 1:
            raise ConfigurationError(f"max_ridges must be >= 1, got {self.max_ridges}")
        if self.penalty is not None and self.penalty < 0:
            raise ConfigurationError(f"ridge penalty must be >= 0, got {self.penalty}")
        if self.band_halfwidth < 0:
            raise ConfigurationError(f"band_halfwidth must be >= 0, got {self.band_halfwidth}")
        if not 0.0 <= self.stop_ratio < 1.0:
            raise ConfigurationError(f"stop_ratio must lie in [0, 1), got {self.stop_ratio}")
        if self.max_jump < 0:
            raise ConfigurationError(f"max_jump must be >= 0, got {self.max_jump}")
        if not 0.0 < self.harmonic_tol < 0.5:
            raise ConfigurationError(f"harmonic_tol must lie in (0, 0.5), got {self.harmonic_tol}")
        if self.amp_smooth is not None and self.amp_smooth < 1:
            raise ConfigurationError(f"amp_smooth must be >= 1, got {self.amp_smooth}")


@dataclass
class RegressionConfig:
    """Configuration for the one-period shape regression."""
    method: str = "partition"
    nbins: Optional[int] = None          # None: max(50, sqrt(L)) capped at grid_size
    nk: int = 20
    krf: float = 1.01
    ord: int = 3
    grid_size: int = 1000
    wrap_margin: float = 0.05

    def __post_init__(self):
        if self.method not in REGRESSION_METHODS:
            raise ConfigurationError(
                f"Unknown regression method '{self.method}', expected one of {', '.join(REGRESSION_METHODS)}"
            )
        if self.nbins is not None and self.nbins < 2:
            raise ConfigurationError(f"nbins must be >= 2, got {self.nbins}")
        if self.nk < 2:
            raise ConfigurationError(f"nk must be >= 2, got {self.nk}")
        if self.krf < 1.0:
            raise ConfigurationError(f"krf must be >= 1, got {self.krf}")
        if self.ord not in (1, 2, 3):
            raise ConfigurationError(f"ord must be 1, 2 or 3, got {self.ord}")
        if self.grid_size < 4:
            raise ConfigurationError(f"grid_size must be >= 4, got {self.grid_size}")
        if not 0.0 <= self.wrap_margin < 0.5:
            raise ConfigurationError(f"wrap_margin must lie in [0, 0.5), got {self.wrap_margin}")

    def partition_bins(self, n_samples: int) -> int:
        """Bin count for partition regression over n_samples folded points."""
        if self.nbins is not None:
            return self.nbins
        return min(max(DEFAULT_NBINS, math.isqrt(max(n_samples, 0))), self.grid_size)

    @property
    def histogram_bins(self) -> int:
        """Bin count for fold histograms and well-differentiation counts."""
        return self.nbins if self.nbins is not None else DEFAULT_NBINS


@dataclass
class RdbrConfig:
    """Configuration for the recursive diffeomorphism-based regression loop."""
    max_iter: int = 200
    eps: float = 1e-6
    regression: RegressionConfig = field(default_factory=RegressionConfig)
    divergence_factor: float = 10.0
    guard: str = "strict"
    workers: int = 1
    update: str = "simultaneous"
    relaxation: float = 1.0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.eps <= 0:
            raise ConfigurationError(f"eps must be positive, got {self.eps}")
        if self.divergence_factor <= 1.0:
            raise ConfigurationError(
                f"divergence_factor must exceed 1, got {self.divergence_factor}"
            )
        if self.guard not in GUARD_MODES:
            raise ConfigurationError(
                f"Unknown guard '{self.guard}', expected one of {', '.join(GUARD_MODES)}"
            )
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.update not in UPDATE_MODES:
            raise ConfigurationError(
                f"Unknown update '{self.update}', expected one of {', '.join(UPDATE_MODES)}"
            )
        if not 0.0 < self.relaxation <= 1.0:
            raise ConfigurationError(f"relaxation must lie in (0, 1], got {self.relaxation}")


@dataclass
class LoggingConfig:
    """Configuration for logging."""
    log_level: str = "INFO"
    log_file: str = ""      # empty: console only
    mode: str = "development"  # 'development' or 'production'

    def __post_init__(self):
        self.log_level = self.log_level.upper()
        if self.log_level not in LOG_LEVELS:
            raise ConfigurationError(f"Unknown log level '{self.log_level}'")
        if self.mode not in ("development", "production"):
            raise ConfigurationError(f"Unknown logging mode '{self.mode}'")


@dataclass
class RunConfig:
    """Fully-resolved configuration of one toolkit run."""
    wavepacket: WavePacketConfig = field(default_factory=WavePacketConfig)
    ridge: RidgeConfig = field(default_factory=RidgeConfig)
    rdbr: RdbrConfig = field(default_factory=RdbrConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    preset: str = "ex1"
    L: int = 65536
    N: float = 100.0
    k: int = 2
    sigma2: float = 0.0
    snr: Optional[float] = None
    seed: int = 0
    grid: str = "uniform"
    M: float = 1.0
    base_dir: Path = field(default_factory=lambda: get_base_dir())

    def __post_init__(self):
        if self.L < 2:
            raise ConfigurationError(f"L must be >= 2, got {self.L}")
        if self.N <= 0:
            raise ConfigurationError(f"N must be positive, got {self.N}")
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if self.sigma2 < 0:
            raise ConfigurationError(f"sigma2 must be >= 0, got {self.sigma2}")
        if self.grid not in GRID_KINDS:
            raise ConfigurationError(
                f"Unknown grid kind '{self.grid}', expected one of {', '.join(GRID_KINDS)}"
            )
        if self.M < 1:
            raise ConfigurationError(f"M must be >= 1, got {self.M}")

    @property
    def regression(self) -> RegressionConfig:
        return self.rdbr.regression

    @property
    def logs_dir(self) -> Path:
        return self.base_dir / "logs"

    def to_dict(self) -> Dict[str, Any]:
        """
        Flatten the configuration into the KEY -> value echo embedded in reports.

        Returns:
            Dict[str, Any]: JSON-serializable flat mapping, loadable by load_config
        """
        echo = {}
        for key, (section, name, _) in CONFIG_KEYS.items():
            echo[key] = getattr(_section(self, section), name)
        return echo


# Flat key -> (section, attribute, parser)
def _optional(parser):
    def parse(value):
        if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none", "null")):
            return None
        return parser(value)
    return parse


def _as_int(value):
    if isinstance(value, float) and not value.is_integer():
        raise ValueError(f"{value} is not an integer")
    return int(float(value)) if isinstance(value, str) else int(value)


CONFIG_KEYS: Dict[str, Tuple[str, str, Any]] = {
    "S_GEOM": ("wavepacket", "s_geom", float),
    "RAD": ("wavepacket", "rad", float),
    "RED": ("wavepacket", "red", _as_int),
    "EPS_SST": ("wavepacket", "eps_sst", float),
    "FREQ_MIN": ("wavepacket", "freq_min", float),
    "FREQ_MAX": ("wavepacket", "freq_max", float),
    "TRANSFORM_WORKERS": ("wavepacket", "workers", _as_int),
    "TF_NBINS": ("ridge", "nbins", _optional(_as_int)),
    "MAX_RIDGES": ("ridge", "max_ridges", _as_int),
    "RIDGE_PENALTY": ("ridge", "penalty", _optional(float)),
    "BAND_HALFWIDTH": ("ridge", "band_halfwidth", _as_int),
    "RIDGE_STOP_RATIO": ("ridge", "stop_ratio", float),
    "MAX_JUMP": ("ridge", "max_jump", _as_int),
    "HARMONIC_TOL": ("ridge", "harmonic_tol", float),
    "AMP_SMOOTH": ("ridge", "amp_smooth", _optional(_as_int)),
    "METHOD": ("regression", "method", str),
    "NBINS": ("regression", "nbins", _optional(_as_int)),
    "NK": ("regression", "nk", _as_int),
    "KRF": ("regression", "krf", float),
    "ORD": ("regression", "ord", _as_int),
    "GRID_SIZE": ("regression", "grid_size", _as_int),
    "WRAP_MARGIN": ("regression", "wrap_margin", float),
    "MAX_ITER": ("rdbr", "max_iter", _as_int),
    "EPS": ("rdbr", "eps", float),
    "DIVERGENCE_FACTOR": ("rdbr", "divergence_factor", float),
    "GUARD": ("rdbr", "guard", str),
    "RDBR_WORKERS": ("rdbr", "workers", _as_int),
    "UPDATE": ("rdbr", "update", str),
    "RELAXATION": ("rdbr", "relaxation", float),
    "LOG_LEVEL": ("logging", "log_level", str),
    "LOG_FILE": ("logging", "log_file", str),
    "LOG_MODE": ("logging", "mode", str),
    "PRESET": ("run", "preset", str),
    "L": ("run", "L", _as_int),
    "N": ("run", "N", float),
    "K": ("run", "k", _as_int),
    "SIGMA2": ("run", "sigma2", float),
    "SNR": ("run", "snr", _optional(float)),
    "SEED": ("run", "seed", _as_int),
    "GRID": ("run", "grid", str),
    "M": ("run", "M", float),
}


def _section(config: RunConfig, section: str):
    if section == "run":
        return config
    if section == "regression":
        return config.rdbr.regression
    return getattr(config, section)


def get_base_dir() -> Path:
    """Get the base directory of the project."""
    # Move two levels up from this file (utils/config.py -> src -> base)
    return Path(__file__).resolve().parent.parent.parent


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a configuration file into a flat KEY -> raw value mapping.

    Args:
        path (Union[str, Path]): Flat key-value text, .yaml/.yml or .json file

    Returns:
        Dict[str, Any]: Raw values keyed by upper-case name

    Raises:
        ConfigurationError: If the file is missing or unreadable
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}")

    suffix = path.suffix.lower()
    try:
        if suffix in (".yaml", ".yml"):
            with open(path, "r", encoding="utf-8") as f:
                raw = yaml.safe_load(f) or {}
        elif suffix == ".json":
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
            # Report and meta files carry the echo under "config"
            if isinstance(raw, dict) and isinstance(raw.get("config"), dict):
                raw = raw["config"]
        else:
            raw = dotenv_values(path)
    except (OSError, yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read config file {path}: {str(e)}") from e

    if not isinstance(raw, dict):
        raise ConfigurationError(f"Config file {path} must contain a key-value mapping")

    return {str(key).strip().upper(): value for key, value in raw.items()}


def _env_values() -> Dict[str, str]:
    values = {}
    for key in CONFIG_KEYS:
        env_value = os.getenv(ENV_PREFIX + key)
        if env_value is not None:
            values[key] = env_value
    return values


def load_config(
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    use_project_file: bool = True,
) -> RunConfig:
    """
    Resolve a RunConfig from defaults, files, environment and overrides.

    Args:
        config_file (Optional[Union[str, Path]]): Explicit config file
        overrides (Optional[Mapping[str, Any]]): Flag overrides; None values are ignored
        use_project_file (bool): Whether to read config/config.env of the project

    Returns:
        RunConfig: Validated configuration

    Raises:
        ConfigurationError: If a key is unknown or a value is invalid
    """
    base_dir = get_base_dir()
    values: Dict[str, Any] = {}

    project_file = base_dir / "config" / "config.env"
    if use_project_file and project_file.exists():
        values.update(read_config_file(project_file))

    values.update(_env_values())

    if config_file is not None:
        values.update(read_config_file(config_file))

    if overrides:
        values.update({str(k).upper(): v for k, v in overrides.items() if v is not None})

    unknown = sorted(set(values) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigurationError(f"Unknown configuration keys: {', '.join(unknown)}")

    sections: Dict[str, Dict[str, Any]] = {
        "wavepacket": {}, "ridge": {}, "regression": {}, "rdbr": {}, "logging": {}, "run": {}
    }
    for key, raw in values.items():
        section, name, parser = CONFIG_KEYS[key]
        try:
            sections[section][name] = parser(raw)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid value for {key}: {raw!r} ({str(e)})") from e

    regression = RegressionConfig(**sections["regression"])
    return RunConfig(
        wavepacket=WavePacketConfig(**sections["wavepacket"]),
        ridge=RidgeConfig(**sections["ridge"]),
        rdbr=RdbrConfig(regression=regression, **sections["rdbr"]),
        logging=LoggingConfig(**sections["logging"]),
        base_dir=base_dir,
        **sections["run"],
    )


# Global configuration instance
_config = None
_config_last_modified = 0.0


def get_config(force_reload: bool = False) -> RunConfig:
    """
    Get the project-level configuration (defaults, config/config.env, environment).

    Args:
        force_reload (bool): Force reload the configuration

    Returns:
        RunConfig: Cached configuration
    """
    global _config, _config_last_modified

    env_path = get_base_dir() / "config" / "config.env"

    # Check if the file has been modified
    try:
        current_mtime = os.path.getmtime(env_path)
        file_changed = current_mtime > _config_last_modified
    except OSError:
        current_mtime = 0.0
        file_changed = False

    if _config is None or force_reload or file_changed:
        _config = load_config()
        _config_last_modified = current_mtime

    return _config


def reload_config() -> RunConfig:
    """
    Force reload the project-level configuration.

    Returns:
        RunConfig: Reloaded configuration
    """
    return get_config(force_reload=True)
