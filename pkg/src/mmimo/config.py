"""Experiment configuration: INI files with one [experiment] section for the
common keys and one section named after the experiment for its parameters.

Unknown sections, unknown keys, duplicate keys, and type mismatches are all
rejected with the offending key path in the message.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass
from typing import Any, Callable

from .errors import ConfigError

EXPERIMENTS = (
    "focusing-map",
    "svd-spread",
    "mrt-sumrate",
    "ee-se-tradeoff",
    "pilot-contamination",
    "rural-broadband",
)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> list[int]:
    values = [int(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise ValueError("list must not be empty")
    return values


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


@dataclass(frozen=True)
class Option:
    parse: Callable[[str], Any]
    default: Any
    paper_scale: Any = None  # replaces default under --paper-scale when set


# Per-experiment parameter schemas. Defaults are desk-scale; the paper_scale
# column holds the full-scale run parameters where they differ.
SCHEMAS: dict[str, dict[str, Option]] = {
    "svd-spread": {
        "m_list": Option(_parse_int_list, [4, 32, 128]),
        "k": Option(int, 4),
    },
    "mrt-sumrate": {
        "m_list": Option(_parse_int_list, [4, 8, 16, 32, 64, 128]),
        "k": Option(int, 4),
        "target_snr_db": Option(float, 10.0),
    },
    "focusing-map": {
        "m": Option(int, 64),
        "n_scatterers": Option(int, 400),
        "scheme": Option(str, "both"),
        "region_side_lambda": Option(float, 800.0),
        "bs_distance_lambda": Option(float, 1600.0),
        "antenna_spacing_lambda": Option(float, 4.0),
        "other_user_offset_lambda": Option(float, 40.0),
        "grid_extent_lambda": Option(float, 400.0),
        "grid_points": Option(int, 41),
    },
    "ee-se-tradeoff": {
        "rho_min_db": Option(float, -30.0),
        "rho_max_db": Option(float, 20.0),
        "rho_points": Option(int, 201),
        "coherence_symbols": Option(int, 196),
        "m_massive": Option(int, 100),
        "k_massive": Option(int, 40),
        "m_beamforming": Option(int, 100),
    },
    "pilot-contamination": {
        "m_list": Option(_parse_int_list, [16, 64, 256, 1024]),
        "m_limit": Option(int, 10_000),
        "beta_home": Option(float, 1.0),
        "betas_contaminating": Option(_parse_float_list, [1.0]),
        "rho_pilot": Option(float, 1.0),
        "tau": Option(int, 16),
    },
    "rural-broadband": {
        "m": Option(int, 6400),
        "n_terminals": Option(int, 1000),
        "total_power_w": Option(float, 120.0),
        "bandwidth_hz": Option(float, 20e6),
        "carrier_hz": Option(float, 1.9e9),
        "radius_km": Option(float, 6.0),
        "exclusion_km": Option(float, 0.035),
        "pilot_fraction": Option(float, 0.25),
        "coherence_s": Option(float, 0.164),
        "noise_figure_db": Option(float, 9.0),
        "terminal_gain_db": Option(float, 8.0),
        "base_gain_db": Option(float, 0.0),
        "shadow_sigma_db": Option(float, 8.0),
        "drop_fraction": Option(float, 0.05),
        "terminal_pilot_power_w": Option(float, 0.1),
        "allow_override": Option(_parse_bool, False),
    },
}

# (desk-scale default, paper-scale) trial counts per experiment.
TRIAL_DEFAULTS: dict[str, tuple[int, int]] = {
    "svd-spread": (2000, 10_000),
    "mrt-sumrate": (2000, 10_000),
    "focusing-map": (100, 10_000),
    "ee-se-tradeoff": (1, 1),
    "pilot-contamination": (200, 1000),
    "rural-broadband": (50, 500),
}

_COMMON_KEYS = ("experiment", "seed", "trials", "output_dir", "workers")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run description (every default made explicit)."""

    experiment: str
    seed: int
    trials: int
    output_dir: str
    workers: int
    params: dict[str, Any]
    paper_scale: bool = False
    channels_path: str | None = None

    def resolved(self) -> dict[str, Any]:
        # workers is deliberately absent: trial results are pure functions of
        # their sub-seed, so the worker count cannot change any output.
        out = {
            "experiment": self.experiment,
            "seed": self.seed,
            "trials": self.trials,
            "output_dir": self.output_dir,
            "paper_scale": self.paper_scale,
            "params": dict(sorted(self.params.items())),
        }
        if self.channels_path is not None:
            out["channels_path"] = self.channels_path
        return out

    def config_hash(self) -> str:
        canonical = json.dumps(self.resolved(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_config(
    path,
    *,
    seed: int | None = None,
    trials: int | None = None,
    output_dir: str | None = None,
    workers: int | None = None,
    paper_scale: bool = False,
    channels_path: str | None = None,
) -> ExperimentConfig:
    """Read and validate an experiment file; keyword arguments override it."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key '{exc.section}.{exc.option}'") from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section '{exc.section}'") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    if "experiment" not in parser:
        raise ConfigError("missing required section [experiment]")
    common = parser["experiment"]
    for key in common:
        if key not in _COMMON_KEYS:
            raise ConfigError(f"unknown key 'experiment.{key}'")
    if "experiment" not in common:
        raise ConfigError("missing required key 'experiment.experiment'")
    name = common["experiment"].strip()
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {', '.join(EXPERIMENTS)}")

    def common_int(key: str, fallback: int) -> int:
        if key not in common:
            return fallback
        try:
            return int(common[key])
        except ValueError as exc:
            raise ConfigError(f"key 'experiment.{key}': {exc}") from exc

    desk_trials, paper_trials = TRIAL_DEFAULTS[name]
    file_trials = common_int("trials", paper_trials if paper_scale else desk_trials)

    schema = SCHEMAS[name]
    params: dict[str, Any] = {}
    for key, option in schema.items():
        default = option.paper_scale if (paper_scale and option.paper_scale is not None) else option.default
        params[key] = default

    for section in parser.sections():
        if section == "experiment":
            continue
        if section != name:
            raise ConfigError(f"unknown section [{section}] for experiment {name!r}")
        for key, raw in parser[section].items():
            if key not in schema:
                raise ConfigError(f"unknown key '{section}.{key}'")
            try:
                params[key] = schema[key].parse(raw)
            except ValueError as exc:
                raise ConfigError(f"key '{section}.{key}': {exc}") from exc

    if channels_path is not None and name not in ("svd-spread", "mrt-sumrate"):
        raise ConfigError(f"measured channels are only supported for svd-spread and mrt-sumrate, not {name!r}")

    config = ExperimentConfig(
        experiment=name,
        seed=seed if seed is not None else common_int("seed", 0),
        trials=trials if trials is not None else file_trials,
        output_dir=output_dir if output_dir is not None else common.get("output_dir", "out"),
        workers=workers if workers is not None else common_int("workers", 1),
        paper_scale=paper_scale,
        params=params,
        channels_path=channels_path,
    )
    if config.trials < 1:
        raise ConfigError("trials must be >= 1")
    if config.workers < 1:
        raise ConfigError("workers must be >= 1")
    if config.seed < 0:
        raise ConfigError("seed must be >= 0")
    return config
