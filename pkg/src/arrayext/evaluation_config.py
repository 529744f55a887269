"""Scenario configuration: defaults, INI-style config files, canonical hashing.

Desk-scale defaults keep a full experiment in the minutes range; the
paper-scale switch restores the published simulation sizes.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .music import DEFAULT_GRID_STEP, default_angle_grid
from .prediction import PredictionConfig
from .radar_model import ArrayConfig


class ConfigError(ValueError):
    """Malformed scenario configuration file."""


def parse_interval(text: str) -> tuple[float, float]:
    """Parse 'lo:hi' into an angle interval."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"expected 'lo:hi', got {text!r}")
    lo, hi = (float(p) for p in parts)
    if not lo < hi:
        raise ConfigError(f"interval bounds must satisfy lo < hi, got {text!r}")
    return lo, hi


def _parse_snr(text: str) -> float | None:
    text = text.strip().lower()
    return None if text == "noiseless" else float(text)


@dataclass(frozen=True)
class ScenarioConfig:
    """All knobs of one experiment, with desk-scale defaults."""

    low_config: ArrayConfig = ArrayConfig(10, 10)
    high_config: ArrayConfig = ArrayConfig(16, 16)
    grids: tuple = ((10.0, 35.0), (20.0, 45.0), (30.0, 55.0))
    n_train_samples: int = 10000
    pulses_per_scene: int = 10
    train_snr_db: float | None = 10.0
    l_atoms: int = 256
    train_lambda: float = 0.01
    odl_iters: int = 100
    batch_size: int = 256
    pred_lambda: float = 0.01
    max_refine_iters: int = 10
    convergence_tol: float = 1e-4
    angle_step: float = DEFAULT_GRID_STEP
    k_targets: int = 4
    test_grid: tuple[float, float] = (10.0, 35.0)
    test_snr_db: tuple = (-10.0, -8.0, -6.0, -4.0, -2.0, 0.0)
    n_snapshots_test: int = 100
    n_trials: int = 200
    seed: int = 1234

    def __post_init__(self):
        for name in ("n_train_samples", "pulses_per_scene", "l_atoms", "odl_iters",
                     "batch_size", "k_targets", "n_snapshots_test", "n_trials"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not self.grids:
            raise ConfigError("at least one training grid is required")

    def angle_grid(self) -> np.ndarray:
        return default_angle_grid(self.angle_step)

    def prediction_config(self) -> PredictionConfig:
        return PredictionConfig(
            lam=self.pred_lambda,
            max_refine_iters=self.max_refine_iters,
            convergence_tol=self.convergence_tol,
        )

    def with_paper_scale(self) -> "ScenarioConfig":
        """Published simulation sizes: P=45000, L=512, 300 iterations,
        10000 trials, 450 scenes of 100 pulses each."""
        return replace(
            self, n_train_samples=45000, pulses_per_scene=100,
            l_atoms=512, odl_iters=300, n_trials=10000,
        )

    def to_dict(self) -> dict:
        return {
            "arrays": {
                "low_n_tx": self.low_config.n_tx, "low_n_rx": self.low_config.n_rx,
                "high_n_tx": self.high_config.n_tx, "high_n_rx": self.high_config.n_rx,
                "spacing": self.low_config.spacing,
            },
            "training": {
                "grids": [list(g) for g in self.grids],
                "n_train_samples": self.n_train_samples,
                "pulses_per_scene": self.pulses_per_scene,
                "train_snr_db": self.train_snr_db,
                "l_atoms": self.l_atoms,
                "lambda": self.train_lambda,
                "odl_iters": self.odl_iters,
                "batch_size": self.batch_size,
            },
            "prediction": {
                "lambda": self.pred_lambda,
                "max_refine_iters": self.max_refine_iters,
                "convergence_tol": self.convergence_tol,
            },
            "music": {"angle_step": self.angle_step},
            "evaluation": {
                "k_targets": self.k_targets,
                "test_grid": list(self.test_grid),
                "test_snr_db": list(self.test_snr_db),
                "n_snapshots_test": self.n_snapshots_test,
                "n_trials": self.n_trials,
                "seed": self.seed,
            },
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


_KNOWN_KEYS = {
    "arrays": {"low_n_tx", "low_n_rx", "high_n_tx", "high_n_rx", "spacing"},
    "training": {"grids", "n_train_samples", "pulses_per_scene", "train_snr_db",
                 "l_atoms", "lambda", "odl_iters", "batch_size"},
    "prediction": {"lambda", "max_refine_iters", "convergence_tol"},
    "music": {"angle_step"},
    "evaluation": {"k_targets", "test_grid", "test_snr_db", "n_snapshots_test",
                   "n_trials", "seed"},
}


def load_config(path) -> ScenarioConfig:
    """Read a sectioned key=value file; every key has a default, unknown keys
    or sections are errors."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        unknown = set(parser[section]) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    base = ScenarioConfig()
    try:
        spacing = float(get("arrays", "spacing", base.low_config.spacing))
        low = ArrayConfig(
            int(get("arrays", "low_n_tx", base.low_config.n_tx)),
            int(get("arrays", "low_n_rx", base.low_config.n_rx)),
            spacing,
        )
        high = ArrayConfig(
            int(get("arrays", "high_n_tx", base.high_config.n_tx)),
            int(get("arrays", "high_n_rx", base.high_config.n_rx)),
            spacing,
        )
        grids_text = get("training", "grids")
        grids = (
            tuple(parse_interval(g) for g in grids_text.split(",") if g.strip())
            if grids_text else base.grids
        )
        snr_text = get("training", "train_snr_db")
        snr_list = get("evaluation", "test_snr_db")
        return ScenarioConfig(
            low_config=low,
            high_config=high,
            grids=grids,
            n_train_samples=int(get("training", "n_train_samples", base.n_train_samples)),
            pulses_per_scene=int(get("training", "pulses_per_scene", base.pulses_per_scene)),
            train_snr_db=_parse_snr(snr_text) if snr_text is not None else base.train_snr_db,
            l_atoms=int(get("training", "l_atoms", base.l_atoms)),
            train_lambda=float(get("training", "lambda", base.train_lambda)),
            odl_iters=int(get("training", "odl_iters", base.odl_iters)),
            batch_size=int(get("training", "batch_size", base.batch_size)),
            pred_lambda=float(get("prediction", "lambda", base.pred_lambda)),
            max_refine_iters=int(get("prediction", "max_refine_iters", base.max_refine_iters)),
            convergence_tol=float(get("prediction", "convergence_tol", base.convergence_tol)),
            angle_step=float(get("music", "angle_step", base.angle_step)),
            k_targets=int(get("evaluation", "k_targets", base.k_targets)),
            test_grid=(
                parse_interval(get("evaluation", "test_grid"))
                if get("evaluation", "test_grid") else base.test_grid
            ),
            test_snr_db=(
                tuple(float(s) for s in snr_list.split(",") if s.strip())
                if snr_list else base.test_snr_db
            ),
            n_snapshots_test=int(get("evaluation", "n_snapshots_test", base.n_snapshots_test)),
            n_trials=int(get("evaluation", "n_trials", base.n_trials)),
            seed=int(get("evaluation", "seed", base.seed)),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid value in config file {path}: {exc}") from exc
