"""
Configuration management for advdal.

This module provides:
- A ``key=value`` experiment file parser with comments, quoted values and
  dot-notation keys; every entry remembers its line for diagnostics
- Environment variable overrides with the ``ADVDAL_*`` prefix
  (``train.epochs`` → ``ADVDAL_TRAIN_EPOCHS``); ``ADVDAL_DATA_ROOT`` sets
  ``dataset.root``
- Conversion of the flat keys into validated ``ExperimentConfig`` records,
  one per (strategy × augmentation) cell
"""
from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from .constants import (
    AUGMENT_NATIVE, AUGMENT_NONE,
    DEFAULT_BATCH_SIZE, DEFAULT_DEEPFOOL_MAX_ITER, DEFAULT_DEEPFOOL_OVERSHOOT, DEFAULT_DIVERSITY_CAP,
    DEFAULT_EPOCHS, DEFAULT_EPS_INCREMENT, DEFAULT_EPS_MAX, DEFAULT_EXCLUSION_RADIUS,
    DEFAULT_FGSM_EPS_HIGH, DEFAULT_FGSM_EPS_LOW, DEFAULT_FIXED_QUERY_EPS, DEFAULT_HARVEST_TIME_LIMIT,
    DEFAULT_HIDDEN_DIM, DEFAULT_LEARNING_RATE, DEFAULT_MARGIN_SLACK, DEFAULT_N_ADV, DEFAULT_N_QUERY,
    DEFAULT_N_SUB, DEFAULT_ROUNDS, DEFAULT_RUNS, DEFAULT_TOLERANCE,
    ENV_DATA_ROOT, ENV_PREFIX, NATIVE_STRATEGIES, STRATEGY_RANDOM,
)
from .errors import AdvdalError, ConfigError
from .lib.attacks import AttackParams
from .lib.datasets import DatasetSpec
from .lib.engine import ExperimentConfig
from .lib.network import TrainConfig
from .lib.verifier import HarvestParams

logger = logging.getLogger(__name__)


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _parse_list(value: str) -> List[str]:
    items = [item.strip() for item in value.split(",")]
    return [item for item in items if item]


# key -> (parser, default); a default of None means "derived" (see load_experiment_configs)
KEYS: Dict[str, Tuple[Callable[[str], Any], Any]] = {
    "dataset.kind": (str, "blobs"),
    "dataset.root": (str, "."),
    "dataset.train_size": (int, 0),
    "dataset.test_size": (int, 0),
    "dataset.train_images": (str, ""),
    "dataset.train_labels": (str, ""),
    "dataset.test_images": (str, ""),
    "dataset.test_labels": (str, ""),
    "dataset.blobs_n": (int, 400),
    "dataset.blobs_dim": (int, 4),
    "dataset.blobs_classes": (int, 3),
    "dataset.blobs_spread": (float, 0.05),
    "dataset.blobs_test_fraction": (float, 0.25),
    "experiment.strategies": (_parse_list, [STRATEGY_RANDOM]),
    "experiment.augmentations": (_parse_list, [AUGMENT_NONE]),
    "experiment.n_init": (int, None),
    "experiment.rounds": (int, DEFAULT_ROUNDS),
    "experiment.n_sub": (int, DEFAULT_N_SUB),
    "experiment.n_query": (int, DEFAULT_N_QUERY),
    "experiment.n_adv": (int, DEFAULT_N_ADV),
    "experiment.seed": (int, 0),
    "experiment.runs": (int, DEFAULT_RUNS),
    "experiment.workers": (int, 0),
    "experiment.fixed_query_eps": (float, DEFAULT_FIXED_QUERY_EPS),
    "experiment.margin_slack": (float, DEFAULT_MARGIN_SLACK),
    "experiment.fgsm_eps_low": (float, DEFAULT_FGSM_EPS_LOW),
    "experiment.fgsm_eps_high": (float, DEFAULT_FGSM_EPS_HIGH),
    "model.hidden_dim": (int, DEFAULT_HIDDEN_DIM),
    "train.epochs": (int, DEFAULT_EPOCHS),
    "train.batch_size": (int, DEFAULT_BATCH_SIZE),
    "train.learning_rate": (float, DEFAULT_LEARNING_RATE),
    "attack.tolerance": (float, DEFAULT_TOLERANCE),
    "attack.deepfool_max_iter": (int, DEFAULT_DEEPFOOL_MAX_ITER),
    "attack.deepfool_overshoot": (float, DEFAULT_DEEPFOOL_OVERSHOOT),
    "harvest.time_limit": (float, DEFAULT_HARVEST_TIME_LIMIT),
    "harvest.eps_increment": (float, DEFAULT_EPS_INCREMENT),
    "harvest.eps_max": (float, DEFAULT_EPS_MAX),
    "harvest.exclusion_radius": (float, DEFAULT_EXCLUSION_RADIUS),
    "harvest.node_limit": (int, 0),
    "report.timings": (_parse_bool, False),
    "report.diversity_cap": (int, DEFAULT_DIVERSITY_CAP),
}


EXPERIMENT_ALIASES = {
    "strategy": "experiment.strategies",
    "augmentation": "experiment.augmentations",
    "hidden_dim": "model.hidden_dim",
    "fgsm_eps_range": "experiment.fgsm_eps_low",
    "record_timings": "report.timings",
    "diversity_cap": "report.diversity_cap",
}


@dataclass(frozen=True)
class ConfigEntry:
    value: str
    line: Optional[int] = None
    source: str = "file"


class ConfigManager:
    """Read an experiment configuration file and its environment overrides.

    Parameters
    ----------
    config_path : Optional[Path]
        Configuration file. ``None`` means environment variables and
        defaults only.
    """

    def __init__(self, config_path: Optional[Path] = None) -> None:
        self.path = Path(config_path) if config_path is not None else None
        self._entries: Optional[Dict[str, ConfigEntry]] = None

    def _normalize_key(self, key: str) -> str:
        """Convert dot-notation keys to ADVDAL_* environment variable format."""
        if key.startswith(ENV_PREFIX):
            return key
        return f"{ENV_PREFIX}{key.replace('.', '_').upper()}"

    def _unquote_value(self, value: str) -> str:
        """Remove surrounding quotes from value and handle escape sequences."""
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in ("'", '"'):
            unquoted = value[1:-1]
            if value.startswith('"'):
                unquoted = unquoted.replace('\\n', '\n').replace('\\"', '"').replace('\\\\', '\\')
            return unquoted
        return value

    def _parse_config_file(self) -> Dict[str, ConfigEntry]:
        """Parse the configuration file into entries keyed by dot-notation name."""
        data: Dict[str, ConfigEntry] = {}
        if self.path is None:
            return data
        if not self.path.is_file():
            raise ConfigError(f"config file not found: {self.path}")
        try:
            content = self.path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read {self.path}: {e}") from e

        for line_num, line in enumerate(content.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"expected key=value, got {line!r}", line=line_num)
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError("empty key", line=line_num)
            if key not in KEYS:
                raise ConfigError("unknown key", line=line_num, key=key)
            data[key] = ConfigEntry(self._unquote_value(value), line_num)
        return data

    def _get_from_environment(self, key: str) -> Optional[str]:
        if key == "dataset.root" and ENV_DATA_ROOT in os.environ:
            return os.environ[ENV_DATA_ROOT]
        return os.environ.get(self._normalize_key(key))

    def entry(self, key: str) -> Optional[ConfigEntry]:
        """Entry for ``key`` with precedence: environment > config file."""
        if self._entries is None:
            self._entries = self._parse_config_file()
        env_value = self._get_from_environment(key)
        if env_value is not None:
            return ConfigEntry(env_value, None, "environment")
        return self._entries.get(key)

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        found = self.entry(key)
        return found.value if found is not None else default

    def list(self) -> Dict[str, str]:
        """All explicitly set keys (file and environment)."""
        result = {}
        for key in KEYS:
            value = self.get(key)
            if value is not None:
                result[key] = value
        return result


def _resolve(manager: ConfigManager, overrides: Mapping[str, Any]) -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for key, (parser, default) in KEYS.items():
        if key in overrides and overrides[key] is not None:
            raw, line = str(overrides[key]), None
        else:
            found = manager.entry(key)
            if found is None:
                values[key] = default
                continue
            raw, line = found.value, found.line
        try:
            values[key] = parser(raw)
        except ValueError as e:
            raise ConfigError(f"cannot parse {raw!r}: {e}", line=line, key=key) from e
    for key in overrides:
        if key not in KEYS:
            raise ConfigError("unknown override", key=key)
    return values


def _line_of(manager: ConfigManager, key: str) -> Optional[int]:
    found = manager.entry(key)
    return found.line if found is not None else None


def _build(
    manager: ConfigManager,
    section: str,
    factory: Callable[..., Any],
    aliases: Optional[Mapping[str, str]] = None,
    **kwargs: Any,
) -> Any:
    """Construct a config record, re-raising validation failures as ConfigError naming the key."""
    try:
        return factory(**kwargs)
    except AdvdalError as e:
        message = str(e).split(": ", 1)[-1]
        # the field named earliest in the message is the one at fault
        mentions = [(m.start(), name) for name in kwargs for m in [re.search(rf"\b{name}\b", message)] if m]
        if not mentions:
            key = section
        else:
            field_name = min(mentions)[1]
            key = (aliases or {}).get(field_name, f"{section}.{field_name}")
        raise ConfigError(message, line=_line_of(manager, key), key=key) from e


def load_experiment_configs(
    manager: ConfigManager,
    overrides: Optional[Mapping[str, Any]] = None,
) -> List[ExperimentConfig]:
    """Build one validated ExperimentConfig per (strategy × augmentation) cell.

    Parameters
    ----------
    manager : ConfigManager
        Source of file and environment values
    overrides : Mapping[str, Any], optional
        Values that win over both (command-line flags)

    Returns
    -------
    List[ExperimentConfig]
        Cells in configuration order; ``native_single`` is only paired with
        strategies that produce their own adversarial example, other pairings
        are skipped with a warning.
    """
    v = _resolve(manager, overrides or {})
    seed = v["experiment.seed"]

    dataset = _build(
        manager, "dataset", DatasetSpec,
        kind=v["dataset.kind"], root=v["dataset.root"],
        train_size=v["dataset.train_size"], test_size=v["dataset.test_size"],
        train_images=v["dataset.train_images"], train_labels=v["dataset.train_labels"],
        test_images=v["dataset.test_images"], test_labels=v["dataset.test_labels"],
        blobs_n=v["dataset.blobs_n"], blobs_dim=v["dataset.blobs_dim"],
        blobs_classes=v["dataset.blobs_classes"], blobs_spread=v["dataset.blobs_spread"],
        blobs_test_fraction=v["dataset.blobs_test_fraction"], seed=seed,
    )
    train = _build(
        manager, "train", TrainConfig,
        epochs=v["train.epochs"], batch_size=v["train.batch_size"],
        learning_rate=v["train.learning_rate"], seed=seed,
    )
    attack = _build(
        manager, "attack", AttackParams,
        tolerance=v["attack.tolerance"], deepfool_max_iter=v["attack.deepfool_max_iter"],
        deepfool_overshoot=v["attack.deepfool_overshoot"],
    )
    harvest = _build(
        manager, "harvest", HarvestParams, {"k": "experiment.n_adv"},
        k=max(1, v["experiment.n_adv"]), time_limit=v["harvest.time_limit"],
        eps_increment=v["harvest.eps_increment"], eps_max=v["harvest.eps_max"],
        exclusion_radius=v["harvest.exclusion_radius"], node_limit=v["harvest.node_limit"],
    )

    strategies = v["experiment.strategies"]
    augmentations = v["experiment.augmentations"]
    if not strategies:
        raise ConfigError("no strategies configured", line=_line_of(manager, "experiment.strategies"),
                          key="experiment.strategies")
    if not augmentations:
        raise ConfigError("no augmentations configured", line=_line_of(manager, "experiment.augmentations"),
                          key="experiment.augmentations")
    n_query = v["experiment.n_query"]
    n_init = v["experiment.n_init"] if v["experiment.n_init"] is not None else n_query

    cells = []
    for strategy in strategies:
        for augmentation in augmentations:
            if augmentation == AUGMENT_NATIVE and strategy not in NATIVE_STRATEGIES:
                logger.warning(f"skipping cell {strategy}-{augmentation}: {strategy} has no native adversarial")
                continue
            cells.append(_build(
                manager, "experiment", ExperimentConfig, EXPERIMENT_ALIASES,
                dataset=dataset, strategy=strategy, augmentation=augmentation,
                n_init=n_init, rounds=v["experiment.rounds"], n_sub=v["experiment.n_sub"],
                n_query=n_query, n_adv=v["experiment.n_adv"], hidden_dim=v["model.hidden_dim"],
                train=train, attack=attack, harvest=harvest,
                fgsm_eps_range=(v["experiment.fgsm_eps_low"], v["experiment.fgsm_eps_high"]),
                fixed_query_eps=v["experiment.fixed_query_eps"], margin_slack=v["experiment.margin_slack"],
                seed=seed, runs=v["experiment.runs"], workers=v["experiment.workers"],
                record_timings=v["report.timings"], diversity_cap=v["report.diversity_cap"],
            ))
    if not cells:
        raise ConfigError("no valid (strategy, augmentation) cells", key="experiment.augmentations")
    return cells
