"""
Tests for the experiment configuration file, environment overrides and cell expansion.
"""
import logging

import pytest

from advdal.config import ConfigManager, load_experiment_configs
from advdal.errors import ConfigError


def _manager(temp_dir, text):
    path = temp_dir / "experiment.conf"
    path.write_text(text)
    return ConfigManager(path)


class TestConfigManager:
    def test_get_and_list(self, temp_dir):
        mgr = _manager(temp_dir, "# comment\n\ntrain.epochs = 4\ndataset.root = \"/data/mnist sets\"\n")
        assert mgr.get("train.epochs") == "4"
        assert mgr.get("dataset.root") == "/data/mnist sets"
        assert mgr.get("train.batch_size") is None
        assert mgr.get("train.batch_size", "16") == "16"
        assert mgr.list() == {"train.epochs": "4", "dataset.root": "/data/mnist sets"}

    def test_entries_remember_lines(self, temp_dir):
        mgr = _manager(temp_dir, "# header\ntrain.epochs = 4\n")
        entry = mgr.entry("train.epochs")
        assert (entry.value, entry.line, entry.source) == ("4", 2, "file")

    def test_environment_wins_over_file(self, temp_dir, monkeypatch):
        monkeypatch.setenv("ADVDAL_TRAIN_EPOCHS", "9")
        mgr = _manager(temp_dir, "train.epochs = 4\n")
        entry = mgr.entry("train.epochs")
        assert entry.value == "9"
        assert entry.source == "environment"

    def test_data_root_variable(self, temp_dir, monkeypatch):
        monkeypatch.setenv("ADVDAL_DATA_ROOT", "/srv/datasets")
        assert _manager(temp_dir, "").get("dataset.root") == "/srv/datasets"

    def test_no_file_means_defaults(self):
        mgr = ConfigManager()
        assert mgr.list() == {}
        configs = load_experiment_configs(mgr)
        assert [c.cell for c in configs] == ["random-none"]

    def test_missing_file(self, temp_dir):
        with pytest.raises(ConfigError):
            ConfigManager(temp_dir / "absent.conf").get("train.epochs")

    def test_unknown_key_reports_line(self, temp_dir):
        mgr = _manager(temp_dir, "dataset.kind = blobs\ntrain.epoch = 3\n")
        with pytest.raises(ConfigError) as exc_info:
            mgr.get("dataset.kind")
        assert (exc_info.value.line, exc_info.value.key) == (2, "train.epoch")
        assert "line 2: train.epoch" in str(exc_info.value)

    def test_line_without_equals(self, temp_dir):
        with pytest.raises(ConfigError) as exc_info:
            _manager(temp_dir, "dataset.kind blobs\n").get("dataset.kind")
        assert exc_info.value.line == 1


class TestLoadExperimentConfigs:
    """Flat keys to validated experiment cells."""

    def test_smoke_file(self, smoke_config):
        configs = load_experiment_configs(ConfigManager(smoke_config))
        assert [c.cell for c in configs] == ["random-none", "random-fv_adv", "fvaal-none", "fvaal-fv_adv"]
        config = configs[0]
        assert (config.n_init, config.n_query, config.n_sub, config.rounds, config.runs) == (6, 4, 20, 2, 2)
        assert config.dataset.kind == "blobs" and config.dataset.blobs_dim == 3
        assert config.hidden_dim == 6
        assert config.train.epochs == 3
        assert config.harvest.k == 2
        assert config.harvest.time_limit == 2.0 and config.harvest.node_limit == 200

    def test_n_init_defaults_to_n_query(self, temp_dir):
        configs = load_experiment_configs(_manager(temp_dir, "experiment.n_query = 7\n"))
        assert configs[0].n_init == 7

    def test_overrides_win(self, temp_dir, monkeypatch):
        monkeypatch.setenv("ADVDAL_EXPERIMENT_SEED", "5")
        mgr = _manager(temp_dir, "experiment.seed = 3\nexperiment.workers = 2\n")
        configs = load_experiment_configs(mgr, {"experiment.seed": 11, "experiment.workers": None})
        assert configs[0].seed == 11
        assert configs[0].workers == 2
        assert configs[0].train.seed == 11

    def test_environment_reaches_cells(self, temp_dir, monkeypatch):
        monkeypatch.setenv("ADVDAL_EXPERIMENT_STRATEGIES", "dfal,badge")
        configs = load_experiment_configs(_manager(temp_dir, "experiment.strategies = random\n"))
        assert [c.strategy for c in configs] == ["dfal", "badge"]

    def test_unparsable_value(self, temp_dir):
        with pytest.raises(ConfigError) as exc_info:
            load_experiment_configs(_manager(temp_dir, "train.epochs = ten\n"))
        assert (exc_info.value.line, exc_info.value.key) == (1, "train.epochs")

    @pytest.mark.parametrize("text, key, line", [
        ("experiment.n_init = 5\nexperiment.n_query = 0\n", "experiment.n_query", 2),
        ("experiment.n_sub = 5\nexperiment.n_query = 10\n", "experiment.n_sub", 1),
        ("model.hidden_dim = 0\n", "model.hidden_dim", 1),
        ("experiment.strategies = coreset\n", "experiment.strategies", 1),
        ("harvest.eps_max = 2\n", "harvest.eps_max", 1),
        ("harvest.exclusion_radius = 0.5\n", "harvest.exclusion_radius", 1),
        ("dataset.kind = imagenet\n", "dataset.kind", 1),
        ("attack.tolerance = 0.5\n", "attack.tolerance", 1),
    ])
    def test_validation_names_key(self, temp_dir, text, key, line):
        with pytest.raises(ConfigError) as exc_info:
            load_experiment_configs(_manager(temp_dir, text))
        assert exc_info.value.key == key
        assert exc_info.value.line == line

    def test_native_single_skips_other_strategies(self, temp_dir, caplog):
        mgr = _manager(temp_dir, "experiment.strategies = random, fvaal\nexperiment.augmentations = native_single\n")
        with caplog.at_level(logging.WARNING, logger="advdal.config"):
            configs = load_experiment_configs(mgr)
        assert [c.cell for c in configs] == ["fvaal-native_single"]
        assert "random-native_single" in caplog.text

    def test_no_valid_cells(self, temp_dir):
        mgr = _manager(temp_dir, "experiment.strategies = badge\nexperiment.augmentations = native_single\n")
        with pytest.raises(ConfigError):
            load_experiment_configs(mgr)

    def test_empty_strategy_list(self, temp_dir):
        with pytest.raises(ConfigError) as exc_info:
            load_experiment_configs(_manager(temp_dir, "experiment.strategies = ,\n"))
        assert exc_info.value.key == "experiment.strategies"

    def test_timings_flag(self, temp_dir):
        configs = load_experiment_configs(_manager(temp_dir, "report.timings = yes\n"))
        assert configs[0].record_timings is True
