"""
Tests for run configuration loading, overrides and validation.
"""
import json

import pytest

from src.errors import ConfigError
from src.models import ModelConfig, RunConfig, TrainConfig, ValiditySpec, parse_override


class TestRunConfig:
    """Test merged configuration handling."""

    def test_defaults(self):
        """Test the defaults echo the published training setup."""
        config = RunConfig()
        assert config.train.lr == 0.001 and config.train.batch_size == 64
        assert config.train.max_epochs == 100 and config.train.early_stop_patience == 10
        assert config.eval.max_len == 512 and config.eval.theta == 0.01
        assert config.validity.chunk_s == 20.0 and config.validity.min_segment_s == 2.0
        assert config.model.pair_set == ["av", "aa", "vv"]

    def test_from_file_with_overrides(self, tmp_path):
        """Test a config file plus dotted overrides, the overrides winning."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train": {"lr": 0.01, "max_epochs": 5}}))
        config = RunConfig.from_file(str(path), {"train.lr": 0.002})
        assert config.train.lr == 0.002 and config.train.max_epochs == 5

    def test_unknown_key(self):
        """Test unknown keys are rejected."""
        with pytest.raises(ConfigError):
            RunConfig.from_file(None, {"train.learning_rate": 0.1})

    def test_unreadable_file(self, tmp_path):
        """Test a missing or malformed file is a configuration error."""
        with pytest.raises(ConfigError):
            RunConfig.from_file(str(tmp_path / "none.json"))
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        with pytest.raises(ConfigError):
            RunConfig.from_file(str(bad))

    def test_cross_section_checks(self):
        """Test synthetic and model widths must agree and sequences fit max_len."""
        with pytest.raises(ConfigError):
            RunConfig.from_file(None, {"model.d": 8})
        with pytest.raises(ConfigError):
            RunConfig.from_file(None, {"eval.max_len": 64})

    def test_split_ratios(self):
        """Test split ratios must sum to one."""
        with pytest.raises(ConfigError):
            RunConfig.from_file(None, {"synthetic.split_ratios": [0.5, 0.2, 0.2]})

    def test_seed_propagates(self):
        """Test one seed drives data, initialization and shuffling."""
        config = RunConfig().with_seed(7)
        assert (config.train.seed, config.synthetic.seed, config.model.init_seed) == (7, 7, 7)
        assert RunConfig.from_file(None, {"seed": 3}).model.init_seed == 3

    def test_dump_round_trip(self, tmp_path):
        """Test the resolved config written next to outputs loads back unchanged."""
        config = RunConfig().with_overrides({"model.pair_set": ["vv", "av"]})
        path = tmp_path / "resolved_config.json"
        config.dump(str(path))
        assert RunConfig.from_file(str(path)) == config

    def test_parse_override(self):
        """Test JSON values and plain strings."""
        assert parse_override("train.lr=0.01") == ("train.lr", 0.01)
        assert parse_override("model.pair_set=[\"vv\"]") == ("model.pair_set", ["vv"])
        assert parse_override("eval.mode=psi_s") == ("eval.mode", "psi_s")
        with pytest.raises(ConfigError):
            parse_override("train.lr")


class TestSectionValidation:
    """Test per-section invariants."""

    def test_model_config(self):
        """Test kernel parity, pair canonicalization and loss composition."""
        with pytest.raises(ValueError):
            ModelConfig(k=4)
        assert ModelConfig(pair_set=["vv", "av"]).pair_set == ["av", "vv"]
        with pytest.raises(ValueError):
            ModelConfig(loss_terms=["focal", "diou", "smooth_l1"])
        with pytest.raises(ValueError):
            ModelConfig(loss_terms=["diou", "rec_mae"])

    def test_ablations(self):
        """Test named ablations and an unknown one."""
        assert ModelConfig.ablation("pairs:vv").pair_set == ["vv"]
        assert ModelConfig.ablation("op:product").discrepancy_op == "product"
        with pytest.raises(ConfigError):
            ModelConfig.ablation("width:64")
        with pytest.raises(ConfigError):
            ModelConfig.ablation("pairs:xx")

    def test_train_and_validity(self):
        """Test patience ordering and chunk length."""
        with pytest.raises(ValueError):
            TrainConfig(plateau_patience=5, early_stop_patience=3)
        with pytest.raises(ValueError):
            ValiditySpec(chunk_s=2.0, min_segment_s=2.0)
        assert TrainConfig().criterion_keys() == [
            "ap@0.5", "ap@0.75", "ap@0.95", "ar@100", "ar@50", "ar@20", "ar@10",
        ]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
