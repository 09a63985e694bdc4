"""Tests for run configuration and config-file loading."""

from pathlib import Path
from unittest.mock import patch

import pytest

from augnet.errors import ConfigurationError
from augnet.models.config import (
    Task,
    TrainConfig,
    Variant,
    build_config,
    default_log_level,
    default_out_dir,
    load_config,
    parse_config_file,
)


class TestTrainConfig:
    """Tests for the TrainConfig model."""

    def test_defaults(self):
        """Test the documented default values."""
        config = TrainConfig()
        assert (config.dim, config.k, config.topn) == (128, 2, 50)
        assert config.lr == 0.01
        assert (config.epochs, config.patience) == (100, 20)
        assert config.negatives_per_positive == 5
        assert config.batch_size == 1024
        assert config.variant is Variant.FULL

    def test_alpha_defaults_per_task(self):
        """Test that alpha falls back to 0.8 for lp and 0.2 for nc."""
        assert TrainConfig(task=Task.LINK_PREDICTION).effective_alpha == 0.8
        assert TrainConfig(task=Task.NODE_CLASSIFICATION).effective_alpha == 0.2
        assert TrainConfig(alpha=0.3).effective_alpha == 0.3

    def test_gcn_forces_alpha_one(self):
        """Test that the gcn variant ignores the configured alpha."""
        config = TrainConfig(variant=Variant.GCN, alpha=0.2)
        assert config.effective_alpha == 1.0
        assert not config.uses_attribute_positives

    def test_variant_flags(self):
        """Test scorer and positive-set switches for each variant."""
        assert TrainConfig(variant=Variant.FULL).uses_attribute_positives
        assert not TrainConfig(variant=Variant.NCOLL).uses_attribute_positives
        assert not TrainConfig(variant=Variant.INNER).uses_mlp
        assert TrainConfig(variant=Variant.NCOLL).uses_mlp

    @pytest.mark.parametrize(
        "field,value",
        [("alpha", 1.5), ("alpha", -0.1), ("dim", 0), ("k", 0), ("lr", 0.0), ("topn", 0)],
    )
    def test_rejects_invalid_values(self, field, value):
        """Test range validation of numeric fields."""
        with pytest.raises(ValueError):
            TrainConfig(**{field: value})

    def test_rejects_unknown_variant(self):
        """Test that variants outside the known set fail validation."""
        with pytest.raises(ValueError):
            TrainConfig(variant="deep")

    def test_fractions_must_sum_to_one(self):
        """Test split fraction validation."""
        with pytest.raises(ValueError):
            TrainConfig(train_frac=0.9, test_frac=0.1, val_frac=0.05)

    def test_classification_split_fractions(self):
        """Test that nc holds out validation edges only."""
        config = TrainConfig(task=Task.NODE_CLASSIFICATION)
        train, test, val = config.split_fractions()
        assert test == 0.0
        assert val == 0.05
        assert train == pytest.approx(0.95)


class TestConfigFile:
    """Tests for key=value config files and precedence."""

    def test_parse_with_comments(self, write_text):
        """Test comments and blank lines are skipped."""
        path = write_text("run.cfg", "# experiment\ndim = 16\n\nalpha=0.5  # trade-off\n")
        assert parse_config_file(path) == {"dim": "16", "alpha": "0.5"}

    def test_unknown_key_names_key_and_line(self, write_text):
        """Test unknown keys are rejected with their line number."""
        path = write_text("run.cfg", "dim=16\nwidth=3\n")
        with pytest.raises(ConfigurationError, match=r":2: unknown key 'width'"):
            parse_config_file(path)

    def test_duplicate_key(self, write_text):
        """Test duplicate keys are rejected."""
        path = write_text("run.cfg", "dim=16\ndim=32\n")
        with pytest.raises(ConfigurationError, match="duplicate"):
            parse_config_file(path)

    def test_missing_equals(self, write_text):
        """Test malformed lines are rejected."""
        path = write_text("run.cfg", "dim 16\n")
        with pytest.raises(ConfigurationError):
            parse_config_file(path)

    def test_missing_file(self, tmp_path):
        """Test a missing config file is a configuration error."""
        with pytest.raises(ConfigurationError, match="not found"):
            parse_config_file(tmp_path / "absent.cfg")

    def test_flags_override_file(self, write_text):
        """Test precedence defaults < file < flags."""
        path = write_text("run.cfg", "dim=16\nk=1\nvariant=inner\n")
        config = load_config(path, {"dim": 8, "k": None})
        assert config.dim == 8
        assert config.k == 1
        assert config.variant is Variant.INNER
        assert config.epochs == 100

    def test_none_clears_optional_field(self, write_text):
        """Test that 'none' disables top-N sparsification."""
        path = write_text("run.cfg", "topn=none\n")
        assert load_config(path).topn is None

    def test_invalid_value_becomes_configuration_error(self):
        """Test pydantic validation errors surface as ConfigurationError."""
        with pytest.raises(ConfigurationError):
            build_config({"alpha": "2.0"})

    def test_every_field_is_accepted(self, write_text):
        """Test that a file may set every TrainConfig field."""
        defaults = TrainConfig().model_dump(mode="json")
        lines = "".join(
            f"{key}={'none' if value is None else value}\n" for key, value in defaults.items()
        )
        path = write_text("full.cfg", lines)
        assert load_config(path) == TrainConfig()


class TestEnvironment:
    """Tests for environment-driven defaults."""

    def test_out_dir_from_environment(self):
        """Test AUGNET_OUT_DIR controls the default output directory."""
        with patch.dict("os.environ", {"AUGNET_OUT_DIR": "/tmp/augnet-runs"}):
            assert default_out_dir() == Path("/tmp/augnet-runs")

    def test_out_dir_default(self):
        """Test the fallback output directory."""
        with patch.dict("os.environ", {}, clear=True):
            assert default_out_dir() == Path("runs")

    def test_log_level(self):
        """Test AUGNET_LOG_LEVEL is upper-cased."""
        with patch.dict("os.environ", {"AUGNET_LOG_LEVEL": "debug"}):
            assert default_log_level() == "DEBUG"
