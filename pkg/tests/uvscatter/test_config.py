"""Tests for the TOML/JSON configuration manager."""
import json

import pytest

from uvscatter.config import ConfigManager
from uvscatter.errors import ConfigError


class TestConfigManager:
    """Test cases for the ConfigManager class."""

    @staticmethod
    def test_load_valid_toml(tmp_path):
        """Test loading a valid TOML file."""
        config_path = tmp_path / "run.toml"
        config_path.write_text('''
            seed = 7
            profile = "literature-default"

            [source]
            alpha_deg = 45.0
            phi_d_deg = 10.0
        ''')

        config = ConfigManager().load(str(config_path))

        assert config["seed"] == 7
        assert config["profile"] == "literature-default"
        assert config["source"] == {"alpha_deg": 45.0, "phi_d_deg": 10.0}

    @staticmethod
    def test_load_json(tmp_path):
        config_path = tmp_path / "run.json"
        config_path.write_text(json.dumps({"seed": 3, "contour": {"levels": [1e-7, 3e-8]}}))

        config = ConfigManager().load(config_path)

        assert config == {"seed": 3, "contour": {"levels": [1e-7, 3e-8]}}

    @staticmethod
    def test_load_toml_text():
        config = ConfigManager().load('workers = 4\n[field]\nresolution = 50')
        assert config == {"workers": 4, "field": {"resolution": 50}}

    @staticmethod
    @pytest.mark.parametrize('name', ["nonexistent_run.toml", "nonexistent_run.json"])
    def test_load_nonexistent_file(name):
        """Test loading a non-existent file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            ConfigManager().load(name)

    @staticmethod
    def test_load_invalid_toml(tmp_path):
        """Test loading an invalid TOML file raises ConfigError."""
        config_path = tmp_path / "broken.toml"
        config_path.write_text('[source\nalpha_deg = 30')
        with pytest.raises(ConfigError, match="broken.toml"):
            ConfigManager().load(config_path)

    @staticmethod
    def test_load_invalid_json(tmp_path):
        config_path = tmp_path / "broken.json"
        config_path.write_text('{"seed": }')
        with pytest.raises(ConfigError):
            ConfigManager().load(config_path)
