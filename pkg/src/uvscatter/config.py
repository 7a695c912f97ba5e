"""TOML/JSON configuration loading for uvscatter."""
import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict

import tomli

from uvscatter.errors import ConfigError


def _is_file(path: Path) -> bool:
    try:
        return path.is_file()
    except OSError:
        # raw TOML text can exceed the file name limit
        return False


# Config loader interface
class IConfigLoader(ABC):
    """Interface for configuration loaders."""

    @abstractmethod
    def load(self, config_source) -> Dict[str, Any]:
        """Load configuration from a file path or text."""
        pass


class ConfigManager(IConfigLoader):
    """TOML configuration manager; ``.json`` files are parsed as JSON."""

    def load(self, config_source):
        """Load configuration from TOML/JSON text or file.

        Args:
            config_source: Path to a ``.toml``/``.json`` file, or TOML text

        Returns:
            dict: Loaded configuration

        Raises:
            FileNotFoundError: if a path with a config suffix does not exist
            ConfigError: if the document does not parse
        """
        source_path = Path(str(config_source))
        is_json = source_path.suffix == '.json'
        if _is_file(source_path):
            content = source_path.read_text(encoding='utf-8')
        elif source_path.suffix in ('.toml', '.json'):
            raise FileNotFoundError(str(config_source))
        else:
            content = str(config_source)

        try:
            return json.loads(content) if is_json else tomli.loads(content)
        except (tomli.TOMLDecodeError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot parse configuration {source_path.name or 'text'}: {e}") from e
