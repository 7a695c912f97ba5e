"""File operations service for uvscatter outputs."""
import json
import math
from pathlib import Path
from typing import Any


def _finite_or_none(value: Any) -> Any:
    """Replace NaN/inf floats (not valid JSON) with None, recursively."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite_or_none(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(item) for item in value]
    if isinstance(value, Path):
        return str(value)
    return value


class FileService:
    """Service for handling file operations."""

    @staticmethod
    def ensure_directory(directory_path):
        """Create directory (and parents) if it doesn't exist and return path."""
        path = Path(directory_path)
        path.mkdir(parents=True, exist_ok=True)
        return path

    @staticmethod
    def write_text(text: str, output_path) -> Path:
        path = Path(output_path)
        path.write_text(text, encoding='utf-8')
        return path

    @staticmethod
    def write_json(data: Any, output_path) -> Path:
        """Write data as indented JSON; non-finite floats become null.

        Args:
            data: JSON-compatible structure (Paths are written as strings)
            output_path: Destination file

        Returns:
            Path: The written file
        """
        path = Path(output_path)
        with path.open('w', encoding='utf-8') as f:
            json.dump(_finite_or_none(data), f, indent=2, sort_keys=True, allow_nan=False)
            f.write('\n')
        return path
