"""NLOS ultraviolet single-scatter channel engine."""

from .cli import CLI, main

__all__ = ["main", "CLI"]
