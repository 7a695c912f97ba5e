"""Tests for the templating.renderer module."""

import tempfile
from pathlib import Path

import pytest
from jinja2 import UndefinedError

from uvscatter.templating.renderer import DEFAULT_TEMPLATE_DIR, Jinja2Renderer


class TestJinja2Renderer:
    """Test cases for the Jinja2Renderer implementation."""

    template_dir: tempfile.TemporaryDirectory = None
    renderer: Jinja2Renderer = None

    def setup_method(self):
        """Set up test environment before each test method."""
        self.template_dir = tempfile.TemporaryDirectory()

        Path(self.template_dir.name, "label.svg").write_text("<text>{{ label }}</text>")
        Path(self.template_dir.name, "label.txt").write_text("label: {{ label }}")
        Path(self.template_dir.name, "base.svg").write_text(
            "<svg>{% block plot %}{% endblock %}</svg>")
        Path(self.template_dir.name, "child.svg").write_text(
            "{% extends 'base.svg' %}{% block plot %}<g>{{ n }}</g>{% endblock %}")

        self.renderer = Jinja2Renderer(self.template_dir.name)

    def teardown_method(self):
        """Clean up after each test method."""
        self.template_dir.cleanup()

    @staticmethod
    def test_init_with_default_template_dir():
        """The packaged templates are used by default."""
        renderer = Jinja2Renderer()
        assert renderer.env.loader.searchpath == [str(DEFAULT_TEMPLATE_DIR)]
        assert (DEFAULT_TEMPLATE_DIR / 'heatmap.svg').is_file()

    @staticmethod
    def test_init_with_custom_template_dir():
        custom_dir = 'custom/templates'
        renderer = Jinja2Renderer(custom_dir)
        assert renderer.env.loader.searchpath == [custom_dir]

    def test_svg_templates_are_escaped(self):
        result = self.renderer.render('label.svg', {'label': 'L < 1e-7 & rising'})
        assert result == "<text>L &lt; 1e-7 &amp; rising</text>"

    def test_text_templates_are_not_escaped(self):
        result = self.renderer.render('label.txt', {'label': 'L < 1e-7'})
        assert result == "label: L < 1e-7"

    def test_render_with_template_inheritance(self):
        assert self.renderer.render('child.svg', {'n': 3}) == "<svg><g>3</g></svg>"

    def test_missing_variable(self):
        with pytest.raises(UndefinedError):
            self.renderer.render('label.svg', {})

    def test_template_not_found(self):
        with pytest.raises(Exception):
            self.renderer.render('non_existent.svg', {})
