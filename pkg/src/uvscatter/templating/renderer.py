"""Template rendering implementations."""

from abc import ABC, abstractmethod
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined, select_autoescape

DEFAULT_TEMPLATE_DIR = Path(__file__).resolve().parent.parent / 'templates'


# Renderer interface for templating systems
class ITemplateRenderer(ABC):
    """Interface for template renderers."""

    @abstractmethod
    def render(self, template_name, context):
        """Render a template with the given context."""
        pass


# Jinja2 implementation of the template renderer
class Jinja2Renderer(ITemplateRenderer):
    """Jinja2 implementation of the template renderer.

    SVG/XML templates are autoescaped; plain-text templates are not.
    """

    def __init__(self, template_dir=None):
        """Initialize with template directory (the packaged templates by default)."""
        self.env = Environment(
            autoescape=select_autoescape(enabled_extensions=('svg', 'xml', 'html'), default_for_string=True),
            loader=FileSystemLoader(str(template_dir or DEFAULT_TEMPLATE_DIR)),
            undefined=StrictUndefined,
            trim_blocks=True,
            lstrip_blocks=True,
        )

    def render(self, template_name, context):
        """Render a template with the given context."""
        template = self.env.get_template(template_name)
        return template.render(context)
