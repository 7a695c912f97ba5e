"""Template rendering module for uvscatter figures."""

from .renderer import ITemplateRenderer, Jinja2Renderer
