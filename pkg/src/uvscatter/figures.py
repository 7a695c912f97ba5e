"""SVG figure types for uvscatter outputs.

Each figure turns computed data into a template context; the templates in
``uvscatter/templates`` draw it in ground coordinates (m).
"""
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from uvscatter.ellipse import EllipseFit
from uvscatter.field import Contour, FieldGrid, Region

WIDTH = 640
HEIGHT = 600
PLOT = {'x': 70.0, 'y': 40.0, 'w': 460.0, 'h': 460.0}
N_TICKS = 5

# log10 color ramp, low to high (viridis stops)
RAMP_STOPS: Tuple[Tuple[float, Tuple[int, int, int]], ...] = (
    (0.00, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.50, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.00, (253, 231, 37)),
)

LINE_COLORS = ('#1f77b4', '#ff7f0e', '#2ca02c', '#d62728', '#9467bd',
               '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22', '#17becf')


def ramp_colors(t: np.ndarray) -> List[str]:
    """Hex colors for ramp positions t in [0, 1]."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    offsets = [s[0] for s in RAMP_STOPS]
    channels = [np.interp(t, offsets, [s[1][k] for s in RAMP_STOPS]) for k in range(3)]
    return ['#{:02x}{:02x}{:02x}'.format(int(round(r)), int(round(g)), int(round(b)))
            for r, g, b in zip(*channels)]


@dataclass(frozen=True)
class _Frame:
    """Maps a ground extent onto the plot rectangle (y up)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def px(self, x) -> np.ndarray:
        return PLOT['x'] + (np.asarray(x, dtype=float) - self.x_min) / (self.x_max - self.x_min) * PLOT['w']

    def py(self, y) -> np.ndarray:
        return PLOT['y'] + (self.y_max - np.asarray(y, dtype=float)) / (self.y_max - self.y_min) * PLOT['h']

    def ticks(self) -> Dict[str, List[Dict[str, Any]]]:
        xs = np.linspace(self.x_min, self.x_max, N_TICKS)
        ys = np.linspace(self.y_min, self.y_max, N_TICKS)
        return {
            'x_ticks': [{'pos': round(float(self.px(v)), 2), 'label': f"{v:g}"} for v in xs],
            'y_ticks': [{'pos': round(float(self.py(v)), 2), 'label': f"{v:g}"} for v in ys],
        }


def _base_context(title: str, frame: _Frame) -> Dict[str, Any]:
    return {
        'title': title,
        'width': WIDTH,
        'height': HEIGHT,
        'plot': PLOT,
        'x_label': 'x (m)',
        'y_label': 'y (m)',
        **frame.ticks(),
    }


class Figure(ABC):
    """Base class for all figure types."""

    @abstractmethod
    def prepare_context(self, data):
        """Prepare the rendering context from computed data."""
        pass

    @abstractmethod
    def get_template_names(self):
        """Get the template names for this figure."""
        pass

    @staticmethod
    def format_level_for_filename(level: float) -> str:
        """Convert a gain level to a filename-friendly tag.
        Example: 1e-07 becomes 'L1e-07'
        """
        return 'L' + re.sub(r'[^\w.+-]', '', f"{level:.3g}")


class HeatmapFigure(Figure):
    """Field heatmap on a log10 color ramp with a min/max legend."""

    def __init__(self, title: str = 'Link gain'):
        self.title = title

    def get_template_names(self):
        return ['heatmap.svg']

    def prepare_context(self, data: FieldGrid):
        grid = data
        nx, ny = grid.x_axis.size, grid.y_axis.size
        dx = (grid.x_axis[-1] - grid.x_axis[0]) / (nx - 1)
        dy = (grid.y_axis[-1] - grid.y_axis[0]) / (ny - 1)
        frame = _Frame(grid.x_axis[0] - dx / 2, grid.x_axis[-1] + dx / 2,
                       grid.y_axis[0] - dy / 2, grid.y_axis[-1] + dy / 2)

        low, high = grid.value_range
        cells = []
        if math.isfinite(low):
            log_low, log_high = math.log10(low), math.log10(high)
            span = log_high - log_low or 1.0
            valid = np.isfinite(grid.gains) & (grid.gains > 0.0)
            rows, cols = np.nonzero(valid)
            with np.errstate(divide='ignore'):
                t = (np.log10(grid.gains[rows, cols]) - log_low) / span
            cell_w, cell_h = PLOT['w'] / nx, PLOT['h'] / ny
            for i, j, color in zip(rows.tolist(), cols.tolist(), ramp_colors(t)):
                cells.append({
                    'x': round(PLOT['x'] + j * cell_w, 2),
                    'y': round(PLOT['y'] + (ny - 1 - i) * cell_h, 2),
                    'w': round(cell_w + 0.05, 2),
                    'h': round(cell_h + 0.05, 2),
                    'fill': color,
                })
            legend = {
                'min_label': f"{low:.3g}",
                'max_label': f"{high:.3g}",
                'log_min': f"{log_low:.2f}",
                'log_max': f"{log_high:.2f}",
            }
        else:
            legend = {'min_label': 'n/a', 'max_label': 'n/a', 'log_min': 'n/a', 'log_max': 'n/a'}

        context = _base_context(self.title, frame)
        context.update({
            'cells': cells,
            'legend': legend,
            'ramp': [{'offset': f"{offset * 100:.0f}%", 'color': ramp_colors([offset])[0]}
                     for offset, _ in RAMP_STOPS],
            'masked': grid.masked_collocated + grid.masked_out_of_range,
        })
        return context


@dataclass
class ContourOverlay:
    """One contour with its optional ellipse fit."""

    label: str
    contour: Contour
    fit: Optional[EllipseFit] = None


class ContourFigure(Figure):
    """Contour polylines with their fitted ellipses."""

    def __init__(self, region: Region, title: str = 'Iso-gain contours'):
        self.region = region
        self.title = title

    def get_template_names(self):
        return ['contour.svg']

    @staticmethod
    def _points(frame: _Frame, line: np.ndarray) -> str:
        xs, ys = frame.px(line[:, 0]), frame.py(line[:, 1])
        return ' '.join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))

    def prepare_context(self, data: Sequence[ContourOverlay]):
        r = self.region
        frame = _Frame(r.x_min, r.x_max, r.y_min, r.y_max)
        scale_x = PLOT['w'] / (r.x_max - r.x_min)
        scale_y = PLOT['h'] / (r.y_max - r.y_min)

        series = []
        for k, overlay in enumerate(data):
            color = LINE_COLORS[k % len(LINE_COLORS)]
            lines = [{'points': self._points(frame, line), 'closed': closed}
                     for line, closed in zip(overlay.contour.lines, overlay.contour.closed)]
            ellipse = None
            if overlay.fit is not None:
                ellipse = {
                    'cx': round(float(frame.px(0.0)), 2),
                    'cy': round(float(frame.py(overlay.fit.y0)), 2),
                    'rx': round(overlay.fit.a * scale_x, 2),
                    'ry': round(overlay.fit.b * scale_y, 2),
                }
            series.append({'label': overlay.label, 'color': color, 'lines': lines, 'ellipse': ellipse})

        context = _base_context(self.title, frame)
        context.update({
            'series': series,
            'origin': {'x': round(float(frame.px(0.0)), 2), 'y': round(float(frame.py(0.0)), 2)},
        })
        return context
