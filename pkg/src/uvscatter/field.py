"""Ground-plane scattering intensity maps and iso-gain contours."""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from contourpy import LineType, contour_generator

from uvscatter.errors import ConfigError, DomainError, EmptyContourError, TableRangeError
from uvscatter.gaintable import INTERP_LOG, GainTable, gain_field
from uvscatter.geometry import ReceiverPos
from uvscatter.led import LedResult, SourceSpec, aperture_scale, led_gain

logger = logging.getLogger(__name__)

# contourpy/matplotlib path code closing a loop
CLOSEPOLY = 79


@dataclass(frozen=True)
class Region:
    """Rectangular ground area (m)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigError(f"region bounds must be ordered, got x=[{self.x_min}, {self.x_max}], "
                              f"y=[{self.y_min}, {self.y_max}]")

    def axes(self, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
        if resolution < 2:
            raise ConfigError(f"resolution must be >= 2, got {resolution}")
        return (np.linspace(self.x_min, self.x_max, resolution),
                np.linspace(self.y_min, self.y_max, resolution))


@dataclass
class FieldGrid:
    """Link gains sampled on a regular ground grid; gains[i, j] is at (x_j, y_i)."""

    x_axis: np.ndarray
    y_axis: np.ndarray
    gains: np.ndarray
    source: Optional[SourceSpec] = None
    std_errors: Optional[np.ndarray] = None
    table_meta: Dict[str, Any] = field(default_factory=dict)
    masked_collocated: int = 0
    masked_out_of_range: int = 0

    def __post_init__(self):
        if self.gains.shape != (self.y_axis.size, self.x_axis.size):
            raise DomainError(f"gains shape {self.gains.shape} does not match axes "
                              f"({self.y_axis.size}, {self.x_axis.size})")

    @property
    def value_range(self) -> Tuple[float, float]:
        positive = self.gains[np.isfinite(self.gains) & (self.gains > 0.0)]
        if positive.size == 0:
            return math.nan, math.nan
        return float(positive.min()), float(positive.max())


@dataclass
class Contour:
    """Iso-gain polylines in ground coordinates."""

    level: float
    lines: List[np.ndarray]
    closed: List[bool]

    @property
    def _main_index(self) -> int:
        return max(range(len(self.lines)), key=lambda k: len(self.lines[k]))

    @property
    def main_line(self) -> np.ndarray:
        """Longest polyline, without the repeated closing point."""
        index = self._main_index
        line = self.lines[index]
        if self.closed[index] and len(line) > 1 and np.array_equal(line[0], line[-1]):
            line = line[:-1]
        return line

    @property
    def main_closed(self) -> bool:
        return self.closed[self._main_index]

    @property
    def enclosed_area(self) -> float:
        """Shoelace area of the main line; NaN when it leaves the region."""
        if not self.main_closed:
            return math.nan
        x, y = self.main_line[:, 0], self.main_line[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _laser_field(x_axis: np.ndarray, y_axis: np.ndarray, src: SourceSpec, table: GainTable,
                 mode: str) -> Tuple[np.ndarray, int, int]:
    xx, yy = np.meshgrid(x_axis, y_axis)
    result = gain_field(table, xx, yy, src.alpha, mode)
    gains = result.gains * aperture_scale(src, table)
    return gains, int(result.collocated.sum()), int(result.out_of_range.sum())


def _led_row(i: int, y: float, x_axis: np.ndarray, src: SourceSpec, table: GainTable,
             mode: str) -> Tuple[List[float], List[float], int, int]:
    means, errors = [], []
    collocated = out_of_range = 0
    for j, x in enumerate(x_axis):
        try:
            result: LedResult = led_gain(ReceiverPos(float(x), y), src, table, mode,
                                         stream=i * x_axis.size + j)
        except TableRangeError as exc:
            logger.debug("Pixel (%g, %g) masked: %s", x, y, exc)
            means.append(math.nan)
            errors.append(math.nan)
            out_of_range += 1
            continue
        if result.collocated == result.n_beams:
            means.append(math.nan)
            errors.append(math.nan)
            collocated += 1
            continue
        means.append(result.mean)
        errors.append(result.std_error)
    return means, errors, collocated, out_of_range


def compute_field(region: Region, resolution: int, src: SourceSpec, table: GainTable,
                  mode: str = INTERP_LOG, workers: int = 1) -> FieldGrid:
    """Evaluate the link-gain map over a ground region.

    Args:
        region: Ground bounds (m)
        resolution: Samples per axis (>= 2)
        src: Source; laser sources take the vectorized table path
        table: Canonical gain table
        mode: Table interpolation mode
        workers: Worker processes for LED fields; 1 runs in-process

    Returns:
        FieldGrid: gains with NaN at pixels masked for r < r_min or out of table range
    """
    x_axis, y_axis = region.axes(resolution)
    logger.info("Computing %d x %d field, alpha=%.2f deg, phi_d=%.2f deg",
                resolution, resolution, math.degrees(src.alpha), math.degrees(src.phi_d))

    if src.is_laser:
        gains, collocated, out_of_range = _laser_field(x_axis, y_axis, src, table, mode)
        std_errors = np.where(np.isfinite(gains), 0.0, np.nan)
    else:
        row = partial(_led_row, x_axis=x_axis, src=src, table=table, mode=mode)
        rows = range(y_axis.size)
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(row, rows, y_axis.tolist()))
        else:
            results = [row(i, y) for i, y in zip(rows, y_axis.tolist())]
        gains = np.array([r[0] for r in results], dtype=float)
        std_errors = np.array([r[1] for r in results], dtype=float)
        collocated = sum(r[2] for r in results)
        out_of_range = sum(r[3] for r in results)

    if out_of_range:
        logger.warning("%d pixel(s) fall outside the gain table's reach and are masked", out_of_range)
    if collocated:
        logger.info("%d pixel(s) within r_min of the transmitter are masked", collocated)

    return FieldGrid(
        x_axis=x_axis,
        y_axis=y_axis,
        gains=gains,
        source=src,
        std_errors=std_errors,
        table_meta=dict(table.meta),
        masked_collocated=collocated,
        masked_out_of_range=out_of_range,
    )


def extract_contour(grid: FieldGrid, level: float) -> Contour:
    """Trace the iso-gain line at ``level`` with marching squares on log10(gain).

    Saddle cells are resolved by the cell-average value; masked pixels
    are skipped.

    Raises:
        EmptyContourError: if the level does not cross the field
    """
    if not level > 0.0:
        raise DomainError(f"contour level must be > 0, got {level!r}")
    low, high = grid.value_range
    if not (low < level < high):
        raise EmptyContourError(f"level {level:.3g} does not cross the field (range [{low:.3g}, {high:.3g}])")

    with np.errstate(divide='ignore', invalid='ignore'):
        log_gains = np.log10(grid.gains)
    z = np.ma.masked_invalid(log_gains)
    generator = contour_generator(x=grid.x_axis, y=grid.y_axis, z=z, name='serial',
                                  line_type=LineType.SeparateCode, corner_mask=True)
    points, codes = generator.lines(math.log10(level))
    if not points:
        raise EmptyContourError(f"level {level:.3g} does not cross the unmasked field")
    lines = [np.asarray(p, dtype=float) for p in points]
    closed = [bool(len(c) and c[-1] == CLOSEPOLY) for c in codes]
    logger.debug("Level %.3g: %d polyline(s), %d closed", level, len(lines), sum(closed))
    return Contour(level=level, lines=lines, closed=closed)


def save_field_csv(grid: FieldGrid, path: Union[str, Path]) -> None:
    """Write ``x,<x values>`` then one ``y_i,<gains>`` row per y; NaN as empty."""
    frame = pd.DataFrame(grid.gains, index=pd.Index(grid.y_axis, name='x'), columns=grid.x_axis)
    frame.to_csv(path, na_rep='', float_format='%.17g')


def load_field_csv(path: Union[str, Path]) -> FieldGrid:
    frame = pd.read_csv(path, index_col=0)
    return FieldGrid(
        x_axis=frame.columns.astype(float).to_numpy(),
        y_axis=frame.index.to_numpy(dtype=float),
        gains=frame.to_numpy(dtype=float),
    )


def save_contour_csv(contour: Contour, path: Union[str, Path]) -> None:
    """Write ``x,y`` rows with a blank line between polylines."""
    blocks = [pd.DataFrame(line, columns=['x', 'y']).to_csv(index=False, header=False, float_format='%.17g')
              for line in contour.lines]
    Path(path).write_text('x,y\n' + '\n'.join(blocks), encoding='utf-8')
