"""Off-line 2D library of canonical link gains L(0, r, alpha).

Any (x, y, alpha) query is reduced to the canonical geometry, interpolated in
the table, and scaled by sin(alpha)/sin(beta). Tables persist in the UVGT
binary format: little-endian magic, version, grid sizes, grids, values,
JSON metadata and a trailing CRC32.
"""
import json
import logging
import math
import struct
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import cached_property, partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from uvscatter.atmosphere import AtmosphereParams, PhaseFunctionParams
from uvscatter.errors import (
    ConfigError,
    DomainError,
    QuadratureError,
    TableCorruptionError,
    TableFormatError,
    TableRangeError,
)
from uvscatter.geometry import ReceiverPos, reduce_to_standard, standard_form_arrays
from uvscatter.quadrature import R_MIN, QuadratureOptions, link_gain_direct

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

MAGIC = b'UVGT'
FORMAT_VERSION = 1
_HEADER = struct.Struct('<4sIII')
_U32 = struct.Struct('<I')
_F64 = np.dtype('<f8')

# alpha nodes this close to pi have sin(alpha) ~ 0 and carry the NaN sentinel
_ALPHA_PI_EPS = 1e-12

INTERP_LOG = 'log'
INTERP_LINEAR = 'linear'


@dataclass(frozen=True, eq=False)
class TableGrid:
    """Range and elevation nodes of a gain table."""

    r_grid: np.ndarray
    alpha_grid: np.ndarray

    @staticmethod
    def _inclusive(start: float, stop: float, step: float) -> np.ndarray:
        if not step > 0.0 or stop < start:
            raise ConfigError(f"invalid grid range start={start}, stop={stop}, step={step}")
        count = int(round((stop - start) / step)) + 1
        return np.linspace(start, start + (count - 1) * step, count)

    @classmethod
    def from_ranges(cls, r_start: float, r_stop: float, r_step: float,
                    alpha_start: float, alpha_stop: float, alpha_step: float) -> 'TableGrid':
        """Build inclusive grids; alpha bounds are fractions of pi."""
        return cls(
            r_grid=cls._inclusive(r_start, r_stop, r_step),
            alpha_grid=math.pi * cls._inclusive(alpha_start, alpha_stop, alpha_step),
        )

    @classmethod
    def preset(cls, name: str) -> 'TableGrid':
        """Named grids: ``desk`` (201 x 100) or ``full`` (1001 x 200)."""
        if name == 'desk':
            return cls.from_ranges(1.0, 1001.0, 5.0, 0.01, 1.0, 0.01)
        if name == 'full':
            return cls.from_ranges(0.0, 1000.0, 1.0, 0.005, 1.0, 0.005)
        raise ConfigError(f"Unknown table preset '{name}' (expected 'desk' or 'full')")


def _check_grid(name: str, grid: np.ndarray) -> None:
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError(f"{name} must be a nonempty 1D grid")
    if not np.all(np.isfinite(grid)):
        raise DomainError(f"{name} must be finite")
    if np.any(np.diff(grid) <= 0.0):
        raise DomainError(f"{name} must be strictly ascending")


@dataclass(frozen=True, eq=False)
class GainTable:
    """Immutable grid of canonical link gains, values[i, j] = L(0, r_i, alpha_j)."""

    r_grid: np.ndarray
    alpha_grid: np.ndarray
    values: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        r_grid = np.array(self.r_grid, dtype=float)
        alpha_grid = np.array(self.alpha_grid, dtype=float)
        values = np.array(self.values, dtype=float)
        _check_grid('r_grid', r_grid)
        _check_grid('alpha_grid', alpha_grid)
        if r_grid[0] < 0.0:
            raise DomainError("r_grid must be >= 0")
        if alpha_grid[0] <= 0.0 or alpha_grid[-1] > math.pi + _ALPHA_PI_EPS:
            raise DomainError("alpha_grid must lie in (0, pi]")
        if values.shape != (r_grid.size, alpha_grid.size):
            raise DomainError(f"values shape {values.shape} does not match grids "
                              f"({r_grid.size}, {alpha_grid.size})")
        if np.any(values < 0.0):
            raise DomainError("gain values must be >= 0")
        for array in (r_grid, alpha_grid, values):
            array.setflags(write=False)
        object.__setattr__(self, 'r_grid', r_grid)
        object.__setattr__(self, 'alpha_grid', alpha_grid)
        object.__setattr__(self, 'values', values)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @cached_property
    def _usable(self) -> Tuple[slice, slice]:
        i0 = int(np.searchsorted(self.r_grid, R_MIN, side='left'))
        j1 = int(np.searchsorted(self.alpha_grid, math.pi - _ALPHA_PI_EPS, side='left'))
        if i0 >= self.r_grid.size or j1 == 0:
            raise DomainError("gain table has no usable nodes")
        return slice(i0, None), slice(0, j1)

    @property
    def r_usable(self) -> np.ndarray:
        return self.r_grid[self._usable[0]]

    @property
    def alpha_usable(self) -> np.ndarray:
        return self.alpha_grid[self._usable[1]]

    @property
    def values_usable(self) -> np.ndarray:
        rows, cols = self._usable
        return self.values[rows, cols]

    @cached_property
    def _interpolators(self) -> Optional[Tuple[RegularGridInterpolator, RegularGridInterpolator]]:
        r, a, v = self.r_usable, self.alpha_usable, self.values_usable
        if r.size < 2 or a.size < 2:
            return None
        with np.errstate(divide='ignore'):
            log_v = np.log10(v)
        grid = (r, a)
        return (
            RegularGridInterpolator(grid, log_v, method='linear', bounds_error=False, fill_value=np.nan),
            RegularGridInterpolator(grid, v, method='linear', bounds_error=False, fill_value=np.nan),
        )

    def covers(self, r: ArrayLike, beta: ArrayLike) -> np.ndarray:
        """Mask of queries inside the table's range."""
        r, beta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(beta, dtype=float))
        a = self.alpha_usable
        return ((r >= self.r_grid[0]) & (r <= self.r_grid[-1])
                & (beta >= a[0]) & (beta <= a[-1]))

    def check_range(self, r: np.ndarray, beta: np.ndarray, beam_index: Optional[int] = None) -> None:
        """Raise TableRangeError naming the first violated axis."""
        bad_r = ~((r >= self.r_grid[0]) & (r <= self.r_grid[-1]))
        if np.any(bad_r):
            value = float(np.asarray(r)[bad_r].flat[0])
            raise TableRangeError(
                f"r = {value:g} m outside table range [{self.r_grid[0]:g}, {self.r_grid[-1]:g}]",
                axis='r', beam_index=beam_index)
        a = self.alpha_usable
        bad_b = ~((beta >= a[0]) & (beta <= a[-1]))
        if np.any(bad_b):
            value = float(np.asarray(beta)[bad_b].flat[0])
            raise TableRangeError(
                f"beta = {value:.6g} rad outside table range [{a[0]:.6g}, {a[-1]:.6g}]",
                axis='beta', beam_index=beam_index)


def _node_lookup(grid: np.ndarray, query: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    index = np.clip(np.searchsorted(grid, query), 0, grid.size - 1)
    return index, grid[index] == query


def interpolate(table: GainTable, r: ArrayLike, beta: ArrayLike, mode: str = INTERP_LOG) -> ArrayLike:
    """Bilinear interpolation of the canonical gain at (r, beta).

    In ``log`` mode the interpolation runs over log10(L) and falls back to
    plain bilinear where a cell corner is zero; ``linear`` mode interpolates
    L directly. Grid nodes return the stored value exactly. Queries below the
    first positive range node are clamped to it.

    Raises:
        TableRangeError: if any query lies outside the table
    """
    if mode not in (INTERP_LOG, INTERP_LINEAR):
        raise ConfigError(f"Unknown interpolation mode '{mode}'")
    scalar = np.ndim(r) == 0 and np.ndim(beta) == 0
    r_arr, b_arr = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(beta, dtype=float))
    table.check_range(r_arr, b_arr)

    r_nodes, a_nodes, v_nodes = table.r_usable, table.alpha_usable, table.values_usable
    r_q = np.maximum(r_arr, r_nodes[0]).ravel()
    b_q = b_arr.ravel()
    ir, hit_r = _node_lookup(r_nodes, r_q)
    ia, hit_a = _node_lookup(a_nodes, b_q)
    at_node = hit_r & hit_a

    result = np.empty(r_q.shape, dtype=float)
    result[at_node] = v_nodes[ir[at_node], ia[at_node]]
    off_node = ~at_node
    if np.any(off_node):
        interpolators = table._interpolators
        if interpolators is None:
            raise TableRangeError("table has a single node along an axis; only node queries are possible",
                                  axis='r' if r_nodes.size < 2 else 'beta')
        log_interp, lin_interp = interpolators
        points = np.column_stack((r_q[off_node], b_q[off_node]))
        linear = lin_interp(points)
        if mode == INTERP_LOG:
            with np.errstate(invalid='ignore'):
                log_value = log_interp(points)
            finite = np.isfinite(log_value)
            result[off_node] = np.where(finite, 10.0 ** np.where(finite, log_value, 0.0), linear)
        else:
            result[off_node] = linear
    result = result.reshape(r_arr.shape)
    return float(result) if scalar else result


def gain_via_table(table: GainTable, pos: ReceiverPos, alpha: float, mode: str = INTERP_LOG) -> float:
    """Link gain at (x, y, alpha) from the canonical table.

    Raises:
        TransmitterCollocatedError, DegenerateAxisError: from the reduction
        TableRangeError: if (r, beta) lies outside the table
    """
    standard = reduce_to_standard(pos, alpha)
    return interpolate(table, standard.r, standard.beta, mode) * standard.scale


@dataclass
class GainFieldResult:
    """Vectorized table gains with the reasons some entries are NaN."""

    gains: np.ndarray
    collocated: np.ndarray
    out_of_range: np.ndarray


def gain_field(table: GainTable, x: ArrayLike, y: ArrayLike, alpha: ArrayLike,
               mode: str = INTERP_LOG) -> GainFieldResult:
    """Table gains for many geometries at once; masked entries are NaN."""
    r, beta, scale = standard_form_arrays(x, y, alpha)
    collocated = r < R_MIN
    out_of_range = ~collocated & ~(np.isfinite(beta) & table.covers(r, beta))
    valid = ~(collocated | out_of_range)
    gains = np.full(r.shape, np.nan)
    if np.any(valid):
        gains[valid] = interpolate(table, r[valid], beta[valid], mode) * scale[valid]
    return GainFieldResult(gains=gains, collocated=collocated, out_of_range=out_of_range)


@dataclass(frozen=True)
class FidelityCheck:
    """Interpolated table gains next to direct quadrature at the same (r, beta)."""

    r: np.ndarray
    beta: np.ndarray
    table_gain: np.ndarray
    direct_gain: np.ndarray

    @property
    def rel_error(self) -> np.ndarray:
        return np.abs(self.table_gain - self.direct_gain) / self.direct_gain

    def quantiles(self) -> Dict[str, float]:
        errors = self.rel_error
        return {
            'median': float(np.median(errors)),
            'p95': float(np.quantile(errors, 0.95)),
            'max': float(np.max(errors)),
        }


def sample_queries(table: GainTable, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform (r, beta) draws over the table's usable range."""
    if count < 1:
        raise ConfigError(f"query count must be >= 1, got {count}")
    r_nodes, a_nodes = table.r_usable, table.alpha_usable
    r = rng.uniform(r_nodes[0], r_nodes[-1], count)
    beta = rng.uniform(a_nodes[0], a_nodes[-1], count)
    return r, beta


def check_fidelity(table: GainTable, r: ArrayLike, beta: ArrayLike, atmos: AtmosphereParams,
                   pf: PhaseFunctionParams, opts: QuadratureOptions = QuadratureOptions(),
                   mode: str = INTERP_LOG) -> FidelityCheck:
    """Compare table interpolation with direct quadrature at canonical geometries.

    Args:
        table: Canonical gain table
        r: Query ranges (m), at least R_MIN
        beta: Query elevations (rad) inside the table
        atmos: Atmospheric coefficients the table was built with
        pf: Phase-function parameters the table was built with
        opts: Quadrature options of the reference integrals
        mode: Table interpolation mode

    Returns:
        FidelityCheck: both gains per query
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    aperture_area = float(table.meta.get('aperture_area', 1.0))
    table_gain = np.asarray(interpolate(table, r, beta, mode), dtype=float)
    direct_gain = np.array([
        link_gain_direct(ReceiverPos(0.0, float(ri)), float(bi), atmos, pf, aperture_area, opts).value
        for ri, bi in zip(r, beta)
    ])
    check = FidelityCheck(r=r, beta=beta, table_gain=table_gain, direct_gain=direct_gain)
    logger.info("Table fidelity over %d queries: median %.3g, p95 %.3g, max %.3g",
                r.size, *check.quantiles().values())
    return check


def _build_row(r: float, alpha_grid: np.ndarray, atmos: AtmosphereParams, pf: PhaseFunctionParams,
               aperture_area: float, opts: QuadratureOptions) -> List[float]:
    row = []
    for alpha in alpha_grid:
        if r < R_MIN or alpha >= math.pi - _ALPHA_PI_EPS:
            row.append(math.nan)
            continue
        try:
            result = link_gain_direct(ReceiverPos(0.0, float(r)), float(alpha), atmos, pf, aperture_area, opts)
        except QuadratureError as exc:
            raise exc.at(float(r), float(alpha)) from exc
        row.append(result.value)
    return row


def build_table(r_grid: np.ndarray, alpha_grid: np.ndarray, atmos: AtmosphereParams,
                pf: PhaseFunctionParams, aperture_area: float,
                opts: QuadratureOptions = QuadratureOptions(), workers: int = 1,
                extra_meta: Optional[Dict[str, Any]] = None) -> GainTable:
    """Integrate L(0, r_i, alpha_j) over the whole grid.

    Args:
        r_grid: Ascending ranges (m); entries below R_MIN store NaN
        alpha_grid: Ascending elevations in (0, pi]; alpha = pi stores NaN
        atmos: Atmospheric coefficients
        pf: Phase-function parameters
        aperture_area: Receiver aperture area (m^2)
        opts: Quadrature options
        workers: Worker processes; 1 builds in-process
        extra_meta: Additional build metadata (e.g. profile name)

    Returns:
        GainTable: the built table

    Raises:
        QuadratureError: tagged with the offending (r_i, alpha_j)
    """
    r_grid = np.asarray(r_grid, dtype=float)
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    _check_grid('r_grid', r_grid)
    _check_grid('alpha_grid', alpha_grid)
    if alpha_grid[0] <= 0.0 or alpha_grid[-1] > math.pi + _ALPHA_PI_EPS:
        raise DomainError("alpha_grid must lie in (0, pi]")
    atmos.require_scattering()

    logger.info("Building %d x %d gain table with %d worker(s)", r_grid.size, alpha_grid.size, workers)
    started = time.perf_counter()
    build_row = partial(_build_row, alpha_grid=alpha_grid, atmos=atmos, pf=pf,
                        aperture_area=aperture_area, opts=opts)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(build_row, r_grid.tolist(), chunksize=max(1, r_grid.size // (4 * workers))))
    else:
        rows = [build_row(r) for r in r_grid.tolist()]
    elapsed = time.perf_counter() - started
    logger.info("Gain table built in %.1f s", elapsed)

    meta = {
        'atmosphere': atmos.to_dict(),
        'phase_function': pf.to_dict(),
        'aperture_area': aperture_area,
        'quadrature': opts.to_dict(),
        'build': {
            'timestamp': datetime.now(timezone.utc).isoformat(timespec='seconds'),
            'format_version': FORMAT_VERSION,
            'seconds': round(elapsed, 3),
        },
    }
    if extra_meta:
        meta['build'].update(extra_meta)
    return GainTable(r_grid=r_grid, alpha_grid=alpha_grid, values=np.array(rows, dtype=float), meta=meta)


def _numeric_block(table: GainTable) -> bytes:
    return (table.r_grid.astype(_F64).tobytes()
            + table.alpha_grid.astype(_F64).tobytes()
            + table.values.astype(_F64).tobytes(order='C'))


def values_crc(table: GainTable) -> int:
    """CRC32 of the grids and values, independent of build metadata."""
    return zlib.crc32(_numeric_block(table))


def table_to_bytes(table: GainTable) -> bytes:
    """Serialize a table in the UVGT format."""
    n_r, n_alpha = table.shape
    meta = json.dumps(table.meta, sort_keys=True, separators=(',', ':'), allow_nan=True).encode('utf-8')
    body = (_HEADER.pack(MAGIC, FORMAT_VERSION, n_r, n_alpha)
            + _numeric_block(table)
            + _U32.pack(len(meta)) + meta)
    return body + _U32.pack(zlib.crc32(body))


def table_from_bytes(data: bytes) -> GainTable:
    """Parse a UVGT byte string.

    Raises:
        TableFormatError: on bad magic, version, or truncation (with byte offset)
        TableCorruptionError: on checksum mismatch
    """
    if len(data) < _HEADER.size:
        raise TableFormatError("truncated header", offset=len(data))
    magic, version, n_r, n_alpha = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise TableFormatError(f"bad magic {magic!r}", offset=0)
    if version != FORMAT_VERSION:
        raise TableFormatError(f"unsupported version {version}", offset=4)

    offset = _HEADER.size
    numeric_size = _F64.itemsize * (n_r + n_alpha + n_r * n_alpha)
    meta_len_offset = offset + numeric_size
    if len(data) < meta_len_offset + _U32.size:
        raise TableFormatError("truncated numeric block", offset=len(data))
    (meta_len,) = _U32.unpack_from(data, meta_len_offset)
    crc_offset = meta_len_offset + _U32.size + meta_len
    if len(data) < crc_offset + _U32.size:
        raise TableFormatError("truncated metadata or checksum", offset=len(data))
    if len(data) > crc_offset + _U32.size:
        raise TableFormatError("trailing bytes after checksum", offset=crc_offset + _U32.size)
    (stored_crc,) = _U32.unpack_from(data, crc_offset)
    actual_crc = zlib.crc32(data[:crc_offset])
    if stored_crc != actual_crc:
        raise TableCorruptionError(f"checksum mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}")

    r_grid = np.frombuffer(data, dtype=_F64, count=n_r, offset=offset)
    offset += _F64.itemsize * n_r
    alpha_grid = np.frombuffer(data, dtype=_F64, count=n_alpha, offset=offset)
    offset += _F64.itemsize * n_alpha
    values = np.frombuffer(data, dtype=_F64, count=n_r * n_alpha, offset=offset).reshape(n_r, n_alpha)
    meta_offset = meta_len_offset + _U32.size
    try:
        meta = json.loads(data[meta_offset:crc_offset].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TableFormatError(f"unreadable metadata: {exc}", offset=meta_offset) from exc
    return GainTable(r_grid=r_grid, alpha_grid=alpha_grid, values=values, meta=meta)


def save_table(table: GainTable, path: Union[str, Path]) -> None:
    """Write a table to disk in the UVGT format."""
    Path(path).write_bytes(table_to_bytes(table))


def load_table(path: Union[str, Path]) -> GainTable:
    """Read a UVGT file; no partial table is ever returned."""
    return table_from_bytes(Path(path).read_bytes())
