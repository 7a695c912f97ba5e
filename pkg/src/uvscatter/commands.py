"""Subcommands: table build and check, point gains, fields, contours and sweeps.

Each command resolves its run configuration through the scenario, writes
its outputs under the configured output directory and records the resolved
configuration next to them.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from uvscatter.ellipse import characteristics, fit_contour, to_json
from uvscatter.errors import (
    AxisOrientationError,
    ConfigError,
    DegenerateDataError,
    EmptyContourError,
    NonEllipticFitError,
)
from uvscatter.factory import Factory
from uvscatter.field import Contour, FieldGrid, compute_field, extract_contour, save_contour_csv, save_field_csv
from uvscatter.figures import ContourFigure, ContourOverlay, Figure, HeatmapFigure
from uvscatter.gaintable import (
    GainTable,
    build_table,
    check_fidelity,
    gain_via_table,
    load_table,
    sample_queries,
    save_table,
    values_crc,
)
from uvscatter.geometry import ReceiverPos
from uvscatter.led import SourceSpec, aperture_scale, led_gain
from uvscatter.quadrature import link_gain_direct
from uvscatter.scenario import RunConfig, Scenario

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = 'resolved_config.json'

# Fit failures that leave a sweep row empty instead of aborting the sweep
_SKIPPABLE = (EmptyContourError, NonEllipticFitError, AxisOrientationError, DegenerateDataError)


def check_table_matches(table: GainTable, config: RunConfig) -> None:
    """Refuse a table built for other coefficients than the run's.

    Raises:
        ConfigError: naming every differing atmosphere or phase-function field
    """
    differing = []
    for section, expected in (('atmosphere', config.atmosphere.to_dict()),
                              ('phase_function', config.phase_function.to_dict())):
        stored = table.meta.get(section)
        if stored is None:
            raise ConfigError(f"Gain table '{config.table_path}' does not record its {section}")
        for key, value in expected.items():
            built = stored.get(key)
            if built is None or not math.isclose(float(built), value, rel_tol=1e-12, abs_tol=0.0):
                differing.append(f"{section}.{key}: table {built!r}, run {value!r}")
    if differing:
        raise ConfigError(f"Gain table '{config.table_path}' was built for another medium "
                          f"({'; '.join(differing)}); rebuild it with build-table")


# Command interface; one implementation per subcommand
class ICommand(ABC):
    """Interface for CLI subcommands."""

    @abstractmethod
    def run(self, args: Dict[str, Any], scenario: Scenario) -> Dict[str, Any]:
        """Run the command.

        Args:
            args: Parsed command-line arguments
            scenario: Scenario with the resolved run configuration

        Returns:
            dict: Paths of written files and printed results
        """
        raise NotImplementedError("Subclasses must implement this method")


class Command(ICommand):
    """Base class for subcommands writing into the run's output directory."""

    def __init__(self, factory: Factory):
        """Initialize the command with the factory.

        Args:
            factory: Factory instance that provides access to all services
        """
        self.factory = factory
        self.renderer = factory.get_service('template_renderer')
        self.file_service = factory.get_service('file_service')
        self.command_name = "command"  # To be overridden by subclasses
        self.table_meta: Optional[Dict[str, Any]] = None

    def run(self, args: Dict[str, Any], scenario: Scenario) -> Dict[str, Any]:
        config = scenario.get_config()
        output_dir = self.file_service.ensure_directory(config.output_dir)
        resolved_path = self.file_service.write_json(config.to_dict(), output_dir / RESOLVED_CONFIG_NAME)
        logger.info("Running %s, outputs in %s", self.command_name, output_dir)

        result = self.execute(args, config, output_dir)
        if self.table_meta is not None:
            resolved = config.to_dict()
            resolved['table_meta'] = self.table_meta
            self.file_service.write_json(resolved, resolved_path)
        result.setdefault('files', []).append(resolved_path)
        self._print_confirmation(result)
        return result

    @abstractmethod
    def execute(self, args: Dict[str, Any], config: RunConfig, output_dir: Path) -> Dict[str, Any]:
        """Command-specific work; returns ``files`` and optional ``lines`` to print."""
        pass

    def load_table(self, config: RunConfig) -> GainTable:
        """Load the configured gain table or explain how to build it.

        Raises:
            FileNotFoundError: if the table file does not exist
            ConfigError: if the table was built for another atmosphere or phase function
        """
        if not config.table_path.is_file():
            raise FileNotFoundError(
                f"Gain table '{config.table_path}' not found; "
                f"build it first with 'uvscatter --table {config.table_path} build-table'"
            )
        table = load_table(config.table_path)
        check_table_matches(table, config)
        self.table_meta = table.meta
        logger.info("Loaded %d x %d gain table from %s", *table.shape, config.table_path)
        return table

    def render_figure(self, figure: Figure, data: Any, output_path: Path) -> Path:
        """Render a figure's template(s) and save the SVG."""
        context = figure.prepare_context(data)
        svg = ''.join(self.renderer.render(name, context) for name in figure.get_template_names())
        return self.file_service.write_text(svg, output_path)

    def _print_confirmation(self, result: Dict[str, Any]) -> None:
        for line in result.get('lines', []):
            print(line)
        print(f"✅ {self.command_name} files written:")
        for path in result.get('files', []):
            print(f"   - {path}")


class BuildTableCommand(Command):
    """Builds the canonical gain table and its summary."""

    def __init__(self, factory: Factory):
        super().__init__(factory)
        self.command_name = "build-table"

    @staticmethod
    def _previous_crc(path: Path) -> Optional[int]:
        if not path.is_file():
            return None
        try:
            return values_crc(load_table(path))
        except Exception as e:
            logger.info("Existing table %s not comparable: %s", path, e)
            return None

    def execute(self, args, config, output_dir):
        grid = config.table_grid
        previous_crc = self._previous_crc(config.table_path)
        table = build_table(
            grid.r_grid, grid.alpha_grid, config.atmosphere, config.phase_function,
            config.source.aperture_area, config.quadrature, workers=config.workers,
            extra_meta={'profile': config.profile_name, 'grid': config.table_grid_name},
        )

        if config.table_path.parent != Path(''):
            self.file_service.ensure_directory(config.table_path.parent)
        save_table(table, config.table_path)
        reloaded = load_table(config.table_path)
        crc = values_crc(reloaded)
        if crc != values_crc(table):
            raise IOError(f"Table written to {config.table_path} does not reload identically")
        self.table_meta = reloaded.meta

        matches_previous = None if previous_crc is None else previous_crc == crc
        finite = table.values[np.isfinite(table.values)]
        build = table.meta['build']
        summary = self.renderer.render('table_summary.txt', {
            'path': config.table_path,
            'grid_name': config.table_grid_name,
            'n_r': table.shape[0],
            'n_alpha': table.shape[1],
            'r_min': f"{table.r_grid[0]:g}",
            'r_max': f"{table.r_grid[-1]:g}",
            'alpha_min': f"{math.degrees(table.alpha_grid[0]):.4g}",
            'alpha_max': f"{math.degrees(table.alpha_grid[-1]):.4g}",
            'profile': config.profile_name,
            'atmosphere': table.meta['atmosphere'],
            'phase_function': table.meta['phase_function'],
            'aperture_area': table.meta['aperture_area'],
            'value_min': f"{finite.min():.6g}" if finite.size else 'n/a',
            'value_max': f"{finite.max():.6g}" if finite.size else 'n/a',
            'values_crc': f"{crc:#010x}",
            'timestamp': build['timestamp'],
            'seconds': build['seconds'],
            'matches_previous': matches_previous,
        })
        summary_path = self.file_service.write_text(summary, output_dir / 'table_summary.txt')
        return {
            'files': [config.table_path, summary_path],
            'lines': summary.rstrip('\n').splitlines(),
            'values_crc': crc,
            'matches_previous': matches_previous,
        }


class CheckTableCommand(Command):
    """Measures the table's interpolation error against direct quadrature."""

    def __init__(self, factory: Factory):
        super().__init__(factory)
        self.command_name = "check-table"

    def execute(self, args, config, output_dir):
        table = self.load_table(config)
        rng = np.random.default_rng(config.seed)
        r, beta = sample_queries(table, int(args['queries']), rng)
        check = check_fidelity(table, r, beta, config.atmosphere, config.phase_function,
                               config.quadrature, config.interpolation)

        frame = pd.DataFrame({
            'r': check.r,
            'beta_deg': np.degrees(check.beta),
            'table_gain': check.table_gain,
            'direct_gain': check.direct_gain,
            'rel_error': check.rel_error,
        })
        path = output_dir / 'table_check.csv'
        frame.to_csv(path, index=False, float_format='%.10g')
        quantiles = check.quantiles()
        lines = [f"Interpolation error over {r.size} queries: median {quantiles['median']:.3%}, "
                 f"p95 {quantiles['p95']:.3%}, max {quantiles['max']:.3%}"]
        return {'files': [path], 'lines': lines, 'quantiles': quantiles}


class GainCommand(Command):
    """Prints laser, LED and direct-quadrature gains at one position."""

    def __init__(self, factory: Factory):
        super().__init__(factory)
        self.command_name = "gain"

    def execute(self, args, config, output_dir):
        table = self.load_table(config)
        pos = ReceiverPos(float(args['x']), float(args['y']))
        src = config.source

        laser = gain_via_table(table, pos, src.alpha, config.interpolation) * aperture_scale(src, table)
        led = led_gain(pos, src, table, config.interpolation)
        direct = link_gain_direct(pos, src.alpha, config.atmosphere, config.phase_function,
                                  src.aperture_area, config.quadrature)

        report = {
            'x': pos.x,
            'y': pos.y,
            'alpha_deg': math.degrees(src.alpha),
            'phi_d_deg': math.degrees(src.phi_d),
            'laser_gain': laser,
            'led_gain': led.mean,
            'led_std_error': led.std_error,
            'n_beams': led.n_beams,
            'below_horizon_beams': led.below_horizon,
            'direct_gain': direct.value,
            'direct_abs_error': direct.abs_error,
            'seed': src.seed,
        }
        path = self.file_service.write_json(report, output_dir / 'gain.json')
        lines = [
            f"Receiver ({pos.x:g}, {pos.y:g}) m, alpha={report['alpha_deg']:g} deg, "
            f"phi_d={report['phi_d_deg']:g} deg",
            f"  laser (table) : {laser:.6e}",
            f"  LED (N={led.n_beams}) : {led.mean:.6e} +/- {led.std_error:.2e}",
            f"  direct        : {direct.value:.6e} +/- {direct.abs_error:.1e}",
        ]
        return {'files': [path], 'lines': lines, 'report': report}


class FieldCommand(Command):
    """Writes the field CSV and its heatmap."""

    def __init__(self, factory: Factory):
        super().__init__(factory)
        self.command_name = "field"

    def compute(self, config: RunConfig, table: GainTable, src: Optional[SourceSpec] = None) -> FieldGrid:
        return compute_field(config.region, config.resolution, src or config.source, table,
                             config.interpolation, config.workers)

    def execute(self, args, config, output_dir):
        table = self.load_table(config)
        grid = self.compute(config, table)
        files = []
        field_path = output_dir / 'field.csv'
        save_field_csv(grid, field_path)
        files.append(field_path)
        if not grid.source.is_laser:
            stderr_grid = replace(grid, gains=grid.std_errors)
            stderr_path = output_dir / 'field_stderr.csv'
            save_field_csv(stderr_grid, stderr_path)
            files.append(stderr_path)

        src = grid.source
        title = f"Link gain, alpha={math.degrees(src.alpha):g} deg, phi_d={math.degrees(src.phi_d):g} deg"
        files.append(self.render_figure(HeatmapFigure(title), grid, output_dir / 'field.svg'))
        low, high = grid.value_range
        lines = [f"Field {grid.x_axis.size} x {grid.y_axis.size}: gains {low:.3e} .. {high:.3e}, "
                 f"{grid.masked_collocated + grid.masked_out_of_range} masked"]
        return {'files': files, 'lines': lines, 'field': grid}


class ContourCommand(FieldCommand):
    """Extracts contours at the configured levels and fits ellipses."""

    def __init__(self, factory: Factory):
        super().__init__(factory)
        self.command_name = "contour"

    def execute(self, args, config, output_dir):
        table = self.load_table(config)
        grid = self.compute(config, table)
        files, fits, overlays, lines = [], [], [], []
        for level in config.levels:
            contour = extract_contour(grid, level)
            tag = Figure.format_level_for_filename(level)
            contour_path = output_dir / f'contour_{tag}.csv'
            save_contour_csv(contour, contour_path)
            files.append(contour_path)

            fit = fit_contour(contour)
            chars = characteristics(fit, config.circular_tol)
            fits.append({'level': level, 'closed': contour.main_closed,
                         'enclosed_area': contour.enclosed_area, **to_json(fit, chars)})
            overlays.append(ContourOverlay(label=f"L={level:.3g}", contour=contour, fit=fit))
            lines.append(f"L={level:.3g}: y0={fit.y0:.2f} a={fit.a:.2f} b={fit.b:.2f} "
                         f"e={chars.eccentricity:.4f} right end={chars.right_endpoint[1]:.2f} m")

        fits_path = self.file_service.write_json({'source': config.source.to_dict(), 'fits': fits},
                                                 output_dir / 'fits.json')
        files.append(fits_path)
        files.append(self.render_figure(ContourFigure(config.region), overlays, output_dir / 'contour.svg'))
        return {'files': files, 'lines': lines, 'fits': fits}


class SweepCommand(FieldCommand):
    """Characteristic tables over elevation, level, and divergence."""

    def __init__(self, factory: Factory):
        super().__init__(factory)
        self.command_name = "sweep"

    @staticmethod
    def _characterize(grid: FieldGrid, level: float, circular_tol: float
                      ) -> Tuple[Optional[Contour], Dict[str, Any]]:
        row = {'level': level}
        try:
            contour = extract_contour(grid, level)
            fit = fit_contour(contour)
            chars = characteristics(fit, circular_tol)
        except _SKIPPABLE as e:
            logger.warning("No ellipse at level %.3g: %s", level, e)
            return None, {**row, 'status': type(e).__name__}
        row.update({
            'status': 'ok',
            'y0': fit.y0,
            'a': fit.a,
            'b': fit.b,
            'rms_residual': fit.rms_residual,
            'eccentricity': chars.eccentricity,
            'left_focus_y': chars.left_focus[1],
            'left_endpoint_y': chars.left_endpoint[1],
            'right_endpoint_y': chars.right_endpoint[1],
            'focus_to_right_endpoint': chars.right_endpoint[1] - chars.left_focus[1],
            'ellipse_area': fit.area,
            'contour_area': contour.enclosed_area,
        })
        row['_fit'] = fit
        return contour, row

    def execute(self, args, config, output_dir):
        table = self.load_table(config)
        sweep = config.sweep
        primary = config.levels[0]
        alpha_rows: List[Dict[str, Any]] = []
        level_rows: List[Dict[str, Any]] = []
        overlays: List[ContourOverlay] = []

        for alpha_deg in sweep.alphas_deg:
            src = replace(config.source, alpha=math.radians(alpha_deg), phi_d=0.0)
            grid = self.compute(config, table, src)
            for level in sorted(set(sweep.levels) | {primary}, reverse=True):
                contour, row = self._characterize(grid, level, config.circular_tol)
                fit = row.pop('_fit', None)
                row = {'alpha_deg': alpha_deg, 'cos_alpha': math.cos(math.radians(alpha_deg)), **row}
                if level in sweep.levels:
                    level_rows.append(row)
                if level == primary:
                    alpha_rows.append(row)
                    if contour is not None:
                        overlays.append(ContourOverlay(label=f"alpha={alpha_deg:g}", contour=contour, fit=fit))

        phi_rows: List[Dict[str, Any]] = []
        for phi_d_deg in sweep.phi_d_deg:
            src = replace(config.source, alpha=math.radians(sweep.phi_d_alpha_deg), phi_d=math.radians(phi_d_deg))
            grid = self.compute(config, table, src)
            _, row = self._characterize(grid, primary, config.circular_tol)
            row.pop('_fit', None)
            phi_rows.append({'alpha_deg': sweep.phi_d_alpha_deg, 'phi_d_deg': phi_d_deg, **row})

        files = []
        for name, rows in (('sweep_alpha.csv', alpha_rows), ('sweep_levels.csv', level_rows),
                           ('sweep_phi_d.csv', phi_rows)):
            path = output_dir / name
            pd.DataFrame(rows).to_csv(path, index=False, float_format='%.10g')
            files.append(path)
        files.append(self.render_figure(ContourFigure(config.region, title=f"Contours at L={primary:.3g}"),
                                        overlays, output_dir / 'sweep_alpha.svg'))
        lines = [f"Sweep: {len(alpha_rows)} elevation rows, {len(level_rows)} level rows, "
                 f"{len(phi_rows)} divergence rows"]
        return {'files': files, 'lines': lines, 'alpha_rows': alpha_rows,
                'level_rows': level_rows, 'phi_rows': phi_rows}
