"""Run configuration: defaults, user document, and command-line overrides."""
import copy
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from uvscatter.atmosphere import (
    LITERATURE_DEFAULT,
    AtmosphereParams,
    PhaseFunctionParams,
    get_profile,
    profile_from_mapping,
)
from uvscatter.config import IConfigLoader
from uvscatter.ellipse import CIRCULAR_TOL
from uvscatter.errors import ConfigError, DomainError
from uvscatter.field import Region
from uvscatter.gaintable import INTERP_LINEAR, INTERP_LOG, TableGrid
from uvscatter.led import SourceSpec
from uvscatter.quadrature import QuadratureOptions

logger = logging.getLogger(__name__)

DEFAULT_RUN_CONFIG: Dict[str, Any] = {
    'profile': LITERATURE_DEFAULT,
    'profiles': {},
    'seed': 1,
    'table_path': 'tables/desk.uvgt',
    'output_dir': 'output',
    'workers': 1,
    'interpolation': INTERP_LOG,
    'source': {
        'alpha_deg': 30.0,
        'phi_d_deg': 0.0,
        'aperture_area': 1.0,
        'n_beams': 200,
    },
    'table': {},
    'quadrature': {
        'rel_tol': 1e-10,
        'abs_tol': 1e-30,
        'l_max_factor': 30.0,
        'limit': 200,
        'fail_rel_error': 1e-6,
    },
    'field': {
        'x_min': -500.0,
        'x_max': 500.0,
        'y_min': -500.0,
        'y_max': 500.0,
        'resolution': 100,
    },
    'contour': {
        'levels': [1e-7],
        'circular_tol': CIRCULAR_TOL,
    },
    'sweep': {
        'alphas_deg': [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0],
        'levels': [1e-6, 3e-7, 1e-7, 3e-8],
        'phi_d_alpha_deg': 30.0,
        'phi_d_deg': [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0],
    },
}

_RANGE_KEYS = ('r_start', 'r_stop', 'r_step', 'alpha_start', 'alpha_stop', 'alpha_step')


def deep_merge(base: Mapping[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``update`` into a copy of ``base``."""
    merged = copy.deepcopy(dict(base))
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_overrides(document: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Set dotted keys (e.g. ``source.alpha_deg``); None values are skipped."""
    result = copy.deepcopy(document)
    for dotted, value in overrides.items():
        if value is None:
            continue
        *parents, leaf = dotted.split('.')
        node = result
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Cannot override '{dotted}': '{part}' is not a table")
            node = child
        node[leaf] = value
    return result


@dataclass(frozen=True)
class SweepConfig:
    alphas_deg: Tuple[float, ...]
    levels: Tuple[float, ...]
    phi_d_alpha_deg: float
    phi_d_deg: Tuple[float, ...]


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved, validated run configuration."""

    profile_name: str
    atmosphere: AtmosphereParams
    phase_function: PhaseFunctionParams
    source: SourceSpec
    seed: int
    table_path: Path
    output_dir: Path
    workers: int
    interpolation: str
    table_grid: TableGrid
    table_grid_name: str
    quadrature: QuadratureOptions
    region: Region
    resolution: int
    levels: Tuple[float, ...]
    circular_tol: float
    sweep: SweepConfig
    document: Dict[str, Any] = field(default_factory=dict, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        """Resolved document, with the effective coefficients and seed spelled out."""
        resolved = copy.deepcopy(self.document)
        resolved['resolved'] = {
            'profile': self.profile_name,
            'atmosphere_per_m': self.atmosphere.to_dict(),
            'phase_function': self.phase_function.to_dict(),
            'source': self.source.to_dict(),
            'seed': self.seed,
            'table_grid': {
                'name': self.table_grid_name,
                'n_r': int(self.table_grid.r_grid.size),
                'n_alpha': int(self.table_grid.alpha_grid.size),
            },
        }
        return resolved


def _floats(value: Any, name: str) -> Tuple[float, ...]:
    if isinstance(value, (int, float)):
        value = [value]
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"'{name}' must be a list of numbers: {e}") from e


class Scenario:
    """Loads and resolves the run configuration for a command."""

    def __init__(self, config_manager: IConfigLoader):
        """Initialize the scenario.

        Args:
            config_manager: Config manager instance for loading the run document
        """
        self._config_manager = config_manager
        self._run_config: Optional[RunConfig] = None

    def load(self, config_path: Optional[str] = None,
             overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
        """Merge defaults, the run document and overrides, then validate.

        Args:
            config_path: TOML/JSON run config; built-in defaults when None
            overrides: Dotted config keys set from the command line

        Returns:
            RunConfig: resolved configuration

        Raises:
            ConfigError: on any missing, malformed or out-of-domain value
        """
        user_document = self._config_manager.load(config_path) if config_path else {}
        unknown = sorted(set(user_document) - set(DEFAULT_RUN_CONFIG) - {'atmosphere'})
        if unknown:
            raise ConfigError(f"Unknown run-config key(s): {', '.join(unknown)}")
        document = apply_overrides(deep_merge(DEFAULT_RUN_CONFIG, user_document), overrides or {})
        try:
            self._run_config = self._resolve(document)
        except DomainError as e:
            raise ConfigError(f"Invalid run configuration: {e}") from e
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid run configuration: {e!r}") from e
        logger.debug("Resolved run config from %s", config_path or 'defaults')
        return self._run_config

    def get_config(self) -> RunConfig:
        """Get the currently loaded run configuration."""
        if self._run_config is None:
            raise ConfigError("Run configuration not loaded. Please call load first.")
        return self._run_config

    @staticmethod
    def _resolve_profile(document: Dict[str, Any]) -> Tuple[str, AtmosphereParams, PhaseFunctionParams]:
        if 'atmosphere' in document:
            atmos, pf = profile_from_mapping(document['atmosphere'])
            return 'atmosphere', atmos, pf
        name = str(document['profile'])
        user_profiles = document.get('profiles', {})
        if name in user_profiles:
            atmos, pf = profile_from_mapping(user_profiles[name])
            return name, atmos, pf
        atmos, pf = get_profile(name)
        return name, atmos, pf

    @staticmethod
    def _resolve_grid(table: Dict[str, Any]) -> Tuple[TableGrid, str]:
        preset = table.get('preset')
        if preset:
            return TableGrid.preset(str(preset)), str(preset)
        present = [key for key in _RANGE_KEYS if key in table]
        if not present:
            return TableGrid.preset('desk'), 'desk'
        missing = [key for key in _RANGE_KEYS if key not in table]
        if missing:
            raise ConfigError(f"[table] ranges incomplete, missing: {', '.join(missing)}")
        return TableGrid.from_ranges(*(float(table[key]) for key in _RANGE_KEYS)), 'custom'

    def _resolve(self, document: Dict[str, Any]) -> RunConfig:
        profile_name, atmos, pf = self._resolve_profile(document)
        seed = int(document['seed'])
        source_doc = document['source']
        source = SourceSpec(
            alpha=math.radians(float(source_doc['alpha_deg'])),
            phi_d=math.radians(float(source_doc['phi_d_deg'])),
            aperture_area=float(source_doc['aperture_area']),
            n_beams=int(source_doc['n_beams']),
            seed=seed,
        )
        workers = int(document['workers'])
        if workers < 1:
            raise ConfigError(f"workers must be >= 1, got {workers}")
        interpolation = str(document['interpolation'])
        if interpolation not in (INTERP_LOG, INTERP_LINEAR):
            raise ConfigError(f"interpolation must be '{INTERP_LOG}' or '{INTERP_LINEAR}', got '{interpolation}'")

        grid, grid_name = self._resolve_grid(document['table'])
        field_doc = document['field']
        region = Region(
            x_min=float(field_doc['x_min']),
            x_max=float(field_doc['x_max']),
            y_min=float(field_doc['y_min']),
            y_max=float(field_doc['y_max']),
        )
        resolution = int(field_doc['resolution'])
        if resolution < 2:
            raise ConfigError(f"field.resolution must be >= 2, got {resolution}")

        levels = _floats(document['contour']['levels'], 'contour.levels')
        if not levels or any(level <= 0.0 for level in levels):
            raise ConfigError("contour.levels must be a nonempty list of positive gains")
        circular_tol = float(document['contour']['circular_tol'])
        if not circular_tol >= 0.0:
            raise ConfigError(f"contour.circular_tol must be >= 0, got {circular_tol}")

        sweep_doc = document['sweep']
        sweep = SweepConfig(
            alphas_deg=_floats(sweep_doc['alphas_deg'], 'sweep.alphas_deg'),
            levels=_floats(sweep_doc['levels'], 'sweep.levels'),
            phi_d_alpha_deg=float(sweep_doc['phi_d_alpha_deg']),
            phi_d_deg=_floats(sweep_doc['phi_d_deg'], 'sweep.phi_d_deg'),
        )

        return RunConfig(
            profile_name=profile_name,
            atmosphere=atmos,
            phase_function=pf,
            source=source,
            seed=seed,
            table_path=Path(str(document['table_path'])),
            output_dir=Path(str(document['output_dir'])),
            workers=workers,
            interpolation=interpolation,
            table_grid=grid,
            table_grid_name=grid_name,
            quadrature=QuadratureOptions(**{key: document['quadrature'][key]
                                            for key in DEFAULT_RUN_CONFIG['quadrature']}),
            region=region,
            resolution=resolution,
            levels=levels,
            circular_tol=circular_tol,
            sweep=sweep,
            document=document,
        )
