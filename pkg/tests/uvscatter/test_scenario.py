"""Tests for the scenario module."""
import math
from pathlib import Path

import pytest

from uvscatter.config import ConfigManager
from uvscatter.errors import ConfigError
from uvscatter.scenario import DEFAULT_RUN_CONFIG, Scenario, apply_overrides, deep_merge


def load(tmp_path, text=None, overrides=None):
    config_path = None
    if text is not None:
        config_path = tmp_path / "run.toml"
        config_path.write_text(text)
    return Scenario(ConfigManager()).load(str(config_path) if config_path else None, overrides)


class TestMerging:
    """Test cases for document merging helpers."""

    @staticmethod
    def test_deep_merge_keeps_unrelated_keys():
        merged = deep_merge({'source': {'alpha_deg': 30.0, 'n_beams': 200}, 'seed': 1},
                           {'source': {'alpha_deg': 45.0}})
        assert merged == {'source': {'alpha_deg': 45.0, 'n_beams': 200}, 'seed': 1}

    @staticmethod
    def test_deep_merge_does_not_mutate_defaults():
        deep_merge(DEFAULT_RUN_CONFIG, {'source': {'alpha_deg': 80.0}})
        assert DEFAULT_RUN_CONFIG['source']['alpha_deg'] == 30.0

    @staticmethod
    def test_apply_overrides():
        document = {'source': {'alpha_deg': 30.0}, 'seed': 1}
        result = apply_overrides(document, {'source.alpha_deg': 60.0, 'seed': None, 'table.preset': 'full'})
        assert result == {'source': {'alpha_deg': 60.0}, 'seed': 1, 'table': {'preset': 'full'}}
        assert document['source']['alpha_deg'] == 30.0

    @staticmethod
    def test_apply_overrides_through_scalar():
        with pytest.raises(ConfigError):
            apply_overrides({'seed': 1}, {'seed.value': 2})


class TestScenario:
    """Test cases for the Scenario class."""

    @staticmethod
    def test_get_config_before_load():
        with pytest.raises(ConfigError):
            Scenario(ConfigManager()).get_config()

    @staticmethod
    def test_defaults(tmp_path):
        config = load(tmp_path)
        assert config.profile_name == 'literature-default'
        assert config.atmosphere.k_a == 9e-4
        assert config.source.alpha == math.radians(30.0)
        assert config.source.is_laser
        assert config.source.seed == config.seed == 1
        assert config.table_grid_name == 'desk'
        assert config.table_path == Path('tables/desk.uvgt')
        assert config.resolution == 100
        assert config.levels == (1e-7,)
        assert config.circular_tol == 0.01
        assert config.interpolation == 'log'
        assert config.sweep.alphas_deg[0] == 10.0

    @staticmethod
    def test_document_and_overrides(tmp_path):
        config = load(tmp_path, '''
            seed = 12
            [source]
            alpha_deg = 45.0
            phi_d_deg = 20.0
            n_beams = 64
            [field]
            x_min = -100.0
            x_max = 100.0
            y_min = 0.0
            y_max = 300.0
        ''', overrides={'source.alpha_deg': 60.0, 'contour.levels': [2e-7], 'field.resolution': 500})
        assert config.seed == 12
        assert config.source.alpha == pytest.approx(math.radians(60.0))
        assert config.source.phi_d == pytest.approx(math.radians(20.0))
        assert config.source.n_beams == 64
        assert config.levels == (2e-7,)
        assert config.resolution == 500
        assert (config.region.y_min, config.region.y_max) == (0.0, 300.0)

    @staticmethod
    def test_named_profile_per_km(tmp_path):
        config = load(tmp_path, '''
            profile = "hazy"
            [profiles.hazy]
            units = "per_km"
            k_s_ray = 0.24
            k_s_mie = 1.0
            k_a = 0.9
        ''')
        assert config.profile_name == 'hazy'
        assert config.atmosphere.k_s_mie == pytest.approx(1e-3)

    @staticmethod
    def test_inline_atmosphere(tmp_path):
        config = load(tmp_path, '''
            [atmosphere]
            k_s_ray = 3e-4
            g = 0.8
        ''')
        assert config.profile_name == 'atmosphere'
        assert config.atmosphere.k_s_ray == 3e-4
        assert config.phase_function.g == 0.8

    @staticmethod
    def test_table_ranges(tmp_path):
        config = load(tmp_path, '''
            [table]
            r_start = 0.0
            r_stop = 400.0
            r_step = 20.0
            alpha_start = 0.05
            alpha_stop = 1.0
            alpha_step = 0.05
        ''')
        assert config.table_grid_name == 'custom'
        assert config.table_grid.r_grid.size == 21
        assert config.table_grid.alpha_grid.size == 20

    @staticmethod
    def test_preset_override(tmp_path):
        config = load(tmp_path, overrides={'table.preset': 'full'})
        assert config.table_grid_name == 'full'
        assert config.table_grid.r_grid.size == 1001

    @staticmethod
    @pytest.mark.parametrize('text', [
        'colour = "blue"',
        '[table]\nr_start = 0.0',
        'profile = "marine"',
        'interpolation = "cubic"',
        'workers = 0',
        '[source]\nalpha_deg = 120.0',
        '[source]\nphi_d_deg = 180.0',
        '[field]\nx_min = 10.0\nx_max = -10.0',
        '[field]\nresolution = 1',
        '[contour]\nlevels = []',
        '[contour]\nlevels = [-1e-7]',
        '[contour]\nlevels = "low"',
        '[contour]\ncircular_tol = -0.1',
        '[quadrature]\nlimit = 8',
        '[quadrature]\nrel_tol = 0.0',
        'seed = "abc"',
    ])
    def test_invalid_documents(tmp_path, text):
        with pytest.raises(ConfigError):
            load(tmp_path, text)

    @staticmethod
    def test_to_dict_spells_out_resolution(tmp_path):
        resolved = load(tmp_path, 'seed = 5').to_dict()
        assert resolved['seed'] == 5
        assert resolved['resolved']['seed'] == 5
        assert resolved['resolved']['atmosphere_per_m'] == {'k_s_ray': 2.4e-4, 'k_s_mie': 2.5e-4, 'k_a': 9e-4}
        assert resolved['resolved']['source']['alpha_deg'] == pytest.approx(30.0)
        assert resolved['resolved']['table_grid'] == {'name': 'desk', 'n_r': 201, 'n_alpha': 100}

    @staticmethod
    def test_circular_tolerance(tmp_path):
        assert load(tmp_path, '[contour]\ncircular_tol = 0.0').circular_tol == 0.0
