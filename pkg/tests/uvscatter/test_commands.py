"""End-to-end tests for the subcommands, run through the CLI."""
import json
import math

import pandas as pd
import pytest

from uvscatter.cli import CLI
from uvscatter.figures import Figure
from uvscatter.gaintable import gain_via_table, load_table
from uvscatter.geometry import ReceiverPos

RUN_CONFIG = """
seed = 7
table_path = "{table}"
output_dir = "{output}"

[source]
alpha_deg = 90.0
phi_d_deg = 0.0
n_beams = 16

[table]
r_start = 0.0
r_stop = 400.0
r_step = 20.0
alpha_start = 0.05
alpha_stop = 1.0
alpha_step = 0.05

[quadrature]
rel_tol = 1e-8

[field]
x_min = -200.0
x_max = 200.0
y_min = -200.0
y_max = 200.0
resolution = 41

[sweep]
alphas_deg = [90.0]
levels = [1e-3]
phi_d_alpha_deg = 90.0
phi_d_deg = [0.0]
"""


@pytest.fixture(scope='module')
def workspace(tmp_path_factory):
    """Run config plus a gain table built once for the module."""
    root = tmp_path_factory.mktemp('run')
    paths = {
        'root': root,
        'table': root / 'tables' / 'small.uvgt',
        'output': root / 'output',
        'config': root / 'run.toml',
    }
    paths['config'].write_text(RUN_CONFIG.format(table=paths['table'].as_posix(),
                                                 output=paths['output'].as_posix()), encoding='utf-8')
    assert CLI(['--config', str(paths['config']), 'build-table']).run() == 0
    return paths


def run(workspace, *argv):
    return CLI(['--config', str(workspace['config']), *argv]).run()


def ring_level(workspace, radius=105.0):
    return gain_via_table(load_table(workspace['table']), ReceiverPos(0.0, radius), math.pi / 2.0)


class TestBuildTableCommand:
    """Test cases for build-table."""

    @staticmethod
    def test_outputs(workspace):
        assert workspace['table'].is_file()
        summary = (workspace['output'] / 'table_summary.txt').read_text(encoding='utf-8')
        assert '21 ranges x 20 elevations' in summary
        resolved = json.loads((workspace['output'] / 'resolved_config.json').read_text(encoding='utf-8'))
        assert resolved['resolved']['seed'] == 7
        assert resolved['resolved']['table_grid'] == {'name': 'custom', 'n_r': 21, 'n_alpha': 20}

    @staticmethod
    def test_rebuild_is_identical(workspace, capsys):
        assert run(workspace, 'build-table') == 0
        assert 'previous build: identical values' in capsys.readouterr().out
        summary = (workspace['output'] / 'table_summary.txt').read_text(encoding='utf-8')
        assert 'identical values' in summary


class TestCheckTableCommand:
    """Test cases for check-table."""

    @staticmethod
    def test_distribution_written(workspace, capsys):
        assert run(workspace, 'check-table', '25') == 0
        frame = pd.read_csv(workspace['output'] / 'table_check.csv')
        assert list(frame.columns) == ['r', 'beta_deg', 'table_gain', 'direct_gain', 'rel_error']
        assert len(frame) == 25
        assert (frame['direct_gain'] > 0.0).all()
        assert (frame['rel_error'] >= 0.0).all()
        assert 'Interpolation error over 25 queries' in capsys.readouterr().out


class TestGainCommand:
    """Test cases for gain."""

    @staticmethod
    def test_report(workspace, capsys):
        assert run(workspace, 'gain', '0', '100') == 0
        report = json.loads((workspace['output'] / 'gain.json').read_text(encoding='utf-8'))
        assert report['x'] == 0.0 and report['y'] == 100.0
        assert report['laser_gain'] > 0.0
        assert report['led_gain'] == report['laser_gain']
        assert report['led_std_error'] == 0.0
        assert report['laser_gain'] == pytest.approx(report['direct_gain'], rel=0.05)
        assert 'laser (table)' in capsys.readouterr().out

    @staticmethod
    def test_missing_table(workspace, capsys):
        missing = workspace['root'] / 'nowhere.uvgt'
        assert run(workspace, '--table', str(missing), 'gain', '0', '100') == 1
        assert 'build-table' in capsys.readouterr().err

    @staticmethod
    def test_table_meta_recorded(workspace):
        assert run(workspace, 'gain', '0', '100') == 0
        resolved = json.loads((workspace['output'] / 'resolved_config.json').read_text(encoding='utf-8'))
        assert resolved['table_meta']['atmosphere'] == resolved['resolved']['atmosphere_per_m']
        assert resolved['table_meta']['phase_function'] == resolved['resolved']['phase_function']

    @staticmethod
    def test_table_built_for_other_medium(workspace, capsys):
        hazy = workspace['root'] / 'hazy.toml'
        hazy.write_text(workspace['config'].read_text(encoding='utf-8') + '\n[atmosphere]\nk_a = 1.8e-3\n',
                        encoding='utf-8')
        assert CLI(['--config', str(hazy), 'gain', '0', '100']).run() == 2
        err = capsys.readouterr().err
        assert 'atmosphere.k_a' in err
        assert 'build-table' in err


class TestFieldCommand:
    """Test cases for field."""

    @staticmethod
    def test_outputs(workspace):
        assert run(workspace, 'field') == 0
        output = workspace['output']
        assert (output / 'field.csv').is_file()
        assert (output / 'field.svg').read_text(encoding='utf-8').lstrip().startswith('<')
        assert not (output / 'field_stderr.csv').exists()
        frame = pd.read_csv(output / 'field.csv', index_col=0)
        assert frame.shape == (41, 41)
        assert math.isnan(frame.iloc[20, 20])


class TestContourCommand:
    """Test cases for contour."""

    @staticmethod
    def test_vertical_beam_ring(workspace):
        level = ring_level(workspace)
        assert run(workspace, '--level', repr(level), 'contour') == 0

        output = workspace['output']
        contour_path = output / f"contour_{Figure.format_level_for_filename(level)}.csv"
        assert contour_path.read_text(encoding='utf-8').startswith('x,y\n')
        fits = json.loads((output / 'fits.json').read_text(encoding='utf-8'))
        assert fits['source']['alpha_deg'] == pytest.approx(90.0)
        [fit] = fits['fits']
        assert fit['closed']
        assert fit['a'] == pytest.approx(105.0, rel=0.03)
        assert fit['b'] == pytest.approx(105.0, rel=0.03)
        assert fit['eccentricity'] <= 0.05
        assert (output / 'contour.svg').is_file()

    @staticmethod
    def test_level_not_crossing_field(workspace, capsys):
        assert run(workspace, '--level', '1.0', 'contour') == 3
        assert 'Fatal error' in capsys.readouterr().err


class TestSweepCommand:
    """Test cases for sweep."""

    @staticmethod
    def test_rows(workspace):
        assert run(workspace, '--level', repr(ring_level(workspace)), 'sweep') == 0

        output = workspace['output']
        alpha_rows = pd.read_csv(output / 'sweep_alpha.csv')
        assert alpha_rows['status'].tolist() == ['ok']
        assert alpha_rows['b'].iloc[0] == pytest.approx(105.0, rel=0.03)
        level_rows = pd.read_csv(output / 'sweep_levels.csv')
        assert level_rows['status'].tolist() == ['EmptyContourError']
        phi_rows = pd.read_csv(output / 'sweep_phi_d.csv')
        assert phi_rows['status'].tolist() == ['ok']
        assert (output / 'sweep_alpha.svg').is_file()


class TestUsageErrors:
    """Test cases for configuration and argument errors."""

    @staticmethod
    def test_unknown_config_key(tmp_path, capsys):
        config = tmp_path / 'bad.toml'
        config.write_text('colour = "red"\n', encoding='utf-8')
        assert CLI(['--config', str(config), 'field']).run() == 2
        assert 'colour' in capsys.readouterr().err

    @staticmethod
    def test_bad_arguments():
        with pytest.raises(SystemExit) as exc_info:
            CLI(['render']).run()
        assert exc_info.value.code == 2
