"""Shared fixtures: a coarse gain table built once per session."""
import math

import numpy as np
import pytest

from uvscatter.atmosphere import LITERATURE_DEFAULT, get_profile
from uvscatter.gaintable import build_table, save_table
from uvscatter.quadrature import QuadratureOptions

TABLE_OPTIONS = QuadratureOptions(rel_tol=1e-8)


@pytest.fixture(scope='session')
def profile():
    """(AtmosphereParams, PhaseFunctionParams) of the literature default."""
    return get_profile(LITERATURE_DEFAULT)


@pytest.fixture(scope='session')
def small_table(profile):
    """r = 0..800 m every 10 m, alpha = k*pi/60 for k = 1..60, A = 1 m^2."""
    atmos, pf = profile
    return build_table(np.arange(0.0, 801.0, 10.0), np.linspace(math.pi / 60.0, math.pi, 60),
                       atmos, pf, 1.0, TABLE_OPTIONS)


@pytest.fixture
def table_file(small_table, tmp_path):
    path = tmp_path / 'small.uvgt'
    save_table(small_table, path)
    return path
