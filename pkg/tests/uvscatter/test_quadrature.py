"""Tests for the direct link-gain quadrature."""
import math
from unittest.mock import patch

import numpy as np
import pytest
from scipy.integrate import simpson

from uvscatter.atmosphere import AtmosphereParams, phase_function
from uvscatter.errors import DomainError, QuadratureError, TransmitterCollocatedError
from uvscatter.gaintable import TableGrid, build_table
from uvscatter.geometry import ReceiverPos, receiver_distance, reduce_to_standard, scattering_cosine, solid_angle
from uvscatter.quadrature import MIN_LIMIT, QuadratureOptions, breakpoints, link_gain_direct

IDENTITY_OPTIONS = QuadratureOptions(rel_tol=1e-12)


def simpson_gain(pos, alpha, atmos, pf, aperture_area, steps=1_000_000):
    """Composite Simpson rule over the same truncated path."""
    l = np.linspace(0.0, 30.0 / atmos.k_e, steps + 1)
    lp = receiver_distance(pos, alpha, l)
    mu = scattering_cosine(pos, alpha, l)
    omega = solid_angle(pos, alpha, l, aperture_area)
    integrand = phase_function(mu, atmos, pf) * omega * atmos.k_s * np.exp(-atmos.k_e * (l + lp))
    return float(simpson(integrand, x=l))


def random_geometries(count, seed, r_min=10.0, r_max=800.0):
    """(x, y, alpha) with r in [r_min, r_max] m and alpha in [5, 90] deg."""
    rng = np.random.default_rng(seed)
    r = rng.uniform(r_min, r_max, count)
    azimuth = rng.uniform(0.0, 2.0 * math.pi, count)
    alpha = rng.uniform(math.radians(5.0), math.radians(90.0), count)
    return [(float(ri * math.sin(az)), float(ri * math.cos(az)), float(a))
            for ri, az, a in zip(r, azimuth, alpha)]


def assert_reduction_identity(atmos, pf, x, y, alpha):
    standard = reduce_to_standard(ReceiverPos(x, y), alpha)
    direct = link_gain_direct(ReceiverPos(x, y), alpha, atmos, pf, 1.0, IDENTITY_OPTIONS).value
    canonical = link_gain_direct(ReceiverPos(0.0, standard.r), standard.beta, atmos, pf, 1.0,
                                 IDENTITY_OPTIONS).value
    assert direct == pytest.approx(standard.scale * canonical, rel=1e-9)


class TestLinkGainDirect:
    """Test cases for link_gain_direct."""

    @staticmethod
    @pytest.mark.parametrize('x, y, alpha_deg', [(0.0, 200.0, 30.0), (120.0, -80.0, 50.0)])
    def test_matches_fine_simpson(profile, x, y, alpha_deg):
        atmos, pf = profile
        pos, alpha = ReceiverPos(x, y), math.radians(alpha_deg)
        result = link_gain_direct(pos, alpha, atmos, pf, 1.0)
        assert result.converged
        assert result.value > 0.0
        assert result.value == pytest.approx(simpson_gain(pos, alpha, atmos, pf, 1.0), rel=1e-6)

    @staticmethod
    @pytest.mark.slow
    @pytest.mark.parametrize('x, y, alpha', random_geometries(20, seed=31, r_min=50.0))
    def test_matches_fine_simpson_random(profile, x, y, alpha):
        atmos, pf = profile
        pos = ReceiverPos(x, y)
        result = link_gain_direct(pos, alpha, atmos, pf, 1.0)
        assert result.value == pytest.approx(simpson_gain(pos, alpha, atmos, pf, 1.0), rel=1e-6)

    @staticmethod
    def test_mirror_symmetry_is_exact(profile):
        atmos, pf = profile
        left = link_gain_direct(ReceiverPos(-130.0, 75.0), 0.7, atmos, pf, 1.0)
        right = link_gain_direct(ReceiverPos(130.0, 75.0), 0.7, atmos, pf, 1.0)
        assert left.value == right.value

    @staticmethod
    def test_vertical_beam_is_circular(profile):
        atmos, pf = profile
        angles = np.linspace(0.0, 2.0 * math.pi, 50, endpoint=False)
        gains = [link_gain_direct(ReceiverPos(200.0 * math.sin(t), 200.0 * math.cos(t)), math.pi / 2.0,
                                  atmos, pf, 1.0, IDENTITY_OPTIONS).value for t in angles]
        np.testing.assert_allclose(gains, gains[0], rtol=1e-9, atol=0.0)

    @staticmethod
    @pytest.mark.parametrize('alpha_deg', [1.8, 5.4, 7.2, 9.0, 10.8, 45.0])
    def test_short_range_low_elevation_converges(profile, alpha_deg):
        """At r = 1 m the integrand is a spike about y sin(alpha) wide on a 20 km path."""
        atmos, pf = profile
        result = link_gain_direct(ReceiverPos(0.0, 1.0), math.radians(alpha_deg), atmos, pf, 1.0)
        assert result.value > 0.0
        assert result.abs_error <= 1e-6 * result.value

    @staticmethod
    def test_first_rows_of_desk_grid_build(profile):
        atmos, pf = profile
        grid = TableGrid.preset('desk')
        table = build_table(grid.r_grid[:2], grid.alpha_grid, atmos, pf, 1.0)
        assert np.all(np.isfinite(table.values[:, :-1]))
        assert np.all(table.values[:, :-1] > 0.0)
        assert np.all(np.isnan(table.values[:, -1]))

    @staticmethod
    def test_linear_in_aperture(profile):
        atmos, pf = profile
        pos = ReceiverPos(40.0, 150.0)
        single = link_gain_direct(pos, 0.5, atmos, pf, 1.0).value
        double = link_gain_direct(pos, 0.5, atmos, pf, 2.0).value
        assert double == pytest.approx(2.0 * single, rel=1e-12)

    @staticmethod
    def test_absorption_lowers_gain(profile):
        atmos, pf = profile
        pos = ReceiverPos(40.0, 150.0)
        hazy = AtmosphereParams(k_s_ray=atmos.k_s_ray, k_s_mie=atmos.k_s_mie, k_a=2.0 * atmos.k_a)
        assert link_gain_direct(pos, 0.5, hazy, pf, 1.0).value < link_gain_direct(pos, 0.5, atmos, pf, 1.0).value

    @staticmethod
    def test_reduction_identity(profile):
        """L(x, y, alpha) = sin(alpha)/sin(beta) * L(0, r, beta)."""
        atmos, pf = profile
        for x, y, alpha in random_geometries(10, seed=7):
            assert_reduction_identity(atmos, pf, x, y, alpha)

    @staticmethod
    @pytest.mark.slow
    def test_reduction_identity_many_geometries(profile):
        atmos, pf = profile
        for x, y, alpha in random_geometries(200, seed=2024):
            assert_reduction_identity(atmos, pf, x, y, alpha)

    @staticmethod
    def test_reports_tail_bound(profile):
        atmos, pf = profile
        result = link_gain_direct(ReceiverPos(0.0, 200.0), 0.5, atmos, pf, 1.0)
        assert result.l_max == pytest.approx(30.0 / atmos.k_e)
        assert 0.0 <= result.tail_bound < 1e-10 * result.value
        assert result.evaluations > 0

    @staticmethod
    def test_collocated_receiver(profile):
        atmos, pf = profile
        with pytest.raises(TransmitterCollocatedError):
            link_gain_direct(ReceiverPos(0.0, 1e-4), 0.5, atmos, pf, 1.0)

    @staticmethod
    def test_elevation_domain(profile):
        atmos, pf = profile
        with pytest.raises(DomainError):
            link_gain_direct(ReceiverPos(0.0, 100.0), 0.0, atmos, pf, 1.0)
        with pytest.raises(DomainError):
            link_gain_direct(ReceiverPos(0.0, 100.0), 0.5, atmos, pf, 0.0)

    @staticmethod
    @patch('uvscatter.quadrature.quad')
    def test_unconverged_integral_raises(mock_quad, profile):
        atmos, pf = profile
        mock_quad.return_value = (2e-7, 1e-9, {'neval': 21}, 'The maximum number of subdivisions has been achieved.')
        with pytest.raises(QuadratureError) as exc_info:
            link_gain_direct(ReceiverPos(0.0, 200.0), math.pi / 2.0, atmos, pf, 1.0)
        assert exc_info.value.error_bound == 1e-9
        assert exc_info.value.estimate == 2e-7

    @staticmethod
    @patch('uvscatter.quadrature.quad')
    def test_imprecise_integral_accepted(mock_quad, profile):
        atmos, pf = profile
        mock_quad.return_value = (2e-7, 1e-15, {'neval': 21}, 'Roundoff error is detected.')
        result = link_gain_direct(ReceiverPos(0.0, 200.0), 0.5, atmos, pf, 1.0)
        assert result.value == 2e-7
        assert not result.converged

    @staticmethod
    def test_options_validated():
        with pytest.raises(DomainError):
            QuadratureOptions(rel_tol=0.0)
        with pytest.raises(DomainError):
            QuadratureOptions(limit=MIN_LIMIT - 1)
        assert QuadratureOptions(limit=MIN_LIMIT).limit == MIN_LIMIT


class TestBreakpoints:
    """Test cases for the quadrature breakpoints."""

    @staticmethod
    def test_spread_around_closest_approach():
        y, alpha = 1.0, math.radians(9.0)
        points = breakpoints(1.0, y * math.cos(alpha), 20000.0)
        center, width = y * math.cos(alpha), y * math.sin(alpha)
        assert center in points
        assert points == sorted(points)
        assert min(points) == pytest.approx(center - 3.0 * width)
        assert max(points) == pytest.approx(center + 300.0 * width)
        assert len(points) == 5

    @staticmethod
    def test_receiver_behind_transmitter():
        points = breakpoints(100.0 ** 2, -50.0, 20000.0)
        assert points == pytest.approx([300.0, 3000.0])

    @staticmethod
    def test_clipped_to_path():
        assert all(0.0 < p < 500.0 for p in breakpoints(400.0 ** 2, 300.0, 500.0))
