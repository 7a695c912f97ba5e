"""Atmospheric coefficients and the single-scatter phase function.

The phase function is the generalized-Rayleigh plus Henyey-Greenstein mixture
weighted by the Rayleigh and Mie scattering coefficients. Coefficients are
always per meter; named profiles may be declared per kilometer and are
converted on load.
"""
import logging
import math
from dataclasses import dataclass, asdict
from typing import Any, Dict, Mapping, Tuple, Union

import numpy as np

from uvscatter.errors import ConfigError, DomainError, InvalidAtmosphereError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_UNIT_SCALE = {'per_m': 1.0, 'per_km': 1.0e-3}


@dataclass(frozen=True)
class AtmosphereParams:
    """Rayleigh/Mie scattering and absorption coefficients (m^-1)."""

    k_s_ray: float
    k_s_mie: float
    k_a: float

    def __post_init__(self):
        for name in ('k_s_ray', 'k_s_mie', 'k_a'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise InvalidAtmosphereError(f"{name} must be a finite value >= 0, got {value!r}")

    @property
    def k_s(self) -> float:
        """Total scattering coefficient."""
        return self.k_s_ray + self.k_s_mie

    @property
    def k_e(self) -> float:
        """Total extinction coefficient."""
        return self.k_s + self.k_a

    def require_scattering(self) -> None:
        if self.k_s <= 0.0:
            raise InvalidAtmosphereError("k_s_ray + k_s_mie must be > 0")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class PhaseFunctionParams:
    """Shape parameters of the Rayleigh and Mie phase functions."""

    g: float
    f: float
    gamma_r: float

    def __post_init__(self):
        if not -1.0 < self.g < 1.0:
            raise DomainError(f"asymmetry factor g must lie in (-1, 1), got {self.g!r}")
        if not 0.0 <= self.f <= 1.0:
            raise DomainError(f"forward-peak weight f must lie in [0, 1], got {self.f!r}")
        if not self.gamma_r >= 0.0:
            raise DomainError(f"gamma_r must be >= 0, got {self.gamma_r!r}")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


LITERATURE_DEFAULT = 'literature-default'

PROFILES: Dict[str, Tuple[AtmosphereParams, PhaseFunctionParams]] = {
    LITERATURE_DEFAULT: (
        AtmosphereParams(k_s_ray=2.4e-4, k_s_mie=2.5e-4, k_a=9.0e-4),
        PhaseFunctionParams(g=0.72, f=0.5, gamma_r=0.017),
    ),
}


def get_profile(name: str) -> Tuple[AtmosphereParams, PhaseFunctionParams]:
    """Look up a built-in named profile."""
    try:
        return PROFILES[name]
    except KeyError:
        known = ', '.join(sorted(PROFILES))
        raise ConfigError(f"Unknown atmosphere profile '{name}' (known: {known})") from None


def profile_from_mapping(mapping: Mapping[str, Any]) -> Tuple[AtmosphereParams, PhaseFunctionParams]:
    """Build a profile from a config table.

    Args:
        mapping: Keys ``k_s_ray``, ``k_s_mie``, ``k_a``, ``g``, ``f``,
            ``gamma_r`` and an optional ``units`` of ``per_m`` (default)
            or ``per_km``. Missing keys fall back to the literature default.

    Returns:
        tuple: (AtmosphereParams, PhaseFunctionParams) in per-meter units
    """
    units = mapping.get('units', 'per_m')
    if units not in _UNIT_SCALE:
        raise ConfigError(f"Unknown coefficient units '{units}', expected one of {sorted(_UNIT_SCALE)}")
    scale = _UNIT_SCALE[units]
    base_atmos, base_pf = PROFILES[LITERATURE_DEFAULT]

    def coefficient(key: str) -> float:
        if key in mapping:
            return float(mapping[key]) * scale
        return getattr(base_atmos, key)

    atmos = AtmosphereParams(
        k_s_ray=coefficient('k_s_ray'),
        k_s_mie=coefficient('k_s_mie'),
        k_a=coefficient('k_a'),
    )
    atmos.require_scattering()
    pf = PhaseFunctionParams(
        g=float(mapping.get('g', base_pf.g)),
        f=float(mapping.get('f', base_pf.f)),
        gamma_r=float(mapping.get('gamma_r', base_pf.gamma_r)),
    )
    return atmos, pf


def rayleigh_phase(mu: ArrayLike, gamma_r: float) -> ArrayLike:
    """Generalized Rayleigh phase function, even in mu."""
    mu = np.asarray(mu, dtype=float)
    return 3.0 * (1.0 + 3.0 * gamma_r + (1.0 - gamma_r) * mu ** 2) / (16.0 * np.pi * (1.0 + 2.0 * gamma_r))


def mie_phase(mu: ArrayLike, g: float, f: float) -> ArrayLike:
    """Henyey-Greenstein phase function with a forward-peak correction."""
    mu = np.asarray(mu, dtype=float)
    g2 = g * g
    hg = (1.0 + g2 - 2.0 * g * mu) ** -1.5
    correction = f * (3.0 * mu ** 2 - 1.0) / (2.0 * (1.0 + g2) ** 1.5)
    return (1.0 - g2) / (4.0 * np.pi) * (hg + correction)


def phase_function(mu: ArrayLike, atmos: AtmosphereParams, pf: PhaseFunctionParams) -> ArrayLike:
    """Evaluate the scattering phase function P(mu) (sr^-1).

    Args:
        mu: Cosine of the scattering angle, scalar or array in [-1, 1]
        atmos: Scattering coefficients used as mixture weights
        pf: Phase-function shape parameters

    Returns:
        float or numpy.ndarray: probability density per steradian

    Raises:
        DomainError: if any |mu| > 1
        InvalidAtmosphereError: if k_s = 0
    """
    atmos.require_scattering()
    mu_arr = np.asarray(mu, dtype=float)
    if np.any(np.abs(mu_arr) > 1.0) or np.any(np.isnan(mu_arr)):
        raise DomainError("cosine of scattering angle must lie in [-1, 1]")
    value = PhaseMixture.from_params(atmos, pf)(mu_arr)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class PhaseMixture:
    """Phase function with its mixture constants folded in.

    ``__call__`` works on arrays; ``scalar`` is the same formula on plain
    floats for use inside scalar quadrature loops.
    """

    w_ray: float
    w_mie: float
    ray_const: float
    ray_quad: float
    mie_norm: float
    hg_a: float
    hg_b: float
    corr: float

    @classmethod
    def from_params(cls, atmos: AtmosphereParams, pf: PhaseFunctionParams) -> 'PhaseMixture':
        atmos.require_scattering()
        k_s = atmos.k_s
        gr = pf.gamma_r
        g2 = pf.g * pf.g
        ray_den = 16.0 * math.pi * (1.0 + 2.0 * gr)
        return cls(
            w_ray=atmos.k_s_ray / k_s,
            w_mie=atmos.k_s_mie / k_s,
            ray_const=3.0 * (1.0 + 3.0 * gr) / ray_den,
            ray_quad=3.0 * (1.0 - gr) / ray_den,
            mie_norm=(1.0 - g2) / (4.0 * math.pi),
            hg_a=1.0 + g2,
            hg_b=2.0 * pf.g,
            corr=pf.f / (2.0 * (1.0 + g2) ** 1.5),
        )

    def __call__(self, mu: ArrayLike) -> ArrayLike:
        mu = np.asarray(mu, dtype=float)
        mu2 = mu * mu
        p_ray = self.ray_const + self.ray_quad * mu2
        p_mie = self.mie_norm * ((self.hg_a - self.hg_b * mu) ** -1.5 + self.corr * (3.0 * mu2 - 1.0))
        return self.w_ray * p_ray + self.w_mie * p_mie

    def scalar(self, mu: float) -> float:
        mu2 = mu * mu
        base = self.hg_a - self.hg_b * mu
        p_ray = self.ray_const + self.ray_quad * mu2
        p_mie = self.mie_norm * (1.0 / (base * math.sqrt(base)) + self.corr * (3.0 * mu2 - 1.0))
        return self.w_ray * p_ray + self.w_mie * p_mie

    def peak(self) -> float:
        """Upper bound of P over [-1, 1] (attained at an endpoint)."""
        return max(self.scalar(1.0), self.scalar(-1.0))
