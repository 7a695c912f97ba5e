"""Single-scatter link geometry, canonical reduction, and beam sampling.

The transmitter sits at the ground origin and emits along the elevation angle
alpha in the Y-Z plane; the receiver lies on the ground at (x, y). A scattering
point at distance l along the beam is (0, l cos(alpha), l sin(alpha)).
"""
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from uvscatter.errors import (
    DegenerateAxisError,
    DegenerateGeometryError,
    DomainError,
    TransmitterCollocatedError,
)

ArrayLike = Union[float, np.ndarray]

VERTICAL_BEAM_EPS = 1e-9
UNIT_NORM_TOL = 1e-12
SIN_BETA_EPS = 1e-12


@dataclass(frozen=True)
class ReceiverPos:
    """Ground position of the receiver (m) relative to the transmitter."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"receiver position must be finite, got ({self.x!r}, {self.y!r})")

    @property
    def r(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class BeamDirection:
    """Unit emission direction of a narrow beam."""

    zx: float
    zy: float
    zz: float

    def __post_init__(self):
        norm2 = self.zx * self.zx + self.zy * self.zy + self.zz * self.zz
        if abs(norm2 - 1.0) > UNIT_NORM_TOL:
            raise DomainError(f"beam direction must be a unit vector, |z|^2 = {norm2!r}")


@dataclass(frozen=True)
class StandardForm:
    """Canonical geometry L(0, r, beta) and the gain scale sin(alpha)/sin(beta)."""

    r: float
    beta: float
    scale: float


def receiver_distance(pos: ReceiverPos, alpha: float, l: ArrayLike) -> ArrayLike:
    """Distance l' from the scattering point at path length l to the receiver."""
    l_arr = np.asarray(l, dtype=float)
    if np.any(l_arr < 0.0):
        raise DomainError("path length l must be >= 0")
    lp2 = pos.x * pos.x + pos.y * pos.y + l_arr * l_arr - 2.0 * pos.y * l_arr * math.cos(alpha)
    lp = np.sqrt(np.maximum(lp2, 0.0))
    return float(lp) if np.ndim(lp) == 0 else lp


def _nonzero_distance(pos: ReceiverPos, alpha: float, l: ArrayLike) -> np.ndarray:
    lp = np.asarray(receiver_distance(pos, alpha, l))
    if np.any(lp == 0.0):
        raise DegenerateGeometryError("scattering point coincides with the receiver (l' = 0)")
    return lp


def scattering_cosine(pos: ReceiverPos, alpha: float, l: ArrayLike) -> ArrayLike:
    """Cosine of the scattering angle, mu = (y cos(alpha) - l) / l'."""
    lp = _nonzero_distance(pos, alpha, l)
    mu = np.clip((pos.y * math.cos(alpha) - np.asarray(l, dtype=float)) / lp, -1.0, 1.0)
    return float(mu) if np.ndim(mu) == 0 else mu


def solid_angle(pos: ReceiverPos, alpha: float, l: ArrayLike, aperture_area: float) -> ArrayLike:
    """Solid angle (sr) of the receiver aperture seen from the scattering point."""
    if not aperture_area > 0.0:
        raise DomainError(f"aperture area must be > 0, got {aperture_area!r}")
    lp = _nonzero_distance(pos, alpha, l)
    omega = aperture_area * np.asarray(l, dtype=float) * math.sin(alpha) / lp ** 3
    return float(omega) if np.ndim(omega) == 0 else omega


def standard_form_arrays(x: ArrayLike, y: ArrayLike, alpha: ArrayLike
                         ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized canonical reduction.

    Returns:
        tuple: (r, beta, scale) arrays; beta and scale are NaN where r = 0
        or sin(beta) = 0.
    """
    x, y, alpha = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, alpha)))
    r = np.hypot(x, y)
    with np.errstate(invalid='ignore', divide='ignore'):
        cos_alpha = np.where(alpha == math.pi / 2.0, 0.0, np.cos(alpha))
        cos_beta = np.clip(np.where(r > 0.0, y / r, np.nan) * cos_alpha, -1.0, 1.0)
        beta = np.arccos(cos_beta)
        # on the beam azimuth the reduction is the identity
        beta = np.where((x == 0.0) & (y > 0.0), alpha, beta)
        sin_beta = np.sin(beta)
        scale = np.where((x == 0.0) & (y > 0.0), 1.0, np.sin(alpha) / sin_beta)
    invalid = ~(sin_beta > SIN_BETA_EPS)
    beta = np.where(invalid, np.nan, beta)
    scale = np.where(invalid, np.nan, scale)
    return r, beta, scale


def reduce_to_standard(pos: ReceiverPos, alpha: float) -> StandardForm:
    """Map (x, y, alpha) to the canonical on-axis geometry (r, beta).

    Raises:
        TransmitterCollocatedError: if the receiver sits on the transmitter
        DegenerateAxisError: if sin(beta) = 0
    """
    if pos.r == 0.0:
        raise TransmitterCollocatedError("receiver coincides with the transmitter (r = 0)")
    r, beta, scale = standard_form_arrays(pos.x, pos.y, alpha)
    if not math.isfinite(float(beta)):
        raise DegenerateAxisError(f"sin(beta) = 0 for receiver ({pos.x}, {pos.y}) at alpha={alpha}")
    return StandardForm(r=float(r), beta=float(beta), scale=float(scale))


def beam_directions(alpha: float, phi_d: float, xi_theta: ArrayLike, xi_phi: ArrayLike
                    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directions inside the emission cone for given uniform draws.

    The polar angle about the beam center is arccos(1 - xi (1 - cos(phi_d/2)))
    and the azimuth is 2 pi xi, so directions are uniform over the cone's
    solid angle.
    """
    xi_theta = np.asarray(xi_theta, dtype=float)
    xi_phi = np.asarray(xi_phi, dtype=float)
    one_minus_cos_half = 2.0 * math.sin(phi_d / 4.0) ** 2
    theta = np.arccos(1.0 - xi_theta * one_minus_cos_half)
    phi = 2.0 * math.pi * xi_phi
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    sin_p, cos_p = np.sin(phi), np.cos(phi)
    sin_a, cos_a = math.sin(alpha), math.cos(alpha)
    zx = sin_t * sin_p
    zy = -sin_t * cos_p * sin_a + cos_t * cos_a
    zz = sin_t * cos_p * cos_a + cos_t * sin_a
    return zx, zy, zz


def sample_beam_direction(alpha: float, phi_d: float, rng: np.random.Generator) -> BeamDirection:
    """Draw one emission direction uniformly from the divergence cone."""
    if not 0.0 <= phi_d < math.pi:
        raise DomainError(f"divergence angle must lie in [0, pi), got {phi_d!r}")
    xi_theta, xi_phi = rng.random(2)
    zx, zy, zz = beam_directions(alpha, phi_d, xi_theta, xi_phi)
    return BeamDirection(float(zx), float(zy), float(zz))


def transform_arrays(x: ArrayLike, y: ArrayLike, zx: ArrayLike, zy: ArrayLike, zz: ArrayLike
                     ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rotate receiver coordinates into the frame of tilted beams.

    Returns:
        tuple: (x', y', alpha') arrays; alpha' <= 0 marks beams at or below
        the horizon.
    """
    x, y, zx, zy, zz = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, zx, zy, zz)))
    n = np.hypot(zx, zy)
    vertical = n < VERTICAL_BEAM_EPS
    safe_n = np.where(vertical, 1.0, n)
    x_new = np.where(vertical, x, (zy * x - zx * y) / safe_n)
    y_new = np.where(vertical, y, (zx * x + zy * y) / safe_n)
    # atan2(zz, n) == arcsin(zz) for unit vectors
    alpha_new = np.where(vertical, math.pi / 2.0, np.arctan2(zz, n))
    return x_new, y_new, alpha_new


def transform_receiver(pos: ReceiverPos, direction: BeamDirection) -> Tuple[float, float, float]:
    """Express the receiver in the standard frame of a tilted narrow beam.

    Returns:
        tuple: (x', y', alpha')

    Raises:
        DomainError: if the beam points at or below the horizon
    """
    if direction.zz <= 0.0:
        raise DomainError(f"beam direction is below the horizon (zz = {direction.zz!r})")
    x_new, y_new, alpha_new = transform_arrays(pos.x, pos.y, direction.zx, direction.zy, direction.zz)
    return float(x_new), float(y_new), float(alpha_new)
