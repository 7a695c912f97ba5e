"""Monte Carlo link gain of a divergent (LED) source.

Each sampled beam is rotated into its own standard frame, reduced to the
canonical geometry and looked up in the gain table; the LED gain is the mean
over the sampled beams.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from uvscatter.errors import DomainError, TableRangeError
from uvscatter.gaintable import INTERP_LOG, GainTable, gain_via_table, interpolate
from uvscatter.geometry import ReceiverPos, beam_directions, standard_form_arrays, transform_arrays
from uvscatter.quadrature import R_MIN

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, index: int) -> int:
    """Mix a global seed with a stream index (SplitMix64 finalizer)."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SourceSpec:
    """Transmitter emission cone and receiver aperture."""

    alpha: float
    phi_d: float
    aperture_area: float
    n_beams: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= math.pi / 2.0:
            raise DomainError(f"beam elevation must lie in (0, pi/2], got {self.alpha!r}")
        if not 0.0 <= self.phi_d < math.pi:
            raise DomainError(f"divergence angle must lie in [0, pi), got {self.phi_d!r}")
        if not self.aperture_area > 0.0:
            raise DomainError(f"aperture area must be > 0, got {self.aperture_area!r}")
        if self.n_beams < 1:
            raise DomainError(f"n_beams must be >= 1, got {self.n_beams!r}")
        if not 0 <= self.seed <= _MASK64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def is_laser(self) -> bool:
        return self.phi_d == 0.0

    def to_dict(self) -> dict:
        return {
            'alpha_deg': math.degrees(self.alpha),
            'phi_d_deg': math.degrees(self.phi_d),
            'aperture_area': self.aperture_area,
            'n_beams': self.n_beams,
            'seed': self.seed,
        }


@dataclass(frozen=True)
class LedResult:
    """Sample mean of the beam gains and its standard error."""

    mean: float
    std_error: float
    n_beams: int
    below_horizon: int = 0
    collocated: int = 0


def aperture_scale(src: SourceSpec, table: GainTable) -> float:
    """Ratio of the source's aperture to the one the table was built with."""
    built_with = table.meta.get('aperture_area')
    if not built_with:
        return 1.0
    return src.aperture_area / float(built_with)


def led_gain(pos: ReceiverPos, src: SourceSpec, table: GainTable, mode: str = INTERP_LOG,
             stream: Optional[int] = None) -> LedResult:
    """Average table-backed gains over N beams drawn from the emission cone.

    Args:
        pos: Receiver ground position (m)
        src: Source description; ``src.seed`` seeds the generator
        table: Canonical gain table
        mode: Table interpolation mode
        stream: Optional stream index mixed into the seed, so that every
            pixel of a field gets an independent, order-free generator

    Returns:
        LedResult: mean, standard error and counts of dropped beams

    Raises:
        TableRangeError: if any sampled beam maps outside the table,
            naming the beam index
    """
    scale = aperture_scale(src, table)
    n = src.n_beams

    if pos.r < R_MIN:
        logger.warning("Receiver (%g, %g) is within r_min of the transmitter; all %d beams contribute 0",
                       pos.x, pos.y, n)
        return LedResult(mean=0.0, std_error=0.0, n_beams=n, collocated=n)

    if src.is_laser:
        return LedResult(mean=gain_via_table(table, pos, src.alpha, mode) * scale, std_error=0.0, n_beams=n)

    seed = src.seed if stream is None else derive_seed(src.seed, stream)
    rng = np.random.default_rng(seed)
    # row k holds the draws sample_beam_direction would take for beam k
    draws = rng.random((n, 2))
    zx, zy, zz = beam_directions(src.alpha, src.phi_d, draws[:, 0], draws[:, 1])

    x_new, y_new, alpha_new = transform_arrays(pos.x, pos.y, zx, zy, zz)
    above = alpha_new > 0.0
    below_horizon = int(n - np.count_nonzero(above))

    gains = np.zeros(n)
    if np.any(above):
        r, beta, beam_scale = standard_form_arrays(x_new[above], y_new[above], alpha_new[above])
        beam_index = np.flatnonzero(above)
        outside = ~table.covers(r, beta)
        if np.any(outside):
            k = int(np.flatnonzero(outside)[0])
            if math.isfinite(beta[k]):
                table.check_range(r[k:k + 1], beta[k:k + 1], beam_index=int(beam_index[k]))
            raise TableRangeError("beam has no standard form (sin(beta) = 0)", axis='beta',
                                  beam_index=int(beam_index[k]))
        gains[above] = interpolate(table, r, beta, mode) * beam_scale

    if below_horizon:
        logger.debug("%d of %d beams at or below the horizon contribute 0 at (%g, %g)",
                     below_horizon, n, pos.x, pos.y)

    gains *= scale
    mean = float(np.mean(gains))
    std_error = float(np.std(gains, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return LedResult(mean=mean, std_error=std_error, n_beams=n, below_horizon=below_horizon)
