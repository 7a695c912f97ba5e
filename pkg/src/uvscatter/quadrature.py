"""Direct single-scatter link gain for a narrow beam.

L_g = integral over l of P(mu) * Omega(l) * k_s * exp(-k_e (l + l')) dl,
evaluated with QUADPACK's adaptive Gauss-Kronrod scheme on [0, l_max].
"""
import logging
import math
from dataclasses import dataclass, asdict
from typing import Dict, List

from scipy.integrate import quad

from uvscatter.atmosphere import AtmosphereParams, PhaseFunctionParams, PhaseMixture
from uvscatter.errors import DomainError, QuadratureError, TransmitterCollocatedError
from uvscatter.geometry import ReceiverPos

logger = logging.getLogger(__name__)

R_MIN = 1e-3

# breakpoint offsets from the closest approach, in units of the miss distance
BREAKPOINT_SPREADS = (3.0, 30.0, 300.0)
MIN_LIMIT = 2 * len(BREAKPOINT_SPREADS) + 3


@dataclass(frozen=True)
class QuadratureOptions:
    """Accuracy and truncation settings for the link-gain integral.

    ``fail_rel_error`` is the relative error bound above which an
    unconverged integral is an error rather than a logged warning.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-30
    l_max_factor: float = 30.0
    limit: int = 200
    fail_rel_error: float = 1e-6

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol!r}")
        if not self.abs_tol >= 0.0:
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol!r}")
        if not self.l_max_factor > 0.0:
            raise DomainError(f"l_max_factor must be > 0, got {self.l_max_factor!r}")
        # QUADPACK needs one subinterval per breakpoint gap
        if self.limit < MIN_LIMIT:
            raise DomainError(f"limit must be >= {MIN_LIMIT}, got {self.limit!r}")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class QuadratureResult:
    """Link gain with its convergence evidence."""

    value: float
    abs_error: float
    evaluations: int
    tail_bound: float
    l_max: float
    converged: bool

    def __float__(self) -> float:
        return self.value


def _tail_bound(mixture: PhaseMixture, atmos: AtmosphereParams, r: float, alpha: float,
                aperture_area: float, l_max: float) -> float:
    """Upper bound of the integral truncated beyond l_max."""
    if l_max <= r:
        return math.inf
    omega_max = aperture_area * math.sin(alpha) * l_max / (l_max - r) ** 3
    return mixture.peak() * omega_max * atmos.k_s / atmos.k_e * math.exp(-atmos.k_e * l_max)


def breakpoints(r2: float, y_cos: float, l_max: float) -> List[float]:
    """Interior points of [0, l_max] around the beam's closest approach to the receiver.

    The integrand peaks at l* = y cos(alpha) with a width of the order of the
    miss distance sqrt(r^2 - l*^2); behind the transmitter the peak sits at
    l = 0 with width r.
    """
    if y_cos > 0.0:
        center, width = y_cos, math.sqrt(max(r2 - y_cos * y_cos, 0.0))
    else:
        center, width = 0.0, math.sqrt(r2)
    candidates = [center]
    for spread in BREAKPOINT_SPREADS:
        candidates.extend((center - spread * width, center + spread * width))
    return sorted({p for p in candidates if 0.0 < p < l_max})


def link_gain_direct(pos: ReceiverPos, alpha: float, atmos: AtmosphereParams, pf: PhaseFunctionParams,
                     aperture_area: float, opts: QuadratureOptions = QuadratureOptions()) -> QuadratureResult:
    """Integrate the single-scatter link gain for a laser beam.

    Args:
        pos: Receiver ground position (m)
        alpha: Beam elevation (rad); (0, pi/2] for physical beams, (0, pi)
            accepted for the canonical on-axis geometry of the gain table
        atmos: Atmospheric coefficients
        pf: Phase-function parameters
        aperture_area: Receiver aperture area (m^2)
        opts: Quadrature options

    Returns:
        QuadratureResult: value with error bound, evaluation count and tail bound

    Raises:
        TransmitterCollocatedError: if the receiver is within R_MIN of the transmitter
        QuadratureError: if the integral did not converge
    """
    r = pos.r
    if r < R_MIN:
        raise TransmitterCollocatedError(f"receiver range {r!r} m is below r_min = {R_MIN} m")
    if not 0.0 < alpha < math.pi:
        raise DomainError(f"elevation must lie in (0, pi), got {alpha!r}")
    if not aperture_area > 0.0:
        raise DomainError(f"aperture area must be > 0, got {aperture_area!r}")
    atmos.require_scattering()

    mixture = PhaseMixture.from_params(atmos, pf)
    phase = mixture.scalar
    k_s, k_e = atmos.k_s, atmos.k_e
    x, y = pos.x, pos.y
    r2 = x * x + y * y
    cos_a = 0.0 if alpha == math.pi / 2.0 else math.cos(alpha)
    sin_a = math.sin(alpha)
    y_cos = y * cos_a
    weight = aperture_area * sin_a * k_s
    sqrt, exp = math.sqrt, math.exp

    def integrand(l: float) -> float:
        lp2 = r2 + l * l - 2.0 * y_cos * l
        lp = sqrt(lp2) if lp2 > 0.0 else 0.0
        if lp == 0.0:
            return 0.0
        mu = (y_cos - l) / lp
        mu = 1.0 if mu > 1.0 else (-1.0 if mu < -1.0 else mu)
        return phase(mu) * weight * l / (lp2 * lp) * exp(-k_e * (l + lp))

    l_max = opts.l_max_factor / k_e
    points = breakpoints(r2, y_cos, l_max)
    out = quad(integrand, 0.0, l_max, epsabs=opts.abs_tol, epsrel=opts.rel_tol,
               limit=opts.limit, points=points or None, full_output=1)
    value, abs_error, info = out[0], out[1], out[2]
    message = out[3] if len(out) > 3 else None
    evaluations = int(info.get('neval', 0))
    tail = _tail_bound(mixture, atmos, r, alpha, aperture_area, l_max)

    tolerance = max(opts.abs_tol, opts.rel_tol * abs(value))
    converged = message is None or abs_error <= tolerance
    if not converged:
        if abs_error > max(opts.abs_tol, opts.fail_rel_error * abs(value)):
            raise QuadratureError(
                f"link-gain quadrature failed at ({x:g}, {y:g}), alpha={alpha:.6g}: {message}",
                estimate=value, error_bound=abs_error)
        logger.warning("Quadrature at (%g, %g), alpha=%.6g accepted with error bound %.3g: %s",
                       x, y, alpha, abs_error, message)
    if tail > tolerance:
        logger.debug("Truncation tail bound %.3g exceeds tolerance %.3g at (%g, %g)", tail, tolerance, x, y)
    logger.debug("L_g(%g, %g, %.6g) = %.10g +/- %.2g (%d evaluations)",
                 x, y, alpha, value, abs_error, evaluations)

    return QuadratureResult(
        value=max(value, 0.0),
        abs_error=abs_error,
        evaluations=evaluations,
        tail_bound=tail,
        l_max=l_max,
        converged=converged,
    )
