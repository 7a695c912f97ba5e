"""Axis-aligned ellipse model of iso-gain contours.

The ellipse is centered on the Y axis, x^2/a^2 + (y - y0)^2/b^2 = 1, which
is linear in its coefficients once written as x^2 = k1 + k2 y + k3 y^2.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple, Union

import numpy as np

from uvscatter.errors import AxisOrientationError, DegenerateDataError, NonEllipticFitError
from uvscatter.field import Contour

logger = logging.getLogger(__name__)

# b < a <= b * (1 + CIRCULAR_TOL) is reported as a circle
CIRCULAR_TOL = 0.01

Points = Union[np.ndarray, Sequence[Tuple[float, float]]]


@dataclass(frozen=True)
class EllipseFit:
    y0: float
    a: float
    b: float
    rms_residual: float

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b


@dataclass(frozen=True)
class EllipseCharacteristics:
    eccentricity: float
    left_focus: Tuple[float, float]
    right_endpoint: Tuple[float, float]
    left_endpoint: Tuple[float, float]


def fit_ellipse(points: Points) -> EllipseFit:
    """Least-squares fit of x^2 = k1 + k2 y + k3 y^2.

    Ordinates are centered on their mean before solving the Vandermonde
    system by orthogonal decomposition.

    Args:
        points: (x, y) samples of the contour (m)

    Returns:
        EllipseFit: center ordinate, semi-axes and rms residual of x^2

    Raises:
        DegenerateDataError: fewer than 3 distinct y values, all x = 0,
            or a rank-deficient system
        NonEllipticFitError: the solution is not an ellipse (k3 >= 0 or a^2 <= 0)
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateDataError(f"expected an (M, 2) array of points, got shape {pts.shape}")
    x, y = pts[:, 0], pts[:, 1]
    if np.unique(y).size < 3:
        raise DegenerateDataError("at least 3 distinct y values are needed")
    if np.all(x == 0.0):
        raise DegenerateDataError("all points lie on the Y axis")

    y_mean = float(np.mean(y))
    yc = y - y_mean
    vandermonde = np.column_stack((np.ones_like(yc), yc, yc * yc))
    x2 = x * x
    coeffs, _, rank, _ = np.linalg.lstsq(vandermonde, x2, rcond=None)
    if rank < 3:
        raise DegenerateDataError(f"Vandermonde system is rank deficient (rank {rank})")
    c1, c2, c3 = (float(c) for c in coeffs)
    if c3 >= 0.0:
        raise NonEllipticFitError(f"quadratic coefficient k3 = {c3:.6g} must be negative")

    y0_centered = -c2 / (2.0 * c3)
    a2 = c1 - c3 * y0_centered ** 2
    if a2 <= 0.0:
        raise NonEllipticFitError(f"fitted a^2 = {a2:.6g} must be positive")
    b2 = -a2 / c3

    residual = vandermonde @ coeffs - x2
    fit = EllipseFit(
        y0=y_mean + y0_centered,
        a=math.sqrt(a2),
        b=math.sqrt(b2),
        rms_residual=float(np.sqrt(np.mean(residual * residual))),
    )
    logger.debug("Ellipse fit over %d points: y0=%.6g a=%.6g b=%.6g rms=%.3g",
                 len(pts), fit.y0, fit.a, fit.b, fit.rms_residual)
    return fit


def characteristics(fit: EllipseFit, circular_tol: float = CIRCULAR_TOL) -> EllipseCharacteristics:
    """Eccentricity, left focus and Y-axis endpoints of a fitted ellipse.

    Raises:
        AxisOrientationError: if the major axis lies along X beyond the circular tolerance
    """
    if fit.a > fit.b * (1.0 + circular_tol):
        raise AxisOrientationError(f"major axis along X (a = {fit.a:.6g} > b = {fit.b:.6g})")
    focal = math.sqrt(fit.b * fit.b - fit.a * fit.a) if fit.b > fit.a else 0.0
    return EllipseCharacteristics(
        eccentricity=focal / fit.b,
        left_focus=(0.0, fit.y0 - focal),
        right_endpoint=(0.0, fit.y0 + fit.b),
        left_endpoint=(0.0, fit.y0 - fit.b),
    )


def fit_contour(contour: Contour) -> EllipseFit:
    """Fit the ellipse model to a contour's main polyline."""
    return fit_ellipse(contour.main_line)


def to_json(fit: EllipseFit, chars: EllipseCharacteristics) -> Dict[str, Any]:
    """Serializable fit summary."""
    return {
        'y0': fit.y0,
        'a': fit.a,
        'b': fit.b,
        'rms_residual': fit.rms_residual,
        'area': fit.area,
        'eccentricity': chars.eccentricity,
        'left_focus': list(chars.left_focus),
        'endpoints': {
            'left': list(chars.left_endpoint),
            'right': list(chars.right_endpoint),
        },
    }
