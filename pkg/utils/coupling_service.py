"""
Coupling Service Module

This module handles the configuration space (S^2)^3 of a coupled pair of
surface points:
- Configurations (m_x, m_y, alpha) built from pairs of surface points
- Great-circle coordinates (theta, phi) and their best-fit extension
- The coefficients f, g and the sign A, with f - g = 2 cos(theta+phi)(A - cos(theta-phi))
- The nested regions S4 in S3 in S2 in S1 and calibration of c3, c4
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    DegenerateConfigurationError, ParameterError, PreconditionError, SamplingError
)
from .surface_service import gauss_map

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

BRANCH_TOL = 1e-12
REGION_TOL = 1e-9
E3 = np.array([0.0, 0.0, 1.0])


class Region(str, Enum):
    S4 = 'S4'
    S3 = 'S3'
    S2 = 'S2'
    S1 = 'S1'
    OUTSIDE = 'outside'


@dataclass(frozen=True)
class Configuration:
    """Gauss vectors of both points and the unit chord direction alpha"""
    m_x: tuple
    m_y: tuple
    alpha: tuple

    def __post_init__(self):
        for label in ('m_x', 'm_y', 'alpha'):
            vector = np.asarray(getattr(self, label), dtype=float)
            if vector.shape != (3,) or abs(np.linalg.norm(vector) - 1.0) > 1e-12:
                raise ParameterError(f"{label} must be a unit 3-vector, got {getattr(self, label)}")

    def arrays(self):
        return (np.asarray(self.m_x, dtype=float), np.asarray(self.m_y, dtype=float),
                np.asarray(self.alpha, dtype=float))


@dataclass(frozen=True)
class GreatCircleCoords:
    """
    Signed arcs from alpha to m_x (theta) and m_y (phi) along the common circle.

    orientation is +1 under the normal convention (n_z > 0, then n_y > 0,
    then n_x > 0) and -1 for the flipped circle.
    """
    theta: float
    phi: float
    orientation: int
    normal: tuple

    def flipped(self):
        return GreatCircleCoords(-self.theta, -self.phi, -self.orientation, self.normal)

    def reconstruct(self, alpha):
        """Rebuild (m_x, m_y) from alpha"""
        alpha = np.asarray(alpha, dtype=float)
        normal = self.orientation * np.asarray(self.normal, dtype=float)
        tangent = np.cross(normal, alpha)
        m_x = math.cos(self.theta) * alpha + math.sin(self.theta) * tangent
        m_y = math.cos(self.phi) * alpha + math.sin(self.phi) * tangent
        return m_x, m_y


@dataclass(frozen=True)
class RegionParams:
    """Region radii; c3 and c4 are calibrated outputs, not inputs"""
    c1: float = 0.1
    c2: float = 0.1
    delta3: float = 0.05
    tol_gc: float = 1e-9

    @property
    def s2_separation(self):
        """Distance floor of S2, midway between c1 and the S3 separation bound"""
        return (self.c1 + (2.0 * self.c1 - math.sqrt(2.0) * self.delta3)) / 2.0

    @property
    def s2_latitude(self):
        return 2.0 * self.delta3

    def as_dict(self):
        return {'c1': self.c1, 'c2': self.c2, 'delta3': self.delta3, 'tol_gc': self.tol_gc}


@dataclass(frozen=True)
class Branch:
    A: int
    f: float
    g: float


@dataclass
class CalibrationResult:
    c3: float
    c4: float
    c4_band_min: float
    counts: dict
    n: int
    params: RegionParams = field(default_factory=RegionParams)

    def as_dict(self):
        return {
            'c3': self.c3,
            'c4': self.c4,
            'c4_band_min': self.c4_band_min,
            'region_counts': dict(self.counts),
            'n': self.n,
            'params': self.params.as_dict()
        }


def configuration_of(surface, p, q):
    """
    Configuration of two surface points given in domain coordinates

    Args:
        surface (MinimalGraphSurface): Surface
        p (tuple): First domain point
        q (tuple): Second domain point

    Returns:
        Configuration: (m(p), m(q), alpha) with alpha = (P - Q)/|P - Q|
    """
    P = np.array(surface.point(*p).position)
    Q = np.array(surface.point(*q).position)
    chord = P - Q
    length = float(np.linalg.norm(chord))
    if length < 1e-14:
        raise DegenerateConfigurationError(f"points {tuple(p)} and {tuple(q)} coincide on {surface.name}")
    return Configuration(
        m_x=tuple(float(c) for c in gauss_map(surface, p)),
        m_y=tuple(float(c) for c in gauss_map(surface, q)),
        alpha=tuple(float(c) for c in chord / length)
    )


def is_great_circle(config, tol=1e-9):
    """True iff m_x, m_y, alpha are coplanar through the origin within tol"""
    m_x, m_y, alpha = config.arrays()
    return bool(abs(np.linalg.det(np.stack([m_x, m_y, alpha]))) <= tol)


def _orient(normal):
    """Flip normals to n_z > 0, ties by n_y > 0, then n_x > 0"""
    normal = np.array(normal, dtype=float, copy=True)
    tie = 1e-12
    z, y, x = normal[..., 2], normal[..., 1], normal[..., 0]
    negative = (z < -tie) | ((np.abs(z) <= tie) & ((y < -tie) | ((np.abs(y) <= tie) & (x < 0))))
    normal[negative] *= -1.0
    return normal


def _perpendicular_basis(alpha):
    """Orthonormal (e1, e2) spanning the plane orthogonal to alpha"""
    helper = np.broadcast_to(E3, alpha.shape).copy()
    near_pole = np.abs(alpha @ E3) > 0.9
    helper[near_pole] = np.array([0.0, 1.0, 0.0])
    e1 = helper - np.sum(helper * alpha, axis=-1, keepdims=True) * alpha
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(alpha, e1)
    return e1, e2


def _arcs(normal, alpha, m):
    angle = np.arctan2(np.sum(normal * np.cross(alpha, m), axis=-1), np.sum(alpha * m, axis=-1))
    return np.where(angle <= -math.pi, angle + 2.0 * math.pi, angle)


def _circle_normals(alpha, m_x, m_y):
    """Exact circle normals for coplanar triples (rows of N x 3 arrays)"""
    cross_x = np.cross(alpha, m_x)
    cross_y = np.cross(alpha, m_y)
    norm_x = np.linalg.norm(cross_x, axis=-1)
    norm_y = np.linalg.norm(cross_y, axis=-1)
    use_x = norm_x >= norm_y
    chosen = np.where(use_x[:, None], cross_x, cross_y)
    size = np.maximum(norm_x, norm_y)
    collinear = size < 1e-12
    normal = chosen / np.where(collinear, 1.0, size)[:, None]
    if collinear.any():
        e1, _ = _perpendicular_basis(alpha[collinear])
        normal[collinear] = e1
    return _orient(normal)


def _best_fit_normals(alpha, m_x, m_y):
    """
    Normal of the great circle through alpha closest to m_x and m_y

    Minimizes (n.m_x)^2 + (n.m_y)^2 over unit n orthogonal to alpha, the
    smallest eigenvector of the projected 2x2 scatter matrix.
    """
    e1, e2 = _perpendicular_basis(alpha)
    a1, a2 = np.sum(m_x * e1, axis=-1), np.sum(m_x * e2, axis=-1)
    b1, b2 = np.sum(m_y * e1, axis=-1), np.sum(m_y * e2, axis=-1)
    p = a1 * a1 + b1 * b1
    q = a1 * a2 + b1 * b2
    r = a2 * a2 + b2 * b2
    gamma = 0.5 * np.arctan2(2.0 * q, p - r) + math.pi / 2.0
    normal = np.cos(gamma)[:, None] * e1 + np.sin(gamma)[:, None] * e2
    degenerate = (p + r) < 1e-24
    if degenerate.any():
        normal[degenerate] = e1[degenerate]
    return _orient(normal)


def great_circle_arrays(alpha, m_x, m_y):
    """Vectorized (theta, phi, normal) for coplanar rows"""
    alpha, m_x, m_y = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (alpha, m_x, m_y))
    normal = _circle_normals(alpha, m_x, m_y)
    return _arcs(normal, alpha, m_x), _arcs(normal, alpha, m_y), normal


def extended_arrays(alpha, m_x, m_y):
    """
    Extended coordinates off the great-circle set

    Returns:
        tuple: (theta, phi, normal, latitude_x, latitude_y), latitudes being
        the angular distances of m_x, m_y from the best-fit circle
    """
    alpha, m_x, m_y = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (alpha, m_x, m_y))
    normal = _best_fit_normals(alpha, m_x, m_y)
    lat_x = np.arcsin(np.clip(np.abs(np.sum(normal * m_x, axis=-1)), 0.0, 1.0))
    lat_y = np.arcsin(np.clip(np.abs(np.sum(normal * m_y, axis=-1)), 0.0, 1.0))
    return _arcs(normal, alpha, m_x), _arcs(normal, alpha, m_y), normal, lat_x, lat_y


def great_circle_coords(config, tol=1e-9):
    """
    Great-circle coordinates of a coplanar configuration

    Raises:
        PreconditionError: The configuration is not coplanar within tol
    """
    if not is_great_circle(config, tol):
        raise PreconditionError("great-circle coordinates need a coplanar configuration")
    m_x, m_y, alpha = config.arrays()
    theta, phi, normal = great_circle_arrays(alpha, m_x, m_y)
    return GreatCircleCoords(float(theta[0]), float(phi[0]), 1, tuple(float(c) for c in normal[0]))


def extended_coords(config):
    """Extended (theta, phi) of any configuration; exact on coplanar ones"""
    m_x, m_y, alpha = config.arrays()
    theta, phi, normal, _, _ = extended_arrays(alpha, m_x, m_y)
    return GreatCircleCoords(float(theta[0]), float(phi[0]), 1, tuple(float(c) for c in normal[0]))


def fg(theta, phi):
    """
    Branches (A, f, g) with f = (sin theta - A sin phi)^2 and g = (cos theta - A cos phi)^2

    A = sign(cos(theta + phi)); both branches are returned where the sign is
    ambiguous (|cos(theta + phi)| <= 1e-12).
    """
    c = math.cos(theta + phi)
    signs = (1, -1) if abs(c) <= BRANCH_TOL else ((1,) if c > 0 else (-1,))
    return [
        Branch(A=a, f=(math.sin(theta) - a * math.sin(phi)) ** 2, g=(math.cos(theta) - a * math.cos(phi)) ** 2)
        for a in signs
    ]


def principal_fg(theta, phi):
    """Vectorized principal branch; A = +1 where cos(theta + phi) == 0"""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    A = np.where(np.cos(theta + phi) < 0, -1.0, 1.0)
    f = (np.sin(theta) - A * np.sin(phi)) ** 2
    g = (np.cos(theta) - A * np.cos(phi)) ** 2
    return A, f, g


def f_minus_g(theta, phi, A):
    """Closed form 2 cos(theta + phi)(A - cos(theta - phi))"""
    if np.any((np.asarray(A) != 1) & (np.asarray(A) != -1)):
        raise ParameterError(f"A must be +1 or -1, got {A}")
    return 2.0 * np.cos(np.add(theta, phi)) * (A - np.cos(np.subtract(theta, phi)))


def _sphere_distance(a, b):
    return np.arccos(np.clip(np.sum(a * b, axis=-1), -1.0, 1.0))


def _wrap(angle):
    return np.mod(angle + math.pi, 2.0 * math.pi) - math.pi


def distance_to_s4(theta, phi, lat_x, lat_y, c1):
    """
    Product-metric distance to the nearest S4 point on the best-fit circle

    m_x and m_y drop onto the circle, then alpha, m_x and m_y slide along it
    by a, t and s. theta + phi moves by t + s - 2a and theta - phi by t - s,
    so meeting the nearest zero of cos(theta + phi) at the least cost gives
    t + s = shift / 3 and a = -shift / 3. m_x and m_y also spread apart when
    their separation is below 2 c1.
    """
    psi = theta + phi
    target = math.pi / 2.0 + math.pi * np.round((psi - math.pi / 2.0) / math.pi)
    shift = target - psi
    gap = _wrap(theta - phi)
    direction = np.where(gap < 0, -1.0, 1.0)
    spread = np.where(np.abs(gap) < 2.0 * c1, direction * (2.0 * c1 - np.abs(gap)), 0.0)
    a = -shift / 3.0
    t = shift / 6.0 + spread / 2.0
    s = shift / 6.0 - spread / 2.0
    d_x = np.arccos(np.clip(np.cos(lat_x) * np.cos(t), -1.0, 1.0))
    d_y = np.arccos(np.clip(np.cos(lat_y) * np.cos(s), -1.0, 1.0))
    return np.sqrt(d_x * d_x + d_y * d_y + a * a)


def validate_region_params(params):
    """
    Check admissibility and report the analytic gaps between regions

    Returns:
        dict: Gaps S4/S3, S4/S2, S3/S2 and S2/S1, all positive. S4/S2 is the
        product-metric clearance of S4 from the S2 constraints; S3 is the
        delta3-ball around S4 intersected with S2, so the S3/S2 gap covers the
        separation and latitude floors the ball must clear

    Raises:
        ParameterError: A radius is out of range or a gap is not positive
    """
    if not params.c1 > 0 or 2.0 * params.c1 > math.pi:
        raise ParameterError(f"c1 must lie in (0, pi/2], got {params.c1}")
    if not 0 < params.c2 <= 1:
        raise ParameterError(f"c2 must lie in (0, 1], got {params.c2}")
    if not params.delta3 > 0:
        raise ParameterError(f"delta3 must be positive, got {params.delta3}")
    if not params.tol_gc > 0:
        raise ParameterError(f"tol_gc must be positive, got {params.tol_gc}")
    gaps = {
        'S4/S3': params.delta3,
        'S4/S2': min(
            math.asin(params.c2) / math.sqrt(6.0),
            (2.0 * params.c1 - params.s2_separation) / math.sqrt(2.0),
            params.s2_latitude
        ),
        'S3/S2': min(
            2.0 * params.c1 - math.sqrt(2.0) * params.delta3 - params.s2_separation,
            params.s2_latitude - params.delta3
        ),
        'S2/S1': params.s2_separation - params.c1
    }
    failing = [name for name, gap in gaps.items() if not gap > 0]
    if failing:
        raise ParameterError(f"region nesting violated at {', '.join(failing)} for {params.as_dict()}")
    return gaps


def classify_arrays(alpha, m_x, m_y, params):
    """
    Vectorized classification into the innermost region

    Returns:
        ndarray: Region labels as strings
    """
    alpha, m_x, m_y = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (alpha, m_x, m_y))
    separation = _sphere_distance(m_x, m_y)
    theta, phi, _, lat_x, lat_y = extended_arrays(alpha, m_x, m_y)
    cos_psi = np.abs(np.cos(theta + phi))
    coplanar = np.abs(np.linalg.det(np.stack([m_x, m_y, alpha], axis=-2))) <= params.tol_gc
    in_s1 = separation >= params.c1 - REGION_TOL
    in_s2 = (
        in_s1
        & (cos_psi <= params.c2 + REGION_TOL)
        & (separation >= params.s2_separation - REGION_TOL)
        & (np.maximum(lat_x, lat_y) <= params.s2_latitude + REGION_TOL)
    )
    in_s3 = in_s2 & (distance_to_s4(theta, phi, lat_x, lat_y, params.c1) <= params.delta3 + REGION_TOL)
    in_s4 = in_s3 & coplanar & (cos_psi <= REGION_TOL) & (separation >= 2.0 * params.c1 - REGION_TOL)
    labels = np.full(alpha.shape[0], Region.OUTSIDE.value, dtype=object)
    labels[in_s1] = Region.S1.value
    labels[in_s2] = Region.S2.value
    labels[in_s3] = Region.S3.value
    labels[in_s4] = Region.S4.value
    return labels


def classify_region(config, params=None):
    """
    Innermost region of S4 in S3 in S2 in S1 containing the configuration

    Returns:
        Region: S4, S3, S2, S1 or OUTSIDE
    """
    params = params or RegionParams()
    validate_region_params(params)
    m_x, m_y, alpha = config.arrays()
    return Region(classify_arrays(alpha, m_x, m_y, params)[0])


def sample_great_circle_configurations(rng, n, cap=1.2):
    """
    Draw n coplanar configurations with both Gauss vectors within `cap` of e3

    Returns:
        tuple: (alpha, m_x, m_y, theta, phi) arrays
    """
    kept = []
    total = 0
    cos_cap = math.cos(cap)
    while total < n:
        batch = max(2 * (n - total), 256)
        alpha = rng.standard_normal((batch, 3))
        alpha /= np.linalg.norm(alpha, axis=-1, keepdims=True)
        e1, e2 = _perpendicular_basis(alpha)
        gamma = rng.uniform(0.0, 2.0 * math.pi, batch)
        normal = np.cos(gamma)[:, None] * e1 + np.sin(gamma)[:, None] * e2
        tangent = np.cross(normal, alpha)
        theta = rng.uniform(-math.pi, math.pi, batch)
        phi = rng.uniform(-math.pi, math.pi, batch)
        m_x = np.cos(theta)[:, None] * alpha + np.sin(theta)[:, None] * tangent
        m_y = np.cos(phi)[:, None] * alpha + np.sin(phi)[:, None] * tangent
        accept = (m_x[:, 2] >= cos_cap) & (m_y[:, 2] >= cos_cap)
        kept.append((alpha[accept], m_x[accept], m_y[accept]))
        total += int(np.count_nonzero(accept))
    alpha, m_x, m_y = (np.concatenate([part[k] for part in kept])[:n] for k in range(3))
    theta, phi, _ = great_circle_arrays(alpha, m_x, m_y)
    return alpha, m_x, m_y, theta, phi


def calibrate_constants(params, n, rng, cap=1.2):
    """
    Empirical c3 and c4 over sampled great-circle configurations

    c3 is the minimum of (f - g)/|cos(theta + phi)| over S3 samples; c4 is
    the minimum of f - g over S1 minus S3 samples separated by at least 2 c1.
    The band c1 <= separation < 2 c1 is reported as c4_band_min.

    Raises:
        PreconditionError: n < 1000
        SamplingError: A region received no samples
        ParameterError: c3 or c4 is not positive
    """
    if n < 1000:
        raise PreconditionError(f"calibration needs n >= 1000, got {n}")
    validate_region_params(params)
    alpha, m_x, m_y, theta, phi = sample_great_circle_configurations(rng, n, cap)
    labels = classify_arrays(alpha, m_x, m_y, params)
    A, f, g = principal_fg(theta, phi)
    gap = f - g
    cos_psi = np.abs(np.cos(theta + phi))
    separation = _sphere_distance(m_x, m_y)
    counts = {region.value: int(np.count_nonzero(labels == region.value)) for region in Region}

    in_s3 = np.isin(labels, [Region.S3.value, Region.S4.value]) & (cos_psi >= REGION_TOL)
    outer = np.isin(labels, [Region.S1.value, Region.S2.value])
    in_s1_core = outer & (separation >= 2.0 * params.c1)
    in_band = outer & ~in_s1_core
    if not in_s3.any():
        raise SamplingError(f"no calibration samples landed in S3 out of {n}; enlarge n")
    if not in_s1_core.any():
        raise SamplingError(f"no calibration samples landed in S1 minus S3 out of {n}; enlarge n")
    c3 = float(np.min(gap[in_s3] / cos_psi[in_s3]))
    c4 = float(np.min(gap[in_s1_core]))
    c4_band = float(np.min(gap[in_band])) if in_band.any() else float('nan')
    if not (c3 > 0 and c4 > 0):
        logger.error(f"Calibration produced non-positive constants c3={c3}, c4={c4}")
        raise ParameterError(f"region parameters {params.as_dict()} give non-positive c3={c3:.3e}, c4={c4:.3e}")
    logger.info(f"Calibrated c3={c3:.5f}, c4={c4:.5f} from {n} samples, counts {counts}")
    return CalibrationResult(c3=c3, c4=c4, c4_band_min=c4_band, counts=counts, n=n, params=params)


def coupling_verify(grid=1000):
    """
    Grid check of f >= g and of the closed form of f - g

    Returns:
        dict: Grid size, min(f - g) on the principal branch, identity and
        sign-flip errors, and the tabulated special points
    """
    if grid < 2:
        raise ParameterError(f"grid must be at least 2, got {grid}")
    axis = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    theta, phi = np.meshgrid(axis, axis, indexing='ij')
    A, f, g = principal_fg(theta, phi)
    identity_error = 0.0
    for branch in (1.0, -1.0):
        bf = (np.sin(theta) - branch * np.sin(phi)) ** 2
        bg = (np.cos(theta) - branch * np.cos(phi)) ** 2
        identity_error = max(identity_error, float(np.max(np.abs((bf - bg) - f_minus_g(theta, phi, branch)))))
    _, f_flip, g_flip = principal_fg(-theta, -phi)
    sign_error = float(max(np.max(np.abs(f_flip - f)), np.max(np.abs(g_flip - g))))
    special = []
    for t, p in ((0.0, 0.0), (math.pi / 4, math.pi / 4), (math.pi / 3, 0.0), (math.pi / 2, 0.0)):
        special.append({
            'theta': t,
            'phi': p,
            'branches': [{'A': b.A, 'f': b.f, 'g': b.g} for b in fg(t, p)]
        })
    report = {
        'grid': grid,
        'points': int(theta.size),
        'min_f_minus_g': float(np.min(f - g)),
        'identity_error': identity_error,
        'sign_invariance_error': sign_error,
        'special_points': special
    }
    logger.info(f"Verified f >= g on {theta.size} grid points, min(f - g) = {report['min_f_minus_g']:.3e}")
    return report


class CouplingService:
    """Coupling service class bound to configured region defaults"""

    def __init__(self, app=None):
        """Initialize the coupling service"""
        self.app = app
        self.params = RegionParams()
        self.normal_cap = 1.2
        if app:
            self.init_app(app)

    def init_app(self, app):
        """Initialize with Flask app"""
        self.app = app
        self.params = RegionParams(
            c1=app.config.get('REGION_C1', 0.1),
            c2=app.config.get('REGION_C2', 0.1),
            delta3=app.config.get('REGION_DELTA3', 0.05),
            tol_gc=app.config.get('REGION_TOL_GC', 1e-9)
        )
        self.normal_cap = app.config.get('CALIBRATION_NORMAL_CAP', 1.2)

    def region_params(self, overrides=None):
        values = self.params.as_dict()
        values.update(overrides or {})
        return RegionParams(**values)

    def calibrate(self, n, rng, overrides=None):
        params = self.region_params(overrides)
        return calibrate_constants(params, n, rng, cap=self.normal_cap)

    def verify(self, grid=1000):
        return coupling_verify(grid)


# Global coupling service instance
coupling_service = CouplingService()
