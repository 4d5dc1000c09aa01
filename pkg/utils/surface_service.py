"""
Surface Service Module

This module represents minimal graphs analytically:
- Surface catalog (flat half-plane, half-catenoid, helicoid graph, Scherk patch)
- User-defined surfaces through subclassing and registration
- Gauss map, Gauss curvature and graph metric
- Minimal surface equation residual and catalog self-checks

All functions accept scalar or array coordinates and broadcast.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, ParameterError

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SURFACE_REGISTRY = {}


def register_surface(cls):
    """Register a surface class under its `name` so specs can select it"""
    SURFACE_REGISTRY[cls.name] = cls
    return cls


class MinimalGraphSurface:
    """
    A minimal graph u over a planar domain.

    Subclasses supply the signed boundary distance (negative inside), the
    height u and its analytic gradient and Hessian.
    """

    name = 'surface'
    domain_description = ''

    def __init__(self, **params):
        self.params = params

    def signed_distance(self, x, y):
        raise NotImplementedError

    def height(self, x, y):
        raise NotImplementedError

    def grad(self, x, y):
        """Return (u_x, u_y)"""
        raise NotImplementedError

    def hess(self, x, y):
        """Return (u_xx, u_xy, u_yy)"""
        raise NotImplementedError

    def sample_interior(self, rng, n, margin=0.05, extent=10.0):
        """Draw n interior points at least `margin` from the boundary"""
        raise NotImplementedError

    def contains(self, x, y):
        return np.asarray(self.signed_distance(x, y)) < 0

    def point(self, x, y):
        """Build the SurfacePoint above (x, y)"""
        _require_interior(self, x, y)
        x, y = float(x), float(y)
        return SurfacePoint(
            surface=self.name,
            x=x,
            y=y,
            position=(x, y, float(self.height(x, y))),
            normal=tuple(float(c) for c in gauss_map(self, (x, y)))
        )

    def describe(self):
        return {
            'name': self.name,
            'domain': self.domain_description,
            'params': dict(self.params)
        }

    def __repr__(self):
        return f"{type(self).__name__}({self.params})"


@dataclass(frozen=True)
class SurfacePoint:
    """Domain coordinates with the derived ambient position and unit normal"""
    surface: str
    x: float
    y: float
    position: tuple
    normal: tuple


@register_surface
class FlatHalfPlane(MinimalGraphSurface):
    name = 'flat-half-plane'
    domain_description = 'x > 0, u = 0'

    def signed_distance(self, x, y):
        return -np.asarray(x, dtype=float) + 0.0 * np.asarray(y, dtype=float)

    def height(self, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def grad(self, x, y):
        zero = self.height(x, y)
        return zero, zero.copy()

    def hess(self, x, y):
        zero = self.height(x, y)
        return zero, zero.copy(), zero.copy()

    def sample_interior(self, rng, n, margin=0.05, extent=10.0):
        return rng.uniform(margin, extent, n), rng.uniform(-extent, extent, n)


@register_surface
class HalfCatenoid(MinimalGraphSurface):
    name = 'half-catenoid'
    domain_description = 'r > 1, u = arccosh r'

    def signed_distance(self, x, y):
        return 1.0 - np.hypot(x, y)

    def height(self, x, y):
        return np.arccosh(np.hypot(x, y))

    def grad(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        u_r = 1.0 / np.sqrt(r * r - 1.0)
        return u_r * x / r, u_r * y / r

    def hess(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        w = r * r - 1.0
        u_r = 1.0 / np.sqrt(w)
        u_rr = -r / (w * np.sqrt(w))
        r2 = r * r
        r3 = r2 * r
        u_xx = u_rr * x * x / r2 + u_r * y * y / r3
        u_yy = u_rr * y * y / r2 + u_r * x * x / r3
        u_xy = (u_rr / r2 - u_r / r3) * x * y
        return u_xx, u_xy, u_yy

    def sample_interior(self, rng, n, margin=0.05, extent=10.0):
        inner = 1.0 + margin
        radius = np.sqrt(rng.uniform(inner * inner, extent * extent, n))
        angle = rng.uniform(0.0, 2.0 * math.pi, n)
        return radius * np.cos(angle), radius * np.sin(angle)


@register_surface
class HelicoidGraph(MinimalGraphSurface):
    name = 'helicoid-graph'
    domain_description = 'x > 0, u = arctan(y/x)'

    def signed_distance(self, x, y):
        return -np.asarray(x, dtype=float) + 0.0 * np.asarray(y, dtype=float)

    def height(self, x, y):
        return np.arctan2(y, x)

    def grad(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rho2 = x * x + y * y
        return -y / rho2, x / rho2

    def hess(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rho2 = x * x + y * y
        rho4 = rho2 * rho2
        return 2.0 * x * y / rho4, (y * y - x * x) / rho4, -2.0 * x * y / rho4

    def sample_interior(self, rng, n, margin=0.05, extent=10.0):
        return rng.uniform(margin, extent, n), rng.uniform(-extent, extent, n)


@register_surface
class ScherkPatch(MinimalGraphSurface):
    name = 'scherk-patch'
    domain_description = '|x|, |y| < s, u = log(cos x / cos y)'

    def __init__(self, s=1.2, **params):
        s = float(s)
        if not 0.0 < s < math.pi / 2:
            raise ParameterError(f"Scherk half-width must lie in (0, pi/2), got {s}")
        super().__init__(s=s, **params)
        self.s = s

    def signed_distance(self, x, y):
        dx = np.abs(x) - self.s
        dy = np.abs(y) - self.s
        outside = np.hypot(np.maximum(dx, 0.0), np.maximum(dy, 0.0))
        inside = np.minimum(np.maximum(dx, dy), 0.0)
        return outside + inside

    def height(self, x, y):
        return np.log(np.cos(x)) - np.log(np.cos(y))

    def grad(self, x, y):
        return -np.tan(x), np.tan(y)

    def hess(self, x, y):
        sec2_x = 1.0 / np.cos(x) ** 2
        sec2_y = 1.0 / np.cos(y) ** 2
        return -sec2_x, np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape), sec2_y

    def sample_interior(self, rng, n, margin=0.05, extent=10.0):
        half = self.s - margin
        return rng.uniform(-half, half, n), rng.uniform(-half, half, n)


def _split(p):
    x, y = p
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def _require_interior(surface, x, y):
    if not np.all(surface.contains(x, y)):
        raise DomainError(f"point ({x}, {y}) is outside the domain of {surface.name}")


def gauss_map(surface, p):
    """
    Unit normal (-u_x, -u_y, 1)/sqrt(1 + |grad u|^2) of the graph

    Args:
        surface (MinimalGraphSurface): Surface
        p (tuple): Domain point (x, y), scalars or arrays

    Returns:
        ndarray: Normals with a trailing axis of length 3
    """
    x, y = _split(p)
    _require_interior(surface, x, y)
    u_x, u_y = surface.grad(x, y)
    w = np.sqrt(1.0 + u_x * u_x + u_y * u_y)
    return np.stack([-u_x / w, -u_y / w, 1.0 / w], axis=-1)


def gauss_curvature(surface, p):
    """K = det(Hess u) / (1 + |grad u|^2)^2"""
    x, y = _split(p)
    _require_interior(surface, x, y)
    u_x, u_y = surface.grad(x, y)
    u_xx, u_xy, u_yy = surface.hess(x, y)
    w2 = 1.0 + u_x * u_x + u_y * u_y
    return (u_xx * u_yy - u_xy * u_xy) / (w2 * w2)


def metric_data(surface, p):
    """
    Graph metric I + grad u grad u^T, its inverse and sqrt(det)

    Returns:
        tuple: (metric, inverse, sqrt_det) with 2x2 trailing axes
    """
    x, y = _split(p)
    _require_interior(surface, x, y)
    u_x, u_y = surface.grad(x, y)
    w2 = 1.0 + u_x * u_x + u_y * u_y
    metric = np.stack([
        np.stack([1.0 + u_x * u_x, u_x * u_y], axis=-1),
        np.stack([u_x * u_y, 1.0 + u_y * u_y], axis=-1)
    ], axis=-2)
    inverse = np.stack([
        np.stack([1.0 - u_x * u_x / w2, -u_x * u_y / w2], axis=-1),
        np.stack([-u_x * u_y / w2, 1.0 - u_y * u_y / w2], axis=-1)
    ], axis=-2)
    return metric, inverse, np.sqrt(w2)


def minimal_residual(surface, p):
    """(1+u_y^2) u_xx - 2 u_x u_y u_xy + (1+u_x^2) u_yy"""
    x, y = _split(p)
    _require_interior(surface, x, y)
    u_x, u_y = surface.grad(x, y)
    u_xx, u_xy, u_yy = surface.hess(x, y)
    return (1.0 + u_y * u_y) * u_xx - 2.0 * u_x * u_y * u_xy + (1.0 + u_x * u_x) * u_yy


def catalog(scherk_half_width=1.2):
    """The four catalog surfaces, Scherk patch with half-width s"""
    return [
        FlatHalfPlane(),
        HalfCatenoid(),
        HelicoidGraph(),
        ScherkPatch(s=scherk_half_width)
    ]


def get_surface(name, params=None):
    """Instantiate a registered surface by name"""
    cls = SURFACE_REGISTRY.get(name)
    if cls is None:
        raise ConfigError(f"unknown surface '{name}'; known: {', '.join(sorted(SURFACE_REGISTRY))}")
    return cls(**(params or {}))


def check_invariants(surface, n=10_000, seed=0):
    """
    Evaluate the minimal-graph invariants on n interior samples

    Returns:
        dict: max |residual|, max K, min normal_z and max | |normal| - 1 |
    """
    rng = np.random.default_rng(seed)
    x, y = surface.sample_interior(rng, n)
    normals = gauss_map(surface, (x, y))
    return {
        'surface': surface.name,
        'samples': int(n),
        'max_abs_residual': float(np.max(np.abs(minimal_residual(surface, (x, y))))),
        'max_curvature': float(np.max(gauss_curvature(surface, (x, y)))),
        'min_normal_z': float(np.min(normals[..., 2])),
        'max_norm_error': float(np.max(np.abs(np.linalg.norm(normals, axis=-1) - 1.0)))
    }


class SurfaceService:
    """Surface service class for catalog access and self-checks"""

    def __init__(self, app=None):
        """Initialize the surface service"""
        self.app = app
        self.scherk_half_width = 1.2
        if app:
            self.init_app(app)

    def init_app(self, app):
        """Initialize with Flask app"""
        self.app = app
        self.scherk_half_width = app.config.get('SCHERK_HALF_WIDTH', 1.2)

    def catalog(self):
        return catalog(self.scherk_half_width)

    def get(self, name, params=None):
        params = dict(params or {})
        if name == ScherkPatch.name:
            params.setdefault('s', self.scherk_half_width)
        return get_surface(name, params)

    def list_surfaces(self, check=False, n=10_000):
        """Describe every catalog surface, optionally with invariant checks"""
        rows = []
        for surface in self.catalog():
            row = surface.describe()
            if check:
                row['invariants'] = check_invariants(surface, n)
                logger.info(f"Checked invariants of {surface.name}: {row['invariants']}")
            rows.append(row)
        return rows


# Global surface service instance
surface_service = SurfaceService()
