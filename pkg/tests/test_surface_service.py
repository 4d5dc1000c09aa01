import math

import numpy as np
import pytest

from utils.errors import ConfigError, DomainError, ParameterError
from utils.surface_service import (
    FlatHalfPlane, HalfCatenoid, HelicoidGraph, MinimalGraphSurface, ScherkPatch, SURFACE_REGISTRY,
    catalog, check_invariants, gauss_curvature, gauss_map, get_surface, metric_data, minimal_residual,
    register_surface, surface_service
)


def test_gauss_map_spot_values():
    assert gauss_map(FlatHalfPlane(), (1.0, 0.0)) == pytest.approx([0.0, 0.0, 1.0])
    assert gauss_map(HelicoidGraph(), (1.0, 0.0)) == pytest.approx(np.array([0.0, -1.0, 1.0]) / math.sqrt(2.0), abs=1e-12)
    assert gauss_map(HalfCatenoid(), (2.0, 0.0)) == pytest.approx([-0.5, 0.0, math.sqrt(3.0) / 2.0], abs=1e-12)


def test_gauss_map_outside_domain_raises():
    with pytest.raises(DomainError):
        gauss_map(HalfCatenoid(), (0.5, 0.0))
    with pytest.raises(DomainError):
        gauss_map(FlatHalfPlane(), (-1.0, 0.0))


def test_gauss_curvature_spot_values():
    assert gauss_curvature(FlatHalfPlane(), (3.0, -2.0)) == 0.0
    assert gauss_curvature(HalfCatenoid(), (2.0, 0.0)) == pytest.approx(-1.0 / 16.0, abs=1e-10)
    assert gauss_curvature(ScherkPatch(), (0.0, 0.0)) == pytest.approx(-1.0, abs=1e-10)


def test_metric_data_spot_values():
    metric, inverse, sqrt_det = metric_data(HelicoidGraph(), (1.0, 0.0))
    assert metric == pytest.approx(np.array([[1.0, 0.0], [0.0, 2.0]]), abs=1e-12)
    assert sqrt_det == pytest.approx(math.sqrt(2.0))
    metric, inverse, sqrt_det = metric_data(HalfCatenoid(), (2.0, 0.0))
    assert metric == pytest.approx(np.array([[4.0 / 3.0, 0.0], [0.0, 1.0]]), abs=1e-12)
    assert sqrt_det == pytest.approx(2.0 / math.sqrt(3.0))
    assert metric @ inverse == pytest.approx(np.eye(2), abs=1e-12)
    metric, inverse, sqrt_det = metric_data(FlatHalfPlane(), (1.0, 1.0))
    assert metric == pytest.approx(np.eye(2))
    assert inverse == pytest.approx(np.eye(2))
    assert sqrt_det == 1.0


@pytest.mark.parametrize('surface, point', [
    (FlatHalfPlane(), (1.0, 4.0)),
    (HelicoidGraph(), (1.0, 1.0)),
    (ScherkPatch(), (0.3, -0.2)),
    (HalfCatenoid(), (1.5, -0.7)),
])
def test_minimal_residual_vanishes(surface, point):
    assert abs(minimal_residual(surface, point)) <= 1e-12


def test_catalog_contents():
    surfaces = catalog()
    assert [s.name for s in surfaces] == ['flat-half-plane', 'half-catenoid', 'helicoid-graph', 'scherk-patch']
    scherk = surfaces[-1]
    assert scherk.s == 1.2
    assert not scherk.contains(1.5, 0.0)
    assert surfaces[1].signed_distance(2.0, 0.0) == pytest.approx(-1.0)


def test_scherk_rejects_wide_patch():
    with pytest.raises(ParameterError):
        ScherkPatch(s=math.pi / 2)
    with pytest.raises(ParameterError):
        ScherkPatch(s=2.0)


def test_scherk_signed_distance_is_exact_box_distance():
    scherk = ScherkPatch(s=1.0)
    assert scherk.signed_distance(0.0, 0.0) == pytest.approx(-1.0)
    assert scherk.signed_distance(0.5, 0.9) == pytest.approx(-0.1)
    assert scherk.signed_distance(2.0, 2.0) == pytest.approx(math.sqrt(2.0))


@pytest.mark.parametrize('surface', catalog(), ids=lambda s: s.name)
def test_catalog_invariants_on_samples(surface):
    report = check_invariants(surface, n=10_000, seed=3)
    assert report['max_abs_residual'] <= 1e-9
    assert report['max_curvature'] <= 1e-12
    assert report['min_normal_z'] > 0
    assert report['max_norm_error'] <= 1e-12


@pytest.mark.parametrize('surface', catalog(), ids=lambda s: s.name)
def test_derivatives_match_finite_differences(surface):
    rng = np.random.default_rng(11)
    x, y = surface.sample_interior(rng, 200, margin=0.1, extent=5.0)
    h = 1e-5
    u_x, u_y = surface.grad(x, y)
    fd_x = (surface.height(x + h, y) - surface.height(x - h, y)) / (2 * h)
    fd_y = (surface.height(x, y + h) - surface.height(x, y - h)) / (2 * h)
    scale = 1.0 + np.abs(u_x) + np.abs(u_y)
    assert np.max(np.abs(fd_x - u_x) / scale) < 1e-6
    assert np.max(np.abs(fd_y - u_y) / scale) < 1e-6
    u_xx, u_xy, u_yy = surface.hess(x, y)
    gx_plus, _ = surface.grad(x + h, y)
    gx_minus, _ = surface.grad(x - h, y)
    _, gy_plus = surface.grad(x, y + h)
    _, gy_minus = surface.grad(x, y - h)
    gxy_plus, _ = surface.grad(x, y + h)
    gxy_minus, _ = surface.grad(x, y - h)
    hess_scale = 1.0 + np.abs(u_xx) + np.abs(u_xy) + np.abs(u_yy)
    assert np.max(np.abs((gx_plus - gx_minus) / (2 * h) - u_xx) / hess_scale) < 1e-6
    assert np.max(np.abs((gy_plus - gy_minus) / (2 * h) - u_yy) / hess_scale) < 1e-6
    assert np.max(np.abs((gxy_plus - gxy_minus) / (2 * h) - u_xy) / hess_scale) < 1e-6


def test_point_carries_position_and_normal():
    point = HalfCatenoid().point(2.0, 0.0)
    assert point.position == pytest.approx((2.0, 0.0, math.acosh(2.0)))
    assert math.isclose(sum(c * c for c in point.normal), 1.0, abs_tol=1e-12)
    assert point.normal[2] > 0


def test_get_surface_unknown_name():
    with pytest.raises(ConfigError):
        get_surface('enneper')


def test_user_surface_registration():
    @register_surface
    class TiltedPlane(MinimalGraphSurface):
        name = 'tilted-plane-test'

        def signed_distance(self, x, y):
            return -np.asarray(x, dtype=float)

        def height(self, x, y):
            return 0.5 * np.asarray(x, dtype=float) + 0.0 * np.asarray(y, dtype=float)

        def grad(self, x, y):
            shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
            return np.full(shape, 0.5), np.zeros(shape)

        def hess(self, x, y):
            shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
            return np.zeros(shape), np.zeros(shape), np.zeros(shape)

        def sample_interior(self, rng, n, margin=0.05, extent=10.0):
            return rng.uniform(margin, extent, n), rng.uniform(-extent, extent, n)

    try:
        surface = get_surface('tilted-plane-test')
        assert check_invariants(surface, n=100)['max_abs_residual'] == 0.0
    finally:
        SURFACE_REGISTRY.pop('tilted-plane-test')


def test_service_reads_scherk_width_from_config(app):
    app.config['SCHERK_HALF_WIDTH'] = 1.0
    surface_service.init_app(app)
    try:
        assert surface_service.get('scherk-patch').s == 1.0
        rows = surface_service.list_surfaces(check=True, n=500)
        assert len(rows) == 4
        assert all(row['invariants']['min_normal_z'] > 0 for row in rows)
    finally:
        app.config['SCHERK_HALF_WIDTH'] = 1.2
        surface_service.init_app(app)
