import math
import sys

import numpy as np
import pytest

from utils.coupling_service import (
    Configuration, Region, RegionParams, calibrate_constants, classify_arrays, classify_region,
    configuration_of, coupling_service, coupling_verify, distance_to_s4, extended_coords, f_minus_g, fg,
    great_circle_coords, is_great_circle, principal_fg, sample_great_circle_configurations,
    validate_region_params
)
from utils.errors import (
    DegenerateConfigurationError, ParameterError, PreconditionError
)
from utils.surface_service import FlatHalfPlane, HalfCatenoid, HelicoidGraph


def coplanar(theta, phi, alpha=(1.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0)):
    """Configuration on the circle through alpha with the given normal"""
    alpha = np.asarray(alpha, dtype=float)
    tangent = np.cross(np.asarray(normal, dtype=float), alpha)
    m_x = math.cos(theta) * alpha + math.sin(theta) * tangent
    m_y = math.cos(phi) * alpha + math.sin(phi) * tangent
    return Configuration(tuple(m_x), tuple(m_y), tuple(alpha))


def test_configuration_of_flat_points():
    config = configuration_of(FlatHalfPlane(), (1.0, 0.0), (2.0, 0.0))
    assert config.m_x == pytest.approx((0.0, 0.0, 1.0))
    assert config.m_y == pytest.approx((0.0, 0.0, 1.0))
    assert config.alpha == pytest.approx((-1.0, 0.0, 0.0))
    assert is_great_circle(config)


def test_configuration_of_curved_points_are_unit():
    config = configuration_of(HalfCatenoid(), (2.0, 0.0), (0.0, 3.0))
    for vector in config.arrays():
        assert np.linalg.norm(vector) == pytest.approx(1.0, abs=1e-12)
    assert config.m_x[2] > 0 and config.m_y[2] > 0


def test_configuration_of_coincident_points():
    with pytest.raises(DegenerateConfigurationError):
        configuration_of(HelicoidGraph(), (1.0, 1.0), (1.0, 1.0))


def test_configuration_rejects_non_unit_vectors():
    with pytest.raises(ParameterError):
        Configuration((0.0, 0.0, 2.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0))


def test_is_great_circle():
    assert is_great_circle(coplanar(0.3, -1.2))
    tilted = Configuration((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0))
    assert not is_great_circle(tilted)


def test_great_circle_coords_on_equator():
    config = Configuration((0.0, 1.0, 0.0), (-1.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    coords = great_circle_coords(config)
    assert coords.theta == pytest.approx(math.pi / 2)
    assert coords.phi == pytest.approx(math.pi)
    assert coords.normal == pytest.approx((0.0, 0.0, 1.0))


def test_great_circle_coords_trivial():
    coords = great_circle_coords(Configuration((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)))
    assert coords.theta == 0.0


def test_great_circle_coords_need_coplanar_configuration():
    with pytest.raises(PreconditionError):
        great_circle_coords(Configuration((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)))


def test_orientation_parity():
    coords = great_circle_coords(coplanar(0.4, -0.9))
    flipped_circle = great_circle_coords(coplanar(-0.4, 0.9, normal=(0.0, 0.0, -1.0)))
    assert (flipped_circle.theta, flipped_circle.phi) == pytest.approx((coords.theta, coords.phi))
    flipped = coords.flipped()
    assert (flipped.theta, flipped.phi) == pytest.approx((-0.4, 0.9))
    assert np.allclose(flipped.reconstruct((1.0, 0.0, 0.0)), coords.reconstruct((1.0, 0.0, 0.0)))


def test_reconstruction_round_trip():
    rng = np.random.default_rng(3)
    alpha, m_x, m_y, theta, phi = sample_great_circle_configurations(rng, 200)
    for k in range(alpha.shape[0]):
        config = Configuration(tuple(m_x[k]), tuple(m_y[k]), tuple(alpha[k]))
        coords = great_circle_coords(config)
        assert coords.theta == pytest.approx(theta[k], abs=1e-10)
        rebuilt_x, rebuilt_y = coords.reconstruct(alpha[k])
        assert np.max(np.abs(rebuilt_x - m_x[k])) <= 1e-10
        assert np.max(np.abs(rebuilt_y - m_y[k])) <= 1e-10
        extended = extended_coords(config)
        assert (extended.theta, extended.phi) == pytest.approx((coords.theta, coords.phi), abs=1e-8)


def test_fg_values():
    (branch,) = fg(0.0, 0.0)
    assert (branch.A, branch.f, branch.g) == (1, 0.0, 0.0)
    branches = fg(math.pi / 4, math.pi / 4)
    assert [b.A for b in branches] == [1, -1]
    assert (branches[0].f, branches[0].g) == pytest.approx((0.0, 0.0), abs=1e-15)
    assert (branches[1].f, branches[1].g) == pytest.approx((2.0, 2.0))
    (branch,) = fg(math.pi / 3, 0.0)
    assert (branch.A, branch.f, branch.g) == (1, pytest.approx(0.75), pytest.approx(0.25))


def test_f_minus_g_values():
    assert f_minus_g(math.pi / 3, 0.0, 1) == pytest.approx(0.5)
    assert f_minus_g(0.7, 0.7, 1) == pytest.approx(0.0, abs=1e-15)
    for A in (1, -1):
        assert f_minus_g(math.pi / 6, math.pi / 3, A) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ParameterError):
        f_minus_g(0.1, 0.2, 0)


def test_f_minus_g_matches_branches():
    for theta, phi in ((0.3, 1.9), (-2.0, 0.4), (2.5, 2.9)):
        for branch in fg(theta, phi):
            assert branch.f - branch.g == pytest.approx(f_minus_g(theta, phi, branch.A), abs=1e-12)
            assert branch.f >= branch.g - 1e-12


def test_principal_fg_tie_goes_to_plus_one():
    A, f, g = principal_fg(np.array([math.pi / 2]), np.array([0.0]))
    assert A[0] == 1.0


def test_coupling_verify_grid():
    report = coupling_verify(grid=400)
    assert report['points'] == 160_000
    assert report['min_f_minus_g'] >= -1e-12
    assert report['identity_error'] <= 1e-12
    assert report['sign_invariance_error'] <= 1e-12
    assert len(report['special_points']) == 4
    with pytest.raises(ParameterError):
        coupling_verify(grid=1)


def test_classify_known_points():
    assert classify_region(coplanar(math.pi / 2, 0.0)) is Region.S4
    assert classify_region(coplanar(math.pi / 2 + 0.02, 0.0)) is Region.S3
    assert classify_region(coplanar(math.pi / 2 + 0.09, 0.0)) is Region.S3
    assert classify_region(coplanar(math.pi / 4 + 0.11, math.pi / 4 - 0.03)) is Region.S2
    assert classify_region(coplanar(math.pi / 3, 0.0)) is Region.S1
    assert classify_region(coplanar(0.3, 0.3)) is Region.OUTSIDE


def on_circle(alpha_angle, x_angle, y_angle):
    """Configuration with all three vectors on the equator, given by longitude"""
    def point(angle):
        return (math.cos(angle), math.sin(angle), 0.0)
    return Configuration(point(x_angle), point(y_angle), point(alpha_angle))


def product_distance(first, second):
    return math.sqrt(sum(
        math.acos(max(-1.0, min(1.0, float(np.dot(a, b))))) ** 2
        for a, b in zip(first.arrays(), second.arrays())
    ))


def test_s3_contains_nearby_s4_points_found_by_moving_alpha():
    config = on_circle(0.0, math.pi / 2 + 0.09, 0.0)
    nearby = on_circle(0.03, math.pi / 2 + 0.075, -0.015)
    assert classify_region(nearby) is Region.S4
    distance = product_distance(config, nearby)
    assert distance == pytest.approx(math.sqrt(0.03 ** 2 + 2 * 0.015 ** 2))
    assert distance <= RegionParams().delta3
    assert classify_region(config) is Region.S3
    theta, phi = math.pi / 2 + 0.09, 0.0
    estimate = float(distance_to_s4(np.array([theta]), np.array([phi]), np.array([0.0]), np.array([0.0]), 0.1)[0])
    assert estimate == pytest.approx(distance, abs=1e-12)


def test_classify_off_circle_uses_extension():
    config = coplanar(1.2, math.pi / 2 - 1.2)
    assert classify_region(config) is Region.S4
    m_x = np.asarray(config.m_x) + np.array([0.0, 0.0, 0.01])
    m_x /= np.linalg.norm(m_x)
    tilted = Configuration(tuple(m_x), config.m_y, config.alpha)
    assert not is_great_circle(tilted)
    assert classify_region(tilted) is Region.S3


def test_distance_to_s4_vanishes_on_s4():
    assert float(distance_to_s4(np.array([math.pi / 2]), np.array([0.0]), np.array([0.0]),
                                np.array([0.0]), 0.1)[0]) == pytest.approx(0.0, abs=1e-15)
    spread = float(distance_to_s4(np.array([math.pi / 4 + 0.05]), np.array([math.pi / 4 - 0.05]),
                                  np.array([0.0]), np.array([0.0]), 0.1)[0])
    assert spread == pytest.approx(math.sqrt(2.0) * 0.05)
    along = float(distance_to_s4(np.array([math.pi / 2 + 0.06]), np.array([0.0]), np.array([0.0]),
                                 np.array([0.0]), 0.1)[0])
    assert along == pytest.approx(0.06 / math.sqrt(6.0))
    both = float(distance_to_s4(np.array([math.pi / 4 + 0.11]), np.array([math.pi / 4 - 0.03]),
                                np.array([0.0]), np.array([0.0]), 0.1)[0])
    shift, spread = -0.08, 0.06
    assert both == pytest.approx(math.sqrt((shift / 6 + spread / 2) ** 2 + (shift / 6 - spread / 2) ** 2
                                           + (shift / 3) ** 2))
    assert both > 0.05


def test_region_nesting_validator():
    gaps = validate_region_params(RegionParams())
    assert gaps['S4/S3'] == pytest.approx(0.05)
    separation_floor = (0.1 + 0.2 - math.sqrt(2.0) * 0.05) / 2.0
    assert gaps['S4/S2'] == pytest.approx(math.asin(0.1) / math.sqrt(6.0))
    assert gaps['S3/S2'] == pytest.approx(0.2 - math.sqrt(2.0) * 0.05 - separation_floor)
    assert gaps['S2/S1'] > 0
    with pytest.raises(ParameterError):
        validate_region_params(RegionParams(c2=0.0))
    with pytest.raises(ParameterError):
        validate_region_params(RegionParams(delta3=0.12))
    with pytest.raises(ParameterError):
        validate_region_params(RegionParams(delta3=0.2))
    with pytest.raises(ParameterError):
        classify_region(coplanar(1.0, 0.0), RegionParams(c1=-0.1))


def test_classify_arrays_agrees_with_scalar_path():
    rng = np.random.default_rng(7)
    alpha, m_x, m_y, _, _ = sample_great_circle_configurations(rng, 300)
    labels = classify_arrays(alpha, m_x, m_y, RegionParams())
    for k in range(0, 300, 17):
        config = Configuration(tuple(m_x[k]), tuple(m_y[k]), tuple(alpha[k]))
        assert classify_region(config).value == labels[k]


def test_sampled_configurations_respect_normal_cap():
    rng = np.random.default_rng(1)
    alpha, m_x, m_y, theta, phi = sample_great_circle_configurations(rng, 500, cap=1.2)
    assert alpha.shape == (500, 3)
    assert np.all(m_x[:, 2] >= math.cos(1.2) - 1e-12)
    assert np.all(m_y[:, 2] >= math.cos(1.2) - 1e-12)
    assert np.all((theta > -math.pi) & (theta <= math.pi))


def test_calibrate_constants():
    result = calibrate_constants(RegionParams(), 20_000, np.random.default_rng(11))
    bound = 2.0 * (1.0 - math.cos(0.2 - math.sqrt(2.0) * 0.05))
    assert bound - 1e-9 <= result.c3 <= 0.1
    assert result.c4 > 0
    assert sum(result.counts.values()) == 20_000
    assert result.counts['S3'] + result.counts['S4'] > 0
    assert result.as_dict()['params']['c1'] == 0.1


def test_calibrate_rejects_non_positive_constants(monkeypatch):
    def collapsed(theta, phi):
        theta = np.asarray(theta, dtype=float)
        return np.ones_like(theta), np.zeros_like(theta), np.ones_like(theta)

    monkeypatch.setattr(sys.modules['utils.coupling_service'], 'principal_fg', collapsed)
    with pytest.raises(ParameterError):
        calibrate_constants(RegionParams(), 5000, np.random.default_rng(11))


def test_calibrate_needs_enough_samples():
    with pytest.raises(PreconditionError):
        calibrate_constants(RegionParams(), 999, np.random.default_rng(0))


def test_service_reads_region_config(app):
    app.config['REGION_C2'] = 0.08
    coupling_service.init_app(app)
    try:
        assert coupling_service.region_params().c2 == 0.08
        assert coupling_service.region_params({'c2': 0.1}).c2 == 0.1
    finally:
        app.config['REGION_C2'] = 0.1
        coupling_service.init_app(app)


@pytest.mark.slow
def test_calibration_is_stable_under_doubling():
    first = calibrate_constants(RegionParams(), 100_000, np.random.default_rng(31))
    second = calibrate_constants(RegionParams(), 200_000, np.random.default_rng(32))
    assert first.c3 > 0 and first.c4 > 0
    assert abs(second.c3 - first.c3) <= 0.2 * first.c3
    assert abs(second.c4 - first.c4) <= 0.2 * first.c4


@pytest.mark.slow
def test_coupling_verify_at_full_grid():
    report = coupling_verify(grid=1000)
    assert report['min_f_minus_g'] >= -1e-12
    assert report['identity_error'] <= 1e-12
