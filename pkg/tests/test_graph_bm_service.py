import math

import numpy as np
import pytest
from scipy import stats

from utils.conformal_service import catenoid_hitting_cdf, get_chart, simulate_chart_ensemble
from utils.errors import ConfigError, DomainError, ParameterError, PreconditionError
from utils.graph_bm_service import (
    BOUNDARY_FUNCTIONALS, boundary_functional, curvature_clock_summary, harmonic_estimate,
    hitting_probability, hitting_time_cdf, ito_coefficients, simulate_ensemble, simulate_path, step_count
)
from utils.scheduler_service import SchedulerService
from utils.surface_service import FlatHalfPlane, HalfCatenoid, HelicoidGraph, MinimalGraphSurface, ScherkPatch, metric_data


class Paraboloid(MinimalGraphSurface):
    """Non-minimal graph used to exercise the drift formula"""
    name = 'paraboloid-test'

    def signed_distance(self, x, y):
        return -np.asarray(x, dtype=float) + 0.0 * np.asarray(y, dtype=float)

    def height(self, x, y):
        return 0.5 * (np.asarray(x) ** 2 + np.asarray(y) ** 2)

    def grad(self, x, y):
        return np.asarray(x, dtype=float), np.asarray(y, dtype=float)

    def hess(self, x, y):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return np.ones(shape), np.zeros(shape), np.ones(shape)


def finite_difference_drift(surface, p, h=1e-5):
    """(1/(2 sqrt G)) d_j(sqrt G g^ij) by central differences"""
    def weighted_inverse(x, y):
        _, inverse, sqrt_det = metric_data(surface, (x, y))
        return sqrt_det * inverse

    x, y = p
    d_x = (weighted_inverse(x + h, y) - weighted_inverse(x - h, y)) / (2 * h)
    d_y = (weighted_inverse(x, y + h) - weighted_inverse(x, y - h)) / (2 * h)
    _, _, sqrt_det = metric_data(surface, p)
    return np.array([d_x[0, 0] + d_y[0, 1], d_x[1, 0] + d_y[1, 1]]) / (2 * sqrt_det)


def test_ito_coefficients_flat():
    b, sigma_d = ito_coefficients(FlatHalfPlane(), (1.0, 0.0))
    assert b == pytest.approx([0.0, 0.0])
    assert sigma_d == pytest.approx(np.eye(2))


def test_ito_coefficients_helicoid_diffusion():
    _, sigma_d = ito_coefficients(HelicoidGraph(), (1.0, 0.0))
    assert sigma_d @ sigma_d.T == pytest.approx(np.array([[1.0, 0.0], [0.0, 0.5]]), abs=1e-12)


@pytest.mark.parametrize('surface, point', [
    (HalfCatenoid(), (2.0, 0.0)),
    (HalfCatenoid(), (1.3, 0.8)),
    (HelicoidGraph(), (0.7, -0.4)),
    (ScherkPatch(), (0.3, 0.5)),
    (Paraboloid(), (0.8, 0.3)),
])
def test_drift_matches_finite_differences(surface, point):
    b, sigma_d = ito_coefficients(surface, point)
    assert b == pytest.approx(finite_difference_drift(surface, point), abs=1e-6)
    _, inverse, _ = metric_data(surface, point)
    assert np.max(np.abs(sigma_d @ sigma_d.T - inverse)) <= 1e-12


def test_drift_vanishes_on_minimal_graphs_only():
    b, _ = ito_coefficients(HalfCatenoid(), (2.0, 0.0))
    assert np.max(np.abs(b)) < 1e-12
    b, _ = ito_coefficients(Paraboloid(), (0.8, 0.3))
    assert np.max(np.abs(b)) > 1e-3


def test_ito_coefficients_outside_domain():
    with pytest.raises(DomainError):
        ito_coefficients(HalfCatenoid(), (0.2, 0.1))


def test_step_count_covers_horizon():
    assert step_count(1.0, 1e-3) == 1000
    assert step_count(0.25, 0.1) == 3
    assert step_count(0.0, 1e-3) == 0


def test_zero_noise_flat_path_is_constant():
    record = simulate_path(FlatHalfPlane(), (1.0, 0.5), 1e-2, 1.0, zero_noise=True)
    assert not record.hit
    assert record.sigma is None
    assert record.sigma_label == '>=1.0'
    assert np.all(record.xs == 1.0)
    assert np.all(record.ys == 0.5)
    assert record.times[-1] == pytest.approx(1.0)
    assert record.clock == 0.0


def test_path_record_invariants():
    record = simulate_path(HalfCatenoid(), (2.0, 0.0), 1e-3, 5.0, seed=4, index=2)
    assert np.all(np.diff(record.times) >= 0)
    assert np.all(np.diff(record.curvature_clock) >= 0)
    assert record.curvature_clock[0] == 0.0
    assert record.min_normal_z > 0
    assert np.all(np.hypot(record.xs[:-1], record.ys[:-1]) > 1.0)
    assert math.isclose(sum(c * c for c in record.final_normal), 1.0, abs_tol=1e-12)
    if record.hit:
        assert record.times[-1] == pytest.approx(record.sigma)
        assert record.sigma <= 5.0


def test_simulate_path_matches_ensemble_member():
    surface = HalfCatenoid()
    record = simulate_path(surface, (2.0, 0.0), 1e-3, 2.0, seed=9, index=5)
    ensemble = simulate_ensemble(surface, (2.0, 0.0), 1e-3, 2.0, 8, seed=9)
    assert record.hit == bool(ensemble.hit[5])
    assert record.clock == pytest.approx(ensemble.clock[5], rel=1e-12, abs=1e-15)
    if record.hit:
        assert record.sigma == pytest.approx(ensemble.sigma[5], rel=1e-12)


def test_preconditions():
    with pytest.raises(DomainError):
        simulate_path(FlatHalfPlane(), (-1.0, 0.0), 1e-3, 1.0)
    with pytest.raises(ParameterError):
        simulate_path(FlatHalfPlane(), (1.0, 0.0), 0.0, 1.0)
    with pytest.raises(ParameterError):
        simulate_path(FlatHalfPlane(), (1.0, 0.0), 1e-3, 0.0)
    with pytest.raises(ParameterError):
        simulate_ensemble(FlatHalfPlane(), (1.0, 0.0), 1e-3, 1.0, 0, seed=0)


def test_flat_marginal_variance():
    n = 10_000
    ensemble = simulate_ensemble(FlatHalfPlane(), (5.0, 0.0), 1e-3, 0.1, n, seed=1)
    assert ensemble.hits == 0
    x = ensemble.extras['final_x']
    variance = np.var(x, ddof=1)
    assert abs(variance - 0.1) <= 3 * 0.1 * math.sqrt(2.0 / (n - 1))


def test_flat_hitting_probability_reflection_law():
    estimate = hitting_probability(FlatHalfPlane(), (1.0, 0.0), 1.0, 4000, 1e-3, seed=42)
    expected = 2 * stats.norm.cdf(-1.0)
    assert abs(estimate.estimate - expected) <= 3 * math.sqrt(expected * (1 - expected) / 4000)
    lo, hi = estimate.interval
    assert lo < estimate.estimate < hi
    assert estimate.hits + (estimate.n - estimate.hits) == 4000


def test_zero_horizon_never_hits():
    estimate = hitting_probability(HalfCatenoid(), (2.0, 0.0), 0.0, 50, 1e-3, seed=0)
    assert estimate.estimate == 0.0
    assert estimate.interval[0] == 0.0


def test_scherk_paths_exit_the_patch():
    ensemble = simulate_ensemble(ScherkPatch(), (0.0, 0.0), 1e-3, 50.0, 1000, seed=5)
    assert ensemble.hits >= 999
    hit = ensemble.hit
    edge = np.maximum(np.abs(ensemble.exit_x[hit]), np.abs(ensemble.exit_y[hit]))
    assert np.max(np.abs(edge - 1.2)) < 1e-2


def test_exit_points_lie_on_boundary():
    ensemble = simulate_ensemble(HalfCatenoid(), (2.0, 0.0), 1e-3, 2.0, 500, seed=8)
    hit = ensemble.hit
    assert ensemble.hits > 0
    radius = np.hypot(ensemble.exit_x[hit], ensemble.exit_y[hit])
    assert np.max(np.abs(radius - 1.0)) < 1e-2
    assert np.all(np.isnan(ensemble.sigma[~hit]))
    assert np.all(ensemble.sigma[hit] <= 2.0)


def test_rows_report_censoring():
    ensemble = simulate_ensemble(FlatHalfPlane(), (1.0, 0.0), 1e-2, 0.5, 50, seed=2)
    rows = list(ensemble.rows())
    assert len(rows) == 50
    for row in rows:
        if row['hit']:
            assert float(row['sigma']) <= 0.5
        else:
            assert row['sigma'] == '>=0.5'
            assert row['exit_x'] is None


def test_harmonic_constant_functional():
    estimate = harmonic_estimate(FlatHalfPlane(), (1.0, 0.0), BOUNDARY_FUNCTIONALS['one'], 1.0, 1000, 1e-2, seed=3)
    assert estimate.estimate == 1.0
    assert estimate.non_hit_mass == pytest.approx(1.0 - estimate.hits / 1000)


def test_harmonic_flat_symmetry():
    estimate = harmonic_estimate(FlatHalfPlane(), (1.0, 0.0), boundary_functional('upper-half'), 20.0, 2000, 1e-2, seed=6)
    assert abs(estimate.estimate - 0.5) <= 3 * 0.5 / math.sqrt(estimate.hits)
    lo, hi = estimate.ci95
    assert lo < estimate.estimate < hi
    assert hi - lo == pytest.approx(2 * 1.959964 * estimate.stderr, rel=1e-5)
    assert estimate.as_dict()['ci95'] == [lo, hi]


def test_harmonic_catenoid_angle_symmetry():
    estimate = harmonic_estimate(HalfCatenoid(), (2.0, 0.0), boundary_functional('upper-angle'), 5.0, 1000, 1e-2, seed=7)
    assert abs(estimate.estimate - 0.5) <= 3 * 0.5 / math.sqrt(estimate.hits)


def test_unknown_boundary_functional():
    with pytest.raises(ConfigError):
        boundary_functional('lower-left')


def test_flat_clock_is_zero():
    ensemble = simulate_ensemble(FlatHalfPlane(), (1.0, 0.0), 1e-2, 2.0, 200, seed=1)
    summary = curvature_clock_summary(ensemble)
    assert summary['max'] == 0.0
    assert summary['q99'] == 0.0


def test_catenoid_clock_below_total_curvature():
    ensemble = simulate_ensemble(HalfCatenoid(), (2.0, 0.0), 1e-2, 20.0, 1000, seed=12)
    doubled = simulate_ensemble(HalfCatenoid(), (2.0, 0.0), 1e-2, 40.0, 1000, seed=12)
    summary = curvature_clock_summary(ensemble, doubled=doubled)
    assert np.all(ensemble.clock >= 0)
    assert summary['q99'] < 2 * math.pi
    assert 'stabilized' in summary
    assert np.all(doubled.clock >= ensemble.clock - 1e-12)


def test_clock_summary_needs_paths():
    ensemble = simulate_ensemble(FlatHalfPlane(), (1.0, 0.0), 1e-2, 1.0, 1, seed=1)
    ensemble.hit = ensemble.hit[:0]
    ensemble.clock = ensemble.clock[:0]
    with pytest.raises(PreconditionError):
        curvature_clock_summary(ensemble)


def test_gauss_map_stays_in_upper_hemisphere():
    for surface, start in ((HalfCatenoid(), (2.0, 0.0)), (HelicoidGraph(), (1.0, 0.0)), (ScherkPatch(), (0.0, 0.0))):
        ensemble = simulate_ensemble(surface, start, 1e-3, 1.0, 200, seed=4)
        assert np.min(ensemble.min_normal_z) > 0


def test_hitting_time_cdf_is_monotone():
    ensemble = simulate_ensemble(FlatHalfPlane(), (1.0, 0.0), 1e-3, 4.0, 4000, seed=21)
    cdf = hitting_time_cdf(ensemble, (0.25, 1.0, 4.0))
    assert np.all(np.diff(cdf) >= 0)
    for t, value in zip((0.25, 1.0, 4.0), cdf):
        expected = 2 * stats.norm.cdf(-1.0 / math.sqrt(t))
        assert abs(value - expected) <= 4 * math.sqrt(expected * (1 - expected) / 4000)


def test_results_independent_of_workers_and_chunks():
    surface = HalfCatenoid()
    small = SchedulerService()
    small.chunk_size = 100
    inline = simulate_ensemble(surface, (2.0, 0.0), 1e-3, 1.0, 300, seed=17, workers=1, scheduler=small)
    pooled = simulate_ensemble(surface, (2.0, 0.0), 1e-3, 1.0, 300, seed=17, workers=3, scheduler=small)
    single = simulate_ensemble(surface, (2.0, 0.0), 1e-3, 1.0, 300, seed=17, workers=1)
    assert np.array_equal(inline.hit, pooled.hit)
    assert np.array_equal(inline.sigma, pooled.sigma, equal_nan=True)
    assert np.array_equal(inline.clock, pooled.clock)
    assert np.array_equal(inline.exit_x, pooled.exit_x, equal_nan=True)
    assert np.array_equal(inline.hit, single.hit)
    assert np.allclose(inline.sigma, single.sigma, rtol=1e-12, atol=0.0, equal_nan=True)
    assert np.allclose(inline.clock, single.clock, rtol=1e-12, atol=1e-15)


@pytest.mark.slow
@pytest.mark.parametrize('distance, expected', [(1.0, 0.31731), (2.0, 0.04550)])
def test_flat_hitting_at_full_scale(distance, expected):
    estimate = hitting_probability(FlatHalfPlane(), (distance, 0.0), 1.0, 100_000, 1e-4, seed=42, workers=4)
    assert abs(estimate.estimate - expected) <= 3 * math.sqrt(expected * (1 - expected) / 100_000)


@pytest.mark.slow
def test_flat_hitting_time_cdf_at_full_scale():
    ensemble = simulate_ensemble(FlatHalfPlane(), (1.0, 0.0), 1e-4, 4.0, 100_000, seed=43, workers=4)
    for t, value in zip((0.25, 1.0, 4.0), hitting_time_cdf(ensemble, (0.25, 1.0, 4.0))):
        expected = 2 * stats.norm.cdf(-1.0 / math.sqrt(t))
        assert abs(value - expected) <= 3 * math.sqrt(expected * (1 - expected) / 100_000)


@pytest.mark.slow
def test_halving_step_moves_estimate_less_than_interval_width():
    coarse = hitting_probability(HalfCatenoid(), (2.0, 0.0), 5.0, 20_000, 1e-3, seed=44, workers=4)
    fine = hitting_probability(HalfCatenoid(), (2.0, 0.0), 5.0, 20_000, 5e-4, seed=44, workers=4)
    width = coarse.interval[1] - coarse.interval[0]
    assert abs(coarse.estimate - fine.estimate) < width


@pytest.mark.slow
def test_hitting_probability_grows_with_horizon():
    for surface, start in ((HalfCatenoid(), (2.0, 0.0)), (HelicoidGraph(), (1.0, 0.0))):
        estimates = [
            hitting_probability(surface, start, horizon, 2000, 1e-2, seed=45, workers=4).estimate
            for horizon in (100.0, 1000.0)
        ]
        assert estimates[0] <= estimates[1]


@pytest.mark.slow
@pytest.mark.parametrize('surface, start', [
    (HalfCatenoid(), (2.0, 0.0)),
    (HelicoidGraph(), (1.0, 0.0)),
], ids=['catenoid', 'helicoid'])
def test_hitting_probability_over_long_horizons_meets_chart_threshold(surface, start):
    horizons = (100.0, 1000.0, 10_000.0)
    ensemble = simulate_ensemble(surface, start, 1e-2, horizons[-1], 2000, seed=46, workers=4)
    graph = hitting_time_cdf(ensemble, horizons)
    assert list(graph) == sorted(graph)

    chart = get_chart(surface)
    chart_start = chart.from_graph(*start)
    oracle = simulate_chart_ensemble(chart, chart_start, 1e-3, horizons[-1], 100_000, seed=47, workers=4)
    p_chart = oracle.hit_fraction
    spread = 4 * math.sqrt(p_chart * (1 - p_chart) / 2000 + p_chart * (1 - p_chart) / 100_000)
    assert graph[-1] >= p_chart - spread
    if surface.name == 'half-catenoid':
        # chart time never exceeds surface time since lambda^2 = cosh^2 v >= 1
        bound = float(catenoid_hitting_cdf(math.acosh(2.0), horizons[-1]))
        assert graph[-1] <= bound + 4 * math.sqrt(bound * (1 - bound) / 2000)
        assert p_chart <= bound + 4 * math.sqrt(bound * (1 - bound) / 100_000)
