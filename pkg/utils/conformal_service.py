"""
Conformal Service Module

This module simulates surface Brownian motion as time-changed planar
Brownian motion in hand-derived conformal charts of the catalog surfaces.
It serves as an independent oracle for the graph-coordinate simulator:
- Conformal charts with factor lambda^2 and the map to graph coordinates
- Chart paths with surface time accumulated as int lambda^2 d(chart time)
- Cross-checks of hitting-time and curvature-clock laws
- Closed-form catenoid oracles
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .errors import DomainError, ParameterError, PreconditionError, UnsupportedError
from .graph_bm_service import EnsembleResult, TrajectoryRecord, simulate_ensemble
from .scheduler_service import scheduler_service
from .stats_service import ecdf_distance, ks_two_sample, two_proportion_test
from .streams import CHART_STREAM, block_normals, chunk_generators
from .surface_service import metric_data

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Total curvature int int |K| dA of the half-catenoid {r > 1}
CATENOID_TOTAL_CURVATURE = 2.0 * math.pi


class ConformalChart:
    """
    A conformal parameterization (u, v) -> (x, y) of a catalog surface.

    The pulled-back metric is lambda^2 (du^2 + dv^2); signed_distance is
    negative inside the chart domain.
    """

    surface = None
    domain_description = ''

    def lambda2(self, u, v):
        raise NotImplementedError

    def neg_k_lambda2(self, u, v):
        """-K lambda^2, the clock density per unit chart time"""
        raise NotImplementedError

    def to_graph(self, u, v):
        raise NotImplementedError

    def from_graph(self, x, y):
        raise NotImplementedError

    def jacobian(self, u, v):
        """Return (x_u, x_v, y_u, y_v)"""
        raise NotImplementedError

    def signed_distance(self, u, v):
        raise NotImplementedError

    def sample_interior(self, rng, n, margin=0.05):
        raise NotImplementedError

    def contains(self, u, v):
        return np.asarray(self.signed_distance(u, v)) < 0

    def describe(self):
        return {'surface': self.surface, 'domain': self.domain_description}


class FlatChart(ConformalChart):
    surface = 'flat-half-plane'
    domain_description = 'u > 0, identity map'

    def lambda2(self, u, v):
        return np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape)

    def neg_k_lambda2(self, u, v):
        return np.zeros(np.broadcast(np.asarray(u), np.asarray(v)).shape)

    def to_graph(self, u, v):
        return np.asarray(u, dtype=float), np.asarray(v, dtype=float)

    def from_graph(self, x, y):
        return np.asarray(x, dtype=float), np.asarray(y, dtype=float)

    def jacobian(self, u, v):
        one = self.lambda2(u, v)
        zero = np.zeros_like(one)
        return one, zero, zero.copy(), one.copy()

    def signed_distance(self, u, v):
        return -np.asarray(u, dtype=float) + 0.0 * np.asarray(v, dtype=float)

    def sample_interior(self, rng, n, margin=0.05):
        return rng.uniform(margin, 10.0, n), rng.uniform(-10.0, 10.0, n)


class CatenoidChart(ConformalChart):
    surface = 'half-catenoid'
    domain_description = '(u, v) in [0, 2pi) x (0, inf), boundary v = 0'

    def lambda2(self, u, v):
        return np.cosh(v) ** 2 + 0.0 * np.asarray(u, dtype=float)

    def neg_k_lambda2(self, u, v):
        return 1.0 / np.cosh(v) ** 2 + 0.0 * np.asarray(u, dtype=float)

    def to_graph(self, u, v):
        radius = np.cosh(v)
        return radius * np.cos(u), radius * np.sin(u)

    def from_graph(self, x, y):
        return np.mod(np.arctan2(y, x), 2.0 * math.pi), np.arccosh(np.hypot(x, y))

    def jacobian(self, u, v):
        return -np.cosh(v) * np.sin(u), np.sinh(v) * np.cos(u), np.cosh(v) * np.cos(u), np.sinh(v) * np.sin(u)

    def signed_distance(self, u, v):
        return -np.asarray(v, dtype=float) + 0.0 * np.asarray(u, dtype=float)

    def sample_interior(self, rng, n, margin=0.05):
        return rng.uniform(0.0, 2.0 * math.pi, n), rng.uniform(margin, 3.0, n)


class HelicoidChart(ConformalChart):
    surface = 'helicoid-graph'
    domain_description = '(u, v) in (-pi/2, pi/2) x (0, inf), boundary |u| = pi/2 or v = 0'

    def lambda2(self, u, v):
        return np.cosh(v) ** 2 + 0.0 * np.asarray(u, dtype=float)

    def neg_k_lambda2(self, u, v):
        return 1.0 / np.cosh(v) ** 2 + 0.0 * np.asarray(u, dtype=float)

    def to_graph(self, u, v):
        rho = np.sinh(v)
        return rho * np.cos(u), rho * np.sin(u)

    def from_graph(self, x, y):
        return np.arctan2(y, x), np.arcsinh(np.hypot(x, y))

    def jacobian(self, u, v):
        return -np.sinh(v) * np.sin(u), np.cosh(v) * np.cos(u), np.sinh(v) * np.cos(u), np.cosh(v) * np.sin(u)

    def signed_distance(self, u, v):
        return np.maximum(np.abs(u) - math.pi / 2.0, -np.asarray(v, dtype=float))

    def sample_interior(self, rng, n, margin=0.05):
        half = math.pi / 2.0 - margin
        return rng.uniform(-half, half, n), rng.uniform(margin, 3.0, n)


CHARTS = {chart.surface: chart for chart in (FlatChart(), CatenoidChart(), HelicoidChart())}


def charts():
    """The conformal charts of the catalog surfaces that admit one"""
    return list(CHARTS.values())


def get_chart(surface):
    """
    Look up the chart of a surface

    Args:
        surface: Surface instance or surface name

    Returns:
        ConformalChart: The chart
    """
    name = getattr(surface, 'name', surface)
    if name not in CHARTS:
        raise UnsupportedError(f"no conformal chart for surface '{name}'")
    return CHARTS[name]


def metric_agreement(chart, surface, n=1000, seed=0):
    """
    Largest relative deviation of J^T G J from lambda^2 I at sample points

    Args:
        chart (ConformalChart): Chart to check
        surface (MinimalGraphSurface): The surface the chart parameterizes
        n (int): Number of chart sample points
        seed (int): Sampling seed

    Returns:
        float: max |J^T G J - lambda^2 I| / lambda^2
    """
    rng = np.random.default_rng(seed)
    u, v = chart.sample_interior(rng, n)
    x, y = chart.to_graph(u, v)
    metric, _, _ = metric_data(surface, (x, y))
    x_u, x_v, y_u, y_v = chart.jacobian(u, v)
    jac = np.stack([np.stack([x_u, x_v], axis=-1), np.stack([y_u, y_v], axis=-1)], axis=-2)
    pulled = np.einsum('nji,njk,nkl->nil', jac, metric, jac)
    lam2 = chart.lambda2(u, v)
    expected = lam2[:, None, None] * np.eye(2)
    return float(np.max(np.abs(pulled - expected) / lam2[:, None, None]))


def _chart_chunk(chart, start, dsigma, horizon, chart_horizon, seed, first, stop, block,
                 zero_noise=False, keep_path=False):
    n = stop - first
    generators = None if zero_noise else chunk_generators(seed, range(first, stop), CHART_STREAM)
    u = np.full(n, float(start[0]))
    v = np.full(n, float(start[1]))
    t = np.zeros(n)
    s = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    hit = np.zeros(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)
    sigma = np.full(n, np.nan)
    chart_sigma = np.full(n, np.nan)
    clock = np.zeros(n)
    exit_u = np.full(n, np.nan)
    exit_v = np.full(n, np.nan)
    trace = {'t': [0.0], 'u': [u[0]], 'v': [v[0]], 'clock': [0.0]} if keep_path else None

    while alive.any():
        active = np.nonzero(alive)[0]
        if zero_noise:
            noise = np.zeros((block, active.size, 2))
        else:
            noise = block_normals(generators, active, block, 2)
        ua, va, ta, sa, clk = u[active], v[active], t[active], s[active], clock[active]
        live = np.ones(active.size, dtype=bool)
        hit_a = np.zeros(active.size, dtype=bool)
        bad_a = np.zeros(active.size, dtype=bool)
        for k in range(block):
            lam2 = chart.lambda2(ua, va)
            step = np.full(active.size, dsigma)
            if math.isfinite(horizon):
                step = np.minimum(step, (horizon - ta) / lam2)
            if chart_horizon is not None:
                step = np.minimum(step, chart_horizon - sa)
            step = np.maximum(step, 0.0)
            root = np.sqrt(step)
            un = ua + root * noise[k, :, 0]
            vn = va + root * noise[k, :, 1]
            d0 = chart.signed_distance(ua, va)
            d1 = chart.signed_distance(un, vn)
            bad = live & ~(np.isfinite(d1) & np.isfinite(lam2))
            exited = live & ~bad & (d1 >= 0)
            frac = np.ones(active.size)
            if exited.any():
                frac[exited] = np.clip(d0[exited] / (d0[exited] - d1[exited]), 0.0, 1.0)
                un[exited] = ua[exited] + frac[exited] * (un[exited] - ua[exited])
                vn[exited] = va[exited] + frac[exited] * (vn[exited] - va[exited])
            moved = live & ~bad
            used = step * frac
            clk = np.where(moved, clk + chart.neg_k_lambda2(ua, va) * used, clk)
            ta = np.where(moved, ta + lam2 * used, ta)
            sa = np.where(moved, sa + used, sa)
            ua = np.where(moved, un, ua)
            va = np.where(moved, vn, va)
            hit_a |= exited
            bad_a |= bad
            capped = (ta >= horizon * (1.0 - 1e-12)) if math.isfinite(horizon) else np.zeros(active.size, dtype=bool)
            if chart_horizon is not None:
                capped = capped | (sa >= chart_horizon * (1.0 - 1e-12))
            if keep_path and moved[0]:
                trace['t'].append(ta[0])
                trace['u'].append(ua[0])
                trace['v'].append(va[0])
                trace['clock'].append(clk[0])
            live = live & ~exited & ~bad & ~capped
            if not live.any():
                break
        u[active], v[active], t[active], s[active], clock[active] = ua, va, ta, sa, clk
        hit[active] |= hit_a
        truncated[active] |= bad_a
        sigma[active] = np.where(hit_a, ta, sigma[active])
        chart_sigma[active] = np.where(hit_a, sa, chart_sigma[active])
        exit_u[active] = np.where(hit_a, ua, exit_u[active])
        exit_v[active] = np.where(hit_a, va, exit_v[active])
        alive[active] = live

    exit_x, exit_y = chart.to_graph(exit_u, exit_v)
    result = {
        'hit': hit, 'sigma': sigma, 'chart_sigma': chart_sigma, 'clock': clock,
        'exit_x': np.where(hit, exit_x, np.nan), 'exit_y': np.where(hit, exit_y, np.nan),
        'truncated': truncated, 'u': u, 'v': v
    }
    if keep_path:
        result['trace'] = trace
    return result


def _chart_chunk_job(payload):
    """Module-level entry point for pool workers"""
    return _chart_chunk(**payload)


def _validate(chart, start, dsigma, horizon, chart_horizon):
    if not dsigma > 0:
        raise ParameterError(f"chart step must be positive, got {dsigma}")
    if not horizon >= 0:
        raise ParameterError(f"horizon must be non-negative, got {horizon}")
    if chart_horizon is not None and not chart_horizon >= 0:
        raise ParameterError(f"chart horizon must be non-negative, got {chart_horizon}")
    if not math.isfinite(horizon) and chart_horizon is None:
        raise ParameterError("an infinite surface horizon needs a finite chart horizon")
    if not bool(np.all(chart.contains(start[0], start[1]))):
        raise DomainError(f"chart start {tuple(start)} is outside the chart of {chart.surface}")


def simulate_chart_path(chart, start, dsigma, horizon, seed=0, index=0, chart_horizon=None,
                        zero_noise=False, block=256):
    """
    Simulate one chart path and report it in surface time

    Args:
        chart (ConformalChart): Chart
        start (tuple): Chart coordinates (u, v) of the start
        dsigma (float): Chart time step
        horizon (float): Surface-time horizon
        chart_horizon (float): Optional cap on chart time

    Returns:
        TrajectoryRecord: Path in graph coordinates, times in surface time
    """
    _validate(chart, start, dsigma, horizon, chart_horizon)
    out = _chart_chunk(chart, start, dsigma, horizon, chart_horizon, seed, index, index + 1,
                       block, zero_noise=zero_noise, keep_path=True)
    trace = out['trace']
    xs, ys = chart.to_graph(np.asarray(trace['u']), np.asarray(trace['v']))
    hit = bool(out['hit'][0])
    return TrajectoryRecord(
        surface=chart.surface,
        dt=dsigma,
        horizon=horizon,
        times=np.asarray(trace['t']),
        xs=np.asarray(xs),
        ys=np.asarray(ys),
        hit=hit,
        sigma=float(out['sigma'][0]) if hit else None,
        curvature_clock=np.asarray(trace['clock']),
        truncated=bool(out['truncated'][0]),
        chart_sigma=float(out['chart_sigma'][0]) if hit else None
    )


def simulate_chart_ensemble(chart, start, dsigma, horizon, n, seed, chart_horizon=None,
                            workers=None, block=256, zero_noise=False, scheduler=None):
    """
    Simulate n chart paths, chunked and reduced in index order

    Returns:
        EnsembleResult: Outcomes in surface time, chart exit times in extras
    """
    _validate(chart, start, dsigma, horizon, chart_horizon)
    if n < 1:
        raise ParameterError(f"path count must be at least 1, got {n}")
    scheduler = scheduler or scheduler_service
    payloads = [
        dict(chart=chart, start=tuple(float(c) for c in start), dsigma=dsigma, horizon=horizon,
             chart_horizon=chart_horizon, seed=seed, first=first, stop=stop, block=block,
             zero_noise=zero_noise)
        for first, stop in scheduler.chunks(n)
    ]
    logger.info(f"Simulating {n} chart path(s) on {chart.surface} from chart point {tuple(start)}, dsigma={dsigma}")
    parts = scheduler.map_chunks(_chart_chunk_job, payloads, workers=workers)
    merged = {key: np.concatenate([part[key] for part in parts]) for key in parts[0]}
    x0, y0 = chart.to_graph(float(start[0]), float(start[1]))
    return EnsembleResult(
        surface=chart.surface,
        start=(float(x0), float(y0)),
        dt=dsigma,
        horizon=horizon,
        seed=seed,
        hit=merged['hit'],
        sigma=merged['sigma'],
        clock=merged['clock'],
        exit_x=merged['exit_x'],
        exit_y=merged['exit_y'],
        min_normal_z=np.full(n, np.nan),
        truncated=merged['truncated'],
        extras={'chart_sigma': merged['chart_sigma']}
    )


@dataclass
class CrossCheckResult:
    """Agreement statistics between graph-coordinate and chart ensembles"""
    surface: str
    ks_statistic: float
    ks_pvalue: float
    ecdf_distance: float
    clock_ks_statistic: float
    clock_ks_pvalue: float
    graph_hits: int
    chart_hits: int
    censored_difference: float
    censored_pvalue: float
    n: int
    graph_truncated_fraction: float = 0.0
    chart_truncated_fraction: float = 0.0

    def as_dict(self):
        return dict(self.__dict__)


def cross_check(surface, start, horizon, n, dt, dsigma, seed, workers=None, block=256):
    """
    Compare hitting-time and curvature-clock laws of both simulators

    Args:
        surface (MinimalGraphSurface): Surface with a conformal chart
        start (tuple): Graph-coordinate start point
        horizon (float): Surface-time horizon T
        n (int): Paths per side
        dt (float): Graph Euler step
        dsigma (float): Chart time step

    Returns:
        CrossCheckResult: KS on hit-path sigma samples, censored masses compared separately
    """
    chart = get_chart(surface)
    chart_start = tuple(float(c) for c in chart.from_graph(float(start[0]), float(start[1])))
    graph_side = simulate_ensemble(surface, start, dt, horizon, n, seed, workers=workers, block=block)
    chart_side = simulate_chart_ensemble(chart, chart_start, dsigma, horizon, n, seed,
                                         workers=workers, block=block)
    if graph_side.hits == 0 or chart_side.hits == 0:
        raise PreconditionError(f"cross-check needs hits on both sides, got {graph_side.hits} and {chart_side.hits}")
    d, p = ks_two_sample(graph_side.hit_times(), chart_side.hit_times())
    clock_d, clock_p = ks_two_sample(graph_side.clock, chart_side.clock)
    diff, diff_p = two_proportion_test(n - graph_side.hits, n, n - chart_side.hits, n)
    result = CrossCheckResult(
        surface=surface.name,
        ks_statistic=d,
        ks_pvalue=p,
        ecdf_distance=ecdf_distance(graph_side.hit_times(), chart_side.hit_times()),
        clock_ks_statistic=clock_d,
        clock_ks_pvalue=clock_p,
        graph_hits=graph_side.hits,
        chart_hits=chart_side.hits,
        censored_difference=diff,
        censored_pvalue=diff_p,
        n=n,
        graph_truncated_fraction=graph_side.truncated_fraction,
        chart_truncated_fraction=chart_side.truncated_fraction
    )
    logger.info(f"Cross-check on {surface.name}: KS D={d:.4f} p={p:.4f}, clock KS p={clock_p:.4f}")
    return result


def catenoid_hitting_cdf(v0, chart_time):
    """P(chart exit time <= s) = 2 Phi(-v0 / sqrt(s)) for the catenoid chart"""
    chart_time = np.asarray(chart_time, dtype=float)
    return np.where(chart_time > 0, 2.0 * stats.norm.cdf(-v0 / np.sqrt(np.maximum(chart_time, 1e-300))), 0.0)


def _occupation(a, chart_horizon):
    a = abs(a)
    if chart_horizon is None:
        return -a
    root = math.sqrt(2.0 * chart_horizon)
    return root / math.sqrt(math.pi) * math.exp(-a * a / (2.0 * chart_horizon)) - a * special.erfc(a / root)


def catenoid_expected_clock(r0, chart_horizon=None):
    """
    Expected curvature clock of a half-catenoid path started at radius r0

    Without a chart-time cap this is 2 (v0 - log cosh v0), v0 = arccosh r0.
    With a cap S it integrates sech^2 against the killed occupation density
    up to chart time S.
    """
    if not r0 > 1:
        raise DomainError(f"catenoid radius must exceed 1, got {r0}")
    v0 = math.acosh(r0)
    if chart_horizon is None:
        return 2.0 * (v0 - math.log(math.cosh(v0)))

    def density(w):
        return (_occupation(w - v0, chart_horizon) - _occupation(w + v0, chart_horizon)) / math.cosh(w) ** 2

    value, _ = integrate.quad(density, 0.0, np.inf, limit=200)
    return value


class ConformalService:
    """Conformal service class bound to configured defaults"""

    def __init__(self, app=None):
        """Initialize the conformal service"""
        self.app = app
        self.default_dsigma = 1e-3
        self.default_dt = 1e-3
        self.block = 256
        if app:
            self.init_app(app)

    def init_app(self, app):
        """Initialize with Flask app"""
        self.app = app
        self.default_dsigma = app.config.get('DEFAULT_DSIGMA', 1e-3)
        self.default_dt = app.config.get('DEFAULT_DT', 1e-3)
        self.block = app.config.get('NOISE_BLOCK', 256)

    def list_charts(self):
        return [chart.describe() for chart in charts()]

    def simulate(self, surface, start, horizon, n, seed, dsigma=None, chart_horizon=None, workers=None):
        """Simulate from a graph-coordinate start"""
        chart = get_chart(surface)
        chart_start = chart.from_graph(float(start[0]), float(start[1]))
        return simulate_chart_ensemble(chart, chart_start, dsigma or self.default_dsigma, horizon, n, seed,
                                       chart_horizon=chart_horizon, workers=workers, block=self.block)

    def cross_check(self, surface, start, horizon, n, seed, dt=None, dsigma=None, workers=None):
        return cross_check(surface, start, horizon, n, dt or self.default_dt, dsigma or self.default_dsigma,
                           seed, workers=workers, block=self.block)


# Global conformal service instance
conformal_service = ConformalService()
