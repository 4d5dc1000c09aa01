"""
Graph Brownian Motion Service Module

This module simulates intrinsic Brownian motion on a minimal graph:
- Ito coefficients of the Laplace-Beltrami generator in graph coordinates
- Euler-Maruyama paths absorbed at the boundary
- Hitting probabilities and harmonic-measure estimates
- The Gauss-map curvature clock u(t ^ sigma) = int -K dv

Paths are simulated chunk by chunk, vectorized across the paths of a chunk;
each path draws from its own counter-based stream.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, ParameterError, PreconditionError
from .scheduler_service import scheduler_service
from .stats_service import binomial_stderr, normal_interval, quantile_summary, wilson_interval
from .streams import GRAPH_STREAM, block_normals, chunk_generators
from .surface_service import _require_interior

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@dataclass
class TrajectoryRecord:
    """
    One simulated path in surface time.

    sigma is None for a censored path, which is reported as ">= horizon".
    curvature_clock holds the accumulated clock at every recorded time.
    """
    surface: str
    dt: float
    horizon: float
    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    hit: bool
    sigma: float = None
    curvature_clock: np.ndarray = None
    final_normal: tuple = None
    min_normal_z: float = 1.0
    truncated: bool = False
    chart_sigma: float = None

    @property
    def censored(self):
        return not self.hit

    @property
    def clock(self):
        return float(self.curvature_clock[-1])

    @property
    def sigma_label(self):
        return repr(float(self.sigma)) if self.hit else f">={self.horizon!r}"


@dataclass
class EnsembleResult:
    """Per-path outcomes of an ensemble, in path-index order"""
    surface: str
    start: tuple
    dt: float
    horizon: float
    seed: int
    hit: np.ndarray
    sigma: np.ndarray
    clock: np.ndarray
    exit_x: np.ndarray
    exit_y: np.ndarray
    min_normal_z: np.ndarray
    truncated: np.ndarray
    extras: dict = field(default_factory=dict)

    @property
    def n(self):
        return int(self.hit.size)

    @property
    def hits(self):
        return int(np.count_nonzero(self.hit))

    @property
    def hit_fraction(self):
        return self.hits / self.n if self.n else 0.0

    @property
    def truncated_fraction(self):
        return float(np.count_nonzero(self.truncated)) / self.n if self.n else 0.0

    def hit_times(self):
        return self.sigma[self.hit]

    def rows(self):
        """Per-path rows (path_id, hit, sigma, clock, exit_x, exit_y)"""
        censored_label = f">={self.horizon!r}"
        for index in range(self.n):
            hit = bool(self.hit[index])
            yield {
                'path_id': index,
                'hit': int(hit),
                'sigma': repr(float(self.sigma[index])) if hit else censored_label,
                'clock': float(self.clock[index]),
                'exit_x': float(self.exit_x[index]) if hit else None,
                'exit_y': float(self.exit_y[index]) if hit else None
            }


@dataclass
class HittingEstimate:
    estimate: float
    interval: tuple
    stderr: float
    hits: int
    n: int
    ensemble: EnsembleResult = None

    def as_dict(self):
        return {
            'estimate': self.estimate,
            'ci95': list(self.interval),
            'stderr': self.stderr,
            'hits': self.hits,
            'n': self.n,
            'censored_mass': 1.0 - self.estimate
        }


@dataclass
class HarmonicEstimate:
    estimate: float
    stderr: float
    non_hit_mass: float
    hits: int
    n: int
    ensemble: EnsembleResult = None
    ci95: tuple = (float('nan'), float('nan'))

    def as_dict(self):
        return {
            'estimate': self.estimate,
            'stderr': self.stderr,
            'ci95': list(self.ci95),
            'non_hit_mass': self.non_hit_mass,
            'hits': self.hits,
            'n': self.n
        }


def _components(surface, x, y):
    u_x, u_y = surface.grad(x, y)
    u_xx, u_xy, u_yy = surface.hess(x, y)
    w2 = 1.0 + u_x * u_x + u_y * u_y
    w = np.sqrt(w2)
    residual = (1.0 + u_y * u_y) * u_xx - 2.0 * u_x * u_y * u_xy + (1.0 + u_x * u_x) * u_yy
    drift_scale = -residual / (2.0 * w2 * w2)
    c = 1.0 / (w * (w + 1.0))
    return {
        'b_x': drift_scale * u_x,
        'b_y': drift_scale * u_y,
        's_xx': 1.0 - c * u_x * u_x,
        's_xy': -c * u_x * u_y,
        's_yy': 1.0 - c * u_y * u_y,
        'neg_k': -(u_xx * u_yy - u_xy * u_xy) / (w2 * w2),
        'normal_z': 1.0 / w
    }


def ito_coefficients(surface, p):
    """
    Drift and diffusion of Brownian motion (generator Laplace-Beltrami / 2)

    b^i = (1/(2 sqrt G)) d_j(sqrt G g^ij) expands to -R grad u / (2 W^4),
    with R the minimal surface residual and W^2 = 1 + |grad u|^2, so b
    vanishes on minimal graphs. sigma_d = I - grad u grad u^T / (W (W + 1))
    is the symmetric square root of the inverse metric.

    Args:
        surface (MinimalGraphSurface): Surface
        p (tuple): Interior domain point

    Returns:
        tuple: (b with trailing axis 2, sigma_d with trailing axes 2x2)
    """
    x, y = np.asarray(p[0], dtype=float), np.asarray(p[1], dtype=float)
    _require_interior(surface, x, y)
    c = _components(surface, x, y)
    b = np.stack([c['b_x'], c['b_y']], axis=-1)
    sigma_d = np.stack([
        np.stack([c['s_xx'], c['s_xy']], axis=-1),
        np.stack([c['s_xy'], c['s_yy']], axis=-1)
    ], axis=-2)
    return b, sigma_d


def step_count(horizon, dt):
    """Number of Euler steps covering [0, horizon]; the last may be shorter"""
    if horizon <= 0:
        return 0
    return int(math.ceil(horizon / dt - 1e-9))


def _validate(surface, start, dt, horizon):
    if not dt > 0:
        raise ParameterError(f"time step must be positive, got {dt}")
    if not horizon >= 0:
        raise ParameterError(f"horizon must be non-negative, got {horizon}")
    if not bool(np.all(surface.contains(start[0], start[1]))):
        raise DomainError(f"start {tuple(start)} is outside the domain of {surface.name}")


def _graph_chunk(surface, start, dt, horizon, seed, first, stop, block,
                 zero_noise=False, keep_path=False):
    n = stop - first
    generators = None if zero_noise else chunk_generators(seed, range(first, stop), GRAPH_STREAM)
    x = np.full(n, float(start[0]))
    y = np.full(n, float(start[1]))
    alive = np.ones(n, dtype=bool)
    hit = np.zeros(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)
    sigma = np.full(n, np.nan)
    clock = np.zeros(n)
    exit_x = np.full(n, np.nan)
    exit_y = np.full(n, np.nan)
    min_nz = np.ones(n)
    n_steps = step_count(horizon, dt)
    trace = {'t': [0.0], 'x': [x[0]], 'y': [y[0]], 'clock': [0.0]} if keep_path else None

    step = 0
    while step < n_steps and alive.any():
        active = np.nonzero(alive)[0]
        length = min(block, n_steps - step)
        if zero_noise:
            noise = np.zeros((length, active.size, 2))
        else:
            noise = block_normals(generators, active, length, 2)
        xa, ya = x[active], y[active]
        clk, nz = clock[active], min_nz[active]
        live = np.ones(active.size, dtype=bool)
        hit_a = np.zeros(active.size, dtype=bool)
        bad_a = np.zeros(active.size, dtype=bool)
        sig_a = np.full(active.size, np.nan)
        ex_a = np.full(active.size, np.nan)
        ey_a = np.full(active.size, np.nan)
        for k in range(length):
            t0 = (step + k) * dt
            h = min(dt, horizon - t0)
            c = _components(surface, xa, ya)
            root = math.sqrt(h)
            xi1, xi2 = noise[k, :, 0], noise[k, :, 1]
            xn = xa + c['b_x'] * h + root * (c['s_xx'] * xi1 + c['s_xy'] * xi2)
            yn = ya + c['b_y'] * h + root * (c['s_xy'] * xi1 + c['s_yy'] * xi2)
            nz = np.where(live, np.minimum(nz, c['normal_z']), nz)
            d0 = surface.signed_distance(xa, ya)
            d1 = surface.signed_distance(xn, yn)
            bad = live & ~np.isfinite(d1)
            exited = live & ~bad & (d1 >= 0)
            frac = np.ones(active.size)
            if exited.any():
                frac[exited] = np.clip(d0[exited] / (d0[exited] - d1[exited]), 0.0, 1.0)
                sig_a[exited] = t0 + frac[exited] * h
                ex_a[exited] = xa[exited] + frac[exited] * (xn[exited] - xa[exited])
                ey_a[exited] = ya[exited] + frac[exited] * (yn[exited] - ya[exited])
                hit_a |= exited
            clk = np.where(live & ~bad, clk + c['neg_k'] * h * frac, clk)
            moving = live & ~exited & ~bad
            xa = np.where(moving, xn, xa)
            ya = np.where(moving, yn, ya)
            bad_a |= bad
            live = moving
            if keep_path:
                if exited[0]:
                    trace['t'].append(sig_a[0])
                    trace['x'].append(ex_a[0])
                    trace['y'].append(ey_a[0])
                    trace['clock'].append(clk[0])
                elif moving[0]:
                    trace['t'].append(t0 + h)
                    trace['x'].append(xa[0])
                    trace['y'].append(ya[0])
                    trace['clock'].append(clk[0])
            if not live.any():
                break
        x[active], y[active] = xa, ya
        clock[active], min_nz[active] = clk, nz
        hit[active] |= hit_a
        truncated[active] |= bad_a
        sigma[active] = np.where(hit_a, sig_a, sigma[active])
        exit_x[active] = np.where(hit_a, ex_a, exit_x[active])
        exit_y[active] = np.where(hit_a, ey_a, exit_y[active])
        alive[active] = live
        step += length

    result = {
        'hit': hit, 'sigma': sigma, 'clock': clock, 'exit_x': exit_x, 'exit_y': exit_y,
        'min_normal_z': min_nz, 'truncated': truncated, 'x': x, 'y': y
    }
    if keep_path:
        result['trace'] = trace
    return result


def _graph_chunk_job(payload):
    """Module-level entry point for pool workers"""
    return _graph_chunk(**payload)


def simulate_path(surface, start, dt, horizon, seed=0, index=0, zero_noise=False, block=256):
    """
    Simulate one absorbed path and keep its full trajectory

    Args:
        surface (MinimalGraphSurface): Surface
        start (tuple): Interior start point
        dt (float): Euler step
        horizon (float): Surface-time horizon T > 0
        seed (int): Master seed
        index (int): Path index selecting the stream
        zero_noise (bool): Replace the Gaussian increments by zeros

    Returns:
        TrajectoryRecord: The path, truncated at the boundary hit
    """
    _validate(surface, start, dt, horizon)
    if not horizon > 0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    out = _graph_chunk(surface, start, dt, horizon, seed, index, index + 1, block,
                       zero_noise=zero_noise, keep_path=True)
    trace = out['trace']
    hit = bool(out['hit'][0])
    last_x, last_y = float(out['x'][0]), float(out['y'][0])
    u_x, u_y = surface.grad(last_x, last_y)
    w = math.sqrt(1.0 + float(u_x) ** 2 + float(u_y) ** 2)
    return TrajectoryRecord(
        surface=surface.name,
        dt=dt,
        horizon=horizon,
        times=np.asarray(trace['t']),
        xs=np.asarray(trace['x']),
        ys=np.asarray(trace['y']),
        hit=hit,
        sigma=float(out['sigma'][0]) if hit else None,
        curvature_clock=np.asarray(trace['clock']),
        final_normal=(-float(u_x) / w, -float(u_y) / w, 1.0 / w),
        min_normal_z=float(out['min_normal_z'][0]),
        truncated=bool(out['truncated'][0])
    )


def simulate_ensemble(surface, start, dt, horizon, n, seed, workers=None, block=256,
                      zero_noise=False, scheduler=None):
    """
    Simulate n independent paths, chunked and reduced in index order

    Returns:
        EnsembleResult: Per-path outcomes
    """
    _validate(surface, start, dt, horizon)
    if n < 1:
        raise ParameterError(f"path count must be at least 1, got {n}")
    scheduler = scheduler or scheduler_service
    payloads = [
        dict(surface=surface, start=tuple(float(c) for c in start), dt=dt, horizon=horizon,
             seed=seed, first=first, stop=stop, block=block, zero_noise=zero_noise)
        for first, stop in scheduler.chunks(n)
    ]
    logger.info(f"Simulating {n} path(s) on {surface.name} from {tuple(start)}, dt={dt}, T={horizon}")
    parts = scheduler.map_chunks(_graph_chunk_job, payloads, workers=workers)
    merged = {key: np.concatenate([part[key] for part in parts]) for key in parts[0] if key != 'trace'}
    result = EnsembleResult(
        surface=surface.name,
        start=tuple(float(c) for c in start),
        dt=dt,
        horizon=horizon,
        seed=seed,
        hit=merged['hit'],
        sigma=merged['sigma'],
        clock=merged['clock'],
        exit_x=merged['exit_x'],
        exit_y=merged['exit_y'],
        min_normal_z=merged['min_normal_z'],
        truncated=merged['truncated'],
        extras={'final_x': merged['x'], 'final_y': merged['y']}
    )
    if result.truncated_fraction > 0:
        logger.warning(f"{result.truncated_fraction:.2%} of paths on {surface.name} were truncated")
    return result


def hitting_probability(surface, start, horizon, n, dt, seed, workers=None, block=256, scheduler=None):
    """
    Fraction of n paths absorbed before the horizon, with a Wilson interval

    Returns:
        HittingEstimate: Estimate, 95% interval, and the ensemble
    """
    ensemble = simulate_ensemble(surface, start, dt, horizon, n, seed, workers=workers,
                                 block=block, scheduler=scheduler)
    p_hat = ensemble.hit_fraction
    return HittingEstimate(
        estimate=p_hat,
        interval=wilson_interval(ensemble.hits, ensemble.n),
        stderr=binomial_stderr(p_hat, ensemble.n),
        hits=ensemble.hits,
        n=ensemble.n,
        ensemble=ensemble
    )


def hitting_time_cdf(ensemble, times):
    """Empirical P(sigma <= t) over the whole ensemble for each t"""
    sigma = np.where(ensemble.hit, ensemble.sigma, np.inf)
    return np.array([np.count_nonzero(sigma <= t) / ensemble.n for t in times])


def _constant_one(x, y):
    return np.ones_like(np.asarray(x, dtype=float))


def _upper_half(x, y):
    return (np.asarray(y) > 0).astype(float)


def _upper_angle(x, y):
    angle = np.mod(np.arctan2(y, x), 2.0 * math.pi)
    return ((angle >= 0.0) & (angle < math.pi)).astype(float)


# Bounded boundary functionals selectable by name in experiment specs
BOUNDARY_FUNCTIONALS = {
    'one': _constant_one,
    'upper-half': _upper_half,
    'upper-angle': _upper_angle
}


def boundary_functional(name):
    if name not in BOUNDARY_FUNCTIONALS:
        raise ConfigError(f"unknown boundary functional '{name}'; known: {', '.join(sorted(BOUNDARY_FUNCTIONALS))}")
    return BOUNDARY_FUNCTIONALS[name]


def harmonic_estimate(surface, start, h, horizon, n, dt, seed, workers=None, block=256, scheduler=None):
    """
    Estimate E[h(B_sigma)] over hit paths and report the non-hit mass

    Args:
        h (callable): Bounded function of boundary points (x, y)

    Returns:
        HarmonicEstimate: Mean of h at the exit points of hit paths
    """
    ensemble = simulate_ensemble(surface, start, dt, horizon, n, seed, workers=workers,
                                 block=block, scheduler=scheduler)
    values = np.asarray(h(ensemble.exit_x[ensemble.hit], ensemble.exit_y[ensemble.hit]), dtype=float)
    hits = ensemble.hits
    estimate = float(values.mean()) if hits else float('nan')
    stderr = float(values.std(ddof=1) / math.sqrt(hits)) if hits > 1 else float('nan')
    return HarmonicEstimate(
        estimate=estimate,
        stderr=stderr,
        non_hit_mass=1.0 - ensemble.hit_fraction,
        hits=hits,
        n=ensemble.n,
        ensemble=ensemble,
        ci95=normal_interval(estimate, stderr)
    )


def curvature_clock_summary(ensemble, doubled=None, tolerance=0.05):
    """
    Quantiles of the accumulated clock u(sigma ^ T)

    Args:
        ensemble (EnsembleResult): Ensemble at horizon T
        doubled (EnsembleResult): Optional ensemble at horizon 2T
        tolerance (float): Relative change of the 99th percentile accepted as stable

    Returns:
        dict: Quantile summary, plus the finite-limit flag when doubled is given
    """
    if ensemble.n == 0:
        raise PreconditionError("curvature clock summary needs a nonempty ensemble")
    summary = quantile_summary(ensemble.clock)
    summary['horizon'] = ensemble.horizon
    if doubled is not None:
        q99 = summary['q99']
        q99_doubled = float(np.quantile(doubled.clock, 0.99))
        scale = max(abs(q99), 1e-12)
        summary['q99_doubled'] = q99_doubled
        summary['stabilized'] = bool(abs(q99_doubled - q99) <= tolerance * scale or (q99 == 0 and q99_doubled == 0))
    return summary


class GraphBMService:
    """Graph Brownian motion service class bound to configured defaults"""

    def __init__(self, app=None):
        """Initialize the graph Brownian motion service"""
        self.app = app
        self.default_dt = 1e-3
        self.block = 256
        if app:
            self.init_app(app)

    def init_app(self, app):
        """Initialize with Flask app"""
        self.app = app
        self.default_dt = app.config.get('DEFAULT_DT', 1e-3)
        self.block = app.config.get('NOISE_BLOCK', 256)

    def simulate(self, surface, start, horizon, n, seed, dt=None, workers=None):
        return simulate_ensemble(surface, start, dt or self.default_dt, horizon, n, seed,
                                 workers=workers, block=self.block)

    def hitting(self, surface, start, horizon, n, seed, dt=None, workers=None):
        return hitting_probability(surface, start, horizon, n, dt or self.default_dt, seed,
                                   workers=workers, block=self.block)

    def harmonic(self, surface, start, functional, horizon, n, seed, dt=None, workers=None):
        return harmonic_estimate(surface, start, boundary_functional(functional), horizon, n,
                                 dt or self.default_dt, seed, workers=workers, block=self.block)


# Global graph Brownian motion service instance
graph_bm_service = GraphBMService()
