"""
Reduced Service Module

This module runs the reduced dynamics of the log chord length rho driven by
psi = theta + phi in s-time, and the statistics built on them:
- Surrogate drift D(psi) = min(c4p, c3p |cos psi|)
- Euler-Maruyama ensembles recorded on the integer s-grid
- Interval-wise Bernoulli drift indicators and linear decay of int -D
- Last exits above a level, sublinearity of the driving noise
- Pathwise Bessel domination of the chord length in tau-time
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .coupling_service import principal_fg
from .errors import ConfigError, ParameterError, PreconditionError
from .scheduler_service import scheduler_service
from .stats_service import bootstrap_slope_ci, quantile_summary, wilson_interval
from .streams import BESSEL_STREAM, BOOTSTRAP_STREAM, REDUCED_STREAM, block_normals, chunk_generators, path_generator

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SCHEDULE_KINDS = ('zero', 'constant', 'exponential')
EPS_MODES = ('uniform', 'constant')


@dataclass(frozen=True)
class PerturbationSchedule:
    """
    Deterministic perturbation a(s) or b(s).

    constant: scale on [0, length); exponential: scale * exp(-s / length).
    """
    kind: str = 'zero'
    scale: float = 0.0
    length: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule kind '{self.kind}'; known: {', '.join(SCHEDULE_KINDS)}")
        if not self.length > 0:
            raise ParameterError(f"schedule length must be positive, got {self.length}")

    def value(self, s):
        if self.kind == 'zero':
            return 0.0
        if self.kind == 'constant':
            return self.scale if s < self.length else 0.0
        return self.scale * math.exp(-s / self.length)

    def integral(self, power=1):
        """int_0^inf value(s)^power ds"""
        if self.kind == 'zero':
            return 0.0
        if self.kind == 'constant':
            return self.scale ** power * self.length
        return self.scale ** power * self.length / power

    def as_dict(self):
        return {'kind': self.kind, 'scale': self.scale, 'length': self.length}


@dataclass(frozen=True)
class ReducedParams:
    eps: float = 0.05
    c3p: float = 0.1
    c4p: float = 0.2
    kappa3: float = 0.2
    noise_corr: float = 0.0
    eps_mode: str = 'uniform'
    freeze_psi: bool = False
    a_schedule: PerturbationSchedule = field(default_factory=PerturbationSchedule)
    b_schedule: PerturbationSchedule = field(default_factory=PerturbationSchedule)

    def __post_init__(self):
        if not 0 <= self.eps < 2:
            raise ParameterError(f"eps must lie in [0, 2), got {self.eps}")
        if self.c3p < 0 or self.c4p < 0:
            raise ParameterError(f"drift constants must be non-negative, got c3p={self.c3p}, c4p={self.c4p}")
        if min(self.c3p, self.c4p) > 0.5:
            raise ParameterError(f"surrogate drift must stay below 1/2, got min(c3p, c4p)={min(self.c3p, self.c4p)}")
        if not 0 < self.kappa3 <= 1:
            raise ParameterError(f"kappa3 must lie in (0, 1], got {self.kappa3}")
        if not -1 <= self.noise_corr <= 1:
            raise ParameterError(f"noise_corr must lie in [-1, 1], got {self.noise_corr}")
        if self.eps_mode not in EPS_MODES:
            raise ConfigError(f"unknown eps mode '{self.eps_mode}'; known: {', '.join(EPS_MODES)}")

    def as_dict(self):
        return {
            'eps': self.eps, 'c3p': self.c3p, 'c4p': self.c4p, 'kappa3': self.kappa3,
            'noise_corr': self.noise_corr, 'eps_mode': self.eps_mode, 'freeze_psi': self.freeze_psi,
            'a_schedule': self.a_schedule.as_dict(), 'b_schedule': self.b_schedule.as_dict()
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        for key in ('a_schedule', 'b_schedule'):
            if key in data and isinstance(data[key], dict):
                data[key] = PerturbationSchedule(**data[key])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown reduced parameter(s): {', '.join(sorted(unknown))}")
        return cls(**data)


# Drift strong enough for the 99% desk-scale targets at S = 1000
STRONG = ReducedParams(c3p=0.4, c4p=0.4)
PROFILES = {'default': ReducedParams(), 'strong': STRONG}


@dataclass(frozen=True)
class ReducedState:
    """rho = log r, psi = theta + phi, s = reduced time; arrays allowed"""
    rho: object
    psi: object
    s: float = 0.0


@dataclass(frozen=True)
class StepNoise:
    """Scaled increments and perturbations of one step"""
    dw: object
    dw_prime: object
    dw_tilde: object
    eps1: object = 0.0
    eps2: object = 0.0


def surrogate_drift(psi, params):
    """D(psi) = min(c4p, c3p |cos psi|), in [0, 1/2]"""
    return np.minimum(params.c4p, params.c3p * np.abs(np.cos(psi)))


def branch_sign(psi):
    """sign(cos psi) with +1 on cos psi = 0"""
    return np.where(np.cos(psi) < 0, -1.0, 1.0)


def step_reduced(state, params, ds, noises):
    """
    One Euler step of the reduced system

    rho <- rho + dW - D(psi) ds
    psi <- psi + (2 + eps1) dW' + a dW'' + [A(psi)(2 + eps2) + b] ds

    Returns:
        ReducedState: State at s + ds
    """
    if not ds > 0:
        raise ParameterError(f"ds must be positive, got {ds}")
    rho = state.rho + noises.dw - surrogate_drift(state.psi, params) * ds
    if params.freeze_psi:
        psi = state.psi
    else:
        a = params.a_schedule.value(state.s)
        b = params.b_schedule.value(state.s)
        psi = (state.psi + (2.0 + noises.eps1) * noises.dw_prime + a * noises.dw_tilde
               + (branch_sign(state.psi) * (2.0 + noises.eps2) + b) * ds)
    return ReducedState(rho=rho, psi=psi, s=state.s + ds)


def _perturbations(params, z4, z5):
    if params.eps_mode == 'constant':
        return params.eps, params.eps
    return params.eps * (2.0 * special.ndtr(z4) - 1.0), params.eps * (2.0 * special.ndtr(z5) - 1.0)


def steps_per_unit(ds):
    m = int(round(1.0 / ds))
    if m < 1 or abs(m * ds - 1.0) > 1e-9:
        raise ParameterError(f"ds must divide 1, got {ds}")
    return m


@dataclass
class ReducedEnsemble:
    """
    Reduced paths recorded on the integer s-grid 0, 1, ..., S.

    interval_drift[:, k] holds int D ds over [k, k + 1); last_exit maps each
    level to the last recorded s with rho > level (NaN when never above).
    """
    params: ReducedParams
    rho0: float
    psi0: float
    horizon: int
    ds: float
    seed: int
    grid: np.ndarray
    rho: np.ndarray
    noise: np.ndarray
    interval_drift: np.ndarray
    last_exit: dict
    band_fraction: np.ndarray
    psi_rate: np.ndarray

    @property
    def n(self):
        return int(self.rho.shape[0])

    @property
    def drift_integral(self):
        """Cumulative int_0^s -D on the grid, shape (n, S + 1)"""
        zero = np.zeros((self.n, 1))
        return -np.concatenate([zero, np.cumsum(self.interval_drift, axis=1)], axis=1)

    def rows(self):
        """Per-path rows (path_id, rho_final, drift_integral, last exits, band fraction)"""
        integral = self.drift_integral[:, -1]
        for index in range(self.n):
            row = {
                'path_id': index,
                'rho_final': float(self.rho[index, -1]),
                'drift_integral': float(integral[index]),
                'band_fraction': float(self.band_fraction[index])
            }
            for level, values in self.last_exit.items():
                value = values[index]
                row[f"last_exit_{level:g}"] = None if np.isnan(value) else float(value)
            yield row


def _reduced_chunk(params, rho0, psi0, horizon, ds, seed, first, stop, block, levels, zero_noise=False):
    n = stop - first
    m = steps_per_unit(ds)
    total = horizon * m
    generators = None if zero_noise else chunk_generators(seed, range(first, stop), REDUCED_STREAM)
    every = np.arange(n)
    state = ReducedState(rho=np.full(n, float(rho0)), psi=np.full(n, float(psi0)), s=0.0)
    w = np.zeros(n)
    rho_grid = np.empty((n, horizon + 1))
    w_grid = np.empty((n, horizon + 1))
    rho_grid[:, 0] = rho0
    w_grid[:, 0] = 0.0
    interval = np.zeros((n, horizon))
    last = {level: np.where(np.full(n, rho0 > level), 0.0, np.nan) for level in levels}
    band = np.zeros(n)
    rate = np.zeros(n)
    root = math.sqrt(ds)
    corr = params.noise_corr
    spread = math.sqrt(max(0.0, 1.0 - corr * corr))

    step = 0
    while step < total:
        length = min(block, total - step)
        if zero_noise:
            z = np.zeros((length, n, 5))
        else:
            z = block_normals(generators, every, length, 5)
        for k in range(length):
            i = step + k
            z1, z2, z3 = z[k, :, 0], z[k, :, 1], z[k, :, 2]
            eps1, eps2 = _perturbations(params, z[k, :, 3], z[k, :, 4])
            noises = StepNoise(
                dw=root * z1,
                dw_prime=root * (corr * z1 + spread * z2),
                dw_tilde=root * z3,
                eps1=eps1,
                eps2=eps2
            )
            drift = surrogate_drift(state.psi, params)
            sign = branch_sign(state.psi)
            band += (np.abs(np.cos(state.psi)) <= params.kappa3) * ds
            interval[:, i // m] += drift * ds
            new = step_reduced(ReducedState(state.rho, state.psi, i * ds), params, ds, noises)
            rate += sign * (new.psi - state.psi)
            w += noises.dw
            s_next = (i + 1) * ds
            for level, values in last.items():
                values[new.rho > level] = s_next
            state = new
            if (i + 1) % m == 0:
                rho_grid[:, (i + 1) // m] = state.rho
                w_grid[:, (i + 1) // m] = w
        step += length

    return {
        'rho': rho_grid, 'noise': w_grid, 'interval_drift': interval,
        'last_exit': last, 'band_fraction': band / horizon, 'psi_rate': rate / horizon
    }


def _reduced_chunk_job(payload):
    """Module-level entry point for pool workers"""
    return _reduced_chunk(**payload)


def simulate_reduced(params, rho0, psi0, horizon, ds, n, seed, levels=(0.0,), workers=None,
                     block=256, zero_noise=False, scheduler=None):
    """
    Simulate n reduced paths on [0, S]

    Args:
        params (ReducedParams): Engine parameters
        rho0 (float): Initial log chord length
        psi0 (float): Initial theta + phi
        horizon (int): Integer s-horizon S >= 1
        ds (float): Step, dividing 1
        n (int): Number of paths
        seed (int): Master seed
        levels (tuple): Levels whose last exits are tracked

    Returns:
        ReducedEnsemble: Grid records of all paths
    """
    if not float(horizon).is_integer() or horizon < 1:
        raise ParameterError(f"reduced horizon must be a positive integer, got {horizon}")
    if not ds > 0:
        raise ParameterError(f"ds must be positive, got {ds}")
    if n < 1:
        raise ParameterError(f"path count must be at least 1, got {n}")
    horizon = int(horizon)
    steps_per_unit(ds)
    scheduler = scheduler or scheduler_service
    levels = tuple(float(level) for level in levels)
    payloads = [
        dict(params=params, rho0=float(rho0), psi0=float(psi0), horizon=horizon, ds=ds, seed=seed,
             first=first, stop=stop, block=block, levels=levels, zero_noise=zero_noise)
        for first, stop in scheduler.chunks(n)
    ]
    logger.info(f"Simulating {n} reduced path(s) to S={horizon} with ds={ds}")
    parts = scheduler.map_chunks(_reduced_chunk_job, payloads, workers=workers)
    return ReducedEnsemble(
        params=params,
        rho0=float(rho0),
        psi0=float(psi0),
        horizon=horizon,
        ds=ds,
        seed=seed,
        grid=np.arange(horizon + 1, dtype=float),
        rho=np.concatenate([part['rho'] for part in parts]),
        noise=np.concatenate([part['noise'] for part in parts]),
        interval_drift=np.concatenate([part['interval_drift'] for part in parts]),
        last_exit={level: np.concatenate([part['last_exit'][level] for part in parts]) for level in levels},
        band_fraction=np.concatenate([part['band_fraction'] for part in parts]),
        psi_rate=np.concatenate([part['psi_rate'] for part in parts])
    )


@dataclass
class BernoulliStats:
    gamma_hat: float
    delta: float
    indicators: np.ndarray
    stderr: float
    ci95: tuple = (float('nan'), float('nan'))

    def as_dict(self):
        return {'gamma_hat': self.gamma_hat, 'delta': self.delta, 'stderr': self.stderr,
                'ci95': list(self.ci95), 'intervals': int(self.indicators.size)}


def bernoulli_stats(ensemble, delta):
    """
    Indicators X_n = 1 iff int_{[n-1, n)} D ds >= delta, and their mean

    Raises:
        ParameterError: delta <= 0
    """
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    indicators = ensemble.interval_drift >= delta
    per_path = indicators.mean(axis=1)
    gamma_hat = float(indicators.mean())
    stderr = float(per_path.std(ddof=1) / math.sqrt(per_path.size)) if per_path.size > 1 else float('nan')
    ci95 = wilson_interval(int(np.count_nonzero(indicators)), indicators.size) if indicators.size else (float('nan'), float('nan'))
    return BernoulliStats(gamma_hat=gamma_hat, delta=delta, indicators=indicators, stderr=stderr, ci95=ci95)


def linear_decay_fit(ensemble, rng=None, level=0.99, resamples=200):
    """
    Slope of the ensemble-mean int_0^s -D against s, with a bootstrap interval

    Returns:
        tuple: (slope, (lo, hi))
    """
    if ensemble.horizon < 100:
        raise PreconditionError(f"linear decay fit needs S >= 100, got {ensemble.horizon}")
    rng = rng or path_generator(ensemble.seed, 0, BOOTSTRAP_STREAM)
    return bootstrap_slope_ci(ensemble.grid, ensemble.drift_integral, rng, level=level, resamples=resamples)


def last_exit(times, rho, level):
    """Last recorded time with rho > level, or None if never above"""
    times = np.asarray(times, dtype=float)
    above = np.nonzero(np.asarray(rho, dtype=float) > level)[0]
    return float(times[above[-1]]) if above.size else None


def last_exit_summary(ensemble, level=0.0, before=None):
    """
    Quantiles of last exits above a level; paths never above count as exit 0

    Returns:
        dict: Quantiles plus the fraction of paths whose last exit precedes `before`
    """
    if level not in ensemble.last_exit:
        raise PreconditionError(f"level {level} was not tracked; tracked: {sorted(ensemble.last_exit)}")
    exits = np.nan_to_num(ensemble.last_exit[level], nan=0.0)
    summary = quantile_summary(exits)
    summary['never_above'] = int(np.count_nonzero(np.isnan(ensemble.last_exit[level])))
    before = ensemble.horizon / 2.0 if before is None else before
    summary['before'] = before
    summary['fraction_before'] = float(np.count_nonzero(exits < before) / exits.size)
    return summary


def decrease_fraction(ensemble, margin=1.0):
    """Fraction of paths with rho_S < rho_0 - margin"""
    return float(np.count_nonzero(ensemble.rho[:, -1] < ensemble.rho0 - margin) / ensemble.n)


def sublinearity_check(ensemble, times=(100, 1000), bound=0.2):
    """
    |W_s| / s at the given grid times

    Returns:
        dict: Max and mean ratios per time, the fraction of paths whose
        ratio decreases from the first to the last time, the fraction below
        `bound` at the last time, and whether the mean ratio decreases
    """
    times = tuple(int(t) for t in times)
    if ensemble.horizon < max(times):
        raise PreconditionError(f"sublinearity check needs S >= {max(times)}, got {ensemble.horizon}")
    ratios = np.stack([np.abs(ensemble.noise[:, t]) / t for t in times], axis=1)
    means = ratios.mean(axis=0)
    return {
        'times': list(times),
        'max_ratio': [float(v) for v in ratios.max(axis=0)],
        'mean_ratio': [float(v) for v in means],
        'decreasing_fraction': float(np.count_nonzero(ratios[:, -1] < ratios[:, 0]) / ensemble.n),
        'below_bound_fraction': float(np.count_nonzero(ratios[:, -1] < bound) / ensemble.n),
        'bound': bound,
        'decreasing': bool(np.all(np.diff(means) < 0))
    }


def perturbation_effect(params, a_schedule, b_schedule, delta, rho0, psi0, horizon, ds, n, seed,
                        workers=None, block=256):
    """
    Change of gamma_hat when perturbation schedules are switched on

    Both runs share their noise, so the difference isolates the schedules.
    """
    base = simulate_reduced(params, rho0, psi0, horizon, ds, n, seed, workers=workers, block=block)
    perturbed_params = replace(params, a_schedule=a_schedule, b_schedule=b_schedule)
    perturbed = simulate_reduced(perturbed_params, rho0, psi0, horizon, ds, n, seed, workers=workers, block=block)
    gamma_base = bernoulli_stats(base, delta).gamma_hat
    gamma_perturbed = bernoulli_stats(perturbed, delta).gamma_hat
    return {
        'gamma_hat': gamma_base,
        'gamma_hat_perturbed': gamma_perturbed,
        'difference': gamma_perturbed - gamma_base,
        'a_squared_budget': a_schedule.integral(2),
        'b_budget': b_schedule.integral(1)
    }


BESSEL_SCHEDULES = ('equal', 'zero', 'driven')


def _bessel_step(x, dw, ratio, dtau):
    return x + dw + ratio * dtau / (2.0 * x)


def _bessel_chunk(r0, schedule, horizon, ds, seed, first, stop, block, theta0, phi0):
    n = stop - first
    total = int(math.ceil(horizon / ds - 1e-9))
    generators = chunk_generators(seed, range(first, stop), BESSEL_STREAM)
    every = np.arange(n)
    r = np.full(n, float(r0))
    big_r = np.full(n, float(r0))
    w = np.zeros(n)
    theta = np.full(n, float(theta0))
    phi = np.full(n, float(phi0))
    alive = np.ones(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)
    upper = np.full(n, -np.inf)
    lower = np.full(n, -np.inf)
    step = 0
    while step < total and alive.any():
        length = min(block, total - step)
        z = block_normals(generators, every, length, 3)
        for k in range(length):
            dtau = min(ds, horizon - (step + k) * ds)
            root = math.sqrt(dtau)
            dw = root * z[k, :, 0]
            if schedule == 'equal':
                ratio = 1.0
            elif schedule == 'zero':
                ratio = 0.0
            else:
                _, f, g = principal_fg(theta, phi)
                ratio = np.where(f > 1e-15, g / np.where(f > 1e-15, f, 1.0), 1.0)
                theta = theta + root * z[k, :, 1]
                phi = phi + root * z[k, :, 2]
            r_next = _bessel_step(r, dw, ratio, dtau)
            big_next = _bessel_step(big_r, dw, 1.0, dtau)
            w_next = w + dw
            broken = alive & ((r_next <= 0) | (big_next <= 0) | ~np.isfinite(r_next) | ~np.isfinite(big_next))
            truncated |= broken
            alive &= ~broken
            r = np.where(alive, r_next, r)
            big_r = np.where(alive, big_next, big_r)
            w = np.where(alive, w_next, w)
            upper = np.where(alive, np.maximum(upper, r - big_r), upper)
            lower = np.where(alive, np.maximum(lower, r0 + w - r), lower)
        step += length
    return {'upper': upper, 'lower': lower, 'truncated': truncated, 'r': r, 'big_r': big_r}


def _bessel_chunk_job(payload):
    """Module-level entry point for pool workers"""
    return _bessel_chunk(**payload)


def bessel_domination(r0, schedule, horizon, ds, n, seed, theta0=math.pi / 3, phi0=0.0,
                      workers=None, block=256, scheduler=None):
    """
    Pathwise sandwich r0 + W <= r <= R in tau-time

    r follows dr = dW + (g/f) dtau / (2r) and R follows dR = dW + dtau / (2R)
    with the same W and R_0 = r_0. Paths where r or R reach 0 are truncated
    and flagged.

    Args:
        r0 (float): Initial chord length
        schedule (str): 'equal' (g = f), 'zero' (g = 0) or 'driven' (f, g
            along a great-circle path with theta, phi driven by Brownian motion)

    Returns:
        dict: Max of r - R and of r0 + W - r, the slack 5 sqrt(ds) and truncation counts
    """
    if not r0 > 0:
        raise ParameterError(f"r0 must be positive, got {r0}")
    if schedule not in BESSEL_SCHEDULES:
        raise ConfigError(f"unknown Bessel schedule '{schedule}'; known: {', '.join(BESSEL_SCHEDULES)}")
    if not (ds > 0 and horizon > 0):
        raise ParameterError(f"ds and horizon must be positive, got {ds}, {horizon}")
    scheduler = scheduler or scheduler_service
    payloads = [
        dict(r0=r0, schedule=schedule, horizon=horizon, ds=ds, seed=seed, first=first, stop=stop,
             block=block, theta0=theta0, phi0=phi0)
        for first, stop in scheduler.chunks(n)
    ]
    parts = scheduler.map_chunks(_bessel_chunk_job, payloads, workers=workers)
    upper = np.concatenate([part['upper'] for part in parts])
    lower = np.concatenate([part['lower'] for part in parts])
    truncated = np.concatenate([part['truncated'] for part in parts])
    slack = 5.0 * math.sqrt(ds)
    report = {
        'schedule': schedule,
        'n': n,
        'max_r_minus_R': float(np.max(upper)),
        'max_lower_violation': float(np.max(lower)),
        'slack': slack,
        'truncated': int(np.count_nonzero(truncated)),
        'passed': bool(np.max(upper) <= slack and np.max(lower) <= slack),
        'identical': bool(np.all((upper == 0.0) | truncated)) if schedule == 'equal' else None
    }
    if report['truncated']:
        logger.warning(f"{report['truncated']} Bessel path(s) reached 0 and were truncated")
    return report


class ReducedService:
    """Reduced engine service class bound to configured defaults"""

    def __init__(self, app=None):
        """Initialize the reduced service"""
        self.app = app
        self.defaults = ReducedParams()
        self.default_ds = 1e-3
        self.block = 256
        self.resamples = 200
        if app:
            self.init_app(app)

    def init_app(self, app):
        """Initialize with Flask app"""
        self.app = app
        self.defaults = ReducedParams(
            eps=app.config.get('REDUCED_EPS', 0.05),
            c3p=app.config.get('REDUCED_C3P', 0.1),
            c4p=app.config.get('REDUCED_C4P', 0.2),
            kappa3=app.config.get('REDUCED_KAPPA3', 0.2),
            noise_corr=app.config.get('REDUCED_NOISE_CORR', 0.0)
        )
        self.default_ds = app.config.get('DEFAULT_DS', 1e-3)
        self.block = app.config.get('NOISE_BLOCK', 256)
        self.resamples = app.config.get('BOOTSTRAP_RESAMPLES', 200)

    def params(self, profile='default', overrides=None):
        """Named profile with overrides; 'default' uses the configured values"""
        if profile not in PROFILES:
            raise ConfigError(f"unknown reduced profile '{profile}'; known: {', '.join(sorted(PROFILES))}")
        base = self.defaults if profile == 'default' else PROFILES[profile]
        values = base.as_dict()
        values.update(overrides or {})
        return ReducedParams.from_dict(values)

    def summarize(self, ensemble, delta=0.01, level=0.0):
        """Report of the drift, decay and last-exit statistics of an ensemble"""
        stats = bernoulli_stats(ensemble, delta)
        report = {
            'gamma_hat': stats.gamma_hat,
            'gamma_stderr': stats.stderr,
            'gamma_ci95': list(stats.ci95),
            'gamma_intervals': int(stats.indicators.size),
            'delta': delta,
            'decrease_fraction': decrease_fraction(ensemble),
            'band_occupation': float(ensemble.band_fraction.mean()),
            'psi_rate': float(ensemble.psi_rate.mean()),
            'last_exit_quantiles': last_exit_summary(ensemble, level)
        }
        if ensemble.horizon >= 100:
            slope, interval = linear_decay_fit(ensemble, resamples=self.resamples)
            report['slope'] = slope
            report['slope_ci'] = list(interval)
            report['slope_bound_gap'] = slope + stats.gamma_hat * delta
        if ensemble.horizon >= 1000:
            report['sublinearity'] = sublinearity_check(ensemble)
        return report


# Global reduced service instance
reduced_service = ReducedService()
