"""
Experiment Service Module

This module orchestrates experiments end to end:
- Experiment specs parsed from JSON and validated
- Dispatch of each experiment kind to its owning service
- Summary reports with provenance and a runtime-free digest
- CSV and JSON artifacts through the export service
"""

import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .conformal_service import conformal_service
from .coupling_service import coupling_service, validate_region_params
from .errors import ConfigError, LabError, NumericalFailure, ValidationError
from .export_service import export_service
from .graph_bm_service import (
    boundary_functional, curvature_clock_summary, harmonic_estimate, hitting_probability,
    hitting_time_cdf, simulate_ensemble
)
from .reduced_service import PerturbationSchedule, bessel_domination, perturbation_effect, reduced_service, simulate_reduced
from .stats_service import wilson_interval
from .streams import CALIBRATION_STREAM, path_generator
from .surface_service import surface_service

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

KINDS = ('simulate', 'hitting', 'harmonic', 'cross-check', 'coupling-verify', 'calibrate-regions', 'reduced')
SURFACE_KINDS = ('simulate', 'hitting', 'harmonic', 'cross-check')


@dataclass
class ExperimentSpec:
    """One experiment; kind-specific settings live in `options`"""
    kind: str
    surface: str = None
    surface_params: dict = field(default_factory=dict)
    start: tuple = None
    horizon: float = None
    n: int = 1000
    seed: int = 0
    dt: float = None
    dsigma: float = None
    ds: float = None
    options: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind '{self.kind}'; known: {', '.join(KINDS)}")
        if self.start is not None:
            self.start = tuple(float(c) for c in self.start)
            if len(self.start) != 2:
                raise ConfigError(f"start must have two coordinates, got {self.start}")
        if self.kind in SURFACE_KINDS:
            if not self.surface:
                raise ConfigError(f"experiment kind '{self.kind}' needs a surface")
            if self.start is None:
                raise ConfigError(f"experiment kind '{self.kind}' needs a start point")
            if self.horizon is None:
                raise ConfigError(f"experiment kind '{self.kind}' needs a horizon")
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"path count must be an integer >= 1, got {self.n}")
        for name in ('horizon', 'dt', 'dsigma', 'ds'):
            value = getattr(self, name)
            if value is not None and not (isinstance(value, (int, float)) and value > 0):
                raise ValidationError(f"{name} must be strictly positive, got {value}")

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("experiment spec must be a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown spec field(s): {', '.join(sorted(unknown))}")
        if 'kind' not in data:
            raise ConfigError("experiment spec needs a 'kind'")
        return cls(**data)

    @classmethod
    def parse(cls, text):
        """Parse a JSON experiment spec"""
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed experiment spec: {e}") from e
        return cls.from_dict(data)

    def to_dict(self):
        data = asdict(self)
        if self.start is not None:
            data['start'] = list(self.start)
        return data

    def serialize(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def load_spec(path):
    """Read an experiment spec file"""
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read experiment spec {path}: {e}") from e
    return ExperimentSpec.parse(text)


def _clean(value):
    """Convert numpy scalars and arrays into JSON-ready values"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


@dataclass
class SummaryReport:
    """Results of one run with provenance; every estimate carries its interval and sample size"""
    kind: str
    spec: dict
    seed: int
    version: str
    results: dict
    runtime_seconds: float = 0.0
    artifacts: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'kind': self.kind,
            'spec': self.spec,
            'seed': self.seed,
            'version': self.version,
            'results': _clean(self.results),
            'runtime_seconds': self.runtime_seconds,
            'artifacts': dict(self.artifacts)
        }

    def digest(self):
        """sha256 of the canonical report without runtime or artifact paths"""
        data = self.to_dict()
        data.pop('runtime_seconds')
        data.pop('artifacts')
        canonical = json.dumps(data, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _ensemble_results(ensemble):
    hits, n = ensemble.hits, ensemble.n
    return {
        'n': n,
        'hits': hits,
        'hit_fraction': ensemble.hit_fraction,
        'ci95': list(wilson_interval(hits, n)),
        'censored_mass': 1.0 - ensemble.hit_fraction,
        'truncated_fraction': ensemble.truncated_fraction,
        'min_normal_z': float(np.nanmin(ensemble.min_normal_z)) if n else None
    }


class ExperimentService:
    """Experiment service class for running specs"""

    def __init__(self, app=None):
        """Initialize the experiment service"""
        self.app = app
        self.version = '1.0.0'
        self.default_dt = 1e-3
        self.default_dsigma = 1e-3
        self.default_ds = 1e-3
        self.block = 256
        self.truncation_limit = 0.01
        if app:
            self.init_app(app)

    def init_app(self, app):
        """Initialize with Flask app"""
        self.app = app
        self.version = app.config.get('APP_VERSION', '1.0.0')
        self.default_dt = app.config.get('DEFAULT_DT', 1e-3)
        self.default_dsigma = app.config.get('DEFAULT_DSIGMA', 1e-3)
        self.default_ds = app.config.get('DEFAULT_DS', 1e-3)
        self.block = app.config.get('NOISE_BLOCK', 256)
        self.truncation_limit = app.config.get('TRUNCATION_FAILURE_FRACTION', 0.01)

    def _check_truncation(self, fraction, label):
        if fraction > self.truncation_limit:
            raise NumericalFailure(
                f"{fraction:.2%} of {label} paths were truncated, above the {self.truncation_limit:.2%} limit"
            )

    def _surface(self, spec):
        return surface_service.get(spec.surface, spec.surface_params)

    def _simulate(self, spec, workers):
        surface = self._surface(spec)
        dt = spec.dt or self.default_dt
        ensemble = simulate_ensemble(surface, spec.start, dt, spec.horizon, spec.n, spec.seed,
                                     workers=workers, block=self.block)
        self._check_truncation(ensemble.truncated_fraction, surface.name)
        doubled = None
        if spec.options.get('doubled'):
            doubled = simulate_ensemble(surface, spec.start, dt, 2.0 * spec.horizon, spec.n, spec.seed,
                                        workers=workers, block=self.block)
        results = _ensemble_results(ensemble)
        results['clock'] = curvature_clock_summary(ensemble, doubled=doubled,
                                                   tolerance=spec.options.get('tolerance', 0.05))
        return results, ensemble.rows()

    def _hitting(self, spec, workers):
        surface = self._surface(spec)
        estimate = hitting_probability(surface, spec.start, spec.horizon, spec.n, spec.dt or self.default_dt,
                                       spec.seed, workers=workers, block=self.block)
        self._check_truncation(estimate.ensemble.truncated_fraction, surface.name)
        results = estimate.as_dict()
        times = spec.options.get('cdf_times')
        if times:
            results['cdf'] = {f"{t:g}": value for t, value in zip(times, hitting_time_cdf(estimate.ensemble, times))}
        return results, estimate.ensemble.rows()

    def _harmonic(self, spec, workers):
        surface = self._surface(spec)
        functional = spec.options.get('functional', 'one')
        estimate = harmonic_estimate(surface, spec.start, boundary_functional(functional), spec.horizon, spec.n,
                                     spec.dt or self.default_dt, spec.seed, workers=workers, block=self.block)
        self._check_truncation(estimate.ensemble.truncated_fraction, surface.name)
        results = estimate.as_dict()
        results['functional'] = functional
        results['ci95_hits'] = list(wilson_interval(estimate.hits, estimate.n))
        return results, estimate.ensemble.rows()

    def _cross_check(self, spec, workers):
        surface = self._surface(spec)
        result = conformal_service.cross_check(surface, spec.start, spec.horizon, spec.n, spec.seed,
                                               dt=spec.dt, dsigma=spec.dsigma, workers=workers)
        self._check_truncation(result.graph_truncated_fraction, surface.name)
        self._check_truncation(result.chart_truncated_fraction, f"{surface.name} chart")
        results = result.as_dict()
        results['graph_ci95'] = list(wilson_interval(result.graph_hits, result.n))
        results['chart_ci95'] = list(wilson_interval(result.chart_hits, result.n))
        return results, None

    def _coupling_verify(self, spec, workers):
        return coupling_service.verify(int(spec.options.get('grid', 1000))), None

    def _calibrate(self, spec, workers):
        params = coupling_service.region_params(spec.options.get('regions'))
        gaps = validate_region_params(params)
        rng = path_generator(spec.seed, 0, CALIBRATION_STREAM)
        calibration = coupling_service.calibrate(spec.n, rng, spec.options.get('regions'))
        results = calibration.as_dict()
        results['gaps'] = gaps
        if spec.options.get('stability'):
            doubled = coupling_service.calibrate(2 * spec.n, path_generator(spec.seed, 1, CALIBRATION_STREAM),
                                                 spec.options.get('regions'))
            results['c3_doubled'] = doubled.c3
            results['c4_doubled'] = doubled.c4
            results['c3_relative_change'] = abs(doubled.c3 - calibration.c3) / calibration.c3
            results['c4_relative_change'] = abs(doubled.c4 - calibration.c4) / calibration.c4
        return results, None

    def _reduced(self, spec, workers):
        options = spec.options
        params = reduced_service.params(options.get('profile', 'default'), options.get('params'))
        horizon = spec.horizon if spec.horizon is not None else 1000
        ds = spec.ds or self.default_ds
        delta = options.get('delta', 0.01)
        level = options.get('level', 0.0)
        ensemble = simulate_reduced(params, options.get('rho0', 0.0), options.get('psi0', 0.0), horizon, ds,
                                    spec.n, spec.seed, levels=(level,), workers=workers, block=self.block)
        results = reduced_service.summarize(ensemble, delta=delta, level=level)
        results['params'] = params.as_dict()
        bessel = options.get('bessel')
        if bessel:
            report = bessel_domination(bessel.get('r0', 3.0), bessel.get('schedule', 'driven'),
                                       bessel.get('horizon', 1.0), bessel.get('ds', ds), bessel.get('n', spec.n),
                                       spec.seed, workers=workers, block=self.block)
            results['bessel'] = report
            results['bessel_max_violation'] = max(report['max_r_minus_R'], report['max_lower_violation'])
        perturbation = options.get('perturbation')
        if perturbation:
            results['perturbation'] = perturbation_effect(
                params,
                PerturbationSchedule(**perturbation.get('a', {})),
                PerturbationSchedule(**perturbation.get('b', {})),
                delta, options.get('rho0', 0.0), options.get('psi0', 0.0), horizon, ds, spec.n, spec.seed,
                workers=workers, block=self.block
            )
        columns = ['path_id', 'rho_final', 'drift_integral', f"last_exit_{float(level):g}", 'band_fraction']
        return results, (ensemble.rows(), columns)

    def run(self, spec, workers=None, out_dir=None, write=True):
        """
        Run an experiment spec

        Args:
            spec (ExperimentSpec): Experiment to run
            workers (int): Worker count override
            out_dir (str): Parent directory of the run artifacts
            write (bool): Write CSV and JSON artifacts

        Returns:
            SummaryReport: Report with results, provenance and artifact paths
        """
        handlers = {
            'simulate': self._simulate,
            'hitting': self._hitting,
            'harmonic': self._harmonic,
            'cross-check': self._cross_check,
            'coupling-verify': self._coupling_verify,
            'calibrate-regions': self._calibrate,
            'reduced': self._reduced
        }
        started = time.perf_counter()
        logger.info(f"Running {spec.kind} experiment with seed {spec.seed}")
        results, rows = handlers[spec.kind](spec, workers)
        report = SummaryReport(
            kind=spec.kind,
            spec=spec.to_dict(),
            seed=spec.seed,
            version=self.version,
            results=results
        )
        if write:
            name = spec.outputs.get('name') or f"{spec.kind}-seed{spec.seed}"
            run_dir = export_service.run_directory(name, out_dir or spec.outputs.get('dir'))
            if rows is not None:
                columns = None
                if isinstance(rows, tuple):
                    rows, columns = rows
                csv_path = export_service.export_paths_to_csv(rows, f"{run_dir}/paths.csv", columns=columns)
                if csv_path is None:
                    raise LabError(f"could not write path records to {run_dir}")
                report.artifacts['csv'] = csv_path
            report.artifacts['json'] = f"{run_dir}/summary.json"
        report.runtime_seconds = time.perf_counter() - started
        if write:
            summary = report.to_dict()
            summary['digest'] = report.digest()
            if export_service.export_summary_to_json(summary, report.artifacts['json']) is None:
                raise LabError(f"could not write summary to {report.artifacts['json']}")
        logger.info(f"Finished {spec.kind} experiment in {report.runtime_seconds:.2f}s")
        return report


# Global experiment service instance
experiment_service = ExperimentService()
