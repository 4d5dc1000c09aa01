#!/usr/bin/env python3
"""
Command-line interface of the laboratory.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
1 any other laboratory error.
"""

import json
import logging
import sys
from functools import wraps

import click

from app import create_app
from utils.errors import ConfigError, LabError, NumericalFailure
from utils.experiment_service import ExperimentSpec, experiment_service, load_spec
from utils.surface_service import surface_service

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def lab_command(func):
    """Translate laboratory errors into exit codes"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigError as e:
            logger.error(f"Configuration error: {e}")
            sys.exit(2)
        except NumericalFailure as e:
            logger.error(f"Numerical failure: {e}")
            sys.exit(3)
        except LabError as e:
            logger.error(f"Experiment failed: {e}")
            sys.exit(1)
    return wrapper


def _emit(report):
    body = report.to_dict()
    body['digest'] = report.digest()
    click.echo(json.dumps(body, indent=2, sort_keys=True))


@click.group()
@click.option('--workers', type=int, default=None, help='Worker processes (default: configured WORKERS)')
@click.option('--env', 'env', default=None, help='Configuration name: development, production or testing')
@click.pass_context
def cli(ctx, workers, env):
    """Monte Carlo laboratory for Brownian motion on minimal graphs"""
    ctx.ensure_object(dict)
    ctx.obj['app'] = create_app(env)
    ctx.obj['workers'] = workers


@cli.group()
def surfaces():
    """Surface catalog commands"""


@surfaces.command('list')
@click.option('--check', is_flag=True, help='Evaluate the minimal-graph invariants')
@click.option('--n', 'n', type=int, default=10_000, show_default=True, help='Sample points per surface')
@lab_command
def surfaces_list(check, n):
    """List catalog surfaces"""
    click.echo(json.dumps(surface_service.list_surfaces(check=check, n=n), indent=2, sort_keys=True))


@cli.command()
@click.argument('spec_path', type=click.Path())
@click.option('--out', 'out_dir', type=click.Path(), default=None, help='Parent directory of run artifacts')
@click.pass_context
@lab_command
def run(ctx, spec_path, out_dir):
    """Run an experiment spec of any kind"""
    _emit(experiment_service.run(load_spec(spec_path), workers=ctx.obj['workers'], out_dir=out_dir))


@cli.command('coupling-verify')
@click.option('--grid', type=int, default=1000, show_default=True, help='Grid points per angle')
@click.option('--out', 'out_dir', type=click.Path(), default=None)
@click.pass_context
@lab_command
def coupling_verify(ctx, grid, out_dir):
    """Check f >= g and the closed form of f - g on a grid"""
    spec = ExperimentSpec(kind='coupling-verify', options={'grid': grid})
    _emit(experiment_service.run(spec, workers=ctx.obj['workers'], out_dir=out_dir))


@cli.command('calibrate-regions')
@click.option('--n', 'n', type=int, default=100_000, show_default=True, help='Sampled configurations')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--stability', is_flag=True, help='Repeat with 2n samples and report the relative change')
@click.option('--out', 'out_dir', type=click.Path(), default=None)
@click.pass_context
@lab_command
def calibrate_regions(ctx, n, seed, stability, out_dir):
    """Calibrate c3 and c4 on sampled great-circle configurations"""
    spec = ExperimentSpec(kind='calibrate-regions', n=n, seed=seed, options={'stability': stability})
    _emit(experiment_service.run(spec, workers=ctx.obj['workers'], out_dir=out_dir))


def _run_kind(ctx, spec_path, out_dir, kind):
    spec = load_spec(spec_path)
    if spec.kind != kind:
        raise ConfigError(f"expected a '{kind}' spec, got '{spec.kind}'")
    _emit(experiment_service.run(spec, workers=ctx.obj['workers'], out_dir=out_dir))


@cli.command()
@click.argument('spec_path', type=click.Path())
@click.option('--out', 'out_dir', type=click.Path(), default=None)
@click.pass_context
@lab_command
def reduced(ctx, spec_path, out_dir):
    """Run a reduced-engine spec"""
    _run_kind(ctx, spec_path, out_dir, 'reduced')


@cli.command('cross-check')
@click.argument('spec_path', type=click.Path())
@click.option('--out', 'out_dir', type=click.Path(), default=None)
@click.pass_context
@lab_command
def cross_check(ctx, spec_path, out_dir):
    """Compare graph-coordinate and conformal hitting laws"""
    _run_kind(ctx, spec_path, out_dir, 'cross-check')


if __name__ == '__main__':
    cli(obj={})
