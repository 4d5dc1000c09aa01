"""
Minimal-Graph Brownian Motion Laboratory
Configuration Settings

This file contains all configuration settings for the laboratory.
Every setting can be overridden through an MBM_* environment variable
or a .env file in the working directory.
"""

import os

from dotenv import load_dotenv

load_dotenv()


def _env_float(name, default):
    value = os.environ.get(name)
    return float(value) if value not in (None, '') else default


def _env_int(name, default):
    value = os.environ.get(name)
    return int(value) if value not in (None, '') else default


class Config:
    """Base configuration class"""

    # Application Settings
    APP_NAME = 'mbm'
    APP_VERSION = '1.0.0'
    APP_DESCRIPTION = 'Monte Carlo laboratory for Brownian motion on minimal graphs'

    # Execution Settings
    WORKERS = _env_int('MBM_WORKERS', os.cpu_count() or 1)
    CHUNK_SIZE = _env_int('MBM_CHUNK_SIZE', 2048)  # paths per deterministic chunk
    NOISE_BLOCK = _env_int('MBM_NOISE_BLOCK', 256)  # steps drawn per generator call

    # Step Size Defaults
    DEFAULT_DT = _env_float('MBM_DEFAULT_DT', 1e-3)
    DEFAULT_DSIGMA = _env_float('MBM_DEFAULT_DSIGMA', 1e-3)
    DEFAULT_DS = _env_float('MBM_DEFAULT_DS', 1e-3)

    # Surface Catalog
    SCHERK_HALF_WIDTH = _env_float('MBM_SCHERK_HALF_WIDTH', 1.2)

    # Configuration-space Regions
    REGION_C1 = _env_float('MBM_REGION_C1', 0.1)
    REGION_C2 = _env_float('MBM_REGION_C2', 0.1)
    REGION_DELTA3 = _env_float('MBM_REGION_DELTA3', 0.05)
    REGION_TOL_GC = _env_float('MBM_REGION_TOL_GC', 1e-9)
    CALIBRATION_NORMAL_CAP = _env_float('MBM_CALIBRATION_NORMAL_CAP', 1.2)  # radians

    # Reduced Engine Defaults
    REDUCED_EPS = _env_float('MBM_REDUCED_EPS', 0.05)
    REDUCED_C3P = _env_float('MBM_REDUCED_C3P', 0.1)
    REDUCED_C4P = _env_float('MBM_REDUCED_C4P', 0.2)
    REDUCED_KAPPA3 = _env_float('MBM_REDUCED_KAPPA3', 0.2)
    REDUCED_NOISE_CORR = _env_float('MBM_REDUCED_NOISE_CORR', 0.0)

    # Statistics Settings
    BOOTSTRAP_RESAMPLES = _env_int('MBM_BOOTSTRAP_RESAMPLES', 200)
    TRUNCATION_FAILURE_FRACTION = _env_float('MBM_TRUNCATION_FAILURE_FRACTION', 0.01)

    # Output Settings
    OUTPUT_DIR = os.environ.get('MBM_OUTPUT_DIR') or os.path.join('instance', 'runs')
    EXPORT_RETENTION_DAYS = _env_int('MBM_EXPORT_RETENTION_DAYS', 7)


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True


class ProductionConfig(Config):
    """Production configuration"""
    DEBUG = False


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    WORKERS = 1
    CHUNK_SIZE = 512
    OUTPUT_DIR = os.path.join('instance', 'test-runs')


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config(name=None):
    """Get configuration based on environment"""
    env = name or os.environ.get('MBM_ENV', 'development')
    return config.get(env, config['default'])
