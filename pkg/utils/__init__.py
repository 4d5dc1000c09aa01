"""
Utils Package for the Minimal-Graph Brownian Motion Laboratory

This package contains the service modules:
- surface_service: Minimal graph catalog and geometry
- graph_bm_service: Brownian motion in graph coordinates
- conformal_service: Conformal-chart oracle simulator
- coupling_service: Configuration space, f and g, regions
- reduced_service: Reduced dynamics and proof diagnostics
- stats_service: Intervals, KS tests, bootstrap
- scheduler_service: Deterministic chunked worker pool
- export_service: CSV and JSON artifacts
- experiment_service: Experiment specs and reports
"""

from .surface_service import surface_service
from .graph_bm_service import graph_bm_service
from .conformal_service import conformal_service
from .coupling_service import coupling_service
from .reduced_service import reduced_service
from .scheduler_service import scheduler_service
from .export_service import export_service
from .experiment_service import experiment_service

__all__ = [
    'surface_service',
    'graph_bm_service',
    'conformal_service',
    'coupling_service',
    'reduced_service',
    'scheduler_service',
    'export_service',
    'experiment_service'
]
