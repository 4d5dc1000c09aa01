"""
Minimal-Graph Brownian Motion Laboratory

Application factory and HTTP API:
- Service initialization from the selected configuration
- Surface catalog listing
- Synchronous experiment runs from JSON specs
"""

import logging
import os

from flask import Flask, jsonify, request

from config import get_config
from utils.conformal_service import conformal_service
from utils.coupling_service import coupling_service
from utils.errors import ConfigError, LabError
from utils.experiment_service import ExperimentSpec, experiment_service
from utils.export_service import export_service
from utils.graph_bm_service import graph_bm_service
from utils.reduced_service import reduced_service
from utils.scheduler_service import scheduler_service
from utils.surface_service import surface_service

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SERVICES = (
    surface_service,
    graph_bm_service,
    conformal_service,
    coupling_service,
    reduced_service,
    scheduler_service,
    export_service,
    experiment_service
)


def create_app(config_name=None):
    """
    Build the application and bind every service to its configuration

    Args:
        config_name (str): development, production or testing; MBM_ENV by default

    Returns:
        Flask: Configured application
    """
    app = Flask(__name__, instance_path=os.path.join(os.path.abspath(os.path.dirname(__file__)), 'instance'))
    app.config.from_object(get_config(config_name))

    # Initialize services
    for service in SERVICES:
        service.init_app(app)

    register_routes(app)
    return app


def register_routes(app):
    """Attach the API routes and error handlers"""

    @app.errorhandler(ConfigError)
    def handle_config_error(error):
        logger.error(f"Rejected request: {error}")
        return jsonify({'error': str(error)}), 400

    @app.errorhandler(LabError)
    def handle_lab_error(error):
        logger.error(f"Experiment failed: {error}")
        return jsonify({'error': str(error)}), 422

    @app.route('/api/health')
    def health():
        return jsonify({
            'status': 'ok',
            'name': app.config['APP_NAME'],
            'version': app.config['APP_VERSION'],
            'scheduler': scheduler_service.get_scheduler_status()
        })

    @app.route('/api/surfaces')
    def surfaces():
        check = request.args.get('check', 'false').lower() in ('1', 'true', 'yes')
        return jsonify({
            'surfaces': surface_service.list_surfaces(check=check, n=request.args.get('n', 10_000, type=int)),
            'charts': conformal_service.list_charts()
        })

    @app.route('/api/experiments', methods=['POST'])
    def experiments():
        data = request.get_json(silent=True)
        if data is None:
            return jsonify({'error': 'Request body must be a JSON experiment spec'}), 400
        spec = ExperimentSpec.from_dict(data)
        report = experiment_service.run(spec, write=request.args.get('write', 'false').lower() == 'true')
        body = report.to_dict()
        body['digest'] = report.digest()
        return jsonify(body)
