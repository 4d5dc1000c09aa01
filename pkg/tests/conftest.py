import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import pytest

from app import create_app


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run full-scale tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def app(tmp_path):
    app = create_app('testing')
    app.config['OUTPUT_DIR'] = str(tmp_path / 'runs')
    from utils.export_service import export_service
    export_service.init_app(app)
    return app


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def out_dir(tmp_path):
    return str(tmp_path / 'out')
