import numpy as np
import pytest

from optwannier import create_app
from optwannier.schemas import RunConfig
from optwannier.services.hamiltonian import builtin_model
from optwannier.services.pipeline import execute
from optwannier.services.transport import TransportSettings


class TestConfig:
    TESTING = True
    LOG_LEVEL = 'WARNING'
    MAX_GRID = 64


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope='session')
def square3():
    return builtin_model('square3')


@pytest.fixture(scope='session')
def haldane_trivial():
    return builtin_model('haldane-trivial')


@pytest.fixture(scope='session')
def haldane_chern():
    return builtin_model('haldane-chern')


@pytest.fixture(scope='session')
def settings():
    return TransportSettings(threads=2)


@pytest.fixture(scope='session')
def square3_run():
    return execute(RunConfig(model='square3', n=32, threads=2))


@pytest.fixture(scope='session')
def haldane_run():
    return execute(RunConfig(model='haldane-trivial', n=32, threads=2))


@pytest.fixture(scope='session')
def chern_run():
    return execute(RunConfig(model='haldane-chern', n=32, threads=2))


@pytest.fixture
def app():
    app = create_app(TestConfig)
    yield app


@pytest.fixture
def client(app):
    return app.test_client()
