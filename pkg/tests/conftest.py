import pytest

from app import create_app
from app.engine.model import build_ising_ring, build_maxcut, build_two_level
from app.extensions import db


@pytest.fixture
def app():
    app = create_app("testing")
    with app.app_context():
        db.create_all()
        yield app
        db.session.remove()
        db.drop_all()


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture(scope="session")
def pair():
    return build_two_level()


@pytest.fixture(scope="session")
def spin():
    return build_two_level(reduced=True)


@pytest.fixture(scope="session")
def ring6():
    return build_ising_ring(6)


@pytest.fixture(scope="session")
def square():
    """4-cycle: 2-regular and triangle-free."""
    return build_maxcut([(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture(scope="session")
def cube():
    """3-regular cube graph on 8 vertices, triangle-free."""
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)]
    return build_maxcut(edges)
