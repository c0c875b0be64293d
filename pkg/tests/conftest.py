"""Shared fixtures: golden program files and the Flask app on in-memory SQLite"""
from pathlib import Path

import pytest

from app import create_app
from app.config import TestingConfig
from app.extensions import db
from app.engine.pipeline import compile_text, attach_query

DATA_DIR = Path(__file__).parent / 'data'


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture(scope='session')
def stock_text():
    return (DATA_DIR / 'stock_exchange.dl').read_text(encoding='utf-8')


@pytest.fixture(scope='session')
def stock_query_text():
    return (DATA_DIR / 'stock_exchange_query.dl').read_text(encoding='utf-8')


@pytest.fixture(scope='session')
def stock_compiled(stock_text):
    return compile_text(stock_text)


@pytest.fixture(scope='session')
def stock_query(stock_compiled, stock_query_text):
    return attach_query(stock_compiled, stock_query_text)


@pytest.fixture
def app():
    """Create and configure a test app"""
    app = create_app(TestingConfig)
    with app.app_context():
        db.create_all()
        yield app
        db.session.remove()
        db.drop_all()


@pytest.fixture
def client(app):
    """A test client for the app."""
    return app.test_client()
