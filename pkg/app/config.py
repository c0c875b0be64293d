import os


def _flag(name, default):
    return os.getenv(name, default).strip().lower() in ('1', 'true', 'yes', 'on')


def _optional_int(name):
    value = os.getenv(name)
    return int(value) if value else None


class Config:
    DEBUG = True
    TESTING = False
    # PostgreSQL via DATABASE_URL when provided, SQLite for local work otherwise
    DATABASE_URL = os.getenv('DATABASE_URL', 'sqlite:///ontology_dev.db')
    SQLALCHEMY_DATABASE_URI = DATABASE_URL
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    SQLALCHEMY_ECHO = _flag('SQLALCHEMY_ECHO', 'false')
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()
    DEFAULT_CHASE_DEPTH = int(os.getenv('CHASE_DEPTH', '12'))
    DEFAULT_MAX_ROUNDS = _optional_int('MAX_ROUNDS')
    REWRITE_CACHE_ENABLED = _flag('REWRITE_CACHE', 'true')
    MAX_ONTOLOGY_BYTES = int(os.getenv('MAX_ONTOLOGY_BYTES', str(1024 * 1024)))
    MAX_CONTENT_LENGTH = MAX_ONTOLOGY_BYTES * 2


class TestingConfig(Config):
    DEBUG = False
    TESTING = True
    SQLALCHEMY_DATABASE_URI = 'sqlite:///:memory:'
    SQLALCHEMY_ECHO = False
    LOG_LEVEL = 'WARNING'
    DEFAULT_MAX_ROUNDS = None
    REWRITE_CACHE_ENABLED = True
