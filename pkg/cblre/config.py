"""
Configuration module for the cblre toolkit.
"""
import os

from . import __version__


class Config:
    """Base configuration class."""

    # Logging settings
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')
    DIAGNOSTICS_LOG_LEVEL = os.environ.get('DIAGNOSTICS_LOG_LEVEL', 'WARNING')
    LOG_FILE = os.environ.get('LOG_FILE', 'cblre.log')

    # Run settings
    THREADS = int(os.environ.get('CBLRE_THREADS', 1))
    OUTPUT_DIR = os.environ.get('OUTPUT_DIR', 'results')
    DEFAULT_SEED = int(os.environ.get('DEFAULT_SEED', 12345))

    # Integrator defaults
    EXPLOSION_CAP = float(os.environ.get('EXPLOSION_CAP', 1e12))
    BRANCH_JUMP_CUT = float(os.environ.get('BRANCH_JUMP_CUT', 0.05))

    TOOL_VERSION = __version__


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True


class ProductionConfig(Config):
    """Production configuration."""
    DEBUG = False


class TestingConfig(Config):
    """Testing configuration."""
    TESTING = True
    DEBUG = True
    LOG_FILE = os.environ.get('LOG_FILE', os.devnull)


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config():
    """The configuration class selected by CBLRE_ENV."""
    return config.get(os.environ.get('CBLRE_ENV', 'default'), config['default'])
