from .errors import CBLREError, DomainError, HypothesisError, NumericalError, ValidationError
from .helpers import coerce_value, config_hash, format_float, nest, parse_config_text, parse_law
from .outputs import write_csv, write_key_values, write_manifest
from .validation import validate_config, validate_experiment

__all__ = [
    'CBLREError',
    'DomainError',
    'HypothesisError',
    'NumericalError',
    'ValidationError',
    'coerce_value',
    'config_hash',
    'format_float',
    'nest',
    'parse_config_text',
    'parse_law',
    'write_csv',
    'write_key_values',
    'write_manifest',
    'validate_config',
    'validate_experiment',
]
