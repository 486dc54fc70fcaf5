from .error import error_middleware
from .monitoring import monitoring_middleware
from .manifest import manifest_middleware

__all__ = [
    'error_middleware',
    'monitoring_middleware',
    'manifest_middleware'
]
