import logging
import os

from ..processes.logging import log_numerical_event
from ..utils.errors import CBLREError, NumericalError, ValidationError
from ..utils.outputs import write_key_values


def _write_diagnostics(run, error, exit_code):
    items = {
        'exit_code': exit_code,
        'error_type': type(error).__name__,
        'message': str(error),
    }
    key = getattr(error, 'key', None)
    if key:
        items['config_key'] = key
    details = getattr(error, 'details', None)
    if details:
        items['details'] = details
    for name, value in getattr(error, 'diagnostics', {}).items():
        items[f"diagnostics.{name}"] = value
    try:
        os.makedirs(run.out_dir, exist_ok=True)
        write_key_values(os.path.join(run.out_dir, 'diagnostics.txt'), items)
    except OSError:
        logging.error("Could not write diagnostics to %s", run.out_dir, exc_info=True)


def error_middleware(handler):
    def middleware_handler(run):
        try:
            return handler(run)
        except ValidationError as e:
            logging.error("Validation failed: %s", e)
            _write_diagnostics(run, e, e.exit_code)
            return e.exit_code
        except NumericalError as e:
            logging.error("Numerical failure: %s", e, exc_info=True)
            log_numerical_event('numerical_failure', f"{e} {e.diagnostics}", severity='high')
            _write_diagnostics(run, e, e.exit_code)
            return e.exit_code
        except CBLREError as e:
            logging.error("Experiment failed: %s", e, exc_info=True)
            _write_diagnostics(run, e, e.exit_code)
            return e.exit_code
        except Exception as e:
            logging.error("Internal error: %s", e, exc_info=True)
            error = CBLREError(f"{type(e).__name__}: {e}")
            _write_diagnostics(run, error, error.exit_code)
            return error.exit_code
    return middleware_handler
