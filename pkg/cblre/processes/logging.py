import logging


# Separate diagnostics log for numerical events
diagnostics_logger = logging.getLogger('cblre.diagnostics')
diagnostics_logger.setLevel(logging.WARNING)


def configure_diagnostics_log(path, level=logging.WARNING):
    """
    Attaches a file handler for numerical diagnostics. Called once by the command-line entry point.
    """
    handler = logging.FileHandler(path)
    handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'))
    diagnostics_logger.setLevel(level)
    diagnostics_logger.addHandler(handler)
    return handler


def log_numerical_event(event_type, details, severity='medium'):
    """
    Logs a numerical event (step rejection, invariant breach, truncation) to the diagnostics log.
    """
    diagnostics_logger.warning(f"NUMERICAL_EVENT: Type={event_type}, Severity={severity}, Details={details}")
