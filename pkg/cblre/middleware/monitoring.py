import logging
import time

from ..processes.logging import diagnostics_logger


class _EventCounter(logging.Handler):
    def __init__(self):
        super().__init__(level=logging.DEBUG)
        self.count = 0

    def emit(self, record):
        self.count += 1


def monitoring_middleware(handler):
    def middleware_handler(run):
        counter = _EventCounter()
        diagnostics_logger.addHandler(counter)
        start = time.perf_counter()
        try:
            return handler(run)
        finally:
            diagnostics_logger.removeHandler(counter)
            elapsed = time.perf_counter() - start
            run.summary['numerical_events'] = counter.count
            logging.info("Experiment %s finished in %.3f s with %d numerical events",
                         run.kind, elapsed, counter.count)
    return middleware_handler
