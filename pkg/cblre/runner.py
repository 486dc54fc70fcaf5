"""
Experiment registry and orchestration.

Handlers register with ``@experiment(kind)``; ``create_runner`` wraps the dispatcher in the
middleware chain, the first middleware being the outermost.
"""
import logging
import os
from functools import reduce

from .config import get_config
from .processes.montecarlo import SeedStream
from .utils.errors import ValidationError
from .utils.helpers import config_hash, nest, parse_config_text
from .utils.outputs import write_csv

experiments = {}


def experiment(kind):
    def decorator(func):
        experiments[kind] = func
        return func
    return decorator


class Run:
    """One experiment invocation: parsed config, seed stream, output directory and summary."""

    def __init__(self, config_path, seed=None, out_dir=None, threads=None):
        settings = get_config()
        self.config_path = config_path
        self.seed_override = seed
        self.out_dir = out_dir or settings.OUTPUT_DIR
        self.threads = threads or settings.THREADS
        self.settings = settings
        self.config_text = None
        self.params = {}
        self.kind = None
        self.seed = None
        self.stream = None
        self.summary = {}
        self.outputs = []

    def load(self):
        try:
            with open(self.config_path, 'r', encoding='utf-8') as fh:
                self.config_text = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read config {self.config_path}: {exc.strerror}", key='config')
        self.params = nest(parse_config_text(self.config_text))
        if self.seed_override is not None:
            self.params['seed'] = int(self.seed_override)
        self.kind = self.params.get('experiment')
        self.seed = int(self.params.get('seed', self.settings.DEFAULT_SEED))
        self.stream = SeedStream(self.seed)
        return self

    @property
    def config_digest(self):
        return config_hash(self.config_text or '')

    def get(self, dotted, default=None):
        node = self.params
        for segment in dotted.split('.'):
            if not isinstance(node, dict) or segment not in node:
                return default
            node = node[segment]
        return node

    def path(self, name):
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, name)

    def write_csv(self, name, header, rows):
        path = write_csv(self.path(name), header, rows)
        self.outputs.append(path)
        logging.info("Wrote %s", path)
        return path


def dispatch(run):
    run.load()
    handler = experiments.get(run.kind)
    if handler is None:
        raise ValidationError(f"unknown experiment kind {run.kind!r}", key='experiment')
    logging.info("Running experiment %s (seed %s) from %s", run.kind, run.seed, run.config_path)
    return handler(run)


def create_runner(middlewares_list):
    """The dispatcher wrapped in ``middlewares_list``; returns a callable ``Run -> exit code``."""
    return reduce(lambda h, m: m(h), reversed(middlewares_list), dispatch)


def setup_experiments():
    """Imports the handler modules so that they register themselves."""
    from . import experiments as _handlers  # noqa: F401
    return experiments


def default_middlewares():
    from .middleware import error_middleware, manifest_middleware, monitoring_middleware
    return [error_middleware, manifest_middleware, monitoring_middleware]


def run(config_path, seed=None, out_dir=None, threads=None):
    """Runs the experiment described by ``config_path`` and returns its exit code."""
    setup_experiments()
    runner = create_runner(default_middlewares())
    return runner(Run(config_path, seed=seed, out_dir=out_dir, threads=threads))
