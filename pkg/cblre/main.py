#!/usr/bin/env python3
"""
Command-line entry point for the cblre toolkit.
"""
import argparse
import logging
import os
import sys

from .config import get_config
from .processes.logging import configure_diagnostics_log
from .runner import run


def parse_args(argv=None):
    settings = get_config()
    parser = argparse.ArgumentParser(
        prog='cblre',
        description='Simulate and verify branching processes in a Lévy random environment.')
    parser.add_argument('--config', required=True, help='experiment config file (dotted key=value lines)')
    parser.add_argument('--seed', type=int, default=None, help='master seed, overrides the config')
    parser.add_argument('--out', default=settings.OUTPUT_DIR, help='output directory')
    parser.add_argument('--threads', type=int, default=None,
                        help='worker threads (default: CBLRE_THREADS or 1)')
    parser.add_argument('--verbose', action='store_true', help='debug logging, echoed to stderr')
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = settings.THREADS
    if args.threads < 1:
        parser.error('--threads must be >= 1')
    return args


def setup_logging(settings, verbose=False):
    level = logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(
        filename=settings.LOG_FILE,
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s'
    )
    if verbose:
        echo = logging.StreamHandler(sys.stderr)
        echo.setFormatter(logging.Formatter('%(levelname)s - %(message)s'))
        logging.getLogger().addHandler(echo)
    diagnostics_level = getattr(logging, settings.DIAGNOSTICS_LOG_LEVEL.upper(), logging.WARNING)
    root, ext = os.path.splitext(settings.LOG_FILE)
    diagnostics_file = settings.LOG_FILE if settings.LOG_FILE == os.devnull else f"{root}-diagnostics{ext or '.log'}"
    configure_diagnostics_log(diagnostics_file, diagnostics_level)


def main(argv=None):
    """Main entry point; returns the process exit code."""
    args = parse_args(argv)
    settings = get_config()
    setup_logging(settings, args.verbose)
    logging.info("Starting cblre %s with config %s", settings.TOOL_VERSION, args.config)
    code = run(args.config, seed=args.seed, out_dir=args.out, threads=args.threads)
    if code == 0:
        print(f"Results written to {args.out}")
    else:
        print(f"Experiment failed with exit code {code}; see {os.path.join(args.out, 'diagnostics.txt')}",
              file=sys.stderr)
    return code


if __name__ == '__main__':
    sys.exit(main())
