import unittest
import sys
import os
import shutil
import tempfile
from unittest.mock import MagicMock, patch

# Add the project root to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from cblre.config import TestingConfig
from cblre.middleware.error import error_middleware
from cblre.middleware.manifest import manifest_middleware
from cblre.middleware.monitoring import monitoring_middleware
from cblre.processes.logging import log_numerical_event
from cblre.runner import create_runner
from cblre.utils.errors import DomainError, NumericalError, ValidationError


def read_key_values(path):
    with open(path, encoding='utf-8') as fh:
        return dict(line.rstrip('\n').split('=', 1) for line in fh if line.strip())


class TestMiddleware(unittest.TestCase):
    """Test middleware functionality"""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.out_dir = tempfile.mkdtemp()
        self.mock_handler = MagicMock(return_value=0)

        self.mock_run = MagicMock()
        self.mock_run.out_dir = self.out_dir
        self.mock_run.summary = {}
        self.mock_run.outputs = []
        self.mock_run.kind = 'sample-env'
        self.mock_run.seed = 7
        self.mock_run.config_digest = 'abc'
        self.mock_run.settings = TestingConfig
        self.mock_run.path.side_effect = lambda name: os.path.join(self.out_dir, name)

    def tearDown(self):
        shutil.rmtree(self.out_dir, ignore_errors=True)

    def diagnostics(self):
        return read_key_values(os.path.join(self.out_dir, 'diagnostics.txt'))

    def test_error_middleware_success(self):
        """Test error middleware with successful handler"""
        middleware = error_middleware(self.mock_handler)
        self.assertEqual(middleware(self.mock_run), 0)
        self.mock_handler.assert_called_once_with(self.mock_run)
        self.assertFalse(os.path.exists(os.path.join(self.out_dir, 'diagnostics.txt')))

    def test_error_middleware_validation(self):
        """Test validation errors exit with 2 and name the key"""
        def failing_handler(run):
            raise ValidationError("logistic.k must be > 0", key='logistic.k')

        code = error_middleware(failing_handler)(self.mock_run)
        self.assertEqual(code, 2)
        diagnostics = self.diagnostics()
        self.assertEqual(diagnostics['exit_code'], '2')
        self.assertEqual(diagnostics['config_key'], 'logistic.k')
        self.assertEqual(diagnostics['message'], 'logistic.k must be > 0')

    def test_error_middleware_domain(self):
        """Test domain errors are validation errors"""
        def failing_handler(run):
            raise DomainError("E[exp(2 K_1)] is infinite")

        self.assertEqual(error_middleware(failing_handler)(self.mock_run), 2)
        self.assertEqual(self.diagnostics()['error_type'], 'DomainError')

    def test_error_middleware_numerical(self):
        """Test numerical failures exit with 3 and keep their diagnostics"""
        def failing_handler(run):
            raise NumericalError("backward ODE step underflow", {'s': 0.5, 'lambda': 2.0})

        code = error_middleware(failing_handler)(self.mock_run)
        self.assertEqual(code, 3)
        diagnostics = self.diagnostics()
        self.assertEqual(diagnostics['diagnostics.s'], '0.5')
        self.assertEqual(diagnostics['diagnostics.lambda'], '2')

    def test_error_middleware_exception(self):
        """Test error middleware handling unexpected exceptions"""
        def failing_handler(run):
            raise Exception("Test exception")

        code = error_middleware(failing_handler)(self.mock_run)
        self.assertEqual(code, 1)
        self.assertIn('Test exception', self.diagnostics()['message'])

    def test_manifest_middleware(self):
        """Test summary and manifest are written on success"""
        self.mock_run.summary = {'regime': 'extinction_as', 'env_mean': -0.5}
        code = manifest_middleware(self.mock_handler)(self.mock_run)
        self.assertEqual(code, 0)
        summary = read_key_values(os.path.join(self.out_dir, 'summary.txt'))
        self.assertEqual(summary['regime'], 'extinction_as')
        self.assertEqual(summary['env_mean'], '-0.5')
        manifest = read_key_values(os.path.join(self.out_dir, 'manifest.txt'))
        self.assertEqual(manifest['experiment'], 'sample-env')
        self.assertEqual(manifest['seed'], '7')
        self.assertEqual(manifest['outputs'], 'summary.txt')

    def test_manifest_middleware_skips_failures(self):
        """Test nothing is written when the handler fails"""
        code = manifest_middleware(MagicMock(return_value=2))(self.mock_run)
        self.assertEqual(code, 2)
        self.assertFalse(os.path.exists(os.path.join(self.out_dir, 'manifest.txt')))

    def test_monitoring_middleware_counts_events(self):
        """Test numerical events raised by the handler are counted"""
        def noisy_handler(run):
            log_numerical_event('step_rejection', '3 rejected steps', severity='low')
            log_numerical_event('explosion_cap', '1 replicate above cap', severity='low')
            return 0

        code = monitoring_middleware(noisy_handler)(self.mock_run)
        self.assertEqual(code, 0)
        self.assertEqual(self.mock_run.summary['numerical_events'], 2)

    def test_create_runner_order(self):
        """Test the first middleware is the outermost"""
        calls = []

        def tracing(name):
            def middleware(handler):
                def middleware_handler(run):
                    calls.append(name)
                    return handler(run)
                return middleware_handler
            return middleware

        with patch('cblre.runner.dispatch', self.mock_handler):
            chained = create_runner([tracing('outer'), tracing('inner')])
        self.assertEqual(chained(self.mock_run), 0)
        self.assertEqual(calls, ['outer', 'inner'])


if __name__ == '__main__':
    unittest.main()
