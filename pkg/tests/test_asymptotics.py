import unittest
import sys
import os
import math

# Add the project root to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from cblre.processes.asymptotics import (
    classify, clt_check, clt_normalizers, doney_maller_ratio, extinction_fraction, k_triplet, w_dichotomy,
)
from cblre.processes.jumps import CompoundPoisson, Exponential, PowerLawDensity
from cblre.processes.levy import LevyTriplet
from cblre.processes.mechanisms import feller, neveu
from cblre.processes.sde import CBLREConfig
from cblre.utils.errors import DomainError, HypothesisError, ValidationError


class TestClassify(unittest.TestCase):
    """Test the long-term regime from the drift of K"""

    def test_supercritical(self):
        """Test K drifting to +inf with a convergent integral condition"""
        report = classify(feller(), LevyTriplet(0.5, 0.5))
        self.assertEqual(report.regime, 'survival_possible')
        self.assertEqual(report.drift_sign, 1)
        self.assertEqual(report.as_dict()['intcond_status'], 'convergent')

    def test_subcritical(self):
        """Test K drifting to -inf"""
        report = classify(feller(), LevyTriplet(-0.5, 0.5))
        self.assertEqual(report.regime, 'extinction_as')
        self.assertEqual(report.drift_sign, -1)

    def test_critical(self):
        """Test an oscillating K, including drift cancelled by psi'(0+)"""
        self.assertEqual(classify(feller(), LevyTriplet(0.0, 0.5)).regime, 'liminf_zero')
        self.assertEqual(classify(feller(a=0.5), LevyTriplet(-0.5, 0.5)).regime, 'liminf_zero')

    def test_without_h_on_k0(self):
        """Test that the regime of a K0 environment needs (H)"""
        with self.assertRaises(HypothesisError):
            classify(neveu(), LevyTriplet(0.5, 0.5))

    def test_without_h_on_k(self):
        """Test that a K environment without (H) is undetermined"""
        report = classify(neveu(), LevyTriplet(0.5, 0.5, variant='K'))
        self.assertEqual(report.regime, 'undetermined')
        self.assertEqual(report.intcond_status, 'not-evaluated')

    def test_k_triplet(self):
        """Test the K triplet carries psi'(0+)"""
        env = k_triplet(feller(a=0.3), LevyTriplet(0.1, 0.2))
        self.assertAlmostEqual(env.drift, 0.4, places=14)
        self.assertEqual(env.variant, 'K')
        self.assertEqual(env.psi_prime0, -0.3)


class TestNormalizers(unittest.TestCase):
    """Test the centering and scaling of log Z_t"""

    def test_brownian(self):
        """Test a(t) = mean t and b(t) = sd sqrt(t)"""
        a, b = clt_normalizers(LevyTriplet(0.8, 0.5, variant='K'), 20.0)
        self.assertAlmostEqual(a, 16.0, places=13)
        self.assertAlmostEqual(b, math.sqrt(5.0), places=13)

    def test_negative_time(self):
        """Test that t must be non-negative"""
        with self.assertRaises(ValidationError):
            clt_normalizers(LevyTriplet(0.8, 0.5, variant='K'), -1.0)

    def test_infinite_variance(self):
        """Test heavy-tailed jumps need the general normalizers"""
        jumps = PowerLawDensity(c_pos=1.0, c_neg=0.0, alpha=1.5, eps=0.1, upper=math.inf)
        with self.assertRaises(DomainError) as ctx:
            clt_normalizers(LevyTriplet(0.8, 0.5, (jumps,), variant='K'), 10.0)
        self.assertIn('not implemented', str(ctx.exception))

    def test_doney_maller_ratio(self):
        """Test the ratio is infinite without jumps and finite with light tails"""
        ratios = doney_maller_ratio(LevyTriplet(0.8, 0.5, variant='K'))
        self.assertTrue(all(math.isinf(r) for r in ratios.values()))
        ratios = doney_maller_ratio(LevyTriplet(0.8, 0.5, (CompoundPoisson(1.0, Exponential(1.0)),), variant='K'),
                                    points=(2.0, 5.0))
        self.assertTrue(all(0 < r < math.inf for r in ratios.values()))
        self.assertGreater(ratios[5.0], ratios[2.0])


class TestLongTermSimulation(unittest.TestCase):
    """Test the simulation harnesses for the long-term behaviour"""

    def setUp(self):
        self.supercritical = CBLREConfig(1.0, feller(0.0, 0.1), LevyTriplet(0.8, 0.5), 20.0, 0.05)

    def test_clt(self):
        """Test the standardized log Z_t is close to a standard normal"""
        report = clt_check(self.supercritical, 20.0, 300, 31)
        self.assertFalse(report.inconclusive)
        self.assertGreaterEqual(report.survivors, 250)
        self.assertLess(report.statistic, 0.15)
        self.assertAlmostEqual(report.a, 16.0, places=12)
        self.assertIn('ks_p_value@0.0001', report.as_dict())

    def test_clt_needs_supercritical(self):
        """Test that a subcritical environment is refused"""
        config = CBLREConfig(1.0, feller(0.0, 0.1), LevyTriplet(-0.8, 0.5), 5.0, 0.05)
        with self.assertRaises(ValidationError):
            clt_check(config, 5.0, 10, 1)

    def test_clt_degenerate_normalizer(self):
        """Test that a deterministic environment has no central limit"""
        config = CBLREConfig(1.0, feller(0.0, 0.1), LevyTriplet(0.8), 5.0, 0.05)
        with self.assertRaises(ValidationError) as ctx:
            clt_check(config, 5.0, 10, 1)
        self.assertIn('b(t) = 0', str(ctx.exception))

    def test_extinction_when_subcritical(self):
        """Test nearly every path is extinct when K drifts to -inf"""
        config = CBLREConfig(1.0, feller(0.0, 1.0), LevyTriplet(-1.0, 0.3), 40.0, 0.1)
        estimate = extinction_fraction(config, 100, 8)
        self.assertGreaterEqual(estimate.mean, 0.95)
        self.assertEqual(estimate.n, 100)

    def test_w_dichotomy(self):
        """Test small W and small Z agree path by path"""
        report = w_dichotomy(self.supercritical, 100, 5)
        self.assertGreaterEqual(report.agreement, 0.95)
        self.assertGreater(report.w_positive.mean, 0.5)
        self.assertEqual(report.as_dict()['n_paths'], 100)


if __name__ == '__main__':
    unittest.main()
