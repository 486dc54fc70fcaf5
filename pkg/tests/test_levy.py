import unittest
import sys
import os
import math

import numpy as np

# Add the project root to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from cblre.processes.jumps import CompoundPoisson, Constant, Exponential
from cblre.processes.levy import (
    EnvironmentPath, LevyTriplet, cell_log_ratio, cumulative_exp_functional, discounted_integral, esscher_kappa,
    esscher_tilt, exp_functional, laplace_exponents, log_exp_functional, make_environment, sample_path,
    stieltjes_discounted,
)
from cblre.utils.errors import DomainError, ValidationError


class TestMakeEnvironment(unittest.TestCase):
    """Test the drift of K built from the environment equation"""

    def test_brownian_k(self):
        """Test alpha=0, sigma=1, psi'(0+)=0 gives drift -1/2"""
        env = make_environment(0.0, 1.0, variant='K', psi_prime0=0.0)
        self.assertAlmostEqual(env.drift, -0.5, places=14)
        self.assertAlmostEqual(env.mean(), -0.5, places=14)
        self.assertEqual(env.variant, 'K')

    def test_unit_jumps_are_not_corrected(self):
        """Test jumps of size exactly 1 fall outside the compensation interval"""
        env = make_environment(1.0, 0.0, (CompoundPoisson(1.0, Constant(1.0)),), variant='K0')
        self.assertAlmostEqual(env.drift, 1.0, places=14)
        self.assertAlmostEqual(env.mean(), 2.0, places=14)

    def test_psi_prime_shifts_drift(self):
        """Test variant K subtracts psi'(0+)"""
        k0 = make_environment(0.3, 0.2)
        k = make_environment(0.3, 0.2, variant='K', psi_prime0=-0.7)
        self.assertAlmostEqual(k.drift - k0.drift, 0.7, places=14)

    def test_variant_k_needs_psi_prime(self):
        """Test that variant K without psi'(0+) is rejected"""
        with self.assertRaises(ValidationError) as ctx:
            make_environment(0.0, 1.0, variant='K')
        self.assertEqual(ctx.exception.key, 'env.psi_prime0')

    def test_negative_sigma(self):
        """Test that a negative Gaussian coefficient is rejected"""
        with self.assertRaises(ValidationError):
            make_environment(0.0, -1.0)

    def test_unknown_variant(self):
        """Test that an unknown variant is rejected"""
        with self.assertRaises(ValidationError):
            LevyTriplet(0.0, variant='Q')


class TestSamplePath(unittest.TestCase):
    """Test path sampling by the Lévy-Itô decomposition"""

    def test_pure_drift(self):
        """Test K_t = t on [0, 2]"""
        path = sample_path(LevyTriplet(1.0), 2.0, 0.1, seed=0)
        self.assertAlmostEqual(path.terminal_value, 2.0, places=12)
        self.assertEqual(path.n_cells, 20)
        self.assertEqual(path.jump_times.size, 0)
        self.assertAlmostEqual(path.value_at(0.75), 0.75, places=12)

    def test_reproducible(self):
        """Test the same seed gives the same path"""
        triplet = LevyTriplet(0.1, 0.5, (CompoundPoisson(3.0, Exponential(0.5)),))
        a = sample_path(triplet, 5.0, 0.05, seed=17)
        b = sample_path(triplet, 5.0, 0.05, seed=17)
        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.jump_sizes, b.jump_sizes)

    def test_consistency_with_jumps(self):
        """Test K(T) equals drift * T plus Gaussian and jump increments"""
        triplet = LevyTriplet(-0.4, 0.8, (CompoundPoisson(5.0, Exponential(0.3)),))
        for seed in range(20):
            path = sample_path(triplet, 3.0, 0.01, seed=seed)
            self.assertTrue(path.check_consistency())
            np.testing.assert_allclose(path.values[path.jump_mask] - path.left_values[path.jump_mask],
                                       path.jump_sizes)

    def test_brownian_moments(self):
        """Test mean and variance of K_1 for a Brownian motion with drift"""
        triplet = LevyTriplet(0.3, 1.0)
        n = 4000
        finals = np.array([sample_path(triplet, 1.0, 1.0, seed=s).terminal_value for s in range(n)])
        self.assertLess(abs(finals.mean() - 0.3), 4.0 / math.sqrt(n))
        self.assertLess(abs(finals.var(ddof=1) - 1.0), 0.1)

    def test_poisson_jump_counts(self):
        """Test the mean of a compound Poisson environment with unit-mass laws"""
        triplet = LevyTriplet(0.0, 0.0, (CompoundPoisson(2.0, Constant(-0.5), compensated=False),))
        n = 4000
        finals = np.array([sample_path(triplet, 1.0, 0.5, seed=s).terminal_value for s in range(n)])
        self.assertAlmostEqual(triplet.mean(), -1.0, places=14)
        self.assertLess(abs(finals.mean() - triplet.mean()), 4 * math.sqrt(0.5 / n))


class TestPathOperations(unittest.TestCase):
    """Test accessors and views of a realized path"""

    def setUp(self):
        self.path = EnvironmentPath.from_function(math.sin, 2.0, 0.1, jumps=[(0.55, 1.0), (1.3, -0.4)])

    def test_left_and_right_values(self):
        """Test K_t and K_{t-} at a jump time"""
        self.assertAlmostEqual(self.path.value_at(0.55), math.sin(0.55) + 1.0, places=14)
        self.assertAlmostEqual(self.path.left_value_at(0.55), math.sin(0.55), places=14)
        self.assertAlmostEqual(self.path.terminal_value, math.sin(2.0) + 0.6, places=14)

    def test_outside_horizon(self):
        """Test that times outside [0, T] are rejected"""
        with self.assertRaises(ValidationError):
            self.path.value_at(2.5)

    def test_shifted(self):
        """Test adding a linear drift"""
        shifted = self.path.shifted(2.0)
        self.assertAlmostEqual(shifted.terminal_value, self.path.terminal_value + 4.0, places=12)
        self.assertAlmostEqual(shifted.left_value_at(1.3), self.path.left_value_at(1.3) + 2.6, places=12)

    def test_coarsened_keeps_jumps(self):
        """Test that coarsening keeps jump times and the terminal value"""
        coarse = self.path.coarsened(4)
        self.assertAlmostEqual(coarse.terminal_value, self.path.terminal_value, places=14)
        np.testing.assert_array_equal(coarse.jump_times, self.path.jump_times)
        self.assertTrue(np.all(np.isin(coarse.times, self.path.times)))
        self.assertTrue(coarse.check_consistency())
        self.assertLess(coarse.n_cells, self.path.n_cells)

    def test_future_starts_at_zero(self):
        """Test the future path is K_{t+u} - K_t"""
        future = self.path.future(1.0)
        self.assertEqual(future.values[0], 0.0)
        self.assertAlmostEqual(future.horizon, 1.0, places=12)
        self.assertAlmostEqual(future.terminal_value, self.path.terminal_value - self.path.value_at(1.0), places=12)


class TestLaplaceExponents(unittest.TestCase):
    """Test the Laplace exponent and the Esscher root"""

    def test_brownian_exponent(self):
        """Test psi_hat(2) = 4 for drift -1, sigma 1"""
        psi, psi_hat = laplace_exponents(LevyTriplet(-1.0, 1.0))
        self.assertAlmostEqual(psi_hat(2.0), 4.0, places=14)
        self.assertEqual(psi(0.0), 0.0)

    def test_unit_jumps(self):
        """Test psi(1) = e - 1 for unit jumps at rate 1"""
        psi, _ = laplace_exponents(LevyTriplet(0.0, 0.0, (CompoundPoisson(1.0, Constant(1.0)),)))
        self.assertAlmostEqual(psi(1.0), math.e - 1.0, places=14)

    def test_outside_domain(self):
        """Test that an infinite exponential moment raises"""
        psi, _ = laplace_exponents(LevyTriplet(0.0, 0.0, (CompoundPoisson(1.0, Exponential(1.0)),)))
        with self.assertRaises(DomainError):
            psi(1.5)

    def test_kappa_brownian(self):
        """Test closed-form Esscher roots for Brownian environments"""
        self.assertAlmostEqual(esscher_kappa(LevyTriplet(-1.0, 1.0), 1.0), math.sqrt(3) - 1, places=10)
        self.assertAlmostEqual(esscher_kappa(LevyTriplet(-2.0, 1.0), 2.0), math.sqrt(8) - 2, places=10)
        self.assertAlmostEqual(esscher_kappa(LevyTriplet(-1.0, 1.0), 0.0), 0.0, places=12)

    def test_kappa_positive_drift(self):
        """Test the largest root is taken when psi_hat dips below zero"""
        self.assertAlmostEqual(esscher_kappa(LevyTriplet(1.0, 1.0), 0.0), 2.0, places=10)

    def test_kappa_compound_poisson(self):
        """Test the root for negative drift with exponential upward jumps"""
        triplet = LevyTriplet(-1.5, 0.0, (CompoundPoisson(0.5, Exponential(1.0), compensated=False),))
        self.assertAlmostEqual(esscher_kappa(triplet, 8.0 / 3.0), 2.0, places=10)
        _, psi_hat = laplace_exponents(triplet)
        kappa = esscher_kappa(triplet, 1.3)
        self.assertAlmostEqual(psi_hat(kappa), 1.3, places=10)

    def test_kappa_negative_lambda(self):
        """Test that a negative lambda is rejected"""
        with self.assertRaises(ValidationError):
            esscher_kappa(LevyTriplet(-1.0, 1.0), -0.5)


class TestEsscherTilt(unittest.TestCase):
    """Test the triplet under the exponentially tilted measure"""

    def test_brownian_tilt(self):
        """Test the drift moves by -kappa sigma^2"""
        tilted = esscher_tilt(LevyTriplet(-1.0, 1.0), 1.0)
        self.assertAlmostEqual(tilted.drift, -2.0, places=14)
        self.assertEqual(tilted.gaussian_sd, 1.0)

    def test_exponential_jumps(self):
        """Test rate and mean of tilted exponential jumps"""
        triplet = LevyTriplet(0.0, 0.0, (CompoundPoisson(1.0, Exponential(1.0)),))
        component = esscher_tilt(triplet, 0.5).components[0]
        self.assertAlmostEqual(component.rate, 2.0 / 3.0, places=14)
        self.assertAlmostEqual(component.law.scale, 2.0 / 3.0, places=14)

    def test_exponent_identity(self):
        """Test psi_hat of the tilted triplet is psi_hat(kappa + u) - psi_hat(kappa)"""
        triplet = LevyTriplet(-1.5, 0.3, (CompoundPoisson(0.5, Exponential(1.0)),))
        kappa = 0.7
        _, psi_hat = laplace_exponents(triplet)
        _, tilted_hat = laplace_exponents(esscher_tilt(triplet, kappa))
        for u in (-0.5, 0.0, 0.4, 1.0, 3.0):
            self.assertAlmostEqual(tilted_hat(u), psi_hat(kappa + u) - psi_hat(kappa), places=10)

    def test_zero_tilt(self):
        """Test kappa = 0 leaves the triplet alone"""
        triplet = LevyTriplet(-1.0, 1.0)
        self.assertIs(esscher_tilt(triplet, 0.0), triplet)


class TestExponentialFunctionals(unittest.TestCase):
    """Test exact integrals along piecewise-linear paths"""

    def test_linear_path(self):
        """Test the integral of e^s over [0, 1]"""
        self.assertAlmostEqual(exp_functional(EnvironmentPath.linear(1.0, 1.0)), math.e - 1, places=13)

    def test_zero_path(self):
        """Test the integral of 1 over [0, 3]"""
        self.assertAlmostEqual(exp_functional(EnvironmentPath.linear(0.0, 3.0, 0.5)), 3.0, places=13)

    def test_decreasing_path(self):
        """Test the integral of e^{-2s} over [0, 20]"""
        self.assertAlmostEqual(exp_functional(EnvironmentPath.linear(-2.0, 20.0)), 0.5, places=12)
        self.assertAlmostEqual(exp_functional(EnvironmentPath.linear(2.0, 20.0), sign=-1), 0.5, places=12)

    def test_log_does_not_overflow(self):
        """Test the log functional on a horizon where e^K overflows"""
        self.assertAlmostEqual(log_exp_functional(EnvironmentPath.linear(1.0, 1000.0, 10.0)), 1000.0, places=8)

    def test_cell_log_ratio(self):
        """Test log((e^d - 1) / d) on small, negative and overflowing increments"""
        d = np.array([-3.0, -1e-10, 0.0, 1e-10, 2.0])
        expected = [math.log(math.expm1(x) / x) if x else 0.0 for x in d]
        np.testing.assert_allclose(cell_log_ratio(d), expected, rtol=1e-12, atol=1e-15)
        self.assertAlmostEqual(float(cell_log_ratio(np.array([800.0]))[0]), 800.0 - math.log(800.0), places=9)

    def test_additive_at_split(self):
        """Test the integral over [0, T] splits at an intermediate time"""
        path = EnvironmentPath.from_function(math.sin, 2.0, 0.1, jumps=[(0.55, 1.0), (1.3, -0.4)])
        whole = exp_functional(path)
        split = exp_functional(path.restricted(1.0)) + math.exp(path.value_at(1.0)) * exp_functional(path.future(1.0))
        self.assertAlmostEqual(whole, split, places=12)

    def test_cumulative(self):
        """Test the running integral starts at zero and ends at the total"""
        path = EnvironmentPath.from_function(lambda t: t * t, 1.0, 0.1)
        running = cumulative_exp_functional(path)
        self.assertEqual(running[0], 0.0)
        self.assertAlmostEqual(running[-1], exp_functional(path), places=12)
        self.assertTrue(np.all(np.diff(running) > 0))

    def test_discounted_integrals(self):
        """Test the discounted integrals of K_s = s"""
        path = EnvironmentPath.linear(1.0, 4.0, 0.25)
        self.assertAlmostEqual(discounted_integral(path), 1 - math.exp(-4.0) * 5.0, places=13)
        self.assertAlmostEqual(stieltjes_discounted(path), 1 - math.exp(-4.0), places=13)

    def test_bad_sign(self):
        """Test that a sign other than +/- is rejected"""
        with self.assertRaises(ValidationError):
            exp_functional(EnvironmentPath.linear(1.0, 1.0), sign=2)


if __name__ == '__main__':
    unittest.main()
