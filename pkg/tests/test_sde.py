import unittest
import sys
import os
import math

import numpy as np

# Add the project root to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from cblre.processes.constants import STATUS_ABSORBED, STATUS_ALIVE, STATUS_EXPLODED_CAP, STATUS_EXPLODED_JUMP
from cblre.processes.jumps import CompoundPoisson, Constant, Exponential, Normal
from cblre.processes.levy import EnvironmentPath, LevyTriplet
from cblre.processes.mechanisms import BranchingMechanism, ImmigrationMechanism, feller, stable
from cblre.processes.montecarlo import SeedStream
from cblre.processes.sde import (
    BatchResult, CBLREConfig, FinalValue, LaplaceFunctional, QuadraticCompetition, Survival,
    TabulatedCompetition, simulate, simulate_batch, simulate_ensemble,
)
from cblre.utils.errors import ValidationError


def quiet_mech(a=0.0):
    """Mechanism without noise, so the integrator is deterministic."""
    return feller(a=a, gamma2=0.0)


class TestConfig(unittest.TestCase):
    """Test configuration checks of the integrator"""

    def test_rejects_k_environment(self):
        """Test that the integrator refuses a K triplet"""
        with self.assertRaises(ValidationError) as ctx:
            CBLREConfig(1.0, feller(), LevyTriplet(0.0, variant='K', psi_prime0=0.0), 1.0, 0.1)
        self.assertEqual(ctx.exception.key, 'env.variant')

    def test_rejects_bad_step(self):
        """Test that dt must lie in (0, T]"""
        with self.assertRaises(ValidationError):
            CBLREConfig(1.0, feller(), LevyTriplet(0.0), 1.0, 2.0)

    def test_rejects_negative_start(self):
        """Test that z0 must be non-negative"""
        with self.assertRaises(ValidationError):
            CBLREConfig(-1.0, feller(), LevyTriplet(0.0), 1.0, 0.1)

    def test_horizon_mismatch(self):
        """Test that a path of the wrong length is rejected"""
        config = CBLREConfig(1.0, feller(), LevyTriplet(0.0), 1.0, 0.1)
        with self.assertRaises(ValidationError):
            simulate(config, EnvironmentPath.linear(0.0, 2.0, 0.1))

    def test_tabulated_competition(self):
        """Test interpolation and linear extension of a tabulated competition"""
        beta = TabulatedCompetition((0.0, 1.0, 2.0), (0.0, 1.0, 3.0))
        self.assertAlmostEqual(float(beta(0.5)), 0.5, places=14)
        self.assertAlmostEqual(float(beta(3.0)), 5.0, places=14)
        with self.assertRaises(ValidationError):
            TabulatedCompetition((0.0, 1.0), (0.0, -1.0))
        with self.assertRaises(ValidationError):
            QuadraticCompetition(0.0)


class TestDeterministicSteps(unittest.TestCase):
    """Test the integrator where every step is deterministic"""

    def test_euler_growth(self):
        """Test Z' = a Z on a flat path gives the Euler product"""
        config = CBLREConfig(1.0, quiet_mech(0.5), LevyTriplet(0.0), 1.0, 0.1)
        trajectory = simulate(config, EnvironmentPath.linear(0.0, 1.0, 0.1), seed=0)
        self.assertAlmostEqual(trajectory.final, 1.05 ** 10, places=12)
        self.assertEqual(trajectory.status, STATUS_ALIVE)
        self.assertEqual(trajectory.values.size, trajectory.times.size)

    def test_environment_factor(self):
        """Test Z_T = z0 e^{K_T} when only the environment acts"""
        path = EnvironmentPath.from_function(math.sin, 2.0, 0.05, jumps=[(0.33, 0.7), (1.5, -1.2)])
        config = CBLREConfig(2.0, quiet_mech(), LevyTriplet(0.0), 2.0, 0.05)
        trajectory = simulate(config, path, seed=0)
        self.assertAlmostEqual(trajectory.final / (2.0 * math.exp(path.terminal_value)), 1.0, places=12)

    def test_immigration_drift(self):
        """Test Z_T = d T from zero with drift immigration"""
        config = CBLREConfig(0.0, quiet_mech(), LevyTriplet(0.0), 3.0, 0.1, imm=ImmigrationMechanism(d=1.0))
        trajectory = simulate(config, EnvironmentPath.linear(0.0, 3.0, 0.1), seed=0)
        self.assertAlmostEqual(trajectory.final, 3.0, places=12)
        self.assertEqual(trajectory.status, STATUS_ALIVE)

    def test_absorbed_at_zero(self):
        """Test a zero start without immigration stays absorbed"""
        config = CBLREConfig(0.0, feller(), LevyTriplet(0.0), 1.0, 0.1)
        batch = simulate_batch(config, EnvironmentPath.linear(0.0, 1.0, 0.1), 5, seed=1)
        self.assertTrue(np.all(batch.final == 0.0))
        self.assertTrue(np.all(batch.status == STATUS_ABSORBED))
        self.assertTrue(np.all(batch.event_time == 0.0))

    def test_explosion_cap(self):
        """Test replicates above the cap are marked exploded"""
        config = CBLREConfig(1.0, quiet_mech(5.0), LevyTriplet(0.0), 1.0, 0.01, z_max=10.0)
        trajectory = simulate(config, EnvironmentPath.linear(0.0, 1.0, 0.01), seed=0)
        self.assertTrue(trajectory.exploded)
        self.assertEqual(trajectory.status_name, 'exploded')
        self.assertTrue(math.isinf(trajectory.final))
        self.assertLess(trajectory.event_time, 1.0)

    def test_competition_slows_growth(self):
        """Test a logistic term keeps Z below the uncompeted path"""
        path = EnvironmentPath.linear(0.0, 5.0, 0.01)
        free = simulate(CBLREConfig(1.0, quiet_mech(1.0), LevyTriplet(0.0), 5.0, 0.01), path)
        competed = simulate(CBLREConfig(1.0, quiet_mech(1.0), LevyTriplet(0.0), 5.0, 0.01,
                                        beta=QuadraticCompetition(1.0)), path)
        self.assertLess(competed.final, free.final)
        self.assertAlmostEqual(competed.final, 1.0, places=6)


class TestRandomSteps(unittest.TestCase):
    """Test the integrator against known means"""

    def test_killing(self):
        """Test that a large killing rate sends almost every replicate to the cemetery"""
        mech = BranchingMechanism(a=0.0, gamma2=0.0, q=5.0)
        config = CBLREConfig(1.0, mech, LevyTriplet(0.0), 1.0, 0.01)
        batch = simulate_batch(config, EnvironmentPath.linear(0.0, 1.0, 0.01), 1000, seed=3)
        self.assertGreater(np.mean(batch.status == STATUS_EXPLODED_JUMP), 0.95)
        self.assertTrue(np.all(np.isinf(batch.final[batch.status == STATUS_EXPLODED_JUMP])))

    def test_feller_mean_in_drifting_environment(self):
        """Test E[Z_1] = e for a critical Feller process in K_t = t"""
        config = CBLREConfig(1.0, feller(0.0, 0.5), LevyTriplet(1.0), 1.0, 0.01)
        batch = simulate_batch(config, EnvironmentPath.linear(1.0, 1.0, 0.01), 20000, seed=5)
        se = batch.final.std(ddof=1) / math.sqrt(batch.final.size)
        self.assertLess(abs(batch.final.mean() - math.e), 4 * se + 0.01)

    def test_supercritical_feller_mean(self):
        """Test E[Z_1] = e for a = 1, gamma2 = 1 in a flat environment"""
        config = CBLREConfig(1.0, feller(1.0, 1.0), LevyTriplet(0.0), 1.0, 0.001)
        batch = simulate_batch(config, EnvironmentPath.linear(0.0, 1.0, 0.001), 100000, seed=17)
        se = batch.final.std(ddof=1) / math.sqrt(batch.final.size)
        # Euler bias e - 1.001^1000 is below 0.0014
        self.assertLess(abs(batch.final.mean() - math.e), 3 * se + 0.0015)

    def test_supercritical_feller_mean_ensemble(self):
        """Test the pooled mean of Z_1 over flat environments is e"""
        config = CBLREConfig(1.0, feller(1.0, 1.0), LevyTriplet(0.0), 1.0, 0.001)
        result = simulate_ensemble(config, 10, 5000, 18, FinalValue())
        self.assertLess(abs(result.pooled.mean - math.e), 3 * result.pooled.se + 0.0015)

    def test_branching_jumps_mean(self):
        """Test E[Z_1] = e^{-psi'(0+)} with exponential offspring jumps"""
        mech = BranchingMechanism(a=-1.0, mu=CompoundPoisson(1.0, Exponential(1.0)), family='finite_activity')
        config = CBLREConfig(1.0, mech, LevyTriplet(0.0), 1.0, 0.01)
        batch = simulate_batch(config, EnvironmentPath.linear(0.0, 1.0, 0.01), 20000, seed=8)
        expected = math.exp(-mech.psi_prime0())
        se = batch.final.std(ddof=1) / math.sqrt(batch.final.size)
        self.assertLess(abs(batch.final.mean() - expected), 4 * se + 0.02 * expected)

    def test_quenched_mean_over_environments(self):
        """Test E[Z_1] = E[e^{K_1}] = e^{sigma^2/2} over Brownian environments"""
        config = CBLREConfig(1.0, feller(0.0, 0.5), LevyTriplet(0.0, 0.5), 1.0, 0.02)
        result = simulate_ensemble(config, 2000, 10, 21, FinalValue())
        self.assertLess(abs(result.pooled.mean - math.exp(0.125)), 4 * result.pooled.se + 0.01)
        self.assertEqual(len(result.per_env), 2000)



class TestSchemeInvariants(unittest.TestCase):
    """Test positivity, statuses and the small-jump modes of the integrator"""

    def test_paths_stay_non_negative(self):
        """Test every recorded value is >= 0 under strong noise and a jumpy environment"""
        env = LevyTriplet(-0.2, 0.8, (CompoundPoisson(3.0, Normal(0.0, 1.0)),))
        mech = BranchingMechanism(a=-0.5, gamma2=2.0, mu=CompoundPoisson(1.0, Exponential(0.5)),
                                  family='finite_activity')
        config = CBLREConfig(1.0, mech, env, 2.0, 0.01)
        for seed in range(5):
            path = config.sample_environment(seed)
            batch = simulate_batch(config, path, 200, seed=100 + seed, record=True)
            self.assertTrue(np.all(batch.values >= 0.0))
            self.assertTrue(np.all(batch.minimum >= 0.0))
            absorbed = batch.status == STATUS_ABSORBED
            self.assertTrue(np.all(batch.final[absorbed] == 0.0))

    def test_cap_breach_status(self):
        """Test a cap breach sets the numeric explosion status and freezes Z at inf"""
        config = CBLREConfig(1.0, quiet_mech(5.0), LevyTriplet(0.0), 1.0, 0.01, z_max=10.0)
        path = EnvironmentPath.linear(0.0, 1.0, 0.01)
        batch = simulate_batch(config, path, 3, seed=0, record=True)
        self.assertTrue(np.all(batch.status == STATUS_EXPLODED_CAP))
        event = batch.event_time[0]
        # 1.05^n crosses 10 at n = 48
        self.assertAlmostEqual(event, 0.48, places=12)
        after = path.times >= event
        self.assertTrue(np.all(np.isinf(batch.values[after])))
        self.assertTrue(np.all(np.isfinite(batch.values[~after])))

    def test_killing_status(self):
        """Test a jump to infinity sets its own status with the event time of the cell"""
        mech = BranchingMechanism(a=0.0, gamma2=0.0, q=2.0)
        config = CBLREConfig(1.0, mech, LevyTriplet(0.0), 1.0, 0.05)
        path = EnvironmentPath.linear(0.0, 1.0, 0.05)
        batch = simulate_batch(config, path, 500, seed=9, record=True)
        killed = batch.status == STATUS_EXPLODED_JUMP
        self.assertTrue(killed.any())
        self.assertFalse(np.any(batch.status == STATUS_EXPLODED_CAP))
        for j in np.flatnonzero(killed)[:20]:
            event = batch.event_time[j]
            self.assertGreater(event, 0.0)
            self.assertTrue(np.any(np.isclose(path.times, event)))
            self.assertTrue(np.all(np.isinf(batch.values[path.times >= event, j])))
            self.assertTrue(np.all(batch.values[path.times < event, j] == 1.0))
        # P(no kill by t = 1) = e^{-q}
        survivors = np.mean(~killed)
        self.assertLess(abs(survivors - math.exp(-2.0)), 4 * math.sqrt(math.exp(-2.0) / 500) + 0.01)

    def test_small_jump_coefficients(self):
        """Test the variance carried by each small-jump mode"""
        mech = stable(1.5, 1.0)
        drift_only = CBLREConfig(1.0, mech, LevyTriplet(0.0), 1.0, 0.01, jump_cut=0.05).coefficients
        gaussian = CBLREConfig(1.0, mech, LevyTriplet(0.0), 1.0, 0.01, jump_cut=0.05,
                               small_jump_mode='gaussian-correction').coefficients
        small = mech.mu.second_moment(0.0, 0.05)
        self.assertGreater(small, 0.0)
        self.assertEqual(drift_only.variance, 0.0)
        self.assertAlmostEqual(drift_only.small_jump_bias, small, places=12)
        self.assertAlmostEqual(gaussian.variance, small, places=12)
        self.assertEqual(gaussian.linear, drift_only.linear)
        self.assertAlmostEqual(drift_only.branch_rate, mech.mu.mass(0.05, math.inf, closed=(True, False)), places=10)

    def test_gaussian_correction_variance(self):
        """Test Var Z_1 = int z^2 mu(dz) t when every offspring jump is below the cut"""
        mech = BranchingMechanism(a=0.0, gamma2=0.0, mu=CompoundPoisson(50.0, Constant(0.01)),
                                  family='finite_activity')
        path = EnvironmentPath.linear(0.0, 1.0, 0.01)
        drift_only = CBLREConfig(1.0, mech, LevyTriplet(0.0), 1.0, 0.01, jump_cut=0.05)
        batch = simulate_batch(drift_only, path, 100, seed=2)
        np.testing.assert_allclose(batch.final, 1.0, rtol=1e-12)
        gaussian = CBLREConfig(1.0, mech, LevyTriplet(0.0), 1.0, 0.01, jump_cut=0.05,
                               small_jump_mode='gaussian-correction')
        batch = simulate_batch(gaussian, path, 20000, seed=2)
        se = batch.final.std(ddof=1) / math.sqrt(batch.final.size)
        self.assertLess(abs(batch.final.mean() - 1.0), 4 * se)
        self.assertLess(abs(batch.final.var(ddof=1) / 0.005 - 1.0), 0.05)

class TestEnsemble(unittest.TestCase):
    """Test environment ensembles and reducers"""

    def setUp(self):
        self.config = CBLREConfig(1.0, feller(0.2, 0.5), LevyTriplet(0.1, 0.3), 2.0, 0.05)

    def test_threads_do_not_change_results(self):
        """Test that the thread count leaves the pooled estimate unchanged"""
        a = simulate_ensemble(self.config, 8, 20, 99, FinalValue(), threads=1)
        b = simulate_ensemble(self.config, 8, 20, SeedStream(99), FinalValue(), threads=4)
        self.assertEqual(a.pooled.mean, b.pooled.mean)
        self.assertEqual(a.pooled.se, b.pooled.se)

    def test_single_replicate_per_environment(self):
        """Test one replicate per environment pools all draws flat"""
        result = simulate_ensemble(self.config, 50, 1, 4, Survival(), keep_paths=True)
        self.assertEqual(result.per_env, [])
        self.assertEqual(result.pooled.n, 50)
        self.assertEqual(len(result.env_paths), 50)

    def test_rejects_empty_ensemble(self):
        """Test that n_env and n_branch must be positive"""
        with self.assertRaises(ValidationError):
            simulate_ensemble(self.config, 0, 5, 1, FinalValue())

    def test_reducers(self):
        """Test survival and Laplace reducers on a hand-made batch"""
        batch = BatchResult(final=np.array([0.0, 2.0, np.inf]), status=np.zeros(3, dtype=int),
                            event_time=np.full(3, np.nan), minimum=np.zeros(3))
        path = EnvironmentPath.linear(1.0, 1.0)
        np.testing.assert_array_equal(Survival(1e-6)(batch, path), [0.0, 1.0, 1.0])
        laplace = LaplaceFunctional(1.0)(batch, path)
        self.assertEqual(laplace[0], 1.0)
        self.assertAlmostEqual(laplace[1], math.exp(-2.0 / math.e), places=14)
        self.assertEqual(laplace[2], 0.0)


if __name__ == '__main__':
    unittest.main()
