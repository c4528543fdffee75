import os
import unittest
from dataclasses import replace

import numpy as np

from src.PyFirstHit.core.hitSchemes import parse_scheme
from src.PyFirstHit.core.sdeCore import DriftEvaluator, SampleBatch, SimConfig, ZeroDrift
from src.PyFirstHit.evaluation.convergence import ConvergenceResult, convergence_experiment, parse_projection
from src.PyFirstHit.utils.exceptions import ConfigurationError, PreconditionError, SimulationError

SLOW = bool(os.environ.get("FIRSTHIT_SLOW"))


class TestProjection(unittest.TestCase):

    def test_parse(self):
        points = np.array([[0.0, 1.0, 5.0], [-1.0, 0.0, 6.0]])
        np.testing.assert_allclose(parse_projection("angle")(points), [np.pi / 2, np.pi])
        np.testing.assert_array_equal(parse_projection("coord:3")(points), [5.0, 6.0])
        np.testing.assert_array_equal(parse_projection(" COORD:1 ")(points), [0.0, -1.0])
        for text in ("coord:0", "coord:x", "radius"):
            with self.assertRaises(ConfigurationError):
                parse_projection(text)


class TestConvergenceExperiment(unittest.TestCase):

    def setUp(self):
        self.scheme = parse_scheme("sphere:d=2,z0=0.3,0")
        self.cfg = SimConfig(seed=11, workers=2)

    def test_result_structure(self):
        result = convergence_experiment(self.scheme, ZeroDrift(), parse_projection("angle"), [0.02, 0.04],
                                        0.005, 200, self.cfg, horizon=5.0)
        np.testing.assert_array_equal(result.deltas, [0.02, 0.04])
        self.assertEqual(result.errors.shape, (2,))
        self.assertTrue(np.all(result.errors > 0.0))
        self.assertTrue(np.isfinite(result.slope))
        self.assertEqual([row[0] for row in result.rows()], [0.02, 0.04])
        self.assertTrue(all(row[2] == 200 for row in result.rows()))
        self.assertLessEqual(len(result.reference), 200)

    def test_each_level_binds_its_own_drift(self):
        class GridBoundDrift(DriftEvaluator):
            def __init__(self):
                self.grid = None

            def bind(self, streams, grid):
                self.grid = grid

            def evaluate(self, z, t, k, rows):
                if self.grid.times[k] != t:
                    raise SimulationError("drift bound to another level's grid")
                return np.zeros_like(z)

        drift = GridBoundDrift()
        result = convergence_experiment(self.scheme, drift, parse_projection("angle"), [0.02, 0.04, 0.08],
                                        0.005, 100, replace(self.cfg, workers=4), horizon=5.0)
        self.assertEqual(result.errors.shape, (3,))
        self.assertIsNone(drift.grid)

    def test_reproducible(self):
        args = (self.scheme, ZeroDrift(), parse_projection("coord:1"), [0.02, 0.04], 0.01, 100, self.cfg)
        a = convergence_experiment(*args, horizon=5.0)
        b = convergence_experiment(*args, horizon=5.0)
        np.testing.assert_array_equal(a.errors, b.errors)

    def test_preconditions(self):
        projection = parse_projection("angle")
        with self.assertRaises(PreconditionError):
            convergence_experiment(self.scheme, ZeroDrift(), projection, [0.02], 0.005, 10, self.cfg, 5.0)
        with self.assertRaises(PreconditionError):
            convergence_experiment(self.scheme, ZeroDrift(), projection, [0.02, 0.04], 0.02, 10, self.cfg, 5.0)
        with self.assertRaises(PreconditionError):
            convergence_experiment(self.scheme, ZeroDrift(), projection, [0.02, 0.04], 0.005, 0, self.cfg, 5.0)

    def test_short_horizon_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            convergence_experiment(self.scheme, ZeroDrift(), parse_projection("angle"), [0.002, 0.004],
                                   0.001, 50, self.cfg, horizon=0.01)

    def test_inversions(self):
        result = ConvergenceResult(np.array([0.1, 0.2, 0.4]), np.array([0.3, 0.2, 0.5]), 10, 1.0,
                                   SampleBatch.from_points([[1.0, 0.0]]))
        self.assertEqual(result.inversions, 1)

    @unittest.skipUnless(SLOW, "set FIRSTHIT_SLOW=1 to run statistical tests")
    def test_slope_near_one(self):
        deltas = [d * 1e-4 for d in (64, 32, 16, 8, 4)]
        result = convergence_experiment(self.scheme, ZeroDrift(), parse_projection("angle"), deltas, 1e-4,
                                        100000, SimConfig(seed=1, workers=os.cpu_count() or 1), horizon=20.0)
        self.assertGreaterEqual(result.slope, 0.7)
        self.assertLessEqual(result.slope, 1.3)


if __name__ == '__main__':
    unittest.main()
