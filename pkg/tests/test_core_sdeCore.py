import argparse
import math
import os
import unittest
from dataclasses import replace
from unittest.mock import patch

import numpy as np

from src.PyFirstHit.core.hitSchemes import parse_scheme
from src.PyFirstHit.core.sdeCore import (BaselineDrift, BlockedNormals, DriftEvaluator, FunctionDrift, RngStream,
                                         SampleBatch, Schedule, SimConfig, Trajectory, ZeroDrift, build_time_grid,
                                         make_streams, simulate, simulate_batch, simulate_exits, step)
from src.PyFirstHit.utils.exceptions import (ConfigurationError, PreconditionError, SimulationError,
                                             SingularInputError)

SLOW = bool(os.environ.get("FIRSTHIT_SLOW"))


class TestSchedule(unittest.TestCase):

    def test_parse_forms(self):
        self.assertEqual(Schedule.parse("0.01"), Schedule("const", (0.01,)))
        self.assertEqual(Schedule.parse(2), Schedule("const", (2.0,)))
        np.testing.assert_allclose(Schedule.parse("linear:1,0").values_for(5), [1.0, 0.75, 0.5, 0.25, 0.0])
        np.testing.assert_array_equal(Schedule.parse("piecewise:3=0.5,0=1.0").values_for(5),
                                      [1.0, 1.0, 1.0, 0.5, 0.5])

    def test_descriptor_round_trip(self):
        for text in ("const:0.001", "linear:1.0,0.1", "piecewise:0=1.0,10=0.5"):
            schedule = Schedule.parse(text)
            self.assertEqual(Schedule.parse(schedule.descriptor()), schedule)

    def test_malformed(self):
        for text in ("cosine:1", "linear:1", "piecewise:2=1.0", "const:abc"):
            with self.assertRaises(ConfigurationError):
                Schedule.parse(text)


class TestSimConfig(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(ConfigurationError):
            SimConfig(dt="const:0")
        with self.assertRaises(ConfigurationError):
            SimConfig(sigma="const:-1")
        with self.assertRaises(ConfigurationError):
            SimConfig(max_steps=0)
        with self.assertRaises(ConfigurationError):
            SimConfig(nonhit_policy="retry")
        self.assertEqual(SimConfig(sigma="const:0").sigma.values, (0.0,))

    def test_from_namespace(self):
        namespace = argparse.Namespace(dt="const:0.01", seed=5, workers=2, unrelated="x")
        cfg = SimConfig.from_namespace(namespace, seed=9, max_steps=None)
        self.assertEqual(cfg.dt.values, (0.01,))
        self.assertEqual(cfg.seed, 9)
        self.assertEqual(cfg.workers, 2)
        self.assertEqual(cfg.max_steps, 100000)
        with self.assertRaises(ConfigurationError):
            SimConfig.from_namespace(argparse.Namespace(max_steps="many"))

    def test_time_grid_with_cap(self):
        grid = build_time_grid(SimConfig(dt="const:0.3", max_steps=10), 1.0)
        np.testing.assert_allclose(grid.times, [0.0, 0.3, 0.6, 0.9, 1.0])
        self.assertAlmostEqual(grid.dts[-1], 0.1)
        self.assertEqual(grid.horizon, 1.0)

    def test_remaining_variance(self):
        grid = build_time_grid(SimConfig(dt="const:0.5", sigma="piecewise:0=1.0,1=2.0", max_steps=3))
        np.testing.assert_allclose(grid.remaining_variance, [4.5, 4.0, 2.0])


class TestRandomStreams(unittest.TestCase):

    def test_same_key_same_numbers(self):
        a = RngStream(42, 7).generator().standard_normal(5)
        b = RngStream(42, 7).generator().standard_normal(5)
        np.testing.assert_array_equal(a, b)
        c = RngStream(42, 7, channel=1).generator().standard_normal(5)
        d = RngStream(42, 7, attempt=1).generator().standard_normal(5)
        self.assertFalse(np.array_equal(a, c))
        self.assertFalse(np.array_equal(a, d))

    def test_negative_seed_masked(self):
        RngStream(-1, 0).generator().standard_normal(1)

    def test_blocked_normals_independent_of_batch_layout(self):
        streams = make_streams(3, [0, 1, 2])
        together = BlockedNormals(streams, (2,), block=4)
        alone = BlockedNormals(streams[1:2], (2,), block=4)
        first = [together.draw(np.array([0, 1, 2]))[1] for _ in range(3)]
        for _ in range(3):
            together.draw(np.array([1]))
        second = [together.draw(np.array([1, 2]))[0] for _ in range(2)]
        expected = [alone.draw(np.array([0]))[0] for _ in range(8)]
        np.testing.assert_array_equal(np.array(first + second), np.array(expected[:3] + expected[6:8]))


class TestStep(unittest.TestCase):

    def setUp(self):
        self.scheme = parse_scheme("fixedtime:d=1,T=1.0")

    def test_drift_clamp(self):
        cfg = SimConfig(dt="const:0.001", sigma="const:0", max_steps=1000)
        out = step(np.array([0.0]), 0.0, FunctionDrift(lambda z, t: np.array([1000.0])), self.scheme, cfg,
                   RngStream(0, 0))
        np.testing.assert_allclose(out, [0.5])

    def test_noise_only(self):
        cfg = SimConfig(dt="const:0.01", max_steps=100)
        out = step(np.array([0.0]), 0.0, ZeroDrift(), self.scheme, cfg, RngStream(0, 0))
        xi = RngStream(0, 0).generator().standard_normal((cfg.noise_block, 1))[0]
        np.testing.assert_allclose(out, 0.1 * xi)
        first = simulate(self.scheme, ZeroDrift(), np.array([0.0]), cfg, stream_id=0)
        np.testing.assert_allclose(first.states[1], out)

    def test_absorbed_coordinates_stay(self):
        scheme = parse_scheme("boolean:d=2")
        cfg = SimConfig(dt="const:0.01")
        out = step(np.array([0.02, 0.5]), 0.0, ZeroDrift(), scheme, cfg, RngStream(0, 0))
        self.assertEqual(out[0], 0.02)
        self.assertNotEqual(out[1], 0.5)

    def test_absorbed_state_rejected(self):
        with self.assertRaises(PreconditionError):
            step(np.array([1.0, 0.0]), 0.0, ZeroDrift(), parse_scheme("sphere:d=2"), SimConfig(), RngStream(0, 0))

    def test_non_finite_drift(self):
        with self.assertRaises(SimulationError):
            step(np.array([0.0]), 0.0, FunctionDrift(lambda z, t: np.array([np.nan])), self.scheme,
                 SimConfig(), RngStream(0, 0))


class TestSimulate(unittest.TestCase):

    def test_fixed_time_runs_to_T(self):
        scheme = parse_scheme("fixedtime:d=2,T=1.0")
        traj = simulate(scheme, ZeroDrift(), np.zeros(2), SimConfig(dt="const:0.01", max_steps=1000))
        self.assertEqual(len(traj), 101)
        self.assertTrue(traj.hit)
        self.assertEqual(traj.tau, 1.0)
        self.assertEqual(traj.hit_index, 100)

    def test_deterministic_per_seed(self):
        scheme = parse_scheme("sphere:d=2")
        cfg = SimConfig(dt="const:0.001", seed=11)
        a = simulate(scheme, ZeroDrift(), np.zeros(2), cfg)
        b = simulate(scheme, ZeroDrift(), np.zeros(2), cfg)
        c = simulate(scheme, ZeroDrift(), np.zeros(2), cfg.with_seed(12))
        np.testing.assert_array_equal(a.states, b.states)
        self.assertEqual(a.tau, b.tau)
        self.assertFalse(np.array_equal(a.exit_point, c.exit_point))
        self.assertAlmostEqual(float(np.linalg.norm(a.exit_point)), 1.0)

    def test_batch_rows_match_single_runs(self):
        scheme = parse_scheme("sphere:d=2")
        cfg = SimConfig(dt="const:0.001", seed=4)
        batch = simulate_batch(scheme, ZeroDrift(), np.zeros(2), cfg, 5, first_stream=10)
        single = simulate(scheme, ZeroDrift(), np.zeros(2), cfg, stream_id=12)
        np.testing.assert_array_equal(batch[2].states, single.states)
        self.assertEqual(batch[2].stream_id, 12)

    @patch("src.PyFirstHit.core.sdeCore._CHUNK_FLOATS", 1024)
    def test_worker_count_does_not_change_results(self):
        scheme = parse_scheme("sphere:d=2")
        drift = FunctionDrift(lambda z, t: -0.5 * z, vectorized=True)
        cfg = SimConfig(dt="const:0.001", seed=8)
        one = simulate_exits(scheme, drift, np.zeros(2), cfg, 9)
        four = simulate_exits(scheme, drift, np.zeros(2), replace(cfg, workers=4), 9)
        np.testing.assert_array_equal(one.points, four.points)
        np.testing.assert_array_equal(one.taus, four.taus)

    def test_invalid_arguments(self):
        scheme = parse_scheme("sphere:d=2")
        with self.assertRaises(PreconditionError):
            simulate_batch(scheme, ZeroDrift(), np.zeros(2), SimConfig(), 0)
        with self.assertRaises(PreconditionError):
            simulate(scheme, ZeroDrift(), np.array([1.0, 0.0]), SimConfig())
        with self.assertRaises(PreconditionError):
            simulate(scheme, ZeroDrift(), np.zeros(3), SimConfig())

    def test_nonhit_policies(self):
        scheme = parse_scheme("sphere:d=2")
        cfg = SimConfig(dt="const:0.001", max_steps=5)
        discarded = simulate(scheme, ZeroDrift(), np.zeros(2), cfg)
        self.assertFalse(discarded.hit)
        self.assertTrue(math.isnan(discarded.tau))
        self.assertEqual(discarded.hit_index, -1)
        with self.assertRaises(PreconditionError):
            _ = discarded.exit_point
        projected = simulate(scheme, ZeroDrift(), np.zeros(2), replace(cfg, nonhit_policy="project"))
        self.assertTrue(projected.hit)
        self.assertAlmostEqual(projected.tau, 0.005)
        self.assertAlmostEqual(float(np.linalg.norm(projected.exit_point)), 1.0)

    def test_truncation_counted(self):
        batch = simulate_exits(parse_scheme("sphere:d=2"), ZeroDrift(), np.zeros(2),
                               SimConfig(dt="const:0.001", max_steps=5), 4)
        self.assertEqual(len(batch), 0)
        self.assertEqual(batch.truncated_count, 4)
        self.assertEqual(batch.truncation_rate, 1.0)

    def test_non_finite_drift_reports_stream(self):
        def drift(z, t):
            return np.full(z.shape, np.inf) if t > 0.0 else np.zeros(z.shape)

        with self.assertRaises(SimulationError) as ctx:
            simulate_batch(parse_scheme("sphere:d=2"), FunctionDrift(drift, vectorized=True), np.zeros(2),
                           SimConfig(dt="const:0.001"), 3, first_stream=20)
        self.assertEqual(ctx.exception.index, 20)

    def test_categorical_baseline_hits_one_hot(self):
        scheme = parse_scheme("categorical:d=3,m=2")
        batch = simulate_exits(scheme, BaselineDrift(scheme), scheme.z0_array, SimConfig(dt="const:0.001", seed=2), 50)
        self.assertGreater(len(batch), 0)
        np.testing.assert_array_equal(batch.points.reshape(-1, 2, 3).sum(axis=-1), np.ones((len(batch), 2)))

    def test_categorical_coarse_steps_overshoot_slots(self):
        scheme = parse_scheme("categorical:d=2,m=3")
        trajectories = simulate_batch(scheme, BaselineDrift(scheme), scheme.z0_array,
                                      SimConfig(dt="const:0.2", seed=0), 500)
        self.assertEqual(len(trajectories), 500)
        batch = simulate_exits(scheme, BaselineDrift(scheme), scheme.z0_array, SimConfig(dt="const:0.02", seed=0),
                               2000)
        self.assertEqual(len(batch) + batch.truncated_count, 2000)
        np.testing.assert_array_equal(batch.points.reshape(-1, 3, 2).sum(axis=-1), np.ones((len(batch), 3)))

    def test_singular_drift_reports_failing_run(self):
        class FailsOnRun3(DriftEvaluator):
            def evaluate(self, z, t, k, rows):
                if k == 2 and 3 in rows:
                    raise SingularInputError("singular state")
                return np.zeros_like(z)

        cfg = SimConfig(dt="const:0.001", seed=4)
        with self.assertRaises(SimulationError) as ctx:
            simulate_batch(parse_scheme("sphere:d=2"), FailsOnRun3(), np.zeros(2), cfg, 6)
        self.assertEqual(ctx.exception.index, 3)
        self.assertAlmostEqual(ctx.exception.t, 0.002)
        self.assertEqual(ctx.exception.state.shape, (2,))
        self.assertIsInstance(ctx.exception.__cause__, SingularInputError)

    def test_boolean_exits_are_martingale(self):
        scheme = parse_scheme("boolean:d=2,z0=0.3,0.8")
        batch = simulate_exits(scheme, ZeroDrift(), scheme.z0_array, SimConfig(dt="const:0.001", seed=1), 2000)
        np.testing.assert_allclose(batch.points.mean(axis=0), [0.25 / 0.9, 0.75 / 0.9], atol=0.04)

    @unittest.skipUnless(SLOW, "set FIRSTHIT_SLOW=1 to run statistical tests")
    def test_sphere_mean_hitting_time(self):
        batch = simulate_exits(parse_scheme("sphere:d=2"), ZeroDrift(), np.zeros(2),
                               SimConfig(dt="const:0.0001", seed=3), 4000)
        self.assertAlmostEqual(float(batch.taus.mean()), 0.99 ** 2 / 2.0, delta=0.02)


class TestResults(unittest.TestCase):

    def test_sample_batch_shapes(self):
        batch = SampleBatch.from_points([[1.0, 0.0], [0.0, 1.0]])
        self.assertEqual(len(batch), 2)
        self.assertEqual(batch.dim, 2)
        self.assertTrue(np.all(np.isnan(batch.taus)))
        with self.assertRaises(PreconditionError):
            SampleBatch(np.zeros((2, 2)), np.zeros(3))

    def test_trajectory_exit_point(self):
        traj = Trajectory(np.array([0.0, 0.1]), np.array([[0.0, 0.0], [1.0, 0.0]]), True, 1, 0.1)
        np.testing.assert_array_equal(traj.exit_point, [1.0, 0.0])
        self.assertEqual(traj.dim, 2)


if __name__ == '__main__':
    unittest.main()
