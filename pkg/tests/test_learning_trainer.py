import argparse
import os
import shutil
import tempfile
import unittest

import numpy as np

from src.PyFirstHit.core.bridgeSampler import simulate_bridge
from src.PyFirstHit.core.hitSchemes import boolean_bridge_drift, parse_scheme
from src.PyFirstHit.core.sdeCore import SampleBatch, SimConfig
from src.PyFirstHit.datasets.generators import bernoulli_product
from src.PyFirstHit.learning.driftNet import Mlp
from src.PyFirstHit.learning.trainer import (TRAINING_LOG_HEADER, SnapshotItems, TrainConfig,
                                             analytic_optimal_drift, sample_model, snapshot_loss,
                                             snapshot_loss_items, train, write_training_log)
from src.PyFirstHit.utils.exceptions import ConfigurationError, PreconditionError

SLOW = bool(os.environ.get("FIRSTHIT_SLOW"))


class TestTrainConfig(unittest.TestCase):

    def test_per_scheme_defaults(self):
        self.assertEqual(TrainConfig(parse_scheme("sphere:d=2")).learning_rate, 0.05)
        self.assertIsNone(TrainConfig(parse_scheme("boolean:d=2")).output_bound)
        categorical = TrainConfig(parse_scheme("categorical:d=3,m=2"))
        self.assertEqual(categorical.learning_rate, 0.0001)
        self.assertEqual(categorical.output_bound, 5.0)
        with self.assertRaises(ConfigurationError):
            TrainConfig(parse_scheme("sphere:d=2"), epochs=0)

    def test_from_namespace(self):
        namespace = argparse.Namespace(
            scheme="boolean:d=2",
            training=argparse.Namespace(epochs=3, learning_rate=argparse.Namespace(boolean=0.01), output_bound=2.0),
            simulation=argparse.Namespace(dt="const:0.01", seed=4))
        cfg = TrainConfig.from_namespace(namespace)
        self.assertEqual(cfg.epochs, 3)
        self.assertEqual(cfg.learning_rate, 0.01)
        self.assertIsNone(cfg.output_bound)
        self.assertEqual(cfg.seed, 4)
        namespace.training.bound_all_schemes = True
        self.assertEqual(TrainConfig.from_namespace(namespace, epochs=7).output_bound, 2.0)
        self.assertEqual(TrainConfig.from_namespace(namespace, epochs=7).epochs, 7)

    def test_scalar_learning_rate_and_missing_scheme(self):
        namespace = argparse.Namespace(training=argparse.Namespace(learning_rate=0.2))
        self.assertEqual(TrainConfig.from_namespace(namespace, scheme="sphere:d=2").learning_rate, 0.2)
        with self.assertRaises(ConfigurationError):
            TrainConfig.from_namespace(namespace)


class TestSnapshotItems(unittest.TestCase):

    def test_sphere_items(self):
        scheme = parse_scheme("sphere:d=2")
        cfg = SimConfig(dt="const:0.001", seed=1)
        x = np.array([0.0, 1.0])
        bridge = simulate_bridge(scheme, x, cfg, stream_id=0)
        for attempt in range(1, 20):
            if bridge.hit:
                break
            bridge = simulate_bridge(scheme, x, cfg, stream_id=0, attempt=attempt)
        items = snapshot_loss_items(scheme, bridge, x, 6, np.random.default_rng(0), cfg)
        self.assertEqual(len(items), 6)
        self.assertEqual(items.states.shape, (6, 2))
        self.assertTrue(np.all(items.times < bridge.tau))
        np.testing.assert_array_equal(items.masks, np.ones((6, 2)))
        self.assertTrue(np.all(np.isfinite(items.targets)))
        with self.assertRaises(PreconditionError):
            snapshot_loss_items(scheme, bridge, np.array([1.0, 0.0]), 6, np.random.default_rng(0), cfg)

    def test_boolean_items_mask_absorbed_coordinates(self):
        scheme = parse_scheme("boolean:d=3")
        cfg = SimConfig(dt="const:0.001", seed=2)
        x = np.array([1.0, 0.0, 1.0])
        bridge = simulate_bridge(scheme, x, cfg)
        for attempt in range(1, 20):
            if bridge.hit:
                break
            bridge = simulate_bridge(scheme, x, cfg, attempt=attempt)
        items = snapshot_loss_items(scheme, bridge, x, 50, np.random.default_rng(1), cfg)
        for state, t, target, mask in items:
            absorbed = scheme.absorbed_mask(state, t)
            np.testing.assert_array_equal(mask, (~absorbed).astype(float))
            np.testing.assert_allclose(target, boolean_bridge_drift(state, x, absorbed))

    def test_snapshot_loss(self):
        items = SnapshotItems(np.zeros((2, 2)), np.zeros(2), np.array([[1.0, 2.0], [3.0, 4.0]]),
                              np.array([[1.0, 1.0], [1.0, 0.0]]))
        self.assertEqual(snapshot_loss(items, lambda z, t: items.targets), 0.0)
        self.assertAlmostEqual(snapshot_loss(items, lambda z, t: np.zeros((2, 2))), 0.5 * (1 + 4 + 9) / 2)
        with self.assertRaises(PreconditionError):
            snapshot_loss(SnapshotItems(np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)), np.zeros((0, 2))),
                          lambda z, t: z)

    def test_analytic_optimal_drift(self):
        atom = np.array([[1.0, 0.0]])
        z = np.array([[0.3, 0.6]])
        np.testing.assert_allclose(analytic_optimal_drift(atom, np.array([1.0]), np.full(2, 0.5), z),
                                   boolean_bridge_drift(z, atom[0]))
        atoms = np.array([[1.0, 1.0], [0.0, 0.0]])
        out = analytic_optimal_drift(atoms, np.array([0.5, 0.5]), np.full(2, 0.5), np.full((1, 2), 0.5))
        np.testing.assert_allclose(out, np.zeros((1, 2)), atol=1e-12)


class TestTrain(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.scheme = parse_scheme("boolean:d=2")
        self.data = bernoulli_product([0.9, 0.1], 8, seed=0)
        self.cfg = TrainConfig(self.scheme, SimConfig(dt="const:0.01", seed=3), epochs=2, batch_size=4,
                               hidden=8, learning_rate=0.01)

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_log_and_determinism(self):
        net, log = train(self.data, self.cfg)
        self.assertEqual([row[0] for row in log], [0, 1])
        self.assertTrue(all(np.isfinite(row[1]) and 0.0 <= row[2] <= 0.5 and row[3] >= 0.0 for row in log))
        again, log_again = train(self.data, self.cfg)
        for a, b in zip(net.parameters, again.parameters):
            np.testing.assert_array_equal(a, b)
        self.assertEqual([row[1] for row in log], [row[1] for row in log_again])
        path = os.path.join(self.test_dir, "train.csv")
        write_training_log(path, log)
        with open(path, "r", encoding="utf-8") as fp:
            self.assertEqual(fp.readline().strip(), ",".join(TRAINING_LOG_HEADER))

    def test_continues_given_network(self):
        net = Mlp.for_scheme(self.scheme, np.random.default_rng(0), hidden=8)
        trained, _ = train(self.data, self.cfg, net)
        self.assertIs(trained, net)
        self.assertTrue(any(np.any(w != 0.0) for w in net.weights[-1:]))

    def test_rejects_points_off_the_exit_set(self):
        with self.assertRaises(PreconditionError):
            train(SampleBatch.from_points([[0.5, 1.0]]), self.cfg)

    def test_pooled_bridges(self):
        scheme = parse_scheme("sphere:d=2")
        cfg = TrainConfig(scheme, SimConfig(dt="const:0.001", seed=5), epochs=1, batch_size=2, hidden=8,
                          use_pool=True, pool_factor=2)
        data = SampleBatch.from_points([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        _, log = train(data, cfg)
        self.assertEqual(len(log), 1)
        self.assertLessEqual(log[0][2], 0.5)

    def test_sample_model(self):
        net = Mlp.for_scheme(self.scheme, np.random.default_rng(0), hidden=8)
        batch = sample_model(net, self.scheme, SimConfig(dt="const:0.01", seed=1), 20)
        self.assertEqual(batch.total, 20)
        with self.assertRaises(PreconditionError):
            sample_model(net, parse_scheme("boolean:d=2,eps=0.1"), SimConfig(), 5)

    @unittest.skipUnless(SLOW, "set FIRSTHIT_SLOW=1 to run statistical tests")
    def test_learns_bernoulli_marginals(self):
        data = bernoulli_product([0.9, 0.1], 200, seed=1)
        cfg = TrainConfig(self.scheme, SimConfig(dt="const:0.01", seed=3), epochs=100, batch_size=32,
                          hidden=32, learning_rate=0.005)
        net, log = train(data, cfg)
        self.assertLess(np.mean([row[1] for row in log[-10:]]), np.mean([row[1] for row in log[:10]]))
        batch = sample_model(net, self.scheme, SimConfig(dt="const:0.01", seed=9), 500)
        np.testing.assert_allclose(batch.points.mean(axis=0), [0.9, 0.1], atol=0.15)


if __name__ == '__main__':
    unittest.main()
