import os
import shutil
import tempfile
import unittest

import numpy as np

from src.PyFirstHit.datasets.generators import (VmfComponent, bernoulli_product, categorical_product,
                                                ingest_latlon_csv, parse_components, sample_vmf,
                                                sbm_edge_probabilities, tiny_sbm, vmf_mixture)
from src.PyFirstHit.evaluation.metrics import analytic_cdf, exit_angle, ks_statistic
from src.PyFirstHit.utils.exceptions import ConfigurationError, ParseError, PreconditionError


class TestVmf(unittest.TestCase):

    def test_zero_concentration_is_uniform_on_circle(self):
        batch = vmf_mixture(2, [((1.0, 0.0), 0.0, 1.0)], 50000, seed=0)
        self.assertLess(ks_statistic(exit_angle(batch), analytic_cdf("uniform-angle")), 0.02)

    def test_mean_resultant_length_on_sphere(self):
        batch = vmf_mixture(3, [VmfComponent((0.0, 0.0, 1.0), 10.0, 1.0)], 50000, seed=1)
        resultant = np.linalg.norm(batch.points.mean(axis=0))
        self.assertAlmostEqual(resultant, 1.0 / np.tanh(10.0) - 0.1, delta=0.01)
        np.testing.assert_allclose(np.linalg.norm(batch.points, axis=1), np.ones(50000), atol=1e-12)

    def test_circle_concentration(self):
        points = sample_vmf([0.0, 1.0], 20.0, 20000, np.random.default_rng(2))
        np.testing.assert_allclose(np.linalg.norm(points, axis=1), np.ones(20000), atol=1e-12)
        self.assertGreater(points[:, 1].mean(), 0.95)

    def test_mixture_deterministic(self):
        components = [((1.0, 0.0), 5.0, 0.5), ((-1.0, 0.0), 5.0, 0.5)]
        a = vmf_mixture(2, components, 100, seed=3)
        b = vmf_mixture(2, components, 100, seed=3)
        np.testing.assert_array_equal(a.points, b.points)
        self.assertTrue(np.any(a.points[:, 0] > 0.0) and np.any(a.points[:, 0] < 0.0))

    def test_invalid(self):
        with self.assertRaises(PreconditionError):
            sample_vmf([1.0, 0.0], -1.0, 5, np.random.default_rng(0))
        with self.assertRaises(PreconditionError):
            sample_vmf([1.0, 0.0, 0.0, 0.0], 1.0, 5, np.random.default_rng(0))
        with self.assertRaises(PreconditionError):
            vmf_mixture(2, [((1.0, 0.0), 1.0, 0.6)], 5, seed=0)
        with self.assertRaises(PreconditionError):
            vmf_mixture(2, [((0.0, 0.0, 1.0), 1.0, 1.0)], 5, seed=0)
        with self.assertRaises(PreconditionError):
            vmf_mixture(2, [((2.0, 0.0), 1.0, 1.0)], 5, seed=0)

    def test_parse_components(self):
        parts = parse_components("kappa=5,mu=2,0;kappa=1,mu=0,-1,w=0.25")
        self.assertEqual(parts[0], VmfComponent((1.0, 0.0), 5.0, 0.5))
        self.assertEqual(parts[1].weight, 0.25)
        with self.assertRaises(ConfigurationError):
            parse_components("kappa=5")


class TestLatLon(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.path = os.path.join(self.test_dir, "events.csv")

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def write(self, text):
        with open(self.path, "w", encoding="utf-8") as fp:
            fp.write(text)

    def test_mapping(self):
        self.write("lat,lon\n0,0\n90,0\n0,90\n")
        batch = ingest_latlon_csv(self.path)
        np.testing.assert_allclose(batch.points, np.eye(3)[[0, 2, 1]], atol=1e-15)

    def test_out_of_range_row(self):
        self.write("lat,lon\n10,20\n95,0\n")
        with self.assertRaises(ParseError) as ctx:
            ingest_latlon_csv(self.path)
        self.assertEqual(ctx.exception.line, 3)

    def test_bad_header_and_row(self):
        self.write("x,y\n0,0\n")
        with self.assertRaises(ParseError):
            ingest_latlon_csv(self.path)
        self.write("lat,lon\n0,east\n")
        with self.assertRaises(ParseError) as ctx:
            ingest_latlon_csv(self.path)
        self.assertEqual(ctx.exception.line, 2)


class TestDiscreteGenerators(unittest.TestCase):

    def test_bernoulli_product(self):
        np.testing.assert_array_equal(bernoulli_product([0.0, 0.0], 20, seed=0).points, np.zeros((20, 2)))
        batch = bernoulli_product([0.2, 0.8], 50000, seed=1)
        se = np.sqrt(0.16 / 50000)
        np.testing.assert_allclose(batch.points.mean(axis=0), [0.2, 0.8], atol=4 * se)
        np.testing.assert_array_equal(batch.points, bernoulli_product([0.2, 0.8], 50000, seed=1).points)
        with self.assertRaises(PreconditionError):
            bernoulli_product([1.5], 5, seed=0)
        with self.assertRaises(PreconditionError):
            bernoulli_product([0.5], 0, seed=0)

    def test_tiny_sbm(self):
        batch = tiny_sbm(4, 1.0, 0.0, 3, seed=0)
        np.testing.assert_array_equal(batch.points, np.tile([1.0, 0.0, 0.0, 0.0, 0.0, 1.0], (3, 1)))
        np.testing.assert_array_equal(tiny_sbm(4, 0.3, 0.3, 50, seed=2).points,
                                      bernoulli_product(np.full(6, 0.3), 50, seed=2).points)
        for n_nodes in (3, 10):
            with self.assertRaises(PreconditionError):
                sbm_edge_probabilities(n_nodes, 0.9, 0.1)

    def test_sbm_within_edge_frequency(self):
        batch = tiny_sbm(4, 0.9, 0.1, 50000, seed=4)
        se = np.sqrt(0.09 / 50000)
        self.assertAlmostEqual(batch.points[:, 0].mean(), 0.9, delta=4 * se)
        self.assertAlmostEqual(batch.points[:, 1].mean(), 0.1, delta=4 * se)

    def test_categorical_product(self):
        batch = categorical_product([1.0, 0.0, 0.0], 1, 10, seed=0)
        np.testing.assert_array_equal(batch.points, np.tile([1.0, 0.0, 0.0], (10, 1)))
        batch = categorical_product([0.2, 0.3, 0.5], 2, 50000, seed=5)
        self.assertEqual(batch.dim, 6)
        np.testing.assert_array_equal(batch.points.reshape(-1, 2, 3).sum(axis=2), np.ones((50000, 2)))
        freqs = batch.points[:, :3].mean(axis=0)
        se = np.sqrt(0.25 / 50000)
        np.testing.assert_allclose(freqs, [0.2, 0.3, 0.5], atol=4 * se)
        joint = np.mean(batch.points[:, 2] * batch.points[:, 5])
        self.assertAlmostEqual(joint, 0.25, delta=4 * np.sqrt(0.25 * 0.75 / 50000))

    def test_categorical_invalid_simplex(self):
        with self.assertRaises(PreconditionError):
            categorical_product([0.5, 0.6], 1, 5, seed=0)
        with self.assertRaises(PreconditionError):
            categorical_product([[0.5, 0.5], [1.0, 0.0]], 3, 5, seed=0)


if __name__ == '__main__':
    unittest.main()
