import os
import shutil
import tempfile
import unittest

import numpy as np

from src.PyFirstHit.evaluation.metrics import Histogram, parse_binning
from src.PyFirstHit.evaluation.svgPlotter import render_histogram_svg, render_scatter_svg, save_svg
from src.PyFirstHit.utils.exceptions import PreconditionError


class TestSvgPlotter(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.hist = Histogram(parse_binning("circle:12"), np.arange(12))

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_histogram(self):
        svg = render_histogram_svg(self.hist, title="exit <angle> & more", reference=np.full(12, 1 / 12),
                                   notes=["tv 0.1"])
        self.assertIn('viewBox="0 0 800 600"', svg)
        self.assertEqual(svg.count("<rect"), 12 + 1)
        self.assertIn("exit &lt;angle&gt; &amp; more", svg)
        self.assertIn("<polyline", svg)
        self.assertIn("n = 66", svg)
        self.assertIn("tv 0.1", svg)

    def test_histogram_without_reference(self):
        svg = render_histogram_svg(Histogram(parse_binning("boolean:2"), np.array([1, 0, 0, 3])))
        self.assertNotIn("<polyline", svg)
        self.assertEqual(svg.count("<rect"), 4 + 1)

    def test_scatter(self):
        points = np.random.default_rng(0).standard_normal((30, 3))
        svg = render_scatter_svg(points, title="exits", columns=(0, 2))
        self.assertEqual(svg.count("<circle"), 30)
        self.assertIn("x3 [", svg)
        self.assertIn('viewBox="0 0 800 600"', svg)
        with self.assertRaises(PreconditionError):
            render_scatter_svg(np.zeros((0, 2)))

    def test_save(self):
        path = os.path.join(self.test_dir, "plots", "hist.svg")
        svg = render_histogram_svg(self.hist)
        save_svg(path, svg)
        with open(path, "r", encoding="utf-8") as fp:
            self.assertEqual(fp.read(), svg)


if __name__ == '__main__':
    unittest.main()
