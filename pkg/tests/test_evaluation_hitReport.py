import math
import unittest

import numpy as np

from src.PyFirstHit.core.sdeCore import SampleBatch
from src.PyFirstHit.evaluation.hitReport import (REPORT_HEADER, ReportRow, cauchy_scale_report, hitting_time_report,
                                                 quantile_scale, summary_rows)
from src.PyFirstHit.utils.exceptions import PreconditionError


class TestHittingTimeReport(unittest.TestCase):

    def test_fixed_time_is_a_point_mass(self):
        batch = SampleBatch(np.zeros((10, 1)), np.full(10, 2.0))
        hist, summary = hitting_time_report(batch, bins=8)
        self.assertEqual(summary["median"], 2.0)
        self.assertEqual(summary["p95"], 2.0)
        self.assertEqual(summary["mean"], 2.0)
        self.assertEqual(summary["truncation_rate"], 0.0)
        self.assertEqual(hist.total, 10)
        self.assertEqual(hist.counts[-1], 10)

    def test_all_truncated(self):
        batch = SampleBatch(np.zeros((0, 2)), np.zeros(0), truncated_count=5)
        hist, summary = hitting_time_report(batch)
        self.assertEqual(summary["truncation_rate"], 1.0)
        self.assertTrue(math.isnan(summary["mean"]))
        self.assertEqual(summary["median"], math.inf)
        self.assertEqual(hist.total, 0)

    def test_empty_or_unknown_times(self):
        with self.assertRaises(PreconditionError):
            hitting_time_report(SampleBatch(np.zeros((0, 2)), np.zeros(0)))
        with self.assertRaises(PreconditionError):
            hitting_time_report(SampleBatch.from_points([[1.0, 0.0]]))

    def test_truncated_runs_count_towards_quantiles(self):
        batch = SampleBatch(np.zeros((3, 1)), [1.0, 2.0, 3.0], truncated_count=1)
        _, summary = hitting_time_report(batch, bins=4, horizon=4.0)
        self.assertEqual(summary["median"], 2.0)
        self.assertEqual(summary["p95"], math.inf)
        self.assertEqual(summary["mean"], 2.0)
        self.assertEqual(summary["truncation_rate"], 0.25)

    def test_passage_time_median(self):
        # first passage over a gap of 1 is gap² / Z² for standard normal Z
        z = np.random.default_rng(0).standard_normal(20000)
        taus = 1.0 / z ** 2
        kept = taus <= 10.0
        batch = SampleBatch(np.zeros((int(kept.sum()), 2)), taus[kept], int((~kept).sum()))
        _, summary = hitting_time_report(batch, horizon=10.0)
        self.assertAlmostEqual(summary["median"], 2.198, delta=0.1)
        self.assertAlmostEqual(summary["truncation_rate"], 0.248, delta=0.01)

    def test_summary_rows(self):
        batch = SampleBatch(np.zeros((4, 1)), [0.5, 1.0, 1.5, 2.0], truncated_count=1)
        _, summary = hitting_time_report(batch, bins=5)
        rows = summary_rows(summary, 5)
        self.assertEqual([row.metric for row in rows], ["tau_mean", "tau_median", "tau_p95", "truncation_rate"])
        self.assertEqual(rows[0].n, 4)
        self.assertEqual(rows[1].n, 5)
        self.assertEqual(len(rows[3].as_row()), len(REPORT_HEADER))


class TestCauchyScale(unittest.TestCase):

    def test_quantile_scale(self):
        values = np.random.default_rng(1).standard_cauchy(40000) * 2.0
        self.assertAlmostEqual(quantile_scale(values), 2.0, delta=0.1)

    def test_adopts_gap(self):
        rng = np.random.default_rng(2)
        exits = np.column_stack([rng.standard_cauchy(8000) + 0.5, np.ones(8000)])
        fitted, adopted, rows = cauchy_scale_report(exits, [0.5], gap=1.0)
        self.assertAlmostEqual(fitted, 1.0, delta=0.08)
        self.assertEqual(adopted, 1.0)
        self.assertEqual(rows[3], ReportRow("cauchy_scale_adopted", 1.0, 8000, 0, "gap"))
        self.assertAlmostEqual(rows[4].value, 0.5, delta=0.05)

    def test_candidates_scale_with_noise_ratio(self):
        rng = np.random.default_rng(3)
        exits = np.column_stack([rng.standard_cauchy(8000) * 0.5, np.ones(8000)])
        _, adopted, rows = cauchy_scale_report(exits, [0.0], gap=2.0, sigma_x=0.5, sigma_y=1.0)
        self.assertEqual(adopted, 0.5)
        self.assertEqual(rows[3].notes, "half_gap")

    def test_needs_enough_exits(self):
        with self.assertRaises(PreconditionError):
            cauchy_scale_report(np.zeros((3, 2)), [0.0], gap=1.0)


if __name__ == '__main__':
    unittest.main()
