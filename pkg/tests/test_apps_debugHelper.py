import time
import unittest
from unittest.mock import patch

from src.PyFirstHit.apps.debugHelper import TimeTracker


class TestTimeTracker(unittest.TestCase):

    def setUp(self):
        # Create a fresh TimeTracker instance before each test
        self.tracker = TimeTracker(max_count=3)

    def test_time_code_block(self):
        with self.tracker.TimeCodeBlock("epoch"):
            time.sleep(0.05)

        self.assertEqual(len(self.tracker.times["epoch"]), 1)
        self.assertGreater(self.tracker.times["epoch"][0], 0.04)
        self.assertGreater(self.tracker.LastMilliseconds("epoch"), 40.0)

    def test_block_recorded_on_exception(self):
        with self.assertRaises(RuntimeError):
            with self.tracker.TimeCodeBlock("failing"):
                raise RuntimeError("boom")
        self.assertEqual(len(self.tracker.times["failing"]), 1)

    def test_max_count(self):
        for _ in range(5):
            with self.tracker.TimeCodeBlock("epoch"):
                pass
        self.assertEqual(len(self.tracker.times["epoch"]), 3)

    def test_last_milliseconds_without_data(self):
        self.assertEqual(self.tracker.LastMilliseconds("non_existent_label"), 0.0)

    def test_get_start_time(self):
        start_time = self.tracker.GetStartTime()
        self.assertIsInstance(start_time, float)
        time.sleep(0.01)
        self.assertGreater(self.tracker.GetStartTime(), start_time)

    @patch("loguru.logger.debug")  # Mocking the logger to prevent actual logging output
    def test_log_time_report(self, mock_logger):
        with self.tracker.TimeCodeBlock("epoch"):
            pass
        self.tracker.LogTimeReport(title="Training")
        mock_logger.assert_called()

    @patch("loguru.logger.debug")
    def test_log_time_report_no_times(self, mock_logger):
        TimeTracker(max_count=3).LogTimeReport(title="Empty Report")
        mock_logger.assert_called_with("No execution times to report.")


# Run the tests
if __name__ == "__main__":
    unittest.main()
