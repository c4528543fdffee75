# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : debugHelper.py
@Description: 追踪程序运行时间，训练日志的 wall_ms 列与命令行的耗时报告都来自这里
@Version    : v0.1.0
@Dependencies:
    - loguru
@Changelog  :
    - v0.0.0: Initial version.
    - v0.0.1: 重构接口，丰富功能
    - v0.1.0: Millisecond accessors for training logs, trimmed to block timing.
"""
import time
from contextlib import contextmanager
from typing import Dict, Iterator, List

from loguru import logger


class TimeTracker:
    """
    Collect wall-clock durations of labelled code blocks.

    Attributes:
        times (dict): label -> list of durations in seconds (at most max_count, oldest dropped first).
        max_count (int): The maximum number of durations kept per label.
    """

    def __init__(self, max_count: int = 1000) -> None:
        self.times: Dict[str, List[float]] = {}
        self.max_count = max_count

    def GetStartTime(self) -> float:
        return time.perf_counter()

    def _GetExecTime(self, start_time: float, label_name: str = "default_label") -> float:
        """
        Store and return the seconds elapsed since `start_time`.
        """
        elapsed_time = time.perf_counter() - start_time
        self._StoreTime(label_name, elapsed_time)
        return elapsed_time

    def _StoreTime(self, label_name: str, exec_time: float) -> None:
        records = self.times.setdefault(label_name, [])
        records.append(exec_time)
        if len(records) > self.max_count:
            records.pop(0)

    @contextmanager
    def TimeCodeBlock(self, label: str) -> Iterator[None]:
        """
        Context manager to track the execution time of code blocks.

        Usage:
            with tracker.TimeCodeBlock("epoch"):
                run_epoch()
            wall_ms = tracker.LastMilliseconds("epoch")
        """
        start_time = self.GetStartTime()
        try:
            yield
        finally:
            self._GetExecTime(start_time, label_name=label)

    def LastMilliseconds(self, label: str) -> float:
        records = self.times.get(label)
        return records[-1] * 1000.0 if records else 0.0

    def LogTimeReport(self, title: str = "Execution") -> None:
        """
        Log the total and average execution times for all tracked labels at debug level.
        """
        if not self.times:
            logger.debug("No execution times to report.")
            return
        logger.debug(f"~~~~~~~~~~~~~~~~ {title} --> Summary ~~~~~~~~~~~~~~~~")
        logger.debug("           label_name            \t |  Average Time (s)  \t |   Total Time (s) \t | times ")
        for label_name, exec_times in self.times.items():
            total_time = sum(exec_times)
            avg_time = total_time / len(exec_times)
            logger.debug(f"{label_name: <33} \t | {avg_time:.6f}s \t | {total_time:.6f}s \t | {len(exec_times)}")
