# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : hitReport.py
@Description: 命中时间分析：τ 直方图与汇总统计、半空间出口 Cauchy 尺度拟合、报告 CSV 行。
@Version    : v0.1.0
@Dependencies:
    - numpy
    - loguru
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..core.sdeCore import SampleBatch
from ..utils.exceptions import PreconditionError
from .metrics import Binning, Histogram, histogram

REPORT_HEADER = ("metric", "value", "n", "bins", "notes")


@dataclass
class ReportRow:
    metric: str
    value: float
    n: int
    bins: int = 0
    notes: str = ""

    def as_row(self) -> Tuple:
        return self.metric, self.value, self.n, self.bins, self.notes


def hitting_time_report(batch: SampleBatch, bins: int = 40,
                        horizon: Optional[float] = None) -> Tuple[Histogram, Dict[str, float]]:
    """
    Histogram of hitting times plus mean, median, p95 and truncation rate.

    Truncated runs count as τ = +∞ for the quantiles, so the median and p95 are those of the
    untruncated law whenever they fall inside the horizon; the mean is over hits only.

    Args:
        batch (SampleBatch): simulated exits with hitting times.
        bins (int): histogram bins over [0, max τ] (or [0, horizon] when given).
        horizon (Optional[float]): right edge of the histogram.

    Raises:
        PreconditionError: empty batch, or hitting times unknown.
    """
    if batch.total == 0:
        raise PreconditionError("hitting_time_report needs a non-empty batch")
    taus = batch.taus
    if np.any(np.isnan(taus)):
        raise PreconditionError("batch has no hitting times")
    hi = horizon if horizon is not None else (float(taus.max()) if taus.size else 1.0)
    lo = 0.0
    if hi <= lo:
        # 退化分布（如固定时刻方案）：让唯一取值落在末箱
        lo, hi = hi - 1.0, hi
    binning = Binning("real", (lo, hi, int(bins)))
    hist = histogram(taus, binning) if taus.size else Histogram(binning, np.zeros(int(bins), dtype=int))
    population = np.concatenate([taus, np.full(batch.truncated_count, np.inf)])
    median, p95 = np.quantile(population, [0.5, 0.95], method="inverted_cdf")
    summary = {
        "mean": float(taus.mean()) if taus.size else math.nan,
        "median": float(median) if np.isfinite(median) else math.inf,
        "p95": float(p95) if np.isfinite(p95) else math.inf,
        "truncation_rate": batch.truncation_rate,
        "hits": float(len(batch)),
        "total": float(batch.total),
    }
    logger.info(f"hitting times: mean {summary['mean']:.4g}, median {summary['median']:.4g}, "
                f"p95 {summary['p95']:.4g}, truncated {summary['truncation_rate']:.2%}")
    return hist, summary


def summary_rows(summary: Dict[str, float], bins: int) -> List[ReportRow]:
    n = int(summary["total"])
    return [
        ReportRow("tau_mean", summary["mean"], int(summary["hits"]), bins, "hits only"),
        ReportRow("tau_median", summary["median"], n, bins, "truncated runs as +inf"),
        ReportRow("tau_p95", summary["p95"], n, bins, "truncated runs as +inf"),
        ReportRow("truncation_rate", summary["truncation_rate"], n, bins),
    ]


def quantile_scale(values: np.ndarray) -> float:
    """Half the interquartile range: the scale of a Cauchy law."""
    q1, q3 = np.quantile(values, [0.25, 0.75])
    return 0.5 * float(q3 - q1)


def cauchy_scale_report(exits: np.ndarray, center: Sequence[float], gap: float,
                        sigma_x: float = 1.0, sigma_y: float = 1.0) -> Tuple[float, float, List[ReportRow]]:
    """
    Fit the scale of half-space exits per data coordinate and compare it with gap and gap/2.

    Args:
        exits (np.ndarray): exit points (data coordinates first, the plane coordinate last is ignored).
        center (Sequence[float]): data coordinates of the start.
        gap (float): ymax - y0.

    Returns:
        (fitted scale, adopted candidate, report rows). The candidates are scaled by σ_x/σ_y.
    """
    exits = np.atleast_2d(np.asarray(exits, dtype=float))
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if exits.shape[0] < 4:
        raise PreconditionError("cauchy_scale_report needs at least 4 exits")
    d = center.size
    scales = [quantile_scale(exits[:, i]) for i in range(d)]
    fitted = float(np.mean(scales))
    ratio = sigma_x / sigma_y
    candidates = {"gap": gap * ratio, "half_gap": 0.5 * gap * ratio}
    adopted_name = min(candidates, key=lambda key: abs(candidates[key] - fitted))
    adopted = candidates[adopted_name]
    medians = np.median(exits[:, :d], axis=0)
    n = exits.shape[0]
    rows = [ReportRow("cauchy_scale_fit", fitted, n, 0, "half interquartile range"),
            ReportRow("cauchy_scale_gap", candidates["gap"], n, 0, "candidate"),
            ReportRow("cauchy_scale_half_gap", candidates["half_gap"], n, 0, "candidate"),
            ReportRow("cauchy_scale_adopted", adopted, n, 0, adopted_name)]
    rows.extend(ReportRow(f"exit_median_{i + 1}", float(medians[i]), n, 0, f"start {center[i]:g}")
                for i in range(d))
    logger.info(f"fitted exit scale {fitted:.4g}, adopted {adopted_name} ({adopted:.4g})")
    return fitted, adopted, rows
