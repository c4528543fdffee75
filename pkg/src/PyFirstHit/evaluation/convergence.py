# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : convergence.py
@Description: 离散化收敛实验：各步长下出口分布的一维投影与细网格参考之间的平方 W1 误差，及其双对数斜率。
@Version    : v0.1.0
@Dependencies:
    - numpy
    - loguru
"""
import copy
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence

import numpy as np
from loguru import logger

from ..core.hitSchemes import Scheme
from ..core.sdeCore import DriftEvaluator, SampleBatch, Schedule, SimConfig, simulate_exits
from ..utils.exceptions import ConfigurationError, PreconditionError
from .metrics import exit_angle, w1_1d

CONVERGENCE_HEADER = ("delta", "sq_w1", "n")
MAX_NONHIT_RATE = 0.25

Projection = Callable[[np.ndarray], np.ndarray]


def parse_projection(text: str) -> Projection:
    """`angle` (atan2 of the first two coordinates) or `coord:<i>` (1-based coordinate)."""
    text = text.strip().lower()
    if text == "angle":
        return exit_angle
    kind, _, index = text.partition(":")
    if kind == "coord":
        try:
            column = int(index) - 1
        except ValueError as err:
            raise ConfigurationError(f"malformed projection '{text}'") from err
        if column < 0:
            raise ConfigurationError("coordinates are numbered from 1")
        return lambda points: np.asarray(points)[:, column]
    raise ConfigurationError(f"unknown projection '{text}', valid: angle, coord:<i>")


@dataclass
class ConvergenceResult:
    deltas: np.ndarray
    errors: np.ndarray
    n: int
    slope: float
    reference: SampleBatch

    def rows(self) -> List[tuple]:
        return [(float(delta), float(err), self.n) for delta, err in zip(self.deltas, self.errors)]

    @property
    def inversions(self) -> int:
        """Adjacent pairs where a smaller step has a larger error."""
        order = np.argsort(self.deltas)
        return int(np.sum(np.diff(self.errors[order]) < 0.0))


def _level_config(cfg: SimConfig, delta: float, horizon: float) -> SimConfig:
    return replace(cfg, dt=Schedule("const", (float(delta),)), max_steps=max(1, int(round(horizon / delta))))


def _run_level(scheme: Scheme, drift: DriftEvaluator, z0: np.ndarray, cfg: SimConfig, n: int) -> SampleBatch:
    batch = simulate_exits(scheme, drift, z0, cfg, n)
    if batch.truncation_rate > MAX_NONHIT_RATE:
        raise ConfigurationError(
            f"non-hit rate {batch.truncation_rate:.1%} at step {cfg.dt.values[0]:g} exceeds "
            f"{MAX_NONHIT_RATE:.0%}: increase the horizon")
    return batch


def convergence_experiment(scheme: Scheme, drift: DriftEvaluator, projection: Projection,
                           deltas: Sequence[float], reference_delta: float, n: int, cfg: SimConfig,
                           horizon: float, z0: Optional[np.ndarray] = None) -> ConvergenceResult:
    """
    Squared W1 of a projected exit sample at each step size against a fine-step reference.

    Every level shares the truncation horizon and the master seed, and levels run in parallel threads,
    each with its own shallow copy of `drift` so per-run state set by `bind` stays with its level.

    Args:
        projection (Projection): map from exit points (n, dim) to a 1-d sample.
        deltas (Sequence[float]): step sizes, all larger than reference_delta.
        horizon (float): truncation horizon T; max_steps per level is round(T / Δ).

    Returns:
        ConvergenceResult: per-Δ errors and the least-squares slope of log error against log Δ.

    Raises:
        PreconditionError: reference_delta not below every Δ, fewer than two levels, or n < 1.
        ConfigurationError: some level (or the reference) exceeds the non-hit rate bound.
    """
    deltas = np.asarray(sorted(float(d) for d in deltas), dtype=float)
    if deltas.size < 2:
        raise PreconditionError("convergence_experiment needs at least two step sizes")
    if reference_delta <= 0.0 or reference_delta >= deltas.min():
        raise PreconditionError("reference_delta must be positive and below every step size")
    if n < 1:
        raise PreconditionError("convergence_experiment needs n >= 1")
    z0 = scheme.z0_array if z0 is None else np.asarray(z0, dtype=float)
    levels = [reference_delta, *deltas]
    # 各层并行时层内单线程
    configs = [replace(_level_config(cfg, delta, horizon), workers=1) for delta in levels]
    with ThreadPoolExecutor(max_workers=max(1, min(cfg.workers, len(levels)))) as pool:
        batches = list(pool.map(lambda c: _run_level(scheme, copy.copy(drift), z0, c, n), configs))
    reference = projection(batches[0].points)
    errors = np.array([w1_1d(projection(batch.points), reference) ** 2 for batch in batches[1:]])
    positive = errors > 0.0
    if positive.sum() < 2:
        raise ConfigurationError("too few non-zero errors to fit a slope")
    slope = float(np.polyfit(np.log(deltas[positive]), np.log(errors[positive]), 1)[0])
    for delta, err in zip(deltas, errors):
        logger.info(f"step {delta:g}: squared W1 {err:.4g}")
    logger.info(f"log-log slope {slope:.3f} over {deltas.size} levels, n={n}")
    return ConvergenceResult(deltas, errors, n, slope, batches[0])
