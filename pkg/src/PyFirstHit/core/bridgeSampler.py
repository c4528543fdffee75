# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : bridgeSampler.py
@Description: 条件过程 Q(· | Z_τ = x) 的采样：直接模拟桥过程，或由预模拟轨迹池经对称变换得到。
@Version    : v0.1.0
@Dependencies:
    - numpy
    - loguru
@Changelog  :
    - v0.1.0: Direct bridges with resimulation of misses, symmetric pools, pool files.
"""
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from .hitSchemes import Scheme, fixed_time_bridge_drift, parse_scheme, symmetry_transform
from .sdeCore import (BaselineDrift, DriftEvaluator, RngStream, SimConfig, TimeGrid, Trajectory,
                      make_streams, run_streams, trajectories_from)
from ..utils.csvHandler import CsvHandler
from ..utils.exceptions import ConfigurationError, FormatError, PreconditionError, SimulationError

MAX_ATTRITION = 0.5
MAX_ROUNDS = 64
# 命中点与目标的距离不超过 SNAP_FACTOR * hit_eps 时吸附到目标
SNAP_FACTOR = 2.0


def on_exit_set(scheme: Scheme, x: np.ndarray) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != (scheme.state_dim,):
        return False
    return bool(np.allclose(scheme.force_project(x), x, rtol=0.0, atol=1e-9))


class BridgeDrift(DriftEvaluator):
    """
    Drift b_t(z) + σ_t² ∇_z log q_Ω(x | z) of the process conditioned to exit at per-row targets.

    Categorical rows follow the Boolean bridge. Fixed-time rows follow the discrete Brownian bridge: the
    drift uses the remaining variance and the noise shrinks to zero on the last step, so a run lands on x
    unless the drift clamp binds on that step. Hits within tolerance are then snapped by `_snap`.
    """

    def __init__(self, scheme: Scheme, targets: np.ndarray) -> None:
        self.scheme = scheme
        self.targets = np.atleast_2d(np.asarray(targets, dtype=float))
        self.grid: Optional[TimeGrid] = None
        self.remaining: Optional[np.ndarray] = None

    def bind(self, streams: Sequence[RngStream], grid: TimeGrid) -> None:
        self.grid = grid
        self.remaining = grid.remaining_variance

    def noise_factor(self, k: int) -> float:
        if self.scheme.kind != "fixedtime" or self.grid is None:
            return 1.0
        remaining = float(self.remaining[k])
        own = float(self.grid.sigmas[k] ** 2 * self.grid.dts[k])
        return math.sqrt(max(remaining - own, 0.0) / remaining) if remaining > 0.0 else 0.0

    def evaluate(self, z, t, k, rows):
        x = self.targets[rows] if self.targets.shape[0] > 1 else np.broadcast_to(self.targets[0], z.shape)
        sigma = self.grid.sigmas[k] * self.scheme.noise_scale
        if self.scheme.kind == "fixedtime":
            if self.remaining[k] <= 0.0:
                return fixed_time_bridge_drift(z, x, t, self.scheme.T)
            return self.grid.sigmas[k] ** 2 * (x - z) / self.remaining[k]
        score = sigma ** 2 * self.scheme.exit_score(z, x, t)
        if self.scheme.kind == "categorical":
            return score
        return self.scheme.baseline_drift(z, t) + score


@dataclass
class BridgeRun:
    """Hit bridges in target order, with the number of simulated runs and of discarded ones."""
    trajectories: List[Trajectory]
    simulated: int
    discarded: int

    @property
    def attrition(self) -> float:
        return self.discarded / self.simulated if self.simulated else 0.0


def _snap(scheme: Scheme, trajectories: List[Trajectory], targets: np.ndarray) -> np.ndarray:
    """Snap hit trajectories within tolerance onto their targets; returns the success flags."""
    ok = np.zeros(len(trajectories), dtype=bool)
    tolerance = SNAP_FACTOR * scheme.hit_eps
    for i, traj in enumerate(trajectories):
        if not traj.hit:
            continue
        if scheme.exit_distance(traj.exit_point, targets[i]) <= tolerance:
            traj.states[traj.hit_index] = targets[i]
            ok[i] = True
    return ok


def simulate_bridges(scheme: Scheme, targets: np.ndarray, cfg: SimConfig, stream_ids: Sequence[int],
                     max_attrition: Optional[float] = None, z0: Optional[np.ndarray] = None) -> BridgeRun:
    """
    Simulate one bridge per target, resimulating non-hits and misses on fresh substreams.

    A bridge counts as a miss when its projected exit lies farther than 2·hit_eps from the target.

    Args:
        targets (np.ndarray): exit points on Ω, shape (n, D).
        stream_ids (Sequence[int]): one stream per target; retries bump the stream's attempt counter.
        max_attrition (Optional[float]): raise when the first round discards a larger fraction.

    Raises:
        PreconditionError: a target is not on Ω.
        ConfigurationError: attrition above max_attrition.
        SimulationError: targets still missing after MAX_ROUNDS rounds.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if len(stream_ids) != targets.shape[0]:
        raise PreconditionError("one stream id per target is required")
    for x in targets:
        if not on_exit_set(scheme, x):
            raise PreconditionError(f"bridge target {x} is not on the exit set of {scheme.descriptor()}")
    cfg = replace(cfg, nonhit_policy="discard")
    start = scheme.z0_array if z0 is None else np.asarray(z0, dtype=float)
    done: List[Optional[Trajectory]] = [None] * targets.shape[0]
    pending = np.arange(targets.shape[0])
    simulated = discarded = 0
    for attempt in range(MAX_ROUNDS):
        streams = make_streams(cfg.seed, [stream_ids[i] for i in pending], [attempt] * pending.size)
        result, grid = run_streams(scheme, BridgeDrift(scheme, targets[pending]), start, cfg, streams, True)
        trajectories = trajectories_from(result, grid, streams)
        ok = _snap(scheme, trajectories, targets[pending])
        simulated += pending.size
        discarded += int((~ok).sum())
        for i, traj in zip(pending[ok], (t for t, flag in zip(trajectories, ok) if flag)):
            done[i] = traj
        if attempt == 0 and max_attrition is not None and (~ok).mean() > max_attrition:
            raise ConfigurationError(f"bridge attrition {(~ok).mean():.2f} exceeds {max_attrition:.2f}; "
                                     "increase max_steps or decrease dt")
        pending = pending[~ok]
        if pending.size == 0:
            break
        logger.debug(f"round {attempt}: {pending.size} bridge(s) discarded, resimulating")
    if pending.size:
        raise SimulationError(f"{pending.size} bridge(s) failed after {MAX_ROUNDS} rounds")
    if discarded:
        logger.warning(f"bridge attrition {discarded}/{simulated} on {scheme.descriptor()}")
    return BridgeRun(done, simulated, discarded)


def simulate_bridge(scheme: Scheme, x, cfg: SimConfig, stream_id: int = 0, attempt: int = 0) -> Trajectory:
    """
    One bridge conditioned to exit at x. A run that does not hit, or exits farther than 2·hit_eps from x,
    comes back with hit=False; hits are snapped exactly onto x.

    Raises:
        PreconditionError: x is not on Ω.
    """
    x = np.asarray(x, dtype=float)
    if not on_exit_set(scheme, x):
        raise PreconditionError(f"bridge target {x} is not on the exit set of {scheme.descriptor()}")
    streams = make_streams(cfg.seed, [stream_id], [attempt])
    result, grid = run_streams(scheme, BridgeDrift(scheme, x[None, :]), scheme.z0_array,
                               replace(cfg, nonhit_policy="discard"), streams, True)
    traj = trajectories_from(result, grid, streams)[0]
    if traj.hit and not _snap(scheme, [traj], x[None, :])[0]:
        logger.debug(f"bridge {stream_id} missed its target and is discarded")
        traj.hit, traj.hit_index, traj.tau = False, -1, float("nan")
    return traj


@dataclass
class BridgePool:
    """
    Unconditioned hit trajectories started at the symmetric z0, reusable as bridges to any target.

    Attributes:
        exit_points (np.ndarray): projected exit of each trajectory, shape (n, D).
        attrition (float): fraction of discarded runs while building.
    """
    scheme: Scheme
    trajectories: List[Trajectory]
    exit_points: np.ndarray
    attrition: float = 0.0
    seed: int = 0

    def __len__(self) -> int:
        return len(self.trajectories)

    @classmethod
    def from_trajectories(cls, scheme: Scheme, trajectories: List[Trajectory], seed: int = 0) -> "BridgePool":
        if not trajectories:
            raise PreconditionError("empty bridge pool")
        if not all(traj.hit for traj in trajectories):
            raise PreconditionError("pooled trajectories must all hit")
        if not all(np.allclose(traj.states[0], scheme.z0_array, rtol=0.0, atol=1e-12) for traj in trajectories):
            raise PreconditionError("pooled trajectories must start at the scheme's z0")
        if not scheme.has_symmetry:
            raise PreconditionError(f"{scheme.descriptor()} has no symmetric initial point")
        exits = np.array([traj.exit_point for traj in trajectories])
        return cls(scheme, trajectories, exits, 0.0, seed)


def build_pool(scheme: Scheme, cfg: SimConfig, n: int, drift: Optional[DriftEvaluator] = None,
               first_stream: int = 0) -> BridgePool:
    """
    Pre-simulate n unconditioned hit trajectories from the symmetric z0, resimulating non-hits.

    Raises:
        PreconditionError: n < 1 or the scheme has no symmetric z0.
        ConfigurationError: more than half of the first round did not hit (horizon too short).
    """
    if n < 1:
        raise PreconditionError("build_pool needs n >= 1")
    if not scheme.has_symmetry:
        raise PreconditionError(f"{scheme.descriptor()} has no symmetric initial point")
    drift = BaselineDrift(scheme) if drift is None else drift
    cfg = replace(cfg, nonhit_policy="discard")
    done: List[Optional[Trajectory]] = [None] * n
    pending = np.arange(n)
    simulated = discarded = 0
    for attempt in range(MAX_ROUNDS):
        streams = make_streams(cfg.seed, first_stream + pending, [attempt] * pending.size)
        result, grid = run_streams(scheme, drift, scheme.z0_array, cfg, streams, True)
        trajectories = trajectories_from(result, grid, streams)
        hit = result.hit
        simulated += pending.size
        discarded += int((~hit).sum())
        if attempt == 0 and (~hit).mean() > MAX_ATTRITION:
            raise ConfigurationError(f"pool attrition {(~hit).mean():.2f} exceeds {MAX_ATTRITION:.2f}; "
                                     "the horizon is too short")
        for i, traj in zip(pending[hit], (t for t, flag in zip(trajectories, hit) if flag)):
            done[i] = traj
        pending = pending[~hit]
        if pending.size == 0:
            break
    if pending.size:
        raise SimulationError(f"{pending.size} pool trajectories failed after {MAX_ROUNDS} rounds")
    pool = BridgePool(scheme, done, np.array([traj.exit_point for traj in done]),
                      discarded / simulated, cfg.seed)
    logger.info(f"built pool of {n} trajectories for {scheme.descriptor()}, attrition {pool.attrition:.3f}")
    return pool


def draw_bridge(pool: BridgePool, x, rng: np.random.Generator) -> Trajectory:
    """
    Pick a pooled trajectory uniformly and transform it to exit exactly at x.

    Raises:
        PreconditionError: empty pool or x not on Ω.
    """
    if len(pool) == 0:
        raise PreconditionError("empty bridge pool")
    x = np.asarray(x, dtype=float)
    if not on_exit_set(pool.scheme, x):
        raise PreconditionError(f"bridge target {x} is not on the exit set of {pool.scheme.descriptor()}")
    index = int(rng.integers(len(pool)))
    return symmetry_transform(pool.scheme, pool.trajectories[index], pool.exit_points[index], x)


def draw_bridges(pool: BridgePool, targets: np.ndarray, rng: np.random.Generator) -> List[Trajectory]:
    return [draw_bridge(pool, x, rng) for x in np.atleast_2d(targets)]


def save_pool(pool: BridgePool, path: str) -> None:
    comment = f"pool scheme={pool.scheme.descriptor()} n={len(pool)} seed={pool.seed}"
    CsvHandler().write_trajectories(path, pool.trajectories, comment)


def load_pool(path: str, scheme: Optional[Scheme] = None) -> BridgePool:
    """
    Read a pool file; the scheme comes from the `# pool scheme=...` comment unless given.

    Raises:
        FormatError: missing scheme metadata.
        PreconditionError: a stored trajectory did not hit.
    """
    trajectories, meta = CsvHandler().read_trajectories(path)
    if scheme is None:
        if "scheme" not in meta:
            raise FormatError(f"{path} has no '# pool scheme=...' line")
        scheme = parse_scheme(meta["scheme"])
    return BridgePool.from_trajectories(scheme, trajectories, int(meta.get("seed", 0)))

