# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : sdeCore.py
@Description: 吸收型 Itô 过程的 Euler–Maruyama 模拟：命中检测、截断、按轨迹编号确定的随机数流。
@Version    : v0.1.0
@Dependencies:
    - numpy
    - loguru
@Changelog  :
    - v0.1.0: Lockstep batch engine, schedules, drift evaluators, exit-only fast path.
"""
import argparse
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np
from loguru import logger

from ..utils.constants import DEFAULT_CONFIG
from ..utils.exceptions import ConfigurationError, PreconditionError, SimulationError, SingularInputError

if TYPE_CHECKING:
    from .hitSchemes import Scheme

NONHIT_POLICIES = ("discard", "project")
# 每个块内噪声缓冲的浮点数上限（约 32 MB）
_CHUNK_FLOATS = 1 << 22
_SEED_MASK = (1 << 64) - 1

# 随机数通道：0 为 SDE 噪声，1 为 h 变换粒子，2 为训练快照与桥抽取
NOISE_CHANNEL = 0
PARTICLE_CHANNEL = 1
DRAW_CHANNEL = 2


# ---------------------------------------------------------------------------
# Schedules and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """
    Per-step schedule for the step size or the noise level, piecewise-constant in the step index.

    Descriptors: `const:<v>` (or a bare number), `linear:<start>,<end>` (linear in the step index over
    max_steps), `piecewise:<step>=<v>,<step>=<v>,...` (value holds from its step until the next one).
    """
    kind: str
    values: Tuple[float, ...]
    steps: Tuple[int, ...] = ()

    @classmethod
    def parse(cls, text) -> "Schedule":
        if isinstance(text, Schedule):
            return text
        if isinstance(text, (int, float)):
            return cls("const", (float(text),))
        text = str(text).strip()
        kind, sep, rest = text.partition(":")
        try:
            if not sep:
                return cls("const", (float(kind),))
            kind = kind.strip().lower()
            if kind == "const":
                return cls("const", (float(rest),))
            if kind == "linear":
                start, end = (float(v) for v in rest.split(","))
                return cls("linear", (start, end))
            if kind == "piecewise":
                pairs = []
                for token in filter(None, (t.strip() for t in rest.split(","))):
                    step, _, value = token.partition("=")
                    pairs.append((int(step), float(value)))
                pairs.sort()
                if not pairs or pairs[0][0] != 0:
                    raise ConfigurationError(f"piecewise schedule must start at step 0: '{text}'")
                return cls("piecewise", tuple(v for _, v in pairs), tuple(s for s, _ in pairs))
        except ValueError as err:
            raise ConfigurationError(f"malformed schedule '{text}'") from err
        raise ConfigurationError(f"unknown schedule '{text}', use const:<v>, linear:<a>,<b> or "
                                 "piecewise:<step>=<v>,...")

    def values_for(self, n: int) -> np.ndarray:
        """Schedule values of steps 0..n-1."""
        if self.kind == "const":
            return np.full(n, self.values[0])
        if self.kind == "linear":
            start, end = self.values
            if n == 1:
                return np.array([start])
            return start + (end - start) * np.arange(n) / (n - 1)
        index = np.searchsorted(np.array(self.steps), np.arange(n), side="right") - 1
        return np.array(self.values)[index]

    def descriptor(self) -> str:
        if self.kind == "const":
            return f"const:{self.values[0]!r}"
        if self.kind == "linear":
            return f"linear:{self.values[0]!r},{self.values[1]!r}"
        return "piecewise:" + ",".join(f"{s}={v!r}" for s, v in zip(self.steps, self.values))


@dataclass(frozen=True)
class SimConfig:
    """
    Simulation settings shared by every trajectory of a run.

    Attributes:
        dt (Schedule): step-size schedule, strictly positive.
        sigma (Schedule): noise standard deviation schedule, non-negative.
        max_steps (int): truncation in steps; the truncation horizon T is the time reached after max_steps.
        seed (int): master seed of all random streams.
        drift_clamp (float): cap of the per-coordinate drift displacement |b_i dt|.
        nonhit_policy (str): "discard" keeps truncated runs as non-hits, "project" forces them onto Ω.
        noise_block (int): normals drawn per refill of a stream's noise buffer.
        workers (int): threads used by batch simulation.
    """
    dt: Schedule = field(default_factory=lambda: Schedule.parse(DEFAULT_CONFIG["simulation"]["dt"]))
    sigma: Schedule = field(default_factory=lambda: Schedule.parse(DEFAULT_CONFIG["simulation"]["sigma"]))
    max_steps: int = DEFAULT_CONFIG["simulation"]["max_steps"]
    seed: int = DEFAULT_CONFIG["simulation"]["seed"]
    drift_clamp: float = DEFAULT_CONFIG["simulation"]["drift_clamp"]
    nonhit_policy: str = DEFAULT_CONFIG["simulation"]["nonhit_policy"]
    noise_block: int = DEFAULT_CONFIG["simulation"]["noise_block"]
    workers: int = DEFAULT_CONFIG["simulation"]["workers"]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dt", Schedule.parse(self.dt))
        object.__setattr__(self, "sigma", Schedule.parse(self.sigma))
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be at least 1")
        if self.drift_clamp <= 0.0:
            raise ConfigurationError("drift_clamp must be positive")
        if self.nonhit_policy not in NONHIT_POLICIES:
            raise ConfigurationError(f"nonhit_policy must be one of {NONHIT_POLICIES}")
        if self.noise_block < 1 or self.workers < 1:
            raise ConfigurationError("noise_block and workers must be positive")
        if min(self.dt.values) <= 0.0:
            raise ConfigurationError("step sizes must be strictly positive")
        if min(self.sigma.values) < 0.0:
            raise ConfigurationError("noise levels must be non-negative")

    @classmethod
    def from_namespace(cls, namespace: Optional[argparse.Namespace] = None, **overrides) -> "SimConfig":
        """
        Build a SimConfig from the `simulation` section of a loaded configuration; keyword overrides
        that are not None win over file values.
        """
        values = dict(DEFAULT_CONFIG["simulation"])
        if namespace is not None:
            values.update({k: v for k, v in vars(namespace).items() if k in values})
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(dt=values["dt"], sigma=values["sigma"], max_steps=int(values["max_steps"]),
                       seed=int(values["seed"]), drift_clamp=float(values["drift_clamp"]),
                       nonhit_policy=str(values["nonhit_policy"]), noise_block=int(values["noise_block"]),
                       workers=int(values["workers"]))
        except (TypeError, ValueError) as err:
            raise ConfigurationError(f"invalid simulation setting: {err}") from err

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray
    dts: np.ndarray
    sigmas: np.ndarray

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def remaining_variance(self) -> np.ndarray:
        """Σ_{j >= k} σ_j² dt_j for each step k."""
        return np.cumsum((self.sigmas ** 2 * self.dts)[::-1])[::-1]


@lru_cache(maxsize=16)
def build_time_grid(cfg: SimConfig, time_cap: Optional[float] = None) -> TimeGrid:
    """
    Time stamps of steps 0..max_steps; with a time cap the grid stops at the first stamp reaching it
    and the last step is shortened to land exactly on the cap.
    """
    dts = cfg.dt.values_for(cfg.max_steps)
    if cfg.dt.kind == "const":
        times = dts[0] * np.arange(cfg.max_steps + 1)
    else:
        times = np.concatenate(([0.0], np.cumsum(dts)))
    if time_cap is not None:
        reach = np.flatnonzero(times >= time_cap * (1.0 - 1e-9))
        if reach.size:
            last = max(int(reach[0]), 1)
            times = times[:last + 1].copy()
            times[last] = time_cap
            dts = dts[:last].copy()
            dts[-1] = time_cap - times[last - 1]
    sigmas = cfg.sigma.values_for(dts.size)
    for array in (times, dts, sigmas):
        array.setflags(write=False)
    return TimeGrid(times, dts, sigmas)


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    """
    Substream key (master_seed, stream_id, channel, attempt); the same key gives the same numbers in any
    process, thread or batch layout.
    """
    master_seed: int
    stream_id: int
    channel: int = NOISE_CHANNEL
    attempt: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed & _SEED_MASK,
                                     spawn_key=(self.stream_id, self.channel, self.attempt))
        return np.random.default_rng(seq)

    def on_channel(self, channel: int) -> "RngStream":
        return replace(self, channel=channel)


def make_streams(seed: int, stream_ids: Sequence[int], attempts: Optional[Sequence[int]] = None) -> List[RngStream]:
    attempts = [0] * len(stream_ids) if attempts is None else attempts
    return [RngStream(seed, int(i), NOISE_CHANNEL, int(a)) for i, a in zip(stream_ids, attempts)]


class BlockedNormals:
    """
    Standard normals of shape `shape` per call, drawn from each stream in fixed blocks.

    Every stream consumes one draw per call, so the sequence a stream sees depends only on its key and
    on how many calls it took part in.
    """

    def __init__(self, streams: Sequence[RngStream], shape: Tuple[int, ...], block: int) -> None:
        self.generators = [stream.generator() for stream in streams]
        self.shape = tuple(shape)
        self.block = block
        self.buffer = np.empty((len(streams), block) + self.shape)
        self.used = np.full(len(streams), block)

    def draw(self, local_rows: np.ndarray) -> np.ndarray:
        empty = local_rows[self.used[local_rows] >= self.block]
        for row in empty:
            self.buffer[row] = self.generators[row].standard_normal((self.block,) + self.shape)
            self.used[row] = 0
        out = self.buffer[local_rows, self.used[local_rows]]
        self.used[local_rows] += 1
        return out


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """
    A simulated path. `times[k]` is the time of `states[k]`; `hit_index` is -1 and `tau` is nan when
    the run did not hit.
    """
    times: np.ndarray
    states: np.ndarray
    hit: bool
    hit_index: int = -1
    tau: float = math.nan
    stream_id: int = 0

    def __len__(self) -> int:
        return len(self.times)

    @property
    def exit_point(self) -> np.ndarray:
        if not self.hit:
            raise PreconditionError("trajectory did not hit")
        return self.states[self.hit_index]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass
class SampleBatch:
    """
    Exit points on Ω with their hitting times.

    Attributes:
        points (np.ndarray): shape (n, d).
        taus (np.ndarray): shape (n,), nan when unknown (ingested data without a tau column).
        truncated_count (int): runs that did not hit and were discarded.
        stream_ids (Optional[np.ndarray]): stream of each kept row, when simulated.
    """
    points: np.ndarray
    taus: np.ndarray
    truncated_count: int = 0
    stream_ids: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.size == 0:
            self.points = self.points.reshape(0, self.points.shape[-1] if self.points.ndim == 2 else 0)
        self.taus = np.asarray(self.taus, dtype=float).reshape(-1)
        if self.taus.size != self.points.shape[0]:
            raise PreconditionError("points and taus have different lengths")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total(self) -> int:
        return len(self) + self.truncated_count

    @property
    def truncation_rate(self) -> float:
        return self.truncated_count / self.total if self.total else 0.0

    @classmethod
    def from_points(cls, points, taus=None) -> "SampleBatch":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        taus = np.full(points.shape[0], math.nan) if taus is None else taus
        return cls(points, taus)


# ---------------------------------------------------------------------------
# Drift evaluators
# ---------------------------------------------------------------------------

class DriftEvaluator:
    """
    Drift b(z, t) of the simulated process, evaluated over a batch.

    `evaluate(z, t, k, rows)` receives the active states (rows, D), the time and step index, and the
    positions of those rows in the run's stream list, so per-trajectory drifts can pick their targets.
    """

    def bind(self, streams: Sequence[RngStream], grid: TimeGrid) -> None:
        """Called once per run before any evaluation."""

    def noise_factor(self, k: int) -> float:
        """Multiplier of the step-k noise; 1 unless the drift also reshapes the diffusion."""
        return 1.0

    def evaluate(self, z: np.ndarray, t: float, k: int, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ZeroDrift(DriftEvaluator):
    def evaluate(self, z, t, k, rows):
        return np.zeros_like(z)


class BaselineDrift(DriftEvaluator):
    """Drift of the scheme's baseline process Q."""

    def __init__(self, scheme: "Scheme") -> None:
        self.scheme = scheme

    def evaluate(self, z, t, k, rows):
        return self.scheme.baseline_drift(z, t)


class FunctionDrift(DriftEvaluator):
    """
    Wraps a callable `fn(z, t)`; with `vectorized=False` the callable sees one state at a time.

    Usage:
        drift = FunctionDrift(lambda z, t: -z, vectorized=True)
    """

    def __init__(self, fn: Callable[[np.ndarray, float], np.ndarray], vectorized: bool = False) -> None:
        self.fn = fn
        self.vectorized = vectorized

    def evaluate(self, z, t, k, rows):
        if self.vectorized:
            return np.asarray(self.fn(z, t), dtype=float).reshape(z.shape)
        return np.array([np.asarray(self.fn(row, t), dtype=float) for row in z]).reshape(z.shape)


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

@dataclass
class _RunResult:
    final: np.ndarray
    hit: np.ndarray
    end: np.ndarray
    forced: np.ndarray
    paths: Optional[np.ndarray]


def _apply_step(state: np.ndarray, mask: np.ndarray, drift: np.ndarray, dt: float, sigma: float,
                noise_scale: np.ndarray, xi: np.ndarray, clamp: float) -> np.ndarray:
    move = np.clip(np.where(mask, 0.0, drift) * dt, -clamp, clamp) + math.sqrt(dt) * sigma * noise_scale * xi
    return np.where(mask, state, state + move)


def step(state: np.ndarray, t: float, drift: DriftEvaluator, scheme: "Scheme", cfg: SimConfig,
         rng: RngStream, k: int = 0) -> np.ndarray:
    """
    One Euler–Maruyama step of a single state: state + mask ∘ (clamp(b dt) + √dt σ_k ξ).

    Uses the step size and noise level of step `k` and the first normal vector of `rng`'s noise
    channel; absorbed coordinates are returned unchanged.

    Raises:
        SimulationError: the drift is not finite on an active coordinate or fails on a singular state.
    """
    state = np.asarray(state, dtype=float)
    if scheme.hit_rows(state, t) and not scheme.coordinatewise:
        raise PreconditionError("state is already absorbed")
    grid = build_time_grid(cfg, scheme.time_cap)
    if k >= grid.dts.size:
        raise PreconditionError(f"step index {k} beyond the time grid")
    mask = scheme.absorbed_mask(state, t)
    b = _evaluate_drift(drift, state[None, :], t, k, np.zeros(1, dtype=int), [rng])[0]
    if not np.all(np.isfinite(b[~mask])):
        raise SimulationError(f"non-finite drift at t={t}", t=t, state=state.copy())
    # first normal of the stream, the same vector a batch run draws on its first step
    xi = rng.on_channel(NOISE_CHANNEL).generator().standard_normal(state.size) * drift.noise_factor(k)
    return _apply_step(state, mask, b, grid.dts[k], grid.sigmas[k], scheme.noise_scale, xi, cfg.drift_clamp)


def _evaluate_drift(drift: DriftEvaluator, za: np.ndarray, t: float, k: int, rows: np.ndarray,
                   streams: Sequence[RngStream]) -> np.ndarray:
    """Drift of the active rows; a singular input becomes a SimulationError naming the first failing run."""
    try:
        return np.asarray(drift.evaluate(za, t, k, rows), dtype=float)
    except SingularInputError as err:
        failing = 0
        for i in range(rows.size):
            try:
                drift.evaluate(za[i:i + 1], t, k, rows[i:i + 1])
            except SingularInputError:
                failing = i
                break
        raise SimulationError(f"drift failed at t={t}: {err}", t=t, state=za[failing].copy()).with_index(
            streams[rows[failing]].stream_id) from err


def _integrate(scheme: "Scheme", drift: DriftEvaluator, z0s: np.ndarray, cfg: SimConfig, grid: TimeGrid,
               streams: Sequence[RngStream], rows: np.ndarray, keep_paths: bool) -> _RunResult:
    n, dim = z0s.shape
    z = z0s.copy()
    noise = BlockedNormals([streams[r] for r in rows], (dim,), cfg.noise_block)
    scale = scheme.noise_scale
    hit = np.zeros(n, dtype=bool)
    dead = np.zeros(n, dtype=bool)
    end = np.full(n, grid.dts.size)
    paths = None
    if keep_paths:
        paths = np.empty((n, min(grid.times.size, 64), dim))
        paths[:, 0] = z
    active = np.arange(n)
    for k in range(grid.dts.size):
        if active.size == 0:
            break
        t = grid.times[k]
        za = z[active]
        mask = scheme.absorbed_mask(za, t)
        b = _evaluate_drift(drift, za, t, k, rows[active], streams)
        bad = ~np.isfinite(b) & ~mask
        if bad.any():
            local = active[np.flatnonzero(bad.any(axis=1))[0]]
            raise SimulationError(f"non-finite drift at t={t}", t=t, state=z[local].copy()).with_index(
                streams[rows[local]].stream_id)
        xi = noise.draw(active) * drift.noise_factor(k)
        za = _apply_step(za, mask, b, grid.dts[k], grid.sigmas[k], scale, xi, cfg.drift_clamp)
        z[active] = za
        if paths is not None:
            if k + 1 >= paths.shape[1]:
                grown = np.empty((n, min(2 * paths.shape[1], grid.times.size), dim))
                grown[:, :paths.shape[1]] = paths
                paths = grown
            paths[active, k + 1] = za
        t_next = grid.times[k + 1]
        hits = scheme.hit_rows(za, t_next)
        deads = scheme.dead_rows(za) & ~hits
        done = hits | deads
        if done.any():
            end[active[done]] = k + 1
            hit[active[hits]] = True
            dead[active[deads]] = True
            active = active[~done]
    if dead.any():
        logger.warning(f"{int(dead.sum())} run(s) ended with a dead categorical slot")
    final = z.copy()
    forced = np.zeros(n, dtype=bool)
    if hit.any():
        final[hit] = scheme.force_project(z[hit])
    if cfg.nonhit_policy == "project" and not hit.all():
        forced = ~hit
        final[forced] = scheme.force_project(z[forced])
    return _RunResult(final, hit, end, forced, paths)


def _chunks(n: int, dim: int, block: int) -> List[np.ndarray]:
    size = max(1, _CHUNK_FLOATS // (block * dim))
    return [np.arange(start, min(start + size, n)) for start in range(0, n, size)]


def _check_start(scheme: "Scheme", z0s: np.ndarray) -> None:
    if z0s.shape[-1] != scheme.state_dim:
        raise PreconditionError(f"z0 has dimension {z0s.shape[-1]}, scheme needs {scheme.state_dim}")
    if np.any(scheme.hit_rows(z0s, 0.0)):
        raise PreconditionError("z0 must lie strictly inside the domain")


def run_streams(scheme: "Scheme", drift: DriftEvaluator, z0s: np.ndarray, cfg: SimConfig,
                streams: Sequence[RngStream], keep_paths: bool) -> Tuple[_RunResult, TimeGrid]:
    """
    Simulate one run per stream, chunked over rows and spread over `cfg.workers` threads; the merged
    result is ordered as `streams`.
    """
    z0s = np.asarray(z0s, dtype=float)
    _check_start(scheme, z0s)
    z0s = np.broadcast_to(z0s, (len(streams), scheme.state_dim)).copy()
    grid = build_time_grid(cfg, scheme.time_cap)
    drift.bind(streams, grid)
    chunks = _chunks(len(streams), scheme.state_dim, cfg.noise_block)

    def _run(rows: np.ndarray) -> _RunResult:
        return _integrate(scheme, drift, z0s[rows], cfg, grid, streams, rows, keep_paths)

    if cfg.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run, chunks))
    else:
        parts = [_run(rows) for rows in chunks]
    paths = None
    if keep_paths:
        width = max(part.paths.shape[1] for part in parts)
        paths = np.concatenate([np.pad(part.paths, ((0, 0), (0, width - part.paths.shape[1]), (0, 0)))
                                for part in parts])
    merged = _RunResult(np.concatenate([p.final for p in parts]), np.concatenate([p.hit for p in parts]),
                        np.concatenate([p.end for p in parts]), np.concatenate([p.forced for p in parts]), paths)
    return merged, grid


def trajectories_from(result: _RunResult, grid: TimeGrid, streams: Sequence[RngStream]) -> List[Trajectory]:
    trajectories = []
    for i, stream in enumerate(streams):
        last = int(result.end[i])
        states = result.paths[i, :last + 1].copy()
        hit = bool(result.hit[i] or result.forced[i])
        if hit:
            states[last] = result.final[i]
        trajectories.append(Trajectory(times=np.array(grid.times[:last + 1]), states=states, hit=hit,
                                       hit_index=last if hit else -1,
                                       tau=float(grid.times[last]) if hit else math.nan,
                                       stream_id=stream.stream_id))
    return trajectories


def simulate(scheme: "Scheme", drift: DriftEvaluator, z0, cfg: SimConfig, stream_id: int = 0) -> Trajectory:
    """
    Simulate one trajectory until it hits Ω or max_steps run out.

    On a hit the final state is projected onto Ω; on a non-hit `cfg.nonhit_policy` decides between
    returning hit=False and forcing the projection with tau set to the truncation time.

    Raises:
        PreconditionError: z0 has the wrong dimension or already lies on Ω.
        SimulationError: non-finite drift.
    """
    streams = make_streams(cfg.seed, [stream_id])
    result, grid = run_streams(scheme, drift, np.asarray(z0, dtype=float)[None, :], cfg, streams, True)
    return trajectories_from(result, grid, streams)[0]


def simulate_batch(scheme: "Scheme", drift: DriftEvaluator, z0, cfg: SimConfig, n: int,
                   first_stream: int = 0) -> List[Trajectory]:
    """
    n trajectories on streams first_stream..first_stream+n-1, identical for any worker count.

    Usage:
        trajectories = simulate_batch(parse_scheme("sphere:d=2"), ZeroDrift(), np.zeros(2), cfg, 100)
    """
    if n < 1:
        raise PreconditionError("simulate_batch needs n >= 1")
    streams = make_streams(cfg.seed, range(first_stream, first_stream + n))
    result, grid = run_streams(scheme, drift, z0, cfg, streams, True)
    trajectories = trajectories_from(result, grid, streams)
    logger.debug(f"simulated {n} trajectories of {scheme.descriptor()}, "
                 f"{int(result.hit.sum())} hit within horizon {grid.horizon:g}")
    return trajectories


def simulate_exits(scheme: "Scheme", drift: DriftEvaluator, z0, cfg: SimConfig, n: int,
                   first_stream: int = 0) -> SampleBatch:
    """
    Same runs as simulate_batch without storing paths: exit points, hitting times and truncation count.
    """
    if n < 1:
        raise PreconditionError("simulate_exits needs n >= 1")
    streams = make_streams(cfg.seed, range(first_stream, first_stream + n))
    result, grid = run_streams(scheme, drift, z0, cfg, streams, False)
    kept = result.hit | result.forced
    taus = grid.times[result.end[kept]]
    truncated = int(n - kept.sum())
    if truncated:
        logger.warning(f"{truncated} of {n} runs of {scheme.descriptor()} did not hit within "
                       f"horizon {grid.horizon:g} and were discarded")
    logger.info(f"simulated {n} exits of {scheme.descriptor()}")
    return SampleBatch(result.final[kept], taus, truncated,
                       np.array([s.stream_id for s in streams])[kept])
