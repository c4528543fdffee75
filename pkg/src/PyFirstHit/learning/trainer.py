# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : trainer.py
@Description: 用桥轨迹快照上的得分匹配损失拟合漂移网络，并从训练好的模型过程采样。
@Version    : v0.1.0
@Dependencies:
    - numpy
    - loguru
@Changelog  :
    - v0.1.0: Snapshot items, masked loss, epoch loop with direct or pooled bridges, training log.
"""
import argparse
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .driftNet import AdamState, Mlp, ModelDrift, adam_step
from ..apps.debugHelper import TimeTracker
from ..core.bridgeSampler import BridgeDrift, build_pool, draw_bridges, on_exit_set, simulate_bridges
from ..core.hitSchemes import Scheme, boolean_log_likelihood_score, categorical_omega_score, parse_scheme
from ..core.sdeCore import (DRAW_CHANNEL, RngStream, SampleBatch, SimConfig, Trajectory, build_time_grid,
                            simulate_exits)
from ..utils.constants import DEFAULT_CONFIG
from ..utils.csvHandler import CsvHandler
from ..utils.exceptions import ConfigurationError, PreconditionError

TRAINING_LOG_HEADER = ("epoch", "mean_loss", "bridge_attrition", "wall_ms")
MAX_ATTRITION = 0.5
# 每个 epoch 的随机流编号间隔
_EPOCH_STRIDE = 1 << 32
_POOL_OFFSET = 1 << 31


@dataclass(frozen=True)
class TrainConfig:
    """
    Settings of a training run.

    Attributes:
        scheme (Scheme): hitting scheme of the model.
        sim (SimConfig): simulation settings of bridges and of sampling.
        output_bound (Optional[float]): tanh output bound; always set for categorical schemes.
        use_pool (bool): draw bridges from a per-epoch symmetric pool instead of simulating them.
        pool_factor (int): pool size as a multiple of batch_size.
    """
    scheme: Scheme
    sim: SimConfig = field(default_factory=SimConfig)
    epochs: int = DEFAULT_CONFIG["training"]["epochs"]
    batch_size: int = DEFAULT_CONFIG["training"]["batch_size"]
    snapshots_per_item: int = DEFAULT_CONFIG["training"]["snapshots_per_item"]
    learning_rate: Optional[float] = None
    beta1: float = DEFAULT_CONFIG["training"]["beta1"]
    beta2: float = DEFAULT_CONFIG["training"]["beta2"]
    adam_eps: float = DEFAULT_CONFIG["training"]["adam_eps"]
    hidden: int = DEFAULT_CONFIG["training"]["hidden"]
    hidden_layers: int = DEFAULT_CONFIG["training"]["hidden_layers"]
    output_bound: Optional[float] = None
    use_pool: bool = DEFAULT_CONFIG["training"]["use_pool"]
    pool_factor: int = DEFAULT_CONFIG["training"]["pool_factor"]

    def __post_init__(self) -> None:
        if min(self.epochs, self.batch_size, self.snapshots_per_item, self.hidden, self.pool_factor) < 1:
            raise ConfigurationError("training counts must be positive")
        if self.hidden_layers < 0:
            raise ConfigurationError("hidden_layers must be non-negative")
        if self.learning_rate is None:
            object.__setattr__(self, "learning_rate",
                               float(DEFAULT_CONFIG["training"]["learning_rate"][self.scheme.kind]))
        if self.learning_rate <= 0.0:
            raise ConfigurationError("learning_rate must be positive")
        if self.scheme.kind == "categorical" and self.output_bound is None:
            object.__setattr__(self, "output_bound", float(DEFAULT_CONFIG["training"]["output_bound"]))

    @property
    def seed(self) -> int:
        return self.sim.seed

    @classmethod
    def from_namespace(cls, namespace: argparse.Namespace, scheme: Optional[str] = None,
                       sim: Optional[SimConfig] = None, **overrides) -> "TrainConfig":
        """
        Build from a loaded configuration: top-level `scheme`, the `training` and `simulation` sections.

        A `training.learning_rate` given as a number wins over the per-scheme defaults; `output_bound`
        applies to categorical schemes unless `bound_all_schemes` is true.
        """
        text = scheme or getattr(namespace, "scheme", None)
        if not text:
            raise ConfigurationError("the training configuration needs a 'scheme' entry")
        parsed = parse_scheme(str(text))
        training = vars(getattr(namespace, "training", argparse.Namespace())).copy()
        training.update({k: v for k, v in overrides.items() if v is not None})
        rate = training.get("learning_rate")
        if isinstance(rate, argparse.Namespace):
            rate = getattr(rate, parsed.kind, None)
        bound = training.get("output_bound")
        if isinstance(bound, str) and bound.lower() == "none":
            bound = None
        if parsed.kind != "categorical" and not training.get("bound_all_schemes", False):
            bound = None
        if sim is None:
            sim = SimConfig.from_namespace(getattr(namespace, "simulation", None))
        try:
            return cls(scheme=parsed, sim=sim,
                       epochs=int(training.get("epochs", cls.epochs)),
                       batch_size=int(training.get("batch_size", cls.batch_size)),
                       snapshots_per_item=int(training.get("snapshots_per_item", cls.snapshots_per_item)),
                       learning_rate=None if rate is None else float(rate),
                       beta1=float(training.get("beta1", cls.beta1)),
                       beta2=float(training.get("beta2", cls.beta2)),
                       adam_eps=float(training.get("adam_eps", cls.adam_eps)),
                       hidden=int(training.get("hidden", cls.hidden)),
                       hidden_layers=int(training.get("hidden_layers", cls.hidden_layers)),
                       output_bound=None if bound is None else float(bound),
                       use_pool=bool(training.get("use_pool", cls.use_pool)),
                       pool_factor=int(training.get("pool_factor", cls.pool_factor)))
        except (TypeError, ValueError) as err:
            raise ConfigurationError(f"invalid training setting: {err}") from err


@dataclass
class SnapshotItems:
    """Snapshot training items as parallel arrays; iterating yields (state, t, target, mask)."""
    states: np.ndarray
    times: np.ndarray
    targets: np.ndarray
    masks: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]

    def __iter__(self) -> Iterator[Tuple[np.ndarray, float, np.ndarray, np.ndarray]]:
        for i in range(len(self)):
            yield self.states[i], float(self.times[i]), self.targets[i], self.masks[i]

    @classmethod
    def concatenate(cls, parts: Sequence["SnapshotItems"]) -> "SnapshotItems":
        return cls(np.concatenate([p.states for p in parts]), np.concatenate([p.times for p in parts]),
                   np.concatenate([p.targets for p in parts]), np.concatenate([p.masks for p in parts]))


def snapshot_loss_items(scheme: Scheme, bridge: Trajectory, x, k: int, rng: np.random.Generator,
                        sim: Optional[SimConfig] = None) -> SnapshotItems:
    """
    Sample k steps of a bridge uniformly from 0..hit_index-1 (with replacement only when k exceeds the
    available steps) and pair each state with the bridge drift towards x and the active-coordinate mask.

    Categorical targets subtract the Ω-score, since the model adds it back as its baseline.

    Raises:
        PreconditionError: the bridge did not hit or does not exit at x.
    """
    x = np.asarray(x, dtype=float)
    if not bridge.hit or bridge.hit_index < 1:
        raise PreconditionError("snapshot items need a hit bridge with at least one step")
    if not np.allclose(bridge.exit_point, x, rtol=0.0, atol=1e-9):
        raise PreconditionError("bridge does not exit at the given point")
    steps = rng.choice(bridge.hit_index, size=k, replace=k > bridge.hit_index)
    states = bridge.states[steps]
    times = bridge.times[steps]
    drift = BridgeDrift(scheme, x[None, :])
    drift.bind([], build_time_grid(sim or SimConfig(), scheme.time_cap))
    targets = np.empty_like(states)
    masks = np.empty_like(states)
    for i, (step, state, t) in enumerate(zip(steps, states, times)):
        targets[i] = drift.evaluate(state[None, :], t, int(step), np.zeros(1, dtype=int))[0]
        masks[i] = ~scheme.absorbed_mask(state, t)
    if scheme.kind == "categorical":
        targets -= categorical_omega_score(np.clip(states, 0.0, 1.0), scheme.d, scheme.m)
    targets = np.where(masks > 0, targets, 0.0)
    return SnapshotItems(states, times, targets, masks)


Predictor = Union[Mlp, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def snapshot_loss(items: SnapshotItems, predictor: Predictor) -> float:
    """½·mean ‖mask ∘ (f(z, t) − target)‖² for a network or any callable f(states, times)."""
    if len(items) == 0:
        raise PreconditionError("snapshot loss needs at least one item")
    if isinstance(predictor, Mlp):
        pred = predictor.forward(items.states, items.times)
    else:
        pred = np.asarray(predictor(items.states, items.times), dtype=float)
    residual = items.masks * (pred - items.targets)
    return 0.5 * float(np.sum(residual ** 2)) / len(items)


def analytic_optimal_drift(atoms: np.ndarray, weights: np.ndarray, z0: np.ndarray, z: np.ndarray,
                           sigma: float = 1.0) -> np.ndarray:
    """
    E[b_t(z | X) | Z_t = z] for a Boolean target Σ_j w_j δ_{x_j}: the bridge drifts averaged with the
    posterior ∝ w_j Ber(x_j | z) / Ber(x_j | z0).
    """
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    weights = np.asarray(weights, dtype=float)
    z = np.atleast_2d(np.asarray(z, dtype=float))
    z0 = np.asarray(z0, dtype=float)
    like = np.prod(atoms[None, :, :] * z[:, None, :] + (1 - atoms[None, :, :]) * (1 - z[:, None, :]), axis=-1)
    prior = np.prod(atoms * z0 + (1 - atoms) * (1 - z0), axis=-1)
    post = weights[None, :] * like / prior[None, :]
    post /= post.sum(axis=1, keepdims=True)
    zc = np.clip(z, 1e-12, 1.0 - 1e-12)
    drifts = np.stack([boolean_log_likelihood_score(atom[None, :], zc) for atom in atoms], axis=1)
    return sigma ** 2 * np.einsum("nj,njd->nd", post, drifts)


def write_training_log(path: str, rows: Sequence[Tuple[int, float, float, float]]) -> None:
    CsvHandler().write_table(path, TRAINING_LOG_HEADER, rows)


def _epoch_bridges(cfg: TrainConfig, targets: np.ndarray, indices: np.ndarray, epoch: int, pool,
                   rng: np.random.Generator) -> Tuple[List[Trajectory], int, int]:
    if pool is not None:
        return draw_bridges(pool, targets, rng), 0, 0
    run = simulate_bridges(cfg.scheme, targets, cfg.sim, [epoch * _EPOCH_STRIDE + int(i) for i in indices])
    return run.trajectories, run.simulated, run.discarded


def train(data: SampleBatch, cfg: TrainConfig, net: Optional[Mlp] = None) -> Tuple[Mlp, List[Tuple]]:
    """
    Fit the drift network by Adam on snapshot losses of fresh bridges to each datum, every epoch.

    Returns:
        (trained network, training log rows (epoch, mean_loss, bridge_attrition, wall_ms)).

    Raises:
        PreconditionError: a datum is not on Ω.
        ConfigurationError: an epoch discards more than half of its bridges.
    """
    scheme = cfg.scheme
    points = np.asarray(data.points, dtype=float)
    if len(points) == 0:
        raise PreconditionError("training needs at least one data point")
    for row, x in enumerate(points):
        if not on_exit_set(scheme, x):
            raise PreconditionError(f"data point {row} is not on the exit set of {scheme.descriptor()}")
    if net is None:
        init_rng = RngStream(cfg.seed, 0, DRAW_CHANNEL, 1).generator()
        net = Mlp.for_scheme(scheme, init_rng, cfg.hidden, cfg.hidden_layers, cfg.output_bound)
    adam = AdamState.for_net(net, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)
    tracker = TimeTracker()
    log: List[Tuple] = []
    for epoch in range(cfg.epochs):
        rng = RngStream(cfg.seed, epoch, DRAW_CHANNEL).generator()
        losses = []
        simulated = discarded = 0
        with tracker.TimeCodeBlock("epoch"):
            pool = None
            if cfg.use_pool:
                pool = build_pool(scheme, cfg.sim, cfg.pool_factor * cfg.batch_size,
                                  first_stream=epoch * _EPOCH_STRIDE + _POOL_OFFSET)
            order = rng.permutation(len(points))
            for start in range(0, len(order), cfg.batch_size):
                indices = order[start:start + cfg.batch_size]
                bridges, sims, misses = _epoch_bridges(cfg, points[indices], indices, epoch, pool, rng)
                simulated += sims
                discarded += misses
                items = SnapshotItems.concatenate([
                    snapshot_loss_items(scheme, bridge, x, cfg.snapshots_per_item, rng, cfg.sim)
                    for bridge, x in zip(bridges, points[indices])])
                loss, grads = net.backward(items.states, items.times, items.targets, items.masks)
                adam_step(net, adam, grads)
                losses.append(loss)
        attrition = pool.attrition if pool is not None else (discarded / simulated if simulated else 0.0)
        if attrition > MAX_ATTRITION:
            raise ConfigurationError(f"epoch {epoch}: bridge attrition {attrition:.2f} exceeds "
                                     f"{MAX_ATTRITION}; increase max_steps or decrease dt")
        mean_loss = float(np.mean(losses))
        log.append((epoch, mean_loss, float(attrition), tracker.LastMilliseconds("epoch")))
        logger.info(f"epoch {epoch}: mean loss {mean_loss:.6g}, bridge attrition {attrition:.3f}")
    tracker.LogTimeReport("training")
    return net, log


def sample_model(net: Mlp, scheme: Scheme, cfg: SimConfig, n: int) -> SampleBatch:
    """
    Exits of the model process, drift = network + baseline, started at z0.

    Raises:
        PreconditionError: the model was trained for another scheme.
    """
    if net.scheme_descriptor and parse_scheme(net.scheme_descriptor) != scheme:
        raise PreconditionError(f"model was trained for '{net.scheme_descriptor}', not '{scheme.descriptor()}'")
    return simulate_exits(scheme, ModelDrift(net, scheme), scheme.z0_array, cfg, n)
