# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : hSampler.py
@Description: 以蒙特卡洛估计的 h 函数及其得分驱动 h 变换过程，从给定密度比的目标分布近似采样。
@Version    : v0.1.0
@Dependencies:
    - numpy
    - scipy
    - loguru
@Changelog  :
    - v0.1.0: Boolean, sphere and half-space particle estimators, built-in density ratios.
"""
import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import special

from .hitSchemes import (Scheme, bernoulli_exit_likelihood, halfspace_exit_density, halfspace_exit_sample,
                         halfspace_exit_scale, halfspace_exit_score)
from .sdeCore import (DRAW_CHANNEL, PARTICLE_CHANNEL, BlockedNormals, DriftEvaluator, RngStream, SampleBatch,
                      SimConfig, TimeGrid, simulate_exits)
from ..utils.descriptors import ParseVector, RequireKeys, SplitDescriptor
from ..utils.exceptions import ConfigurationError, DegenerateEstimateError, PreconditionError

H_SCHEMES = ("sphere", "boolean", "halfspace")
# 每个随机流一次预抽取的粒子步数
PARTICLE_BLOCK = 8
EXACT_BOOLEAN_MAX_D = 12


@dataclass(frozen=True)
class DensityRatio:
    """
    π̂*(x) = dπ*/dQ_Ω(x) on Ω, evaluated over rows of exit points.
    """
    evaluator: Callable[[np.ndarray], np.ndarray]
    descriptor: str

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self.evaluator(points), dtype=float).reshape(points.shape[0])


def uniform_ratio() -> DensityRatio:
    return DensityRatio(lambda x: np.ones(x.shape[0]), "uniform")


def vmf_log_normalizer(kappa: float, d: int) -> float:
    """log C_d(κ) of the von Mises–Fisher density on S^(d-1) w.r.t. the unnormalized surface measure."""
    if kappa == 0.0:
        return special.gammaln(0.5 * d) - np.log(2.0) - 0.5 * d * np.log(np.pi)
    nu = 0.5 * d - 1.0
    # ive(ν, κ) = I_ν(κ) e^(-κ)
    return nu * np.log(kappa) - 0.5 * d * np.log(2.0 * np.pi) - np.log(special.ive(nu, kappa)) - kappa


def sphere_log_area(d: int) -> float:
    return np.log(2.0) + 0.5 * d * np.log(np.pi) - special.gammaln(0.5 * d)


def vmf_ratio(kappa: float, mu: np.ndarray) -> DensityRatio:
    """vMF(μ, κ) against the uniform harmonic measure of the ball center."""
    mu = np.asarray(mu, dtype=float)
    if kappa < 0.0:
        raise ConfigurationError("vMF concentration must be non-negative")
    norm = np.linalg.norm(mu)
    if norm == 0.0:
        raise ConfigurationError("vMF mean direction must be non-zero")
    mu = mu / norm
    d = mu.size
    log_const = vmf_log_normalizer(kappa, d) + sphere_log_area(d)
    return DensityRatio(lambda x: np.exp(log_const + kappa * (x @ mu)),
                        f"vmf:kappa={kappa!r},mu=" + ",".join(repr(v) for v in mu))


def bernoulli_ratio(p: np.ndarray, z0: np.ndarray) -> DensityRatio:
    """Ber(x | p) against the Boolean harmonic measure Ber(x | z0)."""
    p = np.asarray(p, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    if p.shape != z0.shape or np.any(p < 0.0) or np.any(p > 1.0):
        raise ConfigurationError("bernoulli ratio needs p in [0,1]^d matching the scheme dimension")
    return DensityRatio(lambda x: bernoulli_exit_likelihood(x, p) / bernoulli_exit_likelihood(x, z0),
                        "bernoulli:p=" + ",".join(repr(v) for v in p))


def gaussian_ratio(mu: np.ndarray, scale: float, scheme: Scheme) -> DensityRatio:
    """Isotropic Gaussian N(μ, s² I) on the exit plane against the Cauchy exit law from the scheme's z0."""
    mu = np.asarray(mu, dtype=float)
    z0 = scheme.z0_array
    gap = scheme.ymax - z0[-1]
    s = halfspace_exit_scale(gap, scheme.sigma_x, scheme.sigma_y)
    d = scheme.d
    if mu.size != d or scale <= 0.0:
        raise ConfigurationError("gaussian ratio needs mu of the data dimension and s > 0")

    def _ratio(x: np.ndarray) -> np.ndarray:
        u = x[:, :d]
        log_gauss = -0.5 * np.sum((u - mu) ** 2, axis=1) / scale ** 2 - d * np.log(scale) - 0.5 * d * np.log(2 * np.pi)
        return np.exp(log_gauss) / halfspace_exit_density(u, z0[:d], gap, scale=float(s))

    return DensityRatio(_ratio, f"gaussian:mu={','.join(repr(v) for v in mu)},s={scale!r}")


def parse_ratio(text: str, scheme: Scheme) -> DensityRatio:
    """
    Build a density ratio from its descriptor.

    Usage:
        parse_ratio("vmf:kappa=5,mu=1,0", parse_scheme("sphere:d=2"))
        parse_ratio("bernoulli:p=0.8,0.8", parse_scheme("boolean:d=2"))
        parse_ratio("uniform", scheme)
    """
    kind, params = SplitDescriptor(text)
    if kind == "uniform":
        return uniform_ratio()
    if kind == "vmf":
        RequireKeys(kind, params, ["kappa", "mu"])
        if scheme.kind != "sphere":
            raise ConfigurationError("vmf ratios need a sphere scheme")
        mu = ParseVector(params["mu"])
        if mu.size != scheme.d:
            raise ConfigurationError(f"vmf mean has dimension {mu.size}, scheme needs {scheme.d}")
        return vmf_ratio(float(params["kappa"]), mu)
    if kind == "bernoulli":
        RequireKeys(kind, params, ["p"])
        if scheme.kind != "boolean":
            raise ConfigurationError("bernoulli ratios need a boolean scheme")
        return bernoulli_ratio(ParseVector(params["p"]), scheme.z0_array)
    if kind == "gaussian":
        RequireKeys(kind, params, ["mu", "s"])
        if scheme.kind != "halfspace":
            raise ConfigurationError("gaussian ratios need a halfspace scheme")
        return gaussian_ratio(ParseVector(params["mu"]), float(params["s"]), scheme)
    raise ConfigurationError(f"unknown ratio descriptor '{text}', valid: uniform, vmf:kappa=<k>,mu=<csv>, "
                             "bernoulli:p=<csv>, gaussian:mu=<csv>,s=<v>")


# ---------------------------------------------------------------------------
# Particle estimators
# ---------------------------------------------------------------------------

def particle_shape(scheme: Scheme, m: int) -> Tuple[int, int]:
    """Shape of the standard normals one estimate consumes."""
    if scheme.kind not in H_SCHEMES:
        raise PreconditionError(f"h-transform sampling supports {H_SCHEMES}, not '{scheme.kind}'")
    if scheme.kind == "halfspace" and scheme.accel is not None:
        raise PreconditionError("h-transform sampling needs the unaccelerated half-space kernel")
    if m < 1:
        raise PreconditionError("particle count m must be at least 1")
    return m, scheme.d + 1 if scheme.kind == "halfspace" else scheme.d


def h_score_from_normals(scheme: Scheme, ratio: DensityRatio, z: np.ndarray, gauss: np.ndarray,
                         t: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Monte Carlo h and ∇_z log h for a batch of states from pre-drawn standard normals.

    Boolean and half-space particles are exact kernel draws (Boolean uniforms are Φ of the normals);
    sphere particles are uniform directions weighted by the Poisson kernel.

    Args:
        z (np.ndarray): states, shape (n, D).
        gauss (np.ndarray): standard normals, shape (n, m, k) with (m, k) = particle_shape().

    Returns:
        (h estimates of shape (n,), score estimates of shape (n, D)).

    Raises:
        DegenerateEstimateError: every particle of some row has zero weight.
    """
    n, dim = z.shape
    m = gauss.shape[1]
    if scheme.kind == "boolean":
        absorbed = scheme.absorbed_mask(z, t)
        uniforms = special.ndtr(gauss)
        x = (uniforms < z[:, None, :]).astype(float)
        x = np.where(absorbed[:, None, :], np.round(z)[:, None, :], x)
        zc = np.clip(z, 1e-12, 1.0 - 1e-12)[:, None, :]
        grads = (2.0 * x - 1.0) / (x * zc + (1.0 - x) * (1.0 - zc))
        grads = np.where(absorbed[:, None, :], 0.0, grads)
        kernel = np.ones((n, m))
    elif scheme.kind == "sphere":
        x = gauss / np.linalg.norm(gauss, axis=-1, keepdims=True)
        inside = 1.0 - np.sum(z * z, axis=-1)[:, None]
        diff = x - z[:, None, :]
        dist2 = np.sum(diff * diff, axis=-1)
        kernel = inside / dist2 ** (0.5 * dim)
        grads = -2.0 * z[:, None, :] / inside[..., None] + dim * diff / dist2[..., None]
    else:
        gap = scheme.ymax - z[:, -1]
        u = halfspace_exit_sample(z[:, :-1], gap, scheme.sigma_x, scheme.sigma_y, gauss)
        x = np.concatenate([u, np.full(u.shape[:-1] + (1,), scheme.ymax)], axis=-1)
        grads = halfspace_exit_score(np.broadcast_to(z[:, None, :], x.shape), x, scheme.ymax,
                                     scheme.sigma_x, scheme.sigma_y)
        kernel = np.ones((n, m))
    weights = ratio(x.reshape(n * m, dim)).reshape(n, m) * kernel
    total = weights.sum(axis=1)
    if np.any(~(total > 0.0)):
        row = int(np.flatnonzero(~(total > 0.0))[0])
        raise DegenerateEstimateError(f"all {m} particle weights vanished", t=t, state=z[row].copy())
    score = np.einsum("nm,nmd->nd", weights, grads) / total[:, None]
    return total / m, score


def mc_h_score(scheme: Scheme, ratio: DensityRatio, z, t: float, m: int,
               rng: np.random.Generator) -> Tuple[float, np.ndarray]:
    """
    Estimate h_t(z) = E[π̂*(X) | Z_t = z] and its score with m particles.

    Usage:
        h, score = mc_h_score(scheme, parse_ratio("bernoulli:p=0.8,0.8", scheme), [0.5, 0.5], 0.0, 64, rng)
    """
    shape = particle_shape(scheme, m)
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape[1] != scheme.state_dim:
        raise PreconditionError(f"state has dimension {z.shape[1]}, scheme needs {scheme.state_dim}")
    h, score = h_score_from_normals(scheme, ratio, z, rng.standard_normal((1,) + shape), t)
    return float(h[0]), score[0]


def exact_boolean_h(ratio: DensityRatio, z, d: int) -> Tuple[float, np.ndarray]:
    """
    h(z) = Σ_x π̂*(x) Ber(x | z) and ∇ log h by enumerating {0,1}^d.

    Raises:
        PreconditionError: d > 12.
    """
    if d > EXACT_BOOLEAN_MAX_D:
        raise PreconditionError(f"exact enumeration is limited to d <= {EXACT_BOOLEAN_MAX_D}")
    z = np.asarray(z, dtype=float)
    support = np.array(list(itertools.product((0.0, 1.0), repeat=d)))
    weights = ratio(support) * bernoulli_exit_likelihood(support, z[None, :])
    h = float(weights.sum())
    grad = np.zeros(d)
    for i in range(d):
        tilted = z.copy()
        tilted[i] = 1.0
        upper = np.sum(ratio(support) * bernoulli_exit_likelihood(support, tilted[None, :]))
        tilted[i] = 0.0
        lower = np.sum(ratio(support) * bernoulli_exit_likelihood(support, tilted[None, :]))
        grad[i] = upper - lower
    return h, grad / h


def boolean_h_check(scheme: Scheme, ratio: DensityRatio, m: int, seed: int) -> Tuple[float, float]:
    """
    h(z0) by enumeration next to its m-particle estimate, for Boolean schemes small enough to enumerate.

    Returns:
        (exact h, particle estimate)
    """
    if scheme.kind != "boolean":
        raise PreconditionError(f"exact h needs a boolean scheme, got {scheme.kind}")
    exact, _ = exact_boolean_h(ratio, scheme.z0_array, scheme.d)
    rng = RngStream(seed, 0, DRAW_CHANNEL).generator()
    estimate, _ = mc_h_score(scheme, ratio, scheme.z0_array, 0.0, m, rng)
    return exact, estimate


class HTransformDrift(DriftEvaluator):
    """
    b_t(z) + σ_t² ∇_z log ĥ_t(z) with fresh particles at every step, drawn from each trajectory's own
    particle substream.
    """

    def __init__(self, scheme: Scheme, ratio: DensityRatio, m: int) -> None:
        self.scheme = scheme
        self.ratio = ratio
        self.shape = particle_shape(scheme, m)
        self.bank: Optional[BlockedNormals] = None
        self.grid: Optional[TimeGrid] = None

    def bind(self, streams: Sequence[RngStream], grid: TimeGrid) -> None:
        self.bank = BlockedNormals([s.on_channel(PARTICLE_CHANNEL) for s in streams], self.shape, PARTICLE_BLOCK)
        self.grid = grid

    def evaluate(self, z, t, k, rows):
        _, score = h_score_from_normals(self.scheme, self.ratio, z, self.bank.draw(rows), t)
        sigma = self.grid.sigmas[k] * self.scheme.noise_scale
        return self.scheme.baseline_drift(z, t) + sigma ** 2 * score


def sample_h_transform(scheme: Scheme, ratio: DensityRatio, cfg: SimConfig, m: int, n: int) -> SampleBatch:
    """
    Approximate samples of π* from n runs of the estimated h-transform process started at z0.
    """
    if scheme.kind == "boolean" and scheme.d <= EXACT_BOOLEAN_MAX_D:
        exact, estimate = boolean_h_check(scheme, ratio, m, cfg.seed)
        logger.info(f"h(z0) of {ratio.descriptor}: exact {exact:.6g}, {m}-particle estimate {estimate:.6g}")
    drift = HTransformDrift(scheme, ratio, m)
    batch = simulate_exits(scheme, drift, scheme.z0_array, cfg, n)
    logger.info(f"h-transform sampling of {ratio.descriptor} with m={m}: {len(batch)} exits")
    return batch
