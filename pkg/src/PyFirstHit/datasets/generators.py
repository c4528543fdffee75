# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : generators.py
@Description: 玩具目标分布生成器与数据读取：球面 vMF 混合、经纬度 CSV、Bernoulli 乘积、小型随机块模型、类别乘积。
@Version    : v0.1.0
@Dependencies:
    - numpy
    - loguru
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from ..core.sdeCore import SampleBatch
from ..utils.csvHandler import CsvHandler
from ..utils.descriptors import ParseVector, SplitDescriptor
from ..utils.exceptions import ConfigurationError, ParseError, PreconditionError

SIMPLEX_TOL = 1e-9
MAX_SBM_NODES = 8


@dataclass(frozen=True)
class VmfComponent:
    mean: Tuple[float, ...]
    kappa: float
    weight: float


def _check_n(n: int) -> None:
    if n < 1:
        raise PreconditionError("generators need n >= 1")


def _wood_cosines(kappa: float, dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Cosines w = <x, mean> of vMF draws on S^(dim-1) by Wood's rejection sampler, vectorized in rounds.
    """
    p = dim - 1
    b = p / (np.sqrt(4.0 * kappa ** 2 + p ** 2) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + p * np.log(1.0 - x0 ** 2)
    out = np.empty(n)
    filled = 0
    while filled < n:
        want = n - filled
        z = rng.beta(p / 2.0, p / 2.0, size=2 * want)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=2 * want)
        accepted = w[kappa * w + p * np.log(1.0 - x0 * w) - c >= np.log(u)][:want]
        out[filled:filled + accepted.size] = accepted
        filled += accepted.size
    return out


def _inverse_cdf_cosines(kappa: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Cosines of vMF draws on S^2: w = 1 + log(u + (1 - u) e^(-2κ)) / κ."""
    u = rng.uniform(size=n)
    if kappa == 0.0:
        return 2.0 * u - 1.0
    with np.errstate(divide="ignore"):
        log_terms = np.logaddexp(np.log(u), np.log1p(-u) - 2.0 * kappa)
    return np.clip(1.0 + log_terms / kappa, -1.0, 1.0)


def _tangent_basis(mean: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of `mean`, shape (d, d - 1)."""
    u, _, _ = np.linalg.svd(mean[:, None])
    return u[:, 1:]


def sample_vmf(mean: Sequence[float], kappa: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n unit vectors from vMF(mean, κ) on the circle or the 2-sphere."""
    mean = np.asarray(mean, dtype=float)
    d = mean.size
    if d not in (2, 3):
        raise PreconditionError("vMF sampling supports d = 2 or d = 3")
    if kappa < 0.0:
        raise PreconditionError(f"concentration must be non-negative, got {kappa}")
    if abs(np.linalg.norm(mean) - 1.0) > 1e-9:
        raise PreconditionError("vMF mean must be a unit vector")
    w = _wood_cosines(kappa, 2, n, rng) if d == 2 else _inverse_cdf_cosines(kappa, n, rng)
    basis = _tangent_basis(mean)
    if d == 2:
        tangent = basis[:, 0][None, :] * rng.choice([-1.0, 1.0], size=n)[:, None]
    else:
        phi = rng.uniform(-np.pi, np.pi, size=n)
        tangent = np.cos(phi)[:, None] * basis[:, 0] + np.sin(phi)[:, None] * basis[:, 1]
    points = w[:, None] * mean + np.sqrt(np.maximum(1.0 - w ** 2, 0.0))[:, None] * tangent
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def vmf_mixture(d: int, components: Sequence[Union[VmfComponent, Tuple]], n: int, seed: int) -> SampleBatch:
    """
    Mixture of von Mises–Fisher laws on the circle (d=2) or the 2-sphere (d=3).

    Args:
        components: (mean, κ, weight) triples; weights positive and summing to 1.

    Usage:
        batch = vmf_mixture(2, [((1, 0), 5.0, 0.5), ((-1, 0), 5.0, 0.5)], 1000, seed=0)
    """
    _check_n(n)
    parts = [c if isinstance(c, VmfComponent) else VmfComponent(tuple(c[0]), float(c[1]), float(c[2]))
             for c in components]
    if not parts:
        raise PreconditionError("vmf_mixture needs at least one component")
    weights = np.array([c.weight for c in parts])
    if np.any(weights <= 0.0) or abs(weights.sum() - 1.0) > SIMPLEX_TOL:
        raise PreconditionError("mixture weights must be positive and sum to 1")
    for c in parts:
        if len(c.mean) != d:
            raise PreconditionError(f"component mean {c.mean} is not {d}-dimensional")
    rng = np.random.default_rng(seed)
    labels = rng.choice(len(parts), size=n, p=weights)
    points = np.empty((n, d))
    for index, c in enumerate(parts):
        rows = np.flatnonzero(labels == index)
        if rows.size:
            points[rows] = sample_vmf(c.mean, c.kappa, rows.size, rng)
    return SampleBatch.from_points(points)


def parse_components(text: str) -> List[VmfComponent]:
    """
    `kappa=5,mu=1,0,w=0.5;kappa=5,mu=-1,0,w=0.5` (weight defaults to an equal share).
    """
    chunks = [chunk for chunk in text.split(";") if chunk.strip()]
    parts = []
    for chunk in chunks:
        _, params = SplitDescriptor("vmf:" + chunk)
        if "mu" not in params:
            raise ConfigurationError(f"component '{chunk}' has no mu")
        mu = ParseVector(params["mu"])
        parts.append(VmfComponent(tuple(mu / np.linalg.norm(mu)), float(params.get("kappa", 0.0)),
                                  float(params.get("w", 1.0 / len(chunks)))))
    return parts


def ingest_latlon_csv(path: str) -> SampleBatch:
    """
    Read a `lat,lon` CSV in degrees into unit vectors (cos lat cos lon, cos lat sin lon, sin lat).

    Raises:
        ParseError: out-of-range or malformed row, with its line number.
    """
    _, header, rows = CsvHandler().read_csv(path)
    if [h.lower() for h in header[:2]] != ["lat", "lon"]:
        raise ParseError(f"{path}: expected header lat,lon, got {','.join(header)}", 1)
    points = np.empty((len(rows), 3))
    for i, (number, fields) in enumerate(rows):
        try:
            lat, lon = float(fields[0]), float(fields[1])
        except (IndexError, ValueError) as err:
            raise ParseError(f"malformed row {fields}", number) from err
        if abs(lat) > 90.0 or abs(lon) > 180.0:
            raise ParseError(f"latitude {lat} or longitude {lon} out of range", number)
        la, lo = np.radians(lat), np.radians(lon)
        points[i] = (np.cos(la) * np.cos(lo), np.cos(la) * np.sin(lo), np.sin(la))
    logger.info(f"ingested {len(rows)} locations from {path}")
    return SampleBatch.from_points(points)


def bernoulli_product(p: Sequence[float], n: int, seed: int) -> SampleBatch:
    """Independent Bernoulli coordinates with success probabilities p."""
    _check_n(n)
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any((p < 0.0) | (p > 1.0)):
        raise PreconditionError("bernoulli probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    return SampleBatch.from_points((rng.uniform(size=(n, p.size)) < p).astype(float))


def sbm_edge_probabilities(n_nodes: int, p_in: float, p_out: float) -> np.ndarray:
    """Upper-triangle edge probabilities (row-major, i < j) of two equal communities."""
    if n_nodes % 2 or n_nodes < 2:
        raise PreconditionError(f"tiny_sbm needs an even number of nodes, got {n_nodes}")
    if n_nodes > MAX_SBM_NODES:
        raise PreconditionError(f"tiny_sbm supports at most {MAX_SBM_NODES} nodes")
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise PreconditionError("edge probabilities must lie in [0, 1]")
    community = np.arange(n_nodes) >= n_nodes // 2
    i, j = np.triu_indices(n_nodes, k=1)
    return np.where(community[i] == community[j], p_in, p_out)


def tiny_sbm(n_nodes: int, p_in: float, p_out: float, n: int, seed: int) -> SampleBatch:
    """Two-community stochastic block model graphs as edge-indicator vectors."""
    return bernoulli_product(sbm_edge_probabilities(n_nodes, p_in, p_out), n, seed)


def categorical_product(probs: Union[Sequence[float], Sequence[Sequence[float]]], m: int, n: int,
                        seed: int) -> SampleBatch:
    """
    One-hot rows over m slots, each slot drawn independently.

    Args:
        probs: one d-simplex shared by every slot, or m simplices.

    Returns:
        SampleBatch: points of dimension d·m, slot-major.
    """
    _check_n(n)
    table = np.atleast_2d(np.asarray(probs, dtype=float))
    if table.shape[0] == 1:
        table = np.repeat(table, m, axis=0)
    if table.shape[0] != m:
        raise PreconditionError(f"expected {m} simplices, got {table.shape[0]}")
    if np.any(table < 0.0) or np.any(np.abs(table.sum(axis=1) - 1.0) > SIMPLEX_TOL):
        raise PreconditionError("each slot's probabilities must be non-negative and sum to 1")
    d = table.shape[1]
    rng = np.random.default_rng(seed)
    points = np.zeros((n, m, d))
    for slot in range(m):
        labels = rng.choice(d, size=n, p=table[slot] / table[slot].sum())
        points[np.arange(n), slot, labels] = 1.0
    return SampleBatch.from_points(points.reshape(n, m * d))
