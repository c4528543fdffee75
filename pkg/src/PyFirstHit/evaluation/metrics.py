# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : metrics.py
@Description: 样本比较：按方案分箱的直方图、总变差、KS 统计量、一维 W1 距离，以及解析分布的分箱概率与 CDF。
@Version    : v0.1.0
@Dependencies:
    - numpy
    - scipy
@Changelog  :
    - v0.1.0: Circle, equal-area sphere, Boolean, categorical and real binnings; analytic references.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special, stats

from ..core.hitSchemes import halfspace_passage_cdf, halfspace_truncated_passage_cdf, sphere_poisson_density
from ..core.sdeCore import SampleBatch
from ..utils.constants import DEFAULT_CONFIG
from ..utils.descriptors import ParseVector, RequireKeys, SplitDescriptor
from ..utils.exceptions import ConfigurationError, PreconditionError

MAX_DISCRETE_BINS = 1 << 20

Points = Union[SampleBatch, np.ndarray, Sequence]


@dataclass(frozen=True)
class Binning:
    """
    A partition of a support into bins.

    kind: "circle", "sphere2", "boolean", "categorical" or "real"; sizes holds the kind's parameters
    (bins; lat, lon; d; d, m; lo, hi, bins).
    """
    kind: str
    sizes: Tuple[float, ...]

    @property
    def bins(self) -> int:
        if self.kind == "circle":
            return int(self.sizes[0])
        if self.kind == "sphere2":
            return int(self.sizes[0] * self.sizes[1])
        if self.kind == "boolean":
            return 1 << int(self.sizes[0])
        if self.kind == "categorical":
            return int(self.sizes[0]) ** int(self.sizes[1])
        return int(self.sizes[2])

    @property
    def edges(self) -> np.ndarray:
        """Bin edges of the one-dimensional binnings (angle for circle, value for real)."""
        if self.kind == "circle":
            return np.linspace(-np.pi, np.pi, self.bins + 1)
        if self.kind == "real":
            return np.linspace(self.sizes[0], self.sizes[1], self.bins + 1)
        raise PreconditionError(f"{self.kind} binning has no one-dimensional edges")

    def descriptor(self) -> str:
        if self.kind == "sphere2":
            return f"sphere2:{int(self.sizes[0])}x{int(self.sizes[1])}"
        if self.kind == "real":
            return f"real:{self.sizes[0]!r},{self.sizes[1]!r},{int(self.sizes[2])}"
        return f"{self.kind}:" + ",".join(str(int(v)) for v in self.sizes)


def parse_binning(text: str) -> Binning:
    """
    Usage:
        parse_binning("circle:36"); parse_binning("sphere2:16x32"); parse_binning("boolean:4")
        parse_binning("categorical:3,1"); parse_binning("real:0,5,40")
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "circle":
            sizes: Tuple[float, ...] = (int(rest),)
        elif kind == "sphere2":
            lat, _, lon = rest.partition("x")
            sizes = (int(lat), int(lon))
        elif kind == "boolean":
            sizes = (int(rest),)
        elif kind == "categorical":
            d, m = rest.split(",")
            sizes = (int(d), int(m))
        elif kind == "real":
            lo, hi, bins = rest.split(",")
            sizes = (float(lo), float(hi), int(bins))
            if sizes[1] <= sizes[0]:
                raise ConfigurationError(f"real binning needs lo < hi: '{text}'")
        else:
            raise ConfigurationError(f"unknown binning '{text}', valid: circle:<bins>, sphere2:<lat>x<lon>, "
                                     "boolean:<d>, categorical:<d>,<m>, real:<lo>,<hi>,<bins>")
    except ValueError as err:
        raise ConfigurationError(f"malformed binning '{text}'") from err
    binning = Binning(kind, sizes)
    if min(binning.sizes[-1:] if kind == "real" else binning.sizes) < 1:
        raise ConfigurationError(f"binning sizes must be positive: '{text}'")
    if kind in ("boolean", "categorical") and binning.bins > MAX_DISCRETE_BINS:
        raise ConfigurationError(f"{text} has {binning.bins} bins, more than {MAX_DISCRETE_BINS}")
    return binning


@dataclass
class Histogram:
    binning: Binning
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.total if self.total else np.zeros_like(self.counts, dtype=float)


def _as_points(points: Points) -> np.ndarray:
    if isinstance(points, SampleBatch):
        return points.points
    return np.atleast_2d(np.asarray(points, dtype=float))


def exit_angle(points: Points) -> np.ndarray:
    """atan2(x2, x1) of points on the circle, in [-π, π]."""
    pts = _as_points(points)
    return np.arctan2(pts[:, 1], pts[:, 0])


def bin_index(points: Points, binning: Binning) -> np.ndarray:
    """Bin of each point."""
    if binning.kind == "real":
        values = np.asarray(points.points[:, 0] if isinstance(points, SampleBatch) else points, dtype=float).ravel()
        lo, hi, bins = binning.sizes
        return np.clip(np.floor((values - lo) / (hi - lo) * bins).astype(int), 0, int(bins) - 1)
    pts = _as_points(points)
    if binning.kind == "circle":
        if pts.shape[1] != 2:
            raise PreconditionError("circle binning needs 2-d points")
        bins = binning.bins
        return np.clip(np.floor((exit_angle(pts) + np.pi) / (2 * np.pi) * bins).astype(int), 0, bins - 1)
    if binning.kind == "sphere2":
        if pts.shape[1] != 3:
            raise PreconditionError("sphere2 binning needs 3-d points")
        lat, lon = (int(v) for v in binning.sizes)
        unit = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        band = np.clip(np.floor((unit[:, 2] + 1.0) / 2.0 * lat).astype(int), 0, lat - 1)
        azimuth = np.arctan2(unit[:, 1], unit[:, 0])
        sector = np.clip(np.floor((azimuth + np.pi) / (2 * np.pi) * lon).astype(int), 0, lon - 1)
        return band * lon + sector
    if binning.kind == "boolean":
        d = int(binning.sizes[0])
        if pts.shape[1] != d:
            raise PreconditionError(f"boolean binning needs {d}-d points")
        bits = np.rint(pts).astype(int)
        return bits @ (1 << np.arange(d - 1, -1, -1))
    d, m = (int(v) for v in binning.sizes)
    if pts.shape[1] != d * m:
        raise PreconditionError(f"categorical binning needs {d * m}-d points")
    labels = pts.reshape(-1, m, d).argmax(axis=2)
    return labels @ (d ** np.arange(m - 1, -1, -1))


def histogram(points: Points, binning: Union[Binning, str]) -> Histogram:
    binning = parse_binning(binning) if isinstance(binning, str) else binning
    index = bin_index(points, binning)
    return Histogram(binning, np.bincount(index, minlength=binning.bins))


def tv_distance(a: Histogram, b: Union[Histogram, np.ndarray]) -> float:
    """
    ½ Σ |a_i / N_a − b_i / N_b|; `b` may be a probability vector over the same bins.

    Raises:
        PreconditionError: different binnings or an empty histogram.
    """
    if a.total == 0:
        raise PreconditionError("empty histogram")
    if isinstance(b, Histogram):
        if a.binning != b.binning:
            raise PreconditionError(f"binning mismatch: {a.binning.descriptor()} vs {b.binning.descriptor()}")
        if b.total == 0:
            raise PreconditionError("empty histogram")
        probs = b.frequencies
    else:
        probs = np.asarray(b, dtype=float)
        if probs.shape != a.counts.shape:
            raise PreconditionError("probability vector does not match the binning")
    return 0.5 * float(np.abs(a.frequencies - probs).sum())


def ks_statistic(xs, ys: Union[Sequence[float], np.ndarray, Callable]) -> float:
    """Two-sample KS statistic, or one-sample against a CDF callable."""
    xs = np.asarray(xs, dtype=float).ravel()
    if xs.size == 0:
        raise PreconditionError("ks_statistic needs a non-empty sample")
    if callable(ys):
        return float(stats.kstest(xs, ys).statistic)
    ys = np.asarray(ys, dtype=float).ravel()
    if ys.size == 0:
        raise PreconditionError("ks_statistic needs a non-empty sample")
    return float(stats.ks_2samp(xs, ys).statistic)


def w1_1d(xs, ys) -> float:
    """Area between the two empirical quantile functions."""
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.size == 0 or ys.size == 0:
        raise PreconditionError("w1_1d needs non-empty samples")
    return float(stats.wasserstein_distance(xs, ys))


# ---------------------------------------------------------------------------
# Analytic references
# ---------------------------------------------------------------------------

def _circle_bin_probabilities(density: Callable[[float], float], bins: int) -> np.ndarray:
    edges = np.linspace(-np.pi, np.pi, bins + 1)
    probs = np.array([integrate.quad(density, lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:])])
    return probs / probs.sum()


def _sphere2_bin_probabilities(density: Callable[[np.ndarray], np.ndarray], lat: int, lon: int) -> np.ndarray:
    """Integrate a density on S^2 over the equal-area bins with Gauss–Legendre rules in (z, azimuth)."""
    nodes, weights = np.polynomial.legendre.leggauss(12)
    z_edges = np.linspace(-1.0, 1.0, lat + 1)
    a_edges = np.linspace(-np.pi, np.pi, lon + 1)
    probs = np.empty((lat, lon))
    for i in range(lat):
        zs = 0.5 * (z_edges[i + 1] - z_edges[i]) * nodes + 0.5 * (z_edges[i + 1] + z_edges[i])
        for j in range(lon):
            az = 0.5 * (a_edges[j + 1] - a_edges[j]) * nodes + 0.5 * (a_edges[j + 1] + a_edges[j])
            zz, aa = np.meshgrid(zs, az, indexing="ij")
            rho = np.sqrt(1.0 - zz ** 2)
            pts = np.stack([rho * np.cos(aa), rho * np.sin(aa), zz], axis=-1).reshape(-1, 3)
            vals = density(pts).reshape(zz.shape)
            jac = 0.25 * (z_edges[i + 1] - z_edges[i]) * (a_edges[j + 1] - a_edges[j])
            probs[i, j] = jac * weights @ vals @ weights
    probs = probs.ravel()
    return probs / probs.sum()


def analytic_histogram(descriptor: str, binning: Union[Binning, str]) -> np.ndarray:
    """
    Bin probabilities of a reference law.

    Descriptors: `uniform`, `poisson:z=<csv>` (harmonic measure of the unit circle or 2-sphere seen from z),
    `vmf:kappa=<k>,mu=<csv>`, `bernoulli:p=<csv>`, `categorical:p=<csv>` (same law in every slot).
    """
    binning = parse_binning(binning) if isinstance(binning, str) else binning
    kind, params = SplitDescriptor(descriptor)
    if kind == "uniform":
        if binning.kind == "real":
            raise ConfigurationError("uniform reference needs a circle, sphere or discrete binning")
        return np.full(binning.bins, 1.0 / binning.bins)
    if kind == "poisson":
        RequireKeys(kind, params, ["z"])
        z = ParseVector(params["z"])
        if np.linalg.norm(z) >= 1.0:
            raise ConfigurationError("poisson reference needs an interior z")
        if binning.kind == "circle" and z.size == 2:
            return _circle_bin_probabilities(
                lambda a: sphere_poisson_density(z, np.stack([np.cos(a), np.sin(a)], axis=-1), 2) / (2 * np.pi),
                binning.bins)
        if binning.kind == "sphere2" and z.size == 3:
            lat, lon = (int(v) for v in binning.sizes)
            return _sphere2_bin_probabilities(lambda x: sphere_poisson_density(z, x, 3), lat, lon)
        raise ConfigurationError("poisson reference needs circle or sphere2 binning of matching dimension")
    if kind == "vmf":
        RequireKeys(kind, params, ["kappa", "mu"])
        kappa = float(params["kappa"])
        mu = ParseVector(params["mu"])
        mu = mu / np.linalg.norm(mu)
        if binning.kind == "circle" and mu.size == 2:
            phase = np.arctan2(mu[1], mu[0])
            # 指数缩放的 Bessel 函数避免大 κ 溢出
            return _circle_bin_probabilities(
                lambda a: np.exp(kappa * (np.cos(a - phase) - 1.0)) / (2 * np.pi * special.i0e(kappa)), binning.bins)
        if binning.kind == "sphere2" and mu.size == 3:
            lat, lon = (int(v) for v in binning.sizes)
            return _sphere2_bin_probabilities(lambda x: np.exp(kappa * (x @ mu - 1.0)), lat, lon)
        raise ConfigurationError("vmf reference needs circle or sphere2 binning of matching dimension")
    if kind == "bernoulli":
        RequireKeys(kind, params, ["p"])
        p = ParseVector(params["p"])
        if binning.kind != "boolean" or p.size != int(binning.sizes[0]):
            raise ConfigurationError("bernoulli reference needs a boolean binning of matching dimension")
        bits = (np.arange(binning.bins)[:, None] >> np.arange(p.size - 1, -1, -1)) & 1
        return np.prod(np.where(bits == 1, p, 1.0 - p), axis=1)
    if kind == "categorical":
        RequireKeys(kind, params, ["p"])
        p = ParseVector(params["p"])
        if binning.kind != "categorical" or p.size != int(binning.sizes[0]):
            raise ConfigurationError("categorical reference needs a categorical binning of matching d")
        d, m = (int(v) for v in binning.sizes)
        labels = (np.arange(binning.bins)[:, None] // d ** np.arange(m - 1, -1, -1)) % d
        return np.prod(p[labels], axis=1)
    raise ConfigurationError(f"unknown analytic reference '{descriptor}', valid: uniform, poisson:z=<csv>, "
                             "vmf:kappa=<k>,mu=<csv>, bernoulli:p=<csv>, categorical:p=<csv>")


def analytic_cdf(descriptor: str) -> Callable[[np.ndarray], np.ndarray]:
    """
    One-dimensional reference CDFs for ks_statistic.

    Descriptors: `uniform-angle`, `passage:gap=<a>,sy=<s>[,T=<horizon>]`, `cauchy:loc=<c>,scale=<s>`.
    """
    kind, params = SplitDescriptor(descriptor)
    if kind == "uniform-angle":
        return lambda a: np.clip((np.asarray(a) + np.pi) / (2 * np.pi), 0.0, 1.0)
    if kind == "passage":
        RequireKeys(kind, params, ["gap"])
        gap = float(params["gap"])
        sy = float(params.get("sy", 1.0))
        if "T" in params:
            horizon = float(params["T"])
            return lambda t: halfspace_truncated_passage_cdf(gap, sy, np.maximum(t, 0.0), horizon)
        return lambda t: halfspace_passage_cdf(gap, sy, np.maximum(t, 0.0))
    if kind == "cauchy":
        law = stats.cauchy(loc=float(params.get("loc", 0.0)), scale=float(params.get("scale", 1.0)))
        return law.cdf
    raise ConfigurationError(f"unknown analytic cdf '{descriptor}', valid: uniform-angle, "
                             "passage:gap=<a>,sy=<s>[,T=<t>], cauchy:loc=<c>,scale=<s>")


def default_binning(points: np.ndarray, bins: Optional[int] = None) -> Binning:
    """Binning guessed from the data: circle, sphere2, boolean, or real for 1-d data."""
    evaluation = DEFAULT_CONFIG["evaluation"]
    pts = np.atleast_2d(points)
    if pts.shape[1] == 1:
        lo, hi = float(pts.min()), float(pts.max())
        return Binning("real", (lo, hi if hi > lo else lo + 1.0, bins or evaluation["time_bins"]))
    if np.all((pts == 0.0) | (pts == 1.0)):
        return Binning("boolean", (pts.shape[1],))
    if pts.shape[1] == 2:
        return Binning("circle", (bins or evaluation["circle_bins"],))
    if pts.shape[1] == 3:
        return Binning("sphere2", (evaluation["sphere_lat_bands"], evaluation["sphere_lon_bins"]))
    raise ConfigurationError(f"no default binning for {pts.shape[1]}-d data, pass --binning")
