# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : hitSchemes.py
@Description: 命中方案目录：定义域判定、吸收掩码、Poisson 核与其得分、桥漂移、投影与对称变换。
@Version    : v0.1.0
@Dependencies:
    - numpy
    - scipy
@Changelog  :
    - v0.1.0: Sphere, Boolean, categorical, fixed-time and half-space schemes.
"""
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import special

from ..utils.constants import DEFAULT_CONFIG
from ..utils.descriptors import ParseVector, SplitDescriptor
from ..utils.exceptions import ConfigurationError, PreconditionError, SingularInputError

SCHEME_KINDS = ("sphere", "boolean", "categorical", "fixedtime", "halfspace")
SYMMETRIC_KINDS = ("sphere", "boolean", "categorical")

# 固定时间方案的时间比较容差
_TIME_RTOL = 1e-12


class OnDomain(NamedTuple):
    whole: bool
    mask: np.ndarray


@dataclass(frozen=True)
class Scheme:
    """
    A hitting scheme: the domain V, the exit set Ω inside it and the baseline process that is absorbed on Ω.

    Attributes:
        kind (str): one of "sphere", "boolean", "categorical", "fixedtime", "halfspace".
        d (int): dimension (categories per slot for "categorical", data dimension for "halfspace").
        m (int): number of categorical slots.
        T (float): terminal time of "fixedtime".
        ymax (float): exit level of the age coordinate of "halfspace".
        sigma_x (float): noise scale of the data coordinates of "halfspace".
        sigma_y (float): noise scale of the age coordinate of "halfspace".
        accel (Optional[float]): horizon of the accelerated half-space process B(. | tau <= accel).
        hit_eps (float): hit tolerance; defaults per kind come from DEFAULT_CONFIG["hit_eps"].
        z0 (Tuple[float, ...]): interior initial point.
    """
    kind: str
    d: int
    m: int = 1
    T: float = 1.0
    ymax: float = 1.0
    sigma_x: float = 1.0
    sigma_y: float = 1.0
    accel: Optional[float] = None
    hit_eps: Optional[float] = None
    z0: Optional[Tuple[float, ...]] = field(default=None)

    def __post_init__(self) -> None:
        if self.kind not in SCHEME_KINDS:
            raise ConfigurationError(f"unknown scheme '{self.kind}', valid: {', '.join(SCHEME_KINDS)}")
        if self.d < 1 or self.m < 1:
            raise ConfigurationError("scheme dimensions must be positive")
        if self.hit_eps is None:
            object.__setattr__(self, "hit_eps", float(DEFAULT_CONFIG["hit_eps"][self.kind]))
        if self.z0 is None:
            object.__setattr__(self, "z0", tuple(self._default_z0()))
        else:
            object.__setattr__(self, "z0", tuple(float(v) for v in self.z0))
        self._validate()

    # ------------------------------------------------------------------ layout
    @property
    def state_dim(self) -> int:
        if self.kind == "categorical":
            return self.d * self.m
        if self.kind == "halfspace":
            return self.d + 1
        return self.d

    @property
    def z0_array(self) -> np.ndarray:
        return np.array(self.z0, dtype=float)

    @property
    def coordinatewise(self) -> bool:
        return self.kind in ("boolean", "categorical")

    @property
    def time_cap(self) -> Optional[float]:
        """Time at which the time grid stops; only fixed-time hitting carries one."""
        return self.T if self.kind == "fixedtime" else None

    @property
    def noise_scale(self) -> np.ndarray:
        scale = np.ones(self.state_dim)
        if self.kind == "halfspace":
            scale[:-1] = self.sigma_x
            scale[-1] = self.sigma_y
        return scale

    def _default_z0(self) -> np.ndarray:
        if self.kind in ("boolean", "categorical"):
            return np.full(self.state_dim, 0.5)
        return np.zeros(self.state_dim)

    def _validate(self) -> None:
        z0 = self.z0_array
        if z0.shape != (self.state_dim,):
            raise ConfigurationError(f"z0 has dimension {z0.size}, scheme needs {self.state_dim}")
        eps = self.hit_eps
        if self.kind == "sphere":
            if not 0.0 < eps < 1.0:
                raise ConfigurationError("sphere hit_eps must lie in (0, 1)")
            if np.linalg.norm(z0) >= 1.0 - eps:
                raise ConfigurationError("sphere z0 must lie strictly inside the unit ball")
        elif self.kind in ("boolean", "categorical"):
            if not 0.0 < eps < 0.5:
                raise ConfigurationError(f"{self.kind} hit_eps must lie in (0, 0.5)")
            if np.any(z0 <= 0.0) or np.any(z0 >= 1.0):
                raise ConfigurationError(f"{self.kind} z0 must lie in (0, 1)^d")
        elif self.kind == "fixedtime":
            if self.T <= 0.0 or eps <= 0.0:
                raise ConfigurationError("fixedtime needs T > 0 and hit_eps > 0")
        elif self.kind == "halfspace":
            if eps <= 0.0 or self.sigma_x <= 0.0 or self.sigma_y <= 0.0:
                raise ConfigurationError("halfspace needs positive hit_eps, sx and sy")
            if z0[-1] >= self.ymax - eps:
                raise ConfigurationError("halfspace z0 needs its age coordinate below ymax")
            if self.accel is not None and self.accel <= 0.0:
                raise ConfigurationError("halfspace accel horizon must be positive")

    def descriptor(self) -> str:
        """Descriptor string that parse_scheme() maps back to this scheme."""
        if self.kind == "categorical":
            text = f"categorical:d={self.d},m={self.m}"
        elif self.kind == "fixedtime":
            text = f"fixedtime:d={self.d},T={self.T!r}"
        elif self.kind == "halfspace":
            text = (f"halfspace:d={self.d},ymax={self.ymax!r},sx={self.sigma_x!r},sy={self.sigma_y!r}"
                    + (f",accel={self.accel!r}" if self.accel is not None else ""))
        else:
            text = f"{self.kind}:d={self.d}"
        text += f",eps={self.hit_eps!r}"
        if not np.array_equal(self.z0_array, self._default_z0()):
            text += ",z0=" + ",".join(repr(v) for v in self.z0)
        return text

    # --------------------------------------------------------------- absorption
    def _check_dim(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        if states.shape[-1] != self.state_dim:
            raise PreconditionError(f"state has dimension {states.shape[-1]}, scheme '{self.kind}' "
                                    f"needs {self.state_dim}")
        return states

    def _slots(self, states: np.ndarray) -> np.ndarray:
        return states.reshape(states.shape[:-1] + (self.m, self.d))

    def slot_hit(self, states: np.ndarray) -> np.ndarray:
        """Categorical slots whose largest coordinate reached 1 - hit_eps, shape (..., m)."""
        return self._slots(states).max(axis=-1) >= 1.0 - self.hit_eps

    def absorbed_mask(self, states: np.ndarray, t: float = 0.0) -> np.ndarray:
        """
        Coordinates frozen by absorption, same shape as `states`.

        Coordinate-wise schemes freeze each coordinate within hit_eps of {0, 1}; categorical slots
        additionally freeze as a whole once they hit. The other schemes freeze every coordinate together.
        """
        states = self._check_dim(states)
        eps = self.hit_eps
        if self.kind == "sphere":
            whole = np.linalg.norm(states, axis=-1) >= 1.0 - eps
        elif self.kind == "fixedtime":
            whole = np.full(states.shape[:-1], t >= self.T * (1.0 - _TIME_RTOL))
        elif self.kind == "halfspace":
            whole = states[..., -1] >= self.ymax - eps
        else:
            mask = np.minimum(states, 1.0 - states) <= eps
            if self.kind == "categorical":
                slot = np.repeat(self.slot_hit(states), self.d, axis=-1)
                mask = mask | slot
            return mask
        return np.broadcast_to(whole[..., None], states.shape).copy()

    def hit_rows(self, states: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Whole-state hit test for each row."""
        states = self._check_dim(states)
        if self.kind == "boolean":
            return self.absorbed_mask(states, t).all(axis=-1)
        if self.kind == "categorical":
            return self.slot_hit(states).all(axis=-1)
        return self.absorbed_mask(states, t)[..., 0]

    def dead_rows(self, states: np.ndarray) -> np.ndarray:
        """Categorical rows with a slot that is fully absorbed but never reached 1 - hit_eps."""
        states = self._check_dim(states)
        if self.kind != "categorical":
            return np.zeros(states.shape[:-1], dtype=bool)
        return (self._frozen_slots(states) & ~self.slot_hit(states)).any(axis=-1)

    def _frozen_slots(self, states: np.ndarray) -> np.ndarray:
        return self._slots(np.minimum(states, 1.0 - states) <= self.hit_eps).all(axis=-1)

    # ------------------------------------------------------------------ drifts
    def baseline_drift(self, states: np.ndarray, t: float) -> np.ndarray:
        """
        Drift of the baseline process Q: zero except for the categorical Ω-score and the accelerated
        half-space age drift. Hit and dead categorical slots are frozen and get zero drift.
        """
        drift = np.zeros_like(states)
        if self.kind == "categorical":
            slots = self._slots(np.clip(states, 0.0, 1.0))
            live = ~(self.slot_hit(states) | self._frozen_slots(states))
            out = np.zeros_like(slots)
            if live.any():
                out[live] = categorical_omega_score(slots[live], self.d, 1)
            drift = out.reshape(states.shape)
        elif self.kind == "halfspace" and self.accel is not None and t < self.accel:
            y = np.minimum(states[..., -1], self.ymax)
            drift[..., -1] = self.sigma_y ** 2 * halfspace_accelerated_drift(
                y, t, self.accel, self.ymax, self.sigma_y)
        return drift

    def exit_score(self, states: np.ndarray, targets: np.ndarray, t: float) -> np.ndarray:
        """
        ∇_z log q_Ω(x | z) for each row, the Doob term of the bridge drift before noise scaling.

        Coordinates absorbed at t get zero score on the Boolean and categorical schemes.
        """
        if self.kind == "sphere":
            return sphere_poisson_score(states, targets, self.d)
        if self.kind in ("boolean", "categorical"):
            z = np.clip(states, 1e-300, 1.0 - 1e-16)
            return boolean_bridge_drift(z, targets, self.absorbed_mask(states, t))
        if self.kind == "fixedtime":
            return fixed_time_bridge_drift(states, targets, t, self.T)
        if self.accel is not None:
            raise PreconditionError("bridges of the accelerated half-space process have no closed-form score")
        return halfspace_exit_score(states, targets, self.ymax, self.sigma_x, self.sigma_y)

    # ------------------------------------------------------------- projection
    def on_domain(self, state: np.ndarray, t: float = 0.0) -> OnDomain:
        state = self._check_dim(state)
        return OnDomain(bool(self.hit_rows(state, t)), self.absorbed_mask(state, t))

    def project(self, state: np.ndarray, t: float = 0.0) -> np.ndarray:
        """
        Snap a state that already satisfies on_domain() onto Ω.

        Raises:
            PreconditionError: the state is not on the domain.
        """
        if not self.on_domain(state, t).whole:
            raise PreconditionError(f"cannot project a state that has not hit Ω ({self.kind})")
        return self.force_project(state)

    def force_project(self, states: np.ndarray) -> np.ndarray:
        """Projection onto Ω defined everywhere, used for hits and for the `project` non-hit policy."""
        states = np.array(self._check_dim(states), dtype=float)
        if self.kind == "sphere":
            norms = np.linalg.norm(states, axis=-1, keepdims=True)
            unit = np.zeros_like(states)
            unit[..., 0] = 1.0
            return np.where(norms > 0.0, states / np.where(norms > 0.0, norms, 1.0), unit)
        if self.kind == "boolean":
            return (states >= 0.5).astype(float)
        if self.kind == "categorical":
            slots = self._slots(states)
            onehot = np.zeros_like(slots)
            np.put_along_axis(onehot, slots.argmax(axis=-1)[..., None], 1.0, axis=-1)
            return onehot.reshape(states.shape)
        if self.kind == "halfspace":
            states[..., -1] = self.ymax
        return states

    def exit_distance(self, points: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Distance between exit points and targets: geodesic on the sphere, Euclidean elsewhere."""
        points = np.asarray(points, dtype=float)
        targets = np.asarray(targets, dtype=float)
        if self.kind == "sphere":
            cos = np.clip(np.sum(points * targets, axis=-1)
                          / (np.linalg.norm(points, axis=-1) * np.linalg.norm(targets, axis=-1)), -1.0, 1.0)
            return np.arccos(cos)
        return np.linalg.norm(points - targets, axis=-1)

    # --------------------------------------------------------------- symmetry
    @property
    def has_symmetry(self) -> bool:
        if self.kind not in SYMMETRIC_KINDS:
            return False
        z0 = self.z0_array
        if self.kind == "sphere":
            return bool(np.all(z0 == 0.0))
        if self.kind == "boolean":
            return bool(np.all(z0 == 0.5))
        return bool(np.all(self._slots(z0) == self._slots(z0)[..., :1]))

    def transform_states(self, states: np.ndarray, source: np.ndarray, target: np.ndarray) -> np.ndarray:
        """Apply the symmetry map around z0 that sends exit point `source` to `target`."""
        states = np.asarray(states, dtype=float)
        if self.kind == "sphere":
            return _rotate(states, np.asarray(source, float), np.asarray(target, float))
        if self.kind == "boolean":
            flip = np.asarray(source) != np.asarray(target)
            out = states.copy()
            out[..., flip] = 1.0 - out[..., flip]
            return out
        src = self._slots(np.asarray(source)).argmax(axis=-1)
        dst = self._slots(np.asarray(target)).argmax(axis=-1)
        out = self._slots(states.copy())
        for slot in np.flatnonzero(src != dst):
            i, j = src[slot], dst[slot]
            out[..., slot, [i, j]] = out[..., slot, [j, i]]
        return out.reshape(states.shape)


def parse_scheme(text: str) -> Scheme:
    """
    Build a Scheme from its descriptor string.

    Usage:
        parse_scheme("sphere:d=3")
        parse_scheme("categorical:d=8,m=64,eps=0.01")
        parse_scheme("halfspace:d=2,ymax=1.0,sx=1.0,sy=1.0")
    """
    kind, params = SplitDescriptor(text)
    if kind not in SCHEME_KINDS:
        raise ConfigurationError(f"unknown scheme descriptor '{text}', valid kinds: "
                                 "sphere:d=3, boolean:d=4, categorical:d=8,m=64, fixedtime:d=2,T=1.0, "
                                 "halfspace:d=2,ymax=1.0,sx=1.0,sy=1.0 (optional ,eps=<v>)")
    known = {"d", "m", "T", "ymax", "sx", "sy", "accel", "eps", "z0"}
    unknown = set(params) - known
    if unknown:
        raise ConfigurationError(f"unknown scheme parameter(s) {sorted(unknown)} in '{text}'")
    try:
        kwargs = {"kind": kind, "d": int(params.get("d", 2)), "m": int(params.get("m", 1))}
        if "T" in params:
            kwargs["T"] = float(params["T"])
        if "ymax" in params:
            kwargs["ymax"] = float(params["ymax"])
        if "sx" in params:
            kwargs["sigma_x"] = float(params["sx"])
        if "sy" in params:
            kwargs["sigma_y"] = float(params["sy"])
        if "accel" in params:
            kwargs["accel"] = float(params["accel"])
        if "eps" in params:
            kwargs["hit_eps"] = float(params["eps"])
    except ValueError as err:
        raise ConfigurationError(f"non-numeric scheme parameter in '{text}'") from err
    if "z0" in params:
        kwargs["z0"] = tuple(ParseVector(params["z0"]))
    return Scheme(**kwargs)


def with_eps(scheme: Scheme, hit_eps: float) -> Scheme:
    return replace(scheme, hit_eps=hit_eps)


# ---------------------------------------------------------------------------
# Closed-form kernels and scores
# ---------------------------------------------------------------------------

def sphere_poisson_score(z: np.ndarray, x: np.ndarray, d: int) -> np.ndarray:
    """
    ∇_z log[(1 - |z|^2) / |x - z|^d] = -2z / (1 - |z|^2) + d (x - z) / |x - z|^2.

    Args:
        z (np.ndarray): interior point(s), shape (..., d).
        x (np.ndarray): boundary point(s), shape (..., d).
        d (int): dimension.

    Raises:
        SingularInputError: |z| >= 1 or z == x.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if z.shape[-1] != d or x.shape[-1] != d:
        raise PreconditionError("sphere score dimension mismatch")
    inside = 1.0 - np.sum(z * z, axis=-1, keepdims=True)
    diff = x - z
    dist2 = np.sum(diff * diff, axis=-1, keepdims=True)
    if np.any(inside <= 0.0) or np.any(dist2 <= 0.0):
        raise SingularInputError("sphere Poisson score is singular on the boundary")
    return -2.0 * z / inside + d * diff / dist2


def sphere_poisson_density(z: np.ndarray, x: np.ndarray, d: int) -> np.ndarray:
    """Poisson kernel of the unit ball with respect to the normalized surface measure."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    inside = 1.0 - np.sum(z * z, axis=-1)
    dist = np.linalg.norm(x - z, axis=-1)
    return inside / dist ** d


def bernoulli_exit_likelihood(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Ber(x | z) = prod_i [x_i z_i + (1 - x_i)(1 - z_i)], the Boolean Poisson kernel."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape[-1] != z.shape[-1]:
        raise PreconditionError("Boolean likelihood dimension mismatch")
    return np.prod(x * z + (1.0 - x) * (1.0 - z), axis=-1)


def boolean_log_likelihood_score(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """∇_z log Ber(x | z), coordinate i is (2 x_i - 1) / (x_i z_i + (1 - x_i)(1 - z_i))."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    denom = x * z + (1.0 - x) * (1.0 - z)
    if np.any(denom == 0.0):
        raise SingularInputError("Boolean score is singular: coordinate sits at the opposite endpoint")
    return (2.0 * x - 1.0) / denom


def boolean_bridge_drift(z: np.ndarray, x: np.ndarray, absorbed: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Bridge drift of the Boolean cube towards exit point x, zero on absorbed coordinates.

    Args:
        z (np.ndarray): current state.
        x (np.ndarray): target in {0,1}^d.
        absorbed (Optional[np.ndarray]): boolean mask of frozen coordinates (none when omitted).

    Raises:
        SingularInputError: an active coordinate sits at the endpoint opposite to its target.
    """
    z = np.asarray(z, dtype=float)
    x = np.broadcast_to(np.asarray(x, dtype=float), z.shape)
    active = np.ones(z.shape, dtype=bool) if absorbed is None else ~np.asarray(absorbed, dtype=bool)
    drift = np.zeros_like(z)
    drift[active] = boolean_log_likelihood_score(x[active], z[active])
    return drift


def fixed_time_bridge_drift(z: np.ndarray, x: np.ndarray, t: float, T: float) -> np.ndarray:
    """
    Brownian bridge drift (x - z) / (T - t) pinning Z_T = x.

    Raises:
        PreconditionError: t >= T.
    """
    if t >= T:
        raise PreconditionError(f"fixed-time bridge drift needs t < T (t={t}, T={T})")
    return (np.asarray(x, dtype=float) - np.asarray(z, dtype=float)) / (T - t)


def _leave_one_out_products(values: np.ndarray) -> np.ndarray:
    """out[..., j] = prod_{l != j} values[..., l]."""
    d = values.shape[-1]
    eye = np.eye(d, dtype=bool)
    return np.prod(np.where(eye, 1.0, values[..., None, :]), axis=-1)


def categorical_omega_score(z: np.ndarray, d: int, m: int) -> np.ndarray:
    """
    ∇_z log Ber(Ω | z) per slot, with Ber(Ω | z) = Σ_j Ber(e_j | z_slot).

    Evaluated in the self-normalized form Σ_j w_j ∇ log Ber(e_j | z), w_j = Ber(e_j|z) / Σ Ber, using
    leave-out products so that coordinates sitting exactly at 0 or 1 stay finite.

    Raises:
        SingularInputError: Σ_j Ber(e_j | z) = 0 in some slot.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != d * m:
        raise PreconditionError(f"categorical state needs dimension {d * m}")
    slots = z.reshape(z.shape[:-1] + (m, d))
    comp = 1.0 - slots
    loo = _leave_one_out_products(comp)
    total = np.sum(slots * loo, axis=-1, keepdims=True)
    if np.any(total <= 0.0):
        raise SingularInputError("Ber(Ω | z) vanishes, categorical score undefined")
    score = np.empty_like(slots)
    for k in range(d):
        comp_k = comp.copy()
        comp_k[..., k] = 1.0
        others = slots * _leave_one_out_products(comp_k)
        pull_down = others.sum(axis=-1) - others[..., k]
        score[..., k] = (loo[..., k] - pull_down) / total[..., 0]
    return score.reshape(z.shape)


# ---------------------------------------------------------------------------
# Half-space hitting
# ---------------------------------------------------------------------------

def halfspace_passage_cdf(gap: float, sigma_y: float, t) -> np.ndarray:
    """
    P(τ <= t) = 2 (1 - Φ(gap / (σ_y √t))), the InvGamma(1/2, gap² / (2σ_y²)) CDF.
    """
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        u = np.where(t > 0.0, gap / (sigma_y * np.sqrt(np.where(t > 0.0, t, 1.0))), np.inf)
    return 2.0 * special.ndtr(-u)


def halfspace_truncated_passage_cdf(gap: float, sigma_y: float, t, T: float) -> np.ndarray:
    """P(τ <= t | τ <= T), the passage law of the accelerated process B^T."""
    t = np.minimum(np.asarray(t, dtype=float), T)
    return halfspace_passage_cdf(gap, sigma_y, t) / halfspace_passage_cdf(gap, sigma_y, T)


def halfspace_exit_density(u: np.ndarray, center: np.ndarray, gap: float,
                           scale: Optional[float] = None) -> np.ndarray:
    """
    Multivariate Cauchy density of the half-space exit location.

    f(u) = Γ((d+1)/2) / π^((d+1)/2) · s / (s² + |u - center|²)^((d+1)/2), with s = gap unless `scale`
    is given (the isotropic exit law has scale gap).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    center = np.atleast_1d(np.asarray(center, dtype=float))
    s = gap if scale is None else scale
    d = center.shape[-1]
    alpha = 0.5 * (d + 1)
    r2 = np.sum((u - center) ** 2, axis=-1)
    log_norm = special.gammaln(alpha) - alpha * np.log(np.pi)
    return np.exp(log_norm + np.log(s) - alpha * np.log(s * s + r2))


def halfspace_exit_scale(gap, sigma_x: float, sigma_y: float):
    """Cauchy scale of the exit location: the data coordinates run σ_x W over the passage time of σ_y W."""
    return np.asarray(gap, dtype=float) * sigma_x / sigma_y


def halfspace_exit_score(states: np.ndarray, targets: np.ndarray, ymax: float,
                         sigma_x: float, sigma_y: float) -> np.ndarray:
    """∇_(x,y) log Cauchy(target | x, scale(ymax - y)) for states (x, y) and exit locations `targets`."""
    states = np.asarray(states, dtype=float)
    targets = np.asarray(targets, dtype=float)
    x, y = states[..., :-1], states[..., -1]
    u = targets[..., :-1] if targets.shape[-1] == states.shape[-1] else targets
    d = x.shape[-1]
    gap = ymax - y
    if np.any(gap <= 0.0):
        raise SingularInputError("half-space exit score is singular on the exit plane")
    s = halfspace_exit_scale(gap, sigma_x, sigma_y)
    r2 = np.sum((u - x) ** 2, axis=-1)
    denom = s * s + r2
    score = np.empty_like(states)
    score[..., :-1] = (d + 1) * (u - x) / denom[..., None]
    ds_dy = -sigma_x / sigma_y
    score[..., -1] = ds_dy * (1.0 / s - (d + 1) * s / denom)
    return score


def halfspace_exit_sample(center: np.ndarray, gap, sigma_x: float, sigma_y: float,
                          gauss: np.ndarray) -> np.ndarray:
    """
    Exact exit draws center + s · G / |g0| from pre-drawn standard normals.

    Args:
        center (np.ndarray): data coordinates, shape (..., d).
        gap: ymax - y, broadcastable to center's leading shape.
        gauss (np.ndarray): standard normals of shape (..., k, d + 1); the last column plays g0.

    Returns:
        np.ndarray: draws of shape (..., k, d).
    """
    s = halfspace_exit_scale(gap, sigma_x, sigma_y)
    g0 = np.abs(gauss[..., -1])
    return center[..., None, :] + np.asarray(s)[..., None, None] * gauss[..., :-1] / g0[..., None]


def halfspace_accelerated_drift(y, t: float, T: float, ymax: float, sigma_y: float) -> np.ndarray:
    """
    ∇_y log P(τ <= T | Y_t = y) = φ(u) / (σ_y √(T - t) (1 - Φ(u))), u = (ymax - y) / (σ_y √(T - t)).

    The inverse Mills ratio is evaluated in log space (log φ - log Φ(-u)) so it stays accurate for large u.

    Raises:
        PreconditionError: t >= T.
    """
    if t >= T:
        raise PreconditionError(f"accelerated drift needs t < T (t={t}, T={T})")
    root = sigma_y * np.sqrt(T - t)
    u = np.abs(ymax - np.asarray(y, dtype=float)) / root
    log_phi = -0.5 * u * u - 0.5 * np.log(2.0 * np.pi)
    return np.exp(log_phi - special.log_ndtr(-u)) / root


def halfspace_accelerated_exit_density(u: np.ndarray, center: np.ndarray, gap: float,
                                       remaining: float, sigma: float = 1.0) -> np.ndarray:
    """
    Exit density of the isotropic half-space process conditioned on τ <= remaining.

    gap (2π)^(-α) Γ(α, φ / (σ² remaining)) φ^(-α) / P(τ <= remaining), α = (d+1)/2,
    φ = (gap² + |u - center|²) / 2, with Γ(α, ·) the upper incomplete gamma function. Tends to the
    Cauchy density as remaining grows.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = center.shape[-1]
    alpha = 0.5 * (d + 1)
    phi = 0.5 * (gap * gap + np.sum((u - center) ** 2, axis=-1))
    upper = special.gammaincc(alpha, phi / (sigma * sigma * remaining)) * special.gamma(alpha)
    mass = halfspace_passage_cdf(gap, sigma, remaining)
    return gap * (2.0 * np.pi) ** (-alpha) * upper * phi ** (-alpha) / mass


# ---------------------------------------------------------------------------
# Symmetry transforms
# ---------------------------------------------------------------------------

def _reflect(states: np.ndarray, normal: np.ndarray) -> np.ndarray:
    return states - 2.0 * (states @ normal)[..., None] * normal


def _rotate(states: np.ndarray, source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """
    Rotation fixing span{source, target}^⊥ and sending source to target, as two reflections.

    Reflecting across (source + target)^⊥ sends source to -target, reflecting across target^⊥ then
    sends -target to target. Nearly antipodal pairs go through an intermediate orthogonal direction.
    """
    source = source / np.linalg.norm(source)
    target = target / np.linalg.norm(target)
    mid = source + target
    if np.linalg.norm(mid) < 1e-6:
        helper = np.zeros_like(source)
        helper[np.argmin(np.abs(source))] = 1.0
        helper = helper - (helper @ source) * source
        helper /= np.linalg.norm(helper)
        return _rotate(_rotate(states, source, helper), helper, target)
    mid /= np.linalg.norm(mid)
    return _reflect(_reflect(states, mid), target)


def symmetry_transform(scheme: Scheme, trajectory, source: np.ndarray, target: np.ndarray):
    """
    Map an unconditioned trajectory started at the symmetric z0 to one that exits at `target`.

    Sphere trajectories are rotated about the origin, Boolean coordinates flipped about 0.5 where the
    exit points differ, categorical slots get the two coordinates of the exit and target one-hots swapped.

    Raises:
        PreconditionError: the scheme has no symmetry around its z0, the trajectory did not start at z0
            or did not hit, or `source` is not the trajectory's exit point.
    """
    from .sdeCore import Trajectory

    if not scheme.has_symmetry:
        raise PreconditionError(f"scheme '{scheme.descriptor()}' has no symmetric initial point")
    if not np.allclose(trajectory.states[0], scheme.z0_array, rtol=0.0, atol=1e-12):
        raise PreconditionError("only trajectories started at the scheme's z0 can be transformed")
    if not trajectory.hit:
        raise PreconditionError("only hit trajectories can be transformed")
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    exit_point = trajectory.states[trajectory.hit_index]
    if not np.allclose(exit_point, source, rtol=0.0, atol=1e-9):
        raise PreconditionError("`source` does not match the trajectory exit point")
    if np.array_equal(source, target):
        return trajectory
    states = scheme.transform_states(trajectory.states, source, target)
    states[trajectory.hit_index:] = target
    return Trajectory(times=trajectory.times, states=states, hit=True, hit_index=trajectory.hit_index,
                      tau=trajectory.tau, stream_id=trajectory.stream_id)
